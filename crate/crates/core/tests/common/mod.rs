#![allow(dead_code)]

use posc_core::fixtures::{small_params, GenesisBuilder, Member};
use posc_core::ledger::{Attestation, BlockCandidates, BuiltBlock, Chain, ChainState};
use posc_core::{IdHash, ProtocolParams, MICROS_PER_TOKEN};

pub struct World {
    pub builder: GenesisBuilder,
    pub chain: Chain,
    pub validators: Vec<usize>,
}

impl World {
    /// `validators[i]` full endorsements back validator i.
    pub fn new(seed: u64, validators: &[usize]) -> World {
        World::with_params(seed, validators, small_params())
    }

    pub fn with_params(seed: u64, validators: &[usize], params: ProtocolParams) -> World {
        let mut builder = GenesisBuilder::new(seed, params);
        let validators = validators.iter().map(|n| builder.add_validator(*n, 100 * MICROS_PER_TOKEN)).collect();
        let chain = Chain::new(builder.build()).expect("valid genesis");
        World { builder, chain, validators }
    }

    pub fn member(&self, i: usize) -> &Member {
        &self.builder.members()[i]
    }

    pub fn state(&self) -> &ChainState {
        self.chain.state()
    }

    pub fn member_by_id(&self, id: &IdHash) -> &Member {
        self.builder.members().iter().find(|m| m.id() == *id).expect("known member")
    }

    pub fn build_at(&self, slot: u64, candidates: &BlockCandidates) -> BuiltBlock {
        let leader = self.state().leader_at(slot).expect("leader");
        let m = self.member_by_id(&leader);
        self.state().build_block(slot, leader, &m.key, &m.randao_secret, candidates).expect("leader builds")
    }

    /// Builds and appends a block at the next slot.
    pub fn step(&mut self, candidates: &BlockCandidates) -> BuiltBlock {
        let slot = self.state().slot + 1;
        let built = self.build_at(slot, candidates);
        self.chain.append(built.block.clone()).expect("built block applies");
        built
    }

    pub fn step_empty(&mut self) -> BuiltBlock {
        self.step(&BlockCandidates::default())
    }

    /// Attestations by every validator for the current checkpoint.
    pub fn attestations(&self) -> Vec<Attestation> {
        let s = self.state();
        let epoch = s.current_epoch();
        let root = s.finality.get(epoch).expect("open checkpoint").block_root;
        s.snapshot
            .weights_at(s.snapshot.start_slot)
            .iter()
            .filter(|(id, _)| !s.finality.get(epoch).unwrap().attesters.contains(id))
            .map(|(id, _)| Attestation::sign(*id, epoch, root, &self.member_by_id(id).key))
            .collect()
    }
}
