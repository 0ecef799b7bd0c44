use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use posc_core::consensus::{Evidence, SignedHeader};
use posc_core::ledger::{Attestation, Block, BlockCandidates, ChainState, GenesisConfig, LedgerError, Transaction};
use posc_core::{Hash32, IdHash};

/// What a replica made of a received block.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockStatus {
    /// Applied; `new_head` tells whether fork choice moved to it.
    Applied { new_head: bool },
    Duplicate,
    /// Parent unknown; buffered until it arrives.
    Orphan { missing: Hash32 },
    Invalid(LedgerError),
}

#[derive(Clone, Debug)]
pub struct BlockReceipt {
    pub status: BlockStatus,
    /// Evidence this block gave rise to, already checked against the head.
    pub evidence: Vec<Evidence>,
    /// Buffered descendants that became applicable.
    pub adopted: Vec<Hash32>,
}

/// One node's view of the chain: every valid block it has seen, the state
/// after each, and pools of items waiting for inclusion.
///
/// Fork choice is the longest chain; among equally long branches the one
/// seen first stays the head.
#[derive(Clone, Debug)]
pub struct Replica {
    blocks: BTreeMap<Hash32, Block>,
    states: BTreeMap<Hash32, Arc<ChainState>>,
    head: Hash32,
    orphans: BTreeMap<Hash32, Vec<Block>>,
    headers: BTreeMap<(u64, IdHash), SignedHeader>,
    txs: Vec<Transaction>,
    tx_seen: BTreeSet<Hash32>,
    attestations: Vec<Attestation>,
    attestation_seen: BTreeSet<(IdHash, u64, Hash32)>,
    evidence: Vec<Evidence>,
    evidence_seen: BTreeSet<Hash32>,
}

impl Replica {
    pub fn new(genesis: &GenesisConfig) -> Result<Replica, LedgerError> {
        let state = ChainState::genesis(genesis)?;
        let head = state.head;
        Ok(Replica {
            blocks: BTreeMap::new(),
            states: BTreeMap::from([(head, Arc::new(state))]),
            head,
            orphans: BTreeMap::new(),
            headers: BTreeMap::new(),
            txs: Vec::new(),
            tx_seen: BTreeSet::new(),
            attestations: Vec::new(),
            attestation_seen: BTreeSet::new(),
            evidence: Vec::new(),
            evidence_seen: BTreeSet::new(),
        })
    }

    pub fn head(&self) -> Hash32 {
        self.head
    }

    pub fn head_state(&self) -> &ChainState {
        &self.states[&self.head]
    }

    pub fn state(&self, hash: &Hash32) -> Option<&ChainState> {
        self.states.get(hash).map(|s| s.as_ref())
    }

    pub fn block(&self, hash: &Hash32) -> Option<&Block> {
        self.blocks.get(hash)
    }

    pub fn knows(&self, hash: &Hash32) -> bool {
        self.states.contains_key(hash)
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Blocks from the first after genesis up to the head.
    pub fn canonical_chain(&self) -> Vec<&Block> {
        let mut out = Vec::new();
        let mut cursor = self.head;
        while let Some(b) = self.blocks.get(&cursor) {
            out.push(b);
            cursor = b.parent_hash();
        }
        out.reverse();
        out
    }

    /// Validates and stores a block from the network.
    pub fn receive_block(&mut self, block: Block) -> BlockReceipt {
        let mut evidence = Vec::new();
        self.detect_equivocation(&block, &mut evidence);
        let hash = block.hash();
        if self.states.contains_key(&hash) {
            return BlockReceipt { status: BlockStatus::Duplicate, evidence, adopted: Vec::new() };
        }
        let parent = block.parent_hash();
        let Some(parent_state) = self.states.get(&parent).cloned() else {
            let waiting = self.orphans.entry(parent).or_default();
            if !waiting.iter().any(|b| b.hash() == hash) {
                waiting.push(block);
            }
            return BlockReceipt { status: BlockStatus::Orphan { missing: parent }, evidence, adopted: Vec::new() };
        };
        match parent_state.apply_block(&block) {
            Ok(state) => {
                let new_head = self.insert(block, state);
                let adopted = self.adopt_orphans(hash, &mut evidence);
                let moved = new_head || adopted.contains(&self.head);
                BlockReceipt { status: BlockStatus::Applied { new_head: moved }, evidence, adopted }
            }
            Err(e) => {
                if e.is_proposer_fault() && parent == self.head {
                    self.offer_evidence(Evidence::InvalidBlock { block: Box::new(block) }, &mut evidence);
                }
                BlockReceipt { status: BlockStatus::Invalid(e), evidence, adopted: Vec::new() }
            }
        }
    }

    /// Stores a block this node built itself, with its already computed state.
    pub fn insert_own(&mut self, block: Block, state: ChainState) -> bool {
        self.headers.entry((block.slot(), block.header.header.proposer)).or_insert_with(|| block.header.clone());
        self.insert(block, state)
    }

    fn insert(&mut self, block: Block, state: ChainState) -> bool {
        let hash = block.hash();
        for tx in &block.body.transactions {
            let h = tx.hash();
            self.tx_seen.insert(h);
            self.txs.retain(|t| t.hash() != h);
        }
        for a in &block.body.attestations {
            self.attestation_seen.insert((a.validator, a.epoch, a.checkpoint_root));
            self.attestations.retain(|x| x != a);
        }
        for ev in &block.body.slashings {
            let id = ev.id();
            self.evidence_seen.insert(id);
            self.evidence.retain(|x| x.id() != id);
        }
        let new_head = state.height > self.head_state().height;
        self.states.insert(hash, Arc::new(state));
        self.blocks.insert(hash, block);
        if new_head {
            self.head = hash;
            self.prune_stale_attestations();
        }
        new_head
    }

    fn adopt_orphans(&mut self, parent: Hash32, evidence: &mut Vec<Evidence>) -> Vec<Hash32> {
        let mut adopted = Vec::new();
        let mut queue = vec![parent];
        while let Some(p) = queue.pop() {
            for child in self.orphans.remove(&p).unwrap_or_default() {
                let state = self.states[&p].clone();
                match state.apply_block(&child) {
                    Ok(next) => {
                        let h = child.hash();
                        self.insert(child, next);
                        adopted.push(h);
                        queue.push(h);
                    }
                    Err(e) if e.is_proposer_fault() && p == self.head => {
                        self.offer_evidence(Evidence::InvalidBlock { block: Box::new(child) }, evidence);
                    }
                    Err(_) => {}
                }
            }
        }
        adopted
    }

    fn detect_equivocation(&mut self, block: &Block, out: &mut Vec<Evidence>) {
        let key = (block.slot(), block.header.header.proposer);
        match self.headers.get(&key) {
            None => {
                self.headers.insert(key, block.header.clone());
            }
            Some(first) if first.hash() != block.header.hash() => {
                let ev = Evidence::Equivocation { first: first.clone(), second: block.header.clone() };
                self.offer_evidence(ev, out);
            }
            Some(_) => {}
        }
    }

    /// Pools evidence that checks out against the head state.
    fn offer_evidence(&mut self, ev: Evidence, out: &mut Vec<Evidence>) {
        let head = self.head_state();
        if head.offenses.check(&ev, &head.params, head).is_ok() && self.add_evidence(ev.clone()) {
            out.push(ev);
        }
    }

    /// Adds a transaction to the pool. False if it was already known.
    pub fn add_tx(&mut self, tx: Transaction) -> bool {
        if !self.tx_seen.insert(tx.hash()) {
            return false;
        }
        self.txs.push(tx);
        true
    }

    pub fn add_attestation(&mut self, a: Attestation) -> bool {
        if !self.attestation_seen.insert((a.validator, a.epoch, a.checkpoint_root)) {
            return false;
        }
        self.attestations.push(a);
        true
    }

    pub fn add_evidence(&mut self, ev: Evidence) -> bool {
        if !self.evidence_seen.insert(ev.id()) {
            return false;
        }
        self.evidence.push(ev);
        true
    }

    /// Drops pooled transactions the last build rejected.
    pub fn drop_txs(&mut self, hashes: &BTreeSet<Hash32>) {
        self.txs.retain(|t| !hashes.contains(&t.hash()));
    }

    fn prune_stale_attestations(&mut self) {
        let epoch = self.head_state().current_epoch();
        self.attestations.retain(|a| a.epoch + 2 >= epoch);
    }

    /// Everything pooled, in arrival order.
    pub fn candidates(&self) -> BlockCandidates {
        BlockCandidates {
            transactions: self.txs.clone(),
            attestations: self.attestations.clone(),
            slashings: self.evidence.clone(),
        }
    }

    pub fn pooled_txs(&self) -> &[Transaction] {
        &self.txs
    }
}
