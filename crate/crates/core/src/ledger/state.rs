use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::account::{Account, Role};
use crate::capital::{effective_capital, meets_participation_threshold, AccountStore, CapitalLedger};
use crate::consensus::{
    commitment_of, elect_leader, reveal_for, BlockHeader, Checkpoint, ConsensusError, Evidence, EvidenceVerifier,
    FinalityTracker, OffenseLog, RandaoState, RewardLedger, ValidatorSet,
};
use crate::crypto::{hash_canonical, Hash32, Keypair, PublicKey};
use crate::identity::{
    register_identity, verify_identity_proof, GlobalStateTrie, IdHash, IssuerRegistry, SimulatedSnark,
};
use crate::params::ProtocolParams;

use super::{Attestation, Block, BlockBody, GenesisConfig, LedgerError, Transaction, TxError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub id: IdHash,
    pub weight: f64,
    /// First slot at which the entry may be elected or attest.
    pub activation_slot: u64,
}

/// Validator weights and randao mix frozen at an epoch boundary. The whole
/// epoch's leader schedule follows from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochSnapshot {
    pub epoch: u64,
    pub start_slot: u64,
    pub mix: Hash32,
    pub entries: Vec<SnapshotEntry>,
}

impl EpochSnapshot {
    pub fn weights_at(&self, slot: u64) -> Vec<(IdHash, f64)> {
        self.entries.iter().filter(|e| e.activation_slot <= slot).map(|e| (e.id, e.weight)).collect()
    }

    pub fn weight_at(&self, id: &IdHash, slot: u64) -> Option<f64> {
        self.entries.iter().find(|e| e.id == *id && e.activation_slot <= slot).map(|e| e.weight)
    }

    pub fn total_at(&self, slot: u64) -> f64 {
        self.entries.iter().filter(|e| e.activation_slot <= slot).map(|e| e.weight).sum()
    }

    pub fn leader(&self, slot: u64) -> Result<IdHash, ConsensusError> {
        elect_leader(&self.weights_at(slot), &self.mix, slot)
    }
}

/// Items a proposer wants in its block; invalid ones are dropped.
#[derive(Clone, Debug, Default)]
pub struct BlockCandidates {
    pub transactions: Vec<Transaction>,
    pub attestations: Vec<Attestation>,
    pub slashings: Vec<Evidence>,
}

/// New state, executed body and rejected transactions by position.
type Executed = (ChainState, BlockBody, Vec<(usize, TxError)>);

#[derive(Debug)]
pub struct BuiltBlock {
    pub block: Block,
    pub state: ChainState,
    /// Candidate transactions left out, by index, with the reason.
    pub rejected: Vec<(usize, TxError)>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Every item must apply.
    Strict,
    /// Items that fail are left out.
    Filter,
}

/// Full replicated state. Blocks apply to it as a pure function:
/// [`ChainState::apply_block`] returns a new state and leaves `self` intact.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub params: ProtocolParams,
    pub accounts: GlobalStateTrie<Account>,
    pub issuers: IssuerRegistry,
    pub capital: CapitalLedger,
    pub validators: ValidatorSet,
    pub randao: RandaoState,
    pub finality: FinalityTracker,
    pub offenses: OffenseLog,
    pub rewards: RewardLedger,
    pub snapshot: EpochSnapshot,
    pub previous_snapshot: Option<EpochSnapshot>,
    pub genesis_hash: Hash32,
    pub head: Hash32,
    pub slot: u64,
    pub height: u64,
    pub genesis_supply: u128,
    /// Consecutive missed proposals per validator, reset when it proposes.
    missed: BTreeMap<IdHash, Vec<u64>>,
    /// Empty slots and the leader that should have filled them.
    skipped: BTreeMap<u64, IdHash>,
    oracle: SimulatedSnark,
}

#[derive(Serialize)]
struct StateView<'a> {
    params: &'a ProtocolParams,
    accounts_root: Hash32,
    issuers: &'a IssuerRegistry,
    capital: &'a CapitalLedger,
    validators: &'a ValidatorSet,
    randao: &'a RandaoState,
    finality: &'a FinalityTracker,
    offenses: &'a OffenseLog,
    rewards: &'a RewardLedger,
    snapshot: &'a EpochSnapshot,
    previous_snapshot: &'a Option<EpochSnapshot>,
    genesis_hash: &'a Hash32,
    head: &'a Hash32,
    slot: u64,
    height: u64,
    missed: &'a BTreeMap<IdHash, Vec<u64>>,
    skipped: &'a BTreeMap<u64, IdHash>,
}

fn genesis_err(msg: impl Into<String>) -> LedgerError {
    LedgerError::Genesis(msg.into())
}

impl ChainState {
    pub fn genesis(config: &GenesisConfig) -> Result<ChainState, LedgerError> {
        let params = config.params.clone();
        crate::capital::ScalingSpec::new(&params.scaling_function).map_err(|e| genesis_err(e.to_string()))?;
        if params.slots_per_epoch == 0 || params.c_minor < 1.0 || params.c_major < 1.0 || params.passive_budget == 0 {
            return Err(genesis_err("invalid protocol constants"));
        }
        let issuers = IssuerRegistry::with_genesis(config.issuers.iter().map(|i| (i.issuer_id.clone(), i.pubkey)));
        let oracle = SimulatedSnark::new(config.oracle_key.0);
        let mut accounts = GlobalStateTrie::new();
        let mut supply = 0u128;
        for ga in &config.accounts {
            if !verify_identity_proof(&ga.proof, &issuers, &oracle) {
                return Err(genesis_err(format!("proof for {} does not verify", ga.proof.statement.id_hash)));
            }
            let mut acct = Account::registered(&ga.proof, &params);
            acct.tokens = ga.tokens;
            supply += ga.tokens as u128;
            accounts
                .insert(ga.proof.statement.id_hash, acct)
                .map_err(|_| genesis_err(format!("duplicate identity {}", ga.proof.statement.id_hash)))?;
        }
        for ga in &config.accounts {
            let follower = ga.proof.statement.id_hash;
            for e in &ga.endorsements {
                let remaining = accounts.get(&follower).expect("inserted above").passive_remaining;
                if e.amount == 0 || e.amount > remaining {
                    return Err(genesis_err(format!("endorsements of {follower} exceed its budget")));
                }
                if !accounts.contains(&e.creator) {
                    return Err(genesis_err(format!("endorsed creator {} is not registered", e.creator)));
                }
                accounts
                    .update(&follower, |a| {
                        a.passive_remaining -= e.amount;
                        a.allocations.entry(e.creator).or_default().active += e.amount;
                    })
                    .expect("present");
                accounts.update(&e.creator, |a| a.active_received += e.amount).expect("present");
            }
        }
        let mut validators = ValidatorSet::new();
        let mut randao = RandaoState::new(config.randao_seed);
        for ga in &config.accounts {
            let id = ga.proof.statement.id_hash;
            if let Some(c) = ga.randao_commitment {
                let acct = accounts.get(&id).expect("inserted above");
                if !meets_participation_threshold(acct.active_received, &params) {
                    return Err(genesis_err(format!("genesis validator {id} is below the participation threshold")));
                }
                validators.insert_active(id, effective_capital(acct.active_received, &acct.scaling));
                randao.commit(id, c);
            }
        }
        for (id, _) in accounts.entries().into_iter().map(|(id, a)| (id, a.clone())).collect::<Vec<_>>() {
            let is_validator = validators.is_member(&id);
            accounts.update(&id, |a| a.refresh_role(is_validator)).expect("present");
        }
        let genesis_hash = config.hash();
        let snapshot = EpochSnapshot { epoch: 0, start_slot: 0, mix: randao.mix, entries: Self::snapshot_entries(&validators) };
        let mut finality = FinalityTracker::new();
        finality.open(Checkpoint::new(0, genesis_hash, snapshot.total_at(0)));
        Ok(ChainState {
            params,
            accounts,
            issuers,
            capital: CapitalLedger::new(),
            validators,
            randao,
            finality,
            offenses: OffenseLog::new(),
            rewards: RewardLedger::new(),
            snapshot,
            previous_snapshot: None,
            genesis_hash,
            head: genesis_hash,
            slot: 0,
            height: 0,
            genesis_supply: supply,
            missed: BTreeMap::new(),
            skipped: BTreeMap::new(),
            oracle,
        })
    }

    fn snapshot_entries(validators: &ValidatorSet) -> Vec<SnapshotEntry> {
        use crate::consensus::ValidatorStatus::*;
        validators
            .iter()
            .filter_map(|(id, e)| match e.status {
                Active => Some(SnapshotEntry { id: *id, weight: e.weight, activation_slot: 0 }),
                Pending { activation_slot } => Some(SnapshotEntry { id: *id, weight: e.weight, activation_slot }),
                Exited => None,
            })
            .collect()
    }

    pub fn current_epoch(&self) -> u64 {
        self.snapshot.epoch
    }

    pub fn account(&self, id: &IdHash) -> Option<&Account> {
        self.accounts.get(id)
    }

    /// Digest over the entire replicated state, for replay comparisons.
    pub fn digest(&self) -> Hash32 {
        hash_canonical(
            "posc/state/v1",
            &StateView {
                params: &self.params,
                accounts_root: self.accounts.root(),
                issuers: &self.issuers,
                capital: &self.capital,
                validators: &self.validators,
                randao: &self.randao,
                finality: &self.finality,
                offenses: &self.offenses,
                rewards: &self.rewards,
                snapshot: &self.snapshot,
                previous_snapshot: &self.previous_snapshot,
                genesis_hash: &self.genesis_hash,
                head: &self.head,
                slot: self.slot,
                height: self.height,
                missed: &self.missed,
                skipped: &self.skipped,
            },
        )
    }

    /// Sum of all token balances.
    pub fn token_supply(&self) -> u128 {
        self.accounts.entries().iter().map(|(_, a)| a.tokens as u128).sum()
    }

    /// Supply implied by genesis, rewards minted and fees burned.
    pub fn expected_supply(&self) -> u128 {
        self.genesis_supply + self.rewards.issued() - self.capital.fees_burned() as u128
    }

    /// Normalized power of each validator in the current epoch snapshot.
    pub fn consensus_power(&self) -> Vec<(IdHash, f64)> {
        let weights = self.snapshot.weights_at(self.snapshot.start_slot);
        crate::capital::normalize(weights).unwrap_or_default()
    }

    /// Slots that passed without a block, with the leader that missed them.
    pub fn skipped_slots(&self) -> &BTreeMap<u64, IdHash> {
        &self.skipped
    }

    /// Leader of `slot`, which may lie in a later epoch than the head.
    pub fn leader_at(&self, slot: u64) -> Result<IdHash, LedgerError> {
        if slot <= self.slot {
            return Err(LedgerError::SlotNotAfterParent { slot, parent_slot: self.slot });
        }
        if self.params.epoch_of(slot) == self.snapshot.epoch {
            return Ok(self.snapshot.leader(slot)?);
        }
        let mut s = self.clone();
        s.advance_to(slot)?;
        Ok(s.snapshot.leader(slot)?)
    }

    /// The state as of the start of `slot` with no block in between: epoch
    /// transitions run and skipped slots are charged to their leaders.
    pub fn advanced_to(&self, slot: u64) -> Result<ChainState, LedgerError> {
        let mut s = self.clone();
        s.advance_to(slot)?;
        Ok(s)
    }

    fn advance_to(&mut self, slot: u64) -> Result<(), LedgerError> {
        let from = self.slot.max(self.processed_through());
        for s in from + 1..=slot {
            let epoch = self.params.epoch_of(s);
            if epoch > self.snapshot.epoch {
                self.epoch_transition(epoch)?;
            }
            if s < slot {
                self.charge_missed(s)?;
            }
        }
        Ok(())
    }

    /// Last slot already charged as skipped (advance must not double count).
    fn processed_through(&self) -> u64 {
        self.skipped.keys().next_back().copied().unwrap_or(0)
    }

    fn charge_missed(&mut self, slot: u64) -> Result<(), LedgerError> {
        let Ok(leader) = self.snapshot.leader(slot) else { return Ok(()) };
        self.skipped.insert(slot, leader);
        let streak = self.missed.entry(leader).or_default();
        streak.push(slot);
        if streak.len() >= self.params.inactivity_limit as usize {
            let missed_slots = std::mem::take(streak);
            let evidence = Evidence::Inactivity { validator: leader, missed_slots };
            self.offenses.check(&evidence, &self.params, &*self)?;
            let epoch = self.snapshot.epoch;
            self.offenses.punish(&mut self.accounts, &evidence, epoch, &self.params)?;
        }
        Ok(())
    }

    fn epoch_transition(&mut self, epoch: u64) -> Result<(), LedgerError> {
        let start = epoch * self.params.slots_per_epoch;
        let touched = self.capital.settle_epoch(&mut self.accounts, epoch)?;
        let offenders: BTreeSet<IdHash> = self.offenses.records().iter().map(|r| r.offender).collect();
        for id in &offenders {
            self.accounts.modify(id, |a| a.scaling = a.scaling.refreshed(epoch))?;
        }
        let members: Vec<IdHash> =
            self.validators.iter().filter(|(id, _)| self.validators.is_member(id)).map(|(id, _)| *id).collect();
        for id in &members {
            let acct = self.accounts.require(id)?;
            if meets_participation_threshold(acct.active_received, &self.params) {
                let w = effective_capital(acct.active_received, &acct.scaling);
                self.validators.get_mut(id).expect("member").weight = w;
            } else {
                self.validators.exit(id);
            }
        }
        self.validators.activate_due(start);
        for id in touched.iter().chain(&members) {
            let is_validator = self.validators.is_member(id);
            self.accounts.modify(id, |a| a.refresh_role(is_validator))?;
        }
        let snapshot =
            EpochSnapshot { epoch, start_slot: start, mix: self.randao.mix, entries: Self::snapshot_entries(&self.validators) };
        self.finality.open(Checkpoint::new(epoch, self.head, snapshot.total_at(start)));
        self.previous_snapshot = Some(std::mem::replace(&mut self.snapshot, snapshot));
        Ok(())
    }

    /// Applies one transaction. On error the state is unchanged.
    pub fn apply_tx(&mut self, tx: &Transaction, slot: u64) -> Result<(), TxError> {
        let epoch = self.snapshot.epoch;
        match tx {
            Transaction::Register(r) => {
                register_identity(&mut self.accounts, &r.proof, &r.signature, &self.issuers, &self.oracle, &self.params)?;
            }
            Transaction::Endorse(e) => {
                self.capital.endorse(&mut self.accounts, e, epoch, &self.params)?;
                self.refresh_role(&e.body.creator)?;
            }
            Transaction::Reassign(r) => {
                self.capital.reassign(&mut self.accounts, r, epoch, &self.params)?;
                self.refresh_role(&r.body.to_creator)?;
            }
            Transaction::Transfer(t) => {
                let b = &t.body;
                let from = self.accounts.get(&b.from).ok_or(TxError::UnknownAccount(b.from))?;
                if !self.accounts.contains(&b.to) {
                    return Err(TxError::UnknownAccount(b.to));
                }
                if !t.verify(&from.platform_pubkey) {
                    return Err(TxError::BadSignature);
                }
                if b.nonce != from.nonce {
                    return Err(TxError::BadNonce { expected: from.nonce, got: b.nonce });
                }
                if from.tokens < b.amount {
                    return Err(TxError::InsufficientFunds { needed: b.amount, available: from.tokens });
                }
                self.accounts.modify(&b.from, |a| {
                    a.tokens -= b.amount;
                    a.nonce += 1;
                })?;
                self.accounts.modify(&b.to, |a| a.tokens += b.amount)?;
            }
            Transaction::Governance(g) => {
                if g.body.epoch != epoch {
                    return Err(TxError::WrongEpoch { expected: epoch, got: g.body.epoch });
                }
                let mut voters = BTreeSet::new();
                let mut support = 0.0;
                for v in &g.votes {
                    if !voters.insert(v.voter) {
                        return Err(TxError::DuplicateVoter(v.voter));
                    }
                    let w = self.snapshot.weight_at(&v.voter, slot).ok_or(TxError::NotValidator(v.voter))?;
                    let key = self.accounts.get(&v.voter).ok_or(TxError::UnknownAccount(v.voter))?.platform_pubkey;
                    if !v.verify(&g.body, &key) {
                        return Err(TxError::BadSignature);
                    }
                    support += w;
                }
                let total = self.snapshot.total_at(slot);
                self.issuers.apply_governance(g.body.action.clone(), support, total, epoch)?;
            }
            Transaction::Join(j) => {
                let b = &j.body;
                let acct = self.accounts.get(&b.validator).ok_or(TxError::UnknownAccount(b.validator))?;
                if !j.verify(&acct.platform_pubkey) {
                    return Err(TxError::BadSignature);
                }
                if b.nonce != acct.nonce {
                    return Err(TxError::BadNonce { expected: acct.nonce, got: b.nonce });
                }
                let weight = effective_capital(acct.active_received, &acct.scaling);
                self.validators.join(b.validator, acct.active_received, weight, slot, &self.params)?;
                self.randao.commit(b.validator, b.randao_commitment);
                self.accounts.modify(&b.validator, |a| {
                    a.nonce += 1;
                    a.role = Role::Validator;
                })?;
            }
        }
        Ok(())
    }

    fn refresh_role(&mut self, id: &IdHash) -> Result<(), TxError> {
        let is_validator = self.validators.is_member(id);
        self.accounts.modify(id, |a| a.refresh_role(is_validator))?;
        Ok(())
    }

    /// Counts an attestation toward its checkpoint.
    pub fn apply_attestation(&mut self, att: &Attestation) -> Result<(), ConsensusError> {
        let snap = if att.epoch == self.snapshot.epoch {
            &self.snapshot
        } else {
            match &self.previous_snapshot {
                Some(p) if p.epoch == att.epoch => p,
                _ => return Err(ConsensusError::UnknownCheckpoint(att.epoch)),
            }
        };
        let weight = snap.weight_at(&att.validator, snap.start_slot).ok_or(ConsensusError::NotActive(att.validator))?;
        let key = self.accounts.get(&att.validator).ok_or(ConsensusError::NotActive(att.validator))?.platform_pubkey;
        if !att.verify(&key) {
            return Err(ConsensusError::BadEvidence("attestation signature does not verify".into()));
        }
        self.finality.attest(att.validator, att.epoch, att.checkpoint_root, weight)
    }

    /// Runs the slot transition and block body on a copy of `self`. In
    /// filter mode invalid items are dropped and reported instead of failing.
    #[allow(clippy::too_many_arguments)]
    fn execute(
        &self,
        slot: u64,
        proposer: IdHash,
        reveal: &Hash32,
        next_commitment: Hash32,
        body: &BlockBody,
        reward_key: impl FnOnce(&BlockBody) -> Hash32,
        mode: Mode,
    ) -> Result<Executed, LedgerError> {
        if slot <= self.slot {
            return Err(LedgerError::SlotNotAfterParent { slot, parent_slot: self.slot });
        }
        let mut s = self.clone();
        s.advance_to(slot)?;
        let expected = s.snapshot.leader(slot)?;
        if expected != proposer {
            return Err(match mode {
                Mode::Strict => LedgerError::WrongProposer { slot, expected, got: proposer },
                Mode::Filter => LedgerError::NotLeader { slot, expected },
            });
        }
        s.randao.reveal(&proposer, reveal).map_err(LedgerError::Randao)?;
        s.randao.commit(proposer, next_commitment);
        if let Some(e) = s.validators.get_mut(&proposer) {
            e.reveals += 1;
        }
        let epoch = s.snapshot.epoch;
        let mut kept = BlockBody::default();
        for ev in &body.slashings {
            // Evidence is judged against the parent state.
            let checked = self.offenses.check(ev, &self.params, self);
            let fresh = !s.offenses.already_reported(ev);
            match (checked, fresh, mode) {
                (Ok(()), true, _) => {
                    s.offenses.punish(&mut s.accounts, ev, epoch, &self.params).map_err(LedgerError::Slashing)?;
                    kept.slashings.push(ev.clone());
                }
                (Err(e), _, Mode::Strict) => return Err(LedgerError::Slashing(e)),
                (Ok(()), false, Mode::Strict) => return Err(LedgerError::Slashing(ConsensusError::AlreadyReported)),
                _ => {}
            }
        }
        let mut rejected = Vec::new();
        for (index, tx) in body.transactions.iter().enumerate() {
            match s.apply_tx(tx, slot) {
                Ok(()) => kept.transactions.push(tx.clone()),
                Err(error) if mode == Mode::Strict => return Err(LedgerError::Tx { index, error }),
                Err(error) => rejected.push((index, error)),
            }
        }
        let mut attesters = Vec::new();
        for (index, att) in body.attestations.iter().enumerate() {
            match s.apply_attestation(att) {
                Ok(()) => {
                    attesters.push(att.validator);
                    kept.attestations.push(att.clone());
                }
                Err(error) if mode == Mode::Strict => return Err(LedgerError::Attestation { index, error }),
                Err(_) => {}
            }
        }
        s.finality.finalize();
        let key = reward_key(&kept);
        s.rewards.distribute_rewards(&mut s.accounts, key, &proposer, &attesters, &self.params)?;
        s.missed.remove(&proposer);
        Ok((s, kept, rejected))
    }

    /// Validates `block` against this state and returns the successor state.
    pub fn apply_block(&self, block: &Block) -> Result<ChainState, LedgerError> {
        let h = &block.header.header;
        if h.parent_hash != self.head {
            return Err(LedgerError::UnknownParent { expected: self.head, got: h.parent_hash });
        }
        if block.body.hash() != h.body_hash {
            return Err(LedgerError::BadBodyHash);
        }
        let reward_key = block.reward_key();
        let (mut s, _, _) = self.execute(
            h.slot,
            h.proposer,
            &h.randao_reveal,
            h.next_randao_commitment,
            &block.body,
            |_| reward_key,
            Mode::Strict,
        )?;
        let computed = s.accounts.root();
        if computed != h.state_root {
            return Err(LedgerError::StateRootMismatch { slot: h.slot, expected: h.state_root, computed });
        }
        let key = s.accounts.get(&h.proposer).expect("leader has an account").platform_pubkey;
        if !block.header.verify(&key) {
            return Err(LedgerError::BadSignature);
        }
        s.head = block.hash();
        s.slot = h.slot;
        s.height += 1;
        Ok(s)
    }

    /// Assembles and signs a block for `slot` from the candidates, keeping
    /// valid transactions in FIFO order and skipping the rest.
    pub fn build_block(
        &self,
        slot: u64,
        proposer: IdHash,
        key: &Keypair,
        randao_secret: &[u8; 32],
        candidates: &BlockCandidates,
    ) -> Result<BuiltBlock, LedgerError> {
        let reveals = self.validators.get(&proposer).map_or(0, |e| e.reveals);
        let reveal = reveal_for(randao_secret, reveals);
        let next = commitment_of(&reveal_for(randao_secret, reveals + 1));
        let body = BlockBody {
            transactions: candidates.transactions.clone(),
            attestations: candidates.attestations.clone(),
            slashings: candidates.slashings.clone(),
        };
        let parent = self.head;
        let reward_key = |kept: &BlockBody| super::block::reward_key(&parent, slot, &proposer, &kept.hash());
        let (mut s, kept, rejected) = self.execute(slot, proposer, &reveal, next, &body, reward_key, Mode::Filter)?;
        let header = BlockHeader {
            slot,
            proposer,
            parent_hash: parent,
            state_root: s.accounts.root(),
            body_hash: kept.hash(),
            randao_reveal: reveal,
            next_randao_commitment: next,
        };
        let block = Block { header: header.sign(key), body: kept };
        s.head = block.hash();
        s.slot = slot;
        s.height += 1;
        Ok(BuiltBlock { block, state: s, rejected })
    }

    /// Whether `block` would be rejected for a fault of its (elected,
    /// correctly signing) proposer when applied on top of this state.
    fn proposer_fault(&self, block: &Block) -> bool {
        block.parent_hash() == self.head
            && block.slot() > self.slot
            && matches!(self.apply_block(block), Err(e) if e.is_proposer_fault())
    }
}

impl EvidenceVerifier for ChainState {
    fn proposer_key(&self, id: &IdHash) -> Option<PublicKey> {
        self.accounts.get(id).map(|a| a.platform_pubkey)
    }

    fn is_invalid_block(&self, block: &Block) -> bool {
        self.proposer_fault(block)
    }

    fn missed_proposal(&self, validator: &IdHash, slot: u64) -> bool {
        self.skipped.get(&slot) == Some(validator)
    }
}
