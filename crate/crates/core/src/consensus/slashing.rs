use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::capital::{apply_penalty, AccountStore, ScalingSpec, Severity};
use crate::crypto::{hash_canonical, Hash32, PublicKey};
use crate::identity::IdHash;
use crate::ledger::Block;
use crate::params::ProtocolParams;

use super::{ConsensusError, SignedHeader};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffenseKind {
    Equivocation,
    InvalidBlock,
    Inactivity,
}

impl OffenseKind {
    pub fn severity(self) -> Severity {
        match self {
            OffenseKind::Equivocation | OffenseKind::InvalidBlock => Severity::Major,
            OffenseKind::Inactivity => Severity::Minor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Evidence {
    /// Two distinct headers signed by the same proposer for the same slot.
    Equivocation { first: SignedHeader, second: SignedHeader },
    /// A signed block that does not apply cleanly to its parent.
    InvalidBlock { block: Box<Block> },
    /// Slots the validator was elected for and produced nothing.
    Inactivity { validator: IdHash, missed_slots: Vec<u64> },
}

impl Evidence {
    pub fn kind(&self) -> OffenseKind {
        match self {
            Evidence::Equivocation { .. } => OffenseKind::Equivocation,
            Evidence::InvalidBlock { .. } => OffenseKind::InvalidBlock,
            Evidence::Inactivity { .. } => OffenseKind::Inactivity,
        }
    }

    pub fn offender(&self) -> IdHash {
        match self {
            Evidence::Equivocation { first, .. } => first.header.proposer,
            Evidence::InvalidBlock { block } => block.header.header.proposer,
            Evidence::Inactivity { validator, .. } => *validator,
        }
    }

    /// Identity of the offense itself, independent of header order.
    pub fn id(&self) -> Hash32 {
        match self {
            Evidence::Equivocation { first, second } => {
                let (a, b) = (first.hash(), second.hash());
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                Hash32::digest_parts(&[b"posc/evidence/equivocation", lo.as_bytes(), hi.as_bytes()])
            }
            other => hash_canonical("posc/evidence/v1", other),
        }
    }
}

/// Chain-side facts needed to check evidence.
pub trait EvidenceVerifier {
    fn proposer_key(&self, id: &IdHash) -> Option<PublicKey>;
    /// True if the block, applied to its parent, fails (for instance with a
    /// state root that does not follow).
    fn is_invalid_block(&self, block: &Block) -> bool;
    /// True if `validator` was elected for `slot` and no block exists there.
    fn missed_proposal(&self, validator: &IdHash, slot: u64) -> bool;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffenseRecord {
    pub offender: IdHash,
    pub kind: OffenseKind,
    pub severity: Severity,
    pub epoch: u64,
    pub evidence_id: Hash32,
    pub scaling_before: ScalingSpec,
    pub scaling_after: ScalingSpec,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OffenseLog {
    records: Vec<OffenseRecord>,
    seen: BTreeSet<Hash32>,
    /// Highest slot already punished as inactivity, per validator.
    inactivity_cutoff: BTreeMap<IdHash, u64>,
}

impl OffenseLog {
    pub fn new() -> OffenseLog {
        OffenseLog::default()
    }

    pub fn records(&self) -> &[OffenseRecord] {
        &self.records
    }

    pub fn already_reported(&self, evidence: &Evidence) -> bool {
        self.seen.contains(&evidence.id())
    }

    /// Validates evidence without applying a penalty.
    pub fn check(&self, evidence: &Evidence, params: &ProtocolParams, verifier: &impl EvidenceVerifier) -> Result<(), ConsensusError> {
        let bad = |why: &str| Err(ConsensusError::BadEvidence(why.to_string()));
        if self.already_reported(evidence) {
            return Err(ConsensusError::AlreadyReported);
        }
        let offender = evidence.offender();
        match evidence {
            Evidence::Equivocation { first, second } => {
                let (a, b) = (&first.header, &second.header);
                if a.slot != b.slot {
                    return bad("headers name different slots");
                }
                if a.proposer != b.proposer {
                    return bad("headers name different proposers");
                }
                if first.hash() == second.hash() {
                    return bad("headers are identical");
                }
                let key = verifier.proposer_key(&offender).ok_or(ConsensusError::BadEvidence("unknown proposer".into()))?;
                if !first.verify(&key) || !second.verify(&key) {
                    return bad("header signature does not verify");
                }
            }
            Evidence::InvalidBlock { block } => {
                let key = verifier.proposer_key(&offender).ok_or(ConsensusError::BadEvidence("unknown proposer".into()))?;
                if !block.header.verify(&key) {
                    return bad("header signature does not verify");
                }
                if !verifier.is_invalid_block(block) {
                    return bad("block is valid");
                }
            }
            Evidence::Inactivity { validator, missed_slots } => {
                if missed_slots.len() < params.inactivity_limit as usize {
                    return bad("fewer missed slots than the inactivity limit");
                }
                if missed_slots.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("missed slots not strictly increasing");
                }
                if self.inactivity_cutoff.get(validator).is_some_and(|cut| missed_slots[0] <= *cut) {
                    return bad("missed slots already punished");
                }
                if !missed_slots.iter().all(|s| verifier.missed_proposal(validator, *s)) {
                    return bad("validator did not miss every listed slot");
                }
            }
        }
        Ok(())
    }

    /// Checks the evidence, applies the matching penalty to the offender's
    /// scaling spec, and logs the offense.
    pub fn report_offense(
        &mut self,
        store: &mut impl AccountStore,
        evidence: &Evidence,
        current_epoch: u64,
        params: &ProtocolParams,
        verifier: &impl EvidenceVerifier,
    ) -> Result<OffenseRecord, ConsensusError> {
        self.check(evidence, params, verifier)?;
        self.punish(store, evidence, current_epoch, params)
    }

    /// Applies the penalty for evidence that already passed [`OffenseLog::check`].
    pub fn punish(
        &mut self,
        store: &mut impl AccountStore,
        evidence: &Evidence,
        current_epoch: u64,
        params: &ProtocolParams,
    ) -> Result<OffenseRecord, ConsensusError> {
        let offender = evidence.offender();
        let kind = evidence.kind();
        let before = store.require(&offender)?.scaling.clone();
        let after = apply_penalty(&before, kind.severity(), current_epoch, params);
        store.modify(&offender, |a| a.scaling = after.clone())?;
        if let Evidence::Inactivity { validator, missed_slots } = evidence {
            self.inactivity_cutoff.insert(*validator, *missed_slots.last().expect("non-empty by check"));
        }
        let record = OffenseRecord {
            offender,
            kind,
            severity: kind.severity(),
            epoch: current_epoch,
            evidence_id: evidence.id(),
            scaling_before: before,
            scaling_after: after,
        };
        self.seen.insert(record.evidence_id);
        self.records.push(record.clone());
        Ok(record)
    }
}
