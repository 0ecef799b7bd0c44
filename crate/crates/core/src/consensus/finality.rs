use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::crypto::Hash32;
use crate::identity::IdHash;

use super::ConsensusError;

/// Justification needs `attesting >= 2/3 * total`; the slack absorbs
/// floating-point error when weights are fractions.
fn supermajority(attesting: f64, total: f64) -> bool {
    total > 0.0 && 3.0 * attesting >= 2.0 * total * (1.0 - 1e-12)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub epoch: u64,
    pub block_root: Hash32,
    pub attesting_weight: f64,
    pub total_weight: f64,
    pub attesters: BTreeSet<IdHash>,
    pub justified: bool,
    pub finalized: bool,
}

impl Checkpoint {
    pub fn new(epoch: u64, block_root: Hash32, total_weight: f64) -> Checkpoint {
        Checkpoint {
            epoch,
            block_root,
            attesting_weight: 0.0,
            total_weight,
            attesters: BTreeSet::new(),
            justified: false,
            finalized: false,
        }
    }

    /// Adds `weight` for `validator`. A second vote by the same validator is
    /// refused and leaves the checkpoint untouched.
    pub fn attest(&mut self, validator: IdHash, weight: f64) -> Result<(), ConsensusError> {
        if self.attesters.contains(&validator) {
            return Err(ConsensusError::DoubleAttestation { validator, epoch: self.epoch });
        }
        self.attesters.insert(validator);
        self.attesting_weight += weight;
        if supermajority(self.attesting_weight, self.total_weight) {
            self.justified = true;
        }
        Ok(())
    }
}

/// A vote for a checkpoint that conflicts with one already counted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictingVote {
    pub validator: IdHash,
    pub epoch: u64,
    pub counted_root: Hash32,
    pub conflicting_root: Hash32,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FinalityTracker {
    checkpoints: BTreeMap<u64, Checkpoint>,
    conflicts: Vec<ConflictingVote>,
}

impl FinalityTracker {
    pub fn new() -> FinalityTracker {
        FinalityTracker::default()
    }

    pub fn open(&mut self, checkpoint: Checkpoint) {
        self.checkpoints.insert(checkpoint.epoch, checkpoint);
    }

    pub fn get(&self, epoch: u64) -> Option<&Checkpoint> {
        self.checkpoints.get(&epoch)
    }

    pub fn checkpoints(&self) -> impl Iterator<Item = &Checkpoint> {
        self.checkpoints.values()
    }

    pub fn conflicts(&self) -> &[ConflictingVote] {
        &self.conflicts
    }

    pub fn latest_finalized(&self) -> Option<&Checkpoint> {
        self.checkpoints.values().rev().find(|c| c.finalized)
    }

    /// Counts a vote for `(epoch, root)`. Votes for an unknown epoch or a
    /// different root are rejected; a different root after a counted vote is
    /// also logged as a conflict.
    pub fn attest(&mut self, validator: IdHash, epoch: u64, root: Hash32, weight: f64) -> Result<(), ConsensusError> {
        let cp = self.checkpoints.get_mut(&epoch).ok_or(ConsensusError::UnknownCheckpoint(epoch))?;
        if cp.block_root != root {
            if cp.attesters.contains(&validator) {
                self.conflicts.push(ConflictingVote { validator, epoch, counted_root: cp.block_root, conflicting_root: root });
                return Err(ConsensusError::DoubleAttestation { validator, epoch });
            }
            return Err(ConsensusError::UnknownCheckpoint(epoch));
        }
        cp.attest(validator, weight)
    }

    /// Finalizes every justified checkpoint whose successor epoch is also
    /// justified. Returns newly finalized epochs.
    pub fn finalize(&mut self) -> Vec<u64> {
        let justified: BTreeSet<u64> = self.checkpoints.values().filter(|c| c.justified).map(|c| c.epoch).collect();
        let mut newly = Vec::new();
        for cp in self.checkpoints.values_mut() {
            if cp.justified && !cp.finalized && justified.contains(&(cp.epoch + 1)) {
                cp.finalized = true;
                newly.push(cp.epoch);
            }
        }
        newly
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u8) -> IdHash {
        IdHash(Hash32([i; 32]))
    }

    #[test]
    fn two_of_three_justifies() {
        let mut cp = Checkpoint::new(0, Hash32::ZERO, 3.0);
        cp.attest(v(1), 1.0).unwrap();
        assert!(!cp.justified);
        cp.attest(v(2), 1.0).unwrap();
        assert!(cp.justified);
    }

    #[test]
    fn fractional_weights_at_boundary() {
        let third = 1.0 / 3.0;
        let mut cp = Checkpoint::new(0, Hash32::ZERO, third * 3.0);
        cp.attest(v(1), third).unwrap();
        cp.attest(v(2), third).unwrap();
        assert!(cp.justified);
    }

    #[test]
    fn one_of_three_does_not() {
        let mut cp = Checkpoint::new(0, Hash32::ZERO, 3.0);
        cp.attest(v(1), 1.0).unwrap();
        assert!(!cp.justified);
    }

    #[test]
    fn double_attestation_does_not_add_weight() {
        let mut cp = Checkpoint::new(0, Hash32::ZERO, 3.0);
        cp.attest(v(1), 1.0).unwrap();
        assert_eq!(cp.attest(v(1), 1.0), Err(ConsensusError::DoubleAttestation { validator: v(1), epoch: 0 }));
        assert_eq!(cp.attesting_weight, 1.0);
    }

    #[test]
    fn consecutive_justified_finalize_first() {
        let mut t = FinalityTracker::new();
        for e in 0..3 {
            t.open(Checkpoint::new(e, Hash32([e as u8; 32]), 3.0));
        }
        for e in 0..2 {
            for i in 0..2 {
                t.attest(v(i), e, Hash32([e as u8; 32]), 1.0).unwrap();
            }
        }
        assert_eq!(t.finalize(), vec![0]);
        assert!(t.get(0).unwrap().finalized && !t.get(1).unwrap().finalized);
        assert!(t.finalize().is_empty());
        assert_eq!(t.latest_finalized().unwrap().epoch, 0);
    }

    #[test]
    fn conflicting_root_is_logged() {
        let mut t = FinalityTracker::new();
        t.open(Checkpoint::new(0, Hash32::ZERO, 3.0));
        t.attest(v(1), 0, Hash32::ZERO, 1.0).unwrap();
        assert!(t.attest(v(1), 0, Hash32([1; 32]), 1.0).is_err());
        assert_eq!(t.conflicts().len(), 1);
        assert_eq!(t.get(0).unwrap().attesting_weight, 1.0);
    }
}
