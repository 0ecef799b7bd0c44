use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::crypto::Hash32;
use crate::identity::IdHash;

use super::ConsensusError;

/// Commitment to a reveal: `H(reveal)`.
pub fn commitment_of(reveal: &Hash32) -> Hash32 {
    Hash32::digest(reveal.as_bytes())
}

/// The `index`-th reveal a validator derives from its private randao secret.
pub fn reveal_for(secret: &[u8; 32], index: u64) -> Hash32 {
    Hash32::digest_parts(&[b"posc/randao", secret, &index.to_be_bytes()])
}

/// Commit-reveal randomness beacon.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RandaoState {
    pub mix: Hash32,
    commitments: BTreeMap<IdHash, Hash32>,
}

impl RandaoState {
    pub fn new(seed: Hash32) -> RandaoState {
        RandaoState { mix: seed, commitments: BTreeMap::new() }
    }

    pub fn commitment(&self, validator: &IdHash) -> Option<&Hash32> {
        self.commitments.get(validator)
    }

    /// Stores (or replaces) the validator's commitment for its next reveal.
    pub fn commit(&mut self, validator: IdHash, commitment: Hash32) {
        self.commitments.insert(validator, commitment);
    }

    pub fn check_reveal(&self, validator: &IdHash, reveal: &Hash32) -> Result<(), ConsensusError> {
        let c = self.commitments.get(validator).ok_or(ConsensusError::NoCommitment(*validator))?;
        if commitment_of(reveal) != *c {
            return Err(ConsensusError::CommitmentMismatch(*validator));
        }
        Ok(())
    }

    /// Consumes the commitment and mixes the reveal in: `mix' = H(mix || reveal)`.
    pub fn reveal(&mut self, validator: &IdHash, reveal: &Hash32) -> Result<(), ConsensusError> {
        self.check_reveal(validator, reveal)?;
        self.commitments.remove(validator);
        self.mix = Hash32::digest_parts(&[self.mix.as_bytes(), reveal.as_bytes()]);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u8) -> IdHash {
        IdHash(Hash32([i; 32]))
    }

    #[test]
    fn commit_then_reveal() {
        let r = reveal_for(&[1; 32], 0);
        let mut s = RandaoState::new(Hash32::ZERO);
        s.commit(v(1), commitment_of(&r));
        s.reveal(&v(1), &r).unwrap();
        assert_eq!(s.mix, Hash32::digest_parts(&[&[0u8; 32], r.as_bytes()]));
        assert_eq!(s.reveal(&v(1), &r), Err(ConsensusError::NoCommitment(v(1))), "commitment is consumed");
    }

    #[test]
    fn wrong_reveal_rejected() {
        let mut s = RandaoState::new(Hash32::ZERO);
        s.commit(v(1), commitment_of(&reveal_for(&[1; 32], 0)));
        let before = s.clone();
        assert_eq!(s.reveal(&v(1), &reveal_for(&[1; 32], 1)), Err(ConsensusError::CommitmentMismatch(v(1))));
        assert_eq!(s, before);
    }

    #[test]
    fn reveal_order_matters() {
        let (ra, rb) = (reveal_for(&[1; 32], 0), reveal_for(&[2; 32], 0));
        let run = |first: bool| {
            let mut s = RandaoState::new(Hash32::ZERO);
            s.commit(v(1), commitment_of(&ra));
            s.commit(v(2), commitment_of(&rb));
            if first {
                s.reveal(&v(1), &ra).unwrap();
                s.reveal(&v(2), &rb).unwrap();
            } else {
                s.reveal(&v(2), &rb).unwrap();
                s.reveal(&v(1), &ra).unwrap();
            }
            s.mix
        };
        let mix = |a: &Hash32, b: &Hash32| {
            let m = Hash32::digest_parts(&[&[0u8; 32], a.as_bytes()]);
            Hash32::digest_parts(&[m.as_bytes(), b.as_bytes()])
        };
        assert_eq!(run(true), mix(&ra, &rb));
        assert_eq!(run(false), mix(&rb, &ra));
        assert_ne!(run(true), run(false));
    }
}
