use serde::{Deserialize, Serialize};

use crate::consensus::{Evidence, SignedHeader};
use crate::crypto::{hash_canonical, Hash32};
use crate::identity::IdHash;

use super::{Attestation, Transaction};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BlockBody {
    pub transactions: Vec<Transaction>,
    pub attestations: Vec<Attestation>,
    pub slashings: Vec<Evidence>,
}

impl BlockBody {
    pub fn hash(&self) -> Hash32 {
        hash_canonical("posc/body/v1", self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub header: SignedHeader,
    pub body: BlockBody,
}

impl Block {
    pub fn hash(&self) -> Hash32 {
        self.header.hash()
    }

    pub fn slot(&self) -> u64 {
        self.header.header.slot
    }

    pub fn parent_hash(&self) -> Hash32 {
        self.header.header.parent_hash
    }

    pub fn reward_key(&self) -> Hash32 {
        let h = &self.header.header;
        reward_key(&h.parent_hash, h.slot, &h.proposer, &h.body_hash)
    }
}

/// Key under which block rewards are paid. It leaves out the state root,
/// which itself depends on the rewards.
pub fn reward_key(parent_hash: &Hash32, slot: u64, proposer: &IdHash, body_hash: &Hash32) -> Hash32 {
    Hash32::digest_parts(&[b"posc/reward", parent_hash.as_bytes(), &slot.to_be_bytes(), proposer.0.as_bytes(), body_hash.as_bytes()])
}
