use serde::{Deserialize, Serialize};

use crate::crypto::{hash_canonical, Hash32, Keypair, PublicKey, Signature};
use crate::identity::IdHash;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub slot: u64,
    pub proposer: IdHash,
    pub parent_hash: Hash32,
    pub state_root: Hash32,
    /// Hash of the block body (transactions, attestations, slashings).
    pub body_hash: Hash32,
    pub randao_reveal: Hash32,
    /// Commitment for the proposer's next reveal.
    pub next_randao_commitment: Hash32,
}

impl BlockHeader {
    pub fn hash(&self) -> Hash32 {
        hash_canonical("posc/header/v1", self)
    }

    fn signing_payload(&self) -> Vec<u8> {
        let mut out = b"posc/propose/v1".to_vec();
        out.extend_from_slice(self.hash().as_bytes());
        out
    }

    pub fn sign(self, key: &Keypair) -> SignedHeader {
        let signature = key.sign(&self.signing_payload());
        SignedHeader { header: self, signature }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedHeader {
    pub header: BlockHeader,
    pub signature: Signature,
}

impl SignedHeader {
    pub fn hash(&self) -> Hash32 {
        self.header.hash()
    }

    pub fn verify(&self, key: &PublicKey) -> bool {
        key.verify(&self.header.signing_payload(), &self.signature)
    }
}
