use serde::{Deserialize, Serialize};

use crate::crypto::{hash_canonical, Hash32, PublicKey};
use crate::identity::{IdHash, IdentityProof};
use crate::params::ProtocolParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenesisIssuer {
    pub issuer_id: String,
    pub pubkey: PublicKey,
}

/// Capital a genesis account has already allocated; active from the start.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenesisEndorsement {
    pub creator: IdHash,
    pub amount: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenesisAccount {
    pub proof: IdentityProof,
    #[serde(default)]
    pub tokens: u64,
    #[serde(default)]
    pub endorsements: Vec<GenesisEndorsement>,
    /// Present for genesis validators: commitment to their first reveal.
    #[serde(default)]
    pub randao_commitment: Option<Hash32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenesisConfig {
    #[serde(default)]
    pub params: ProtocolParams,
    pub issuers: Vec<GenesisIssuer>,
    pub accounts: Vec<GenesisAccount>,
    pub randao_seed: Hash32,
    /// Key of the simulated proof system. Simulation only: whoever holds it
    /// can mint proofs, so it offers no soundness.
    pub oracle_key: Hash32,
}

impl GenesisConfig {
    pub fn hash(&self) -> Hash32 {
        hash_canonical("posc/genesis/v1", self)
    }
}
