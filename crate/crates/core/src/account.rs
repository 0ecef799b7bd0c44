use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::capital::ScalingSpec;
use crate::crypto::PublicKey;
use crate::identity::{IdHash, IdentityProof, ProofBlob};
use crate::params::ProtocolParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Registered identity with no endorsements received.
    Member,
    /// Has received (or is about to receive) endorsements.
    Creator,
    /// Member of the validator set, pending or active.
    Validator,
}

/// How much of one follower's capital sits with one creator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub active: u64,
    /// Queued to become active with this creator.
    pub pending: u64,
    /// Active with this creator but queued to move elsewhere.
    pub leaving: u64,
}

impl Allocation {
    pub fn is_empty(&self) -> bool {
        self.active == 0 && self.pending == 0 && self.leaving == 0
    }
}

/// Per-identity record stored in the global state trie. Holds the proof and
/// platform key, never any credential field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Account {
    pub role: Role,
    pub platform_pubkey: PublicKey,
    pub proof_blob: ProofBlob,
    pub nonce: u64,
    pub passive_remaining: u64,
    pub active_received: u64,
    pub pending_in: u64,
    pub pending_out: u64,
    pub allocations: BTreeMap<IdHash, Allocation>,
    /// Native token balance in micro-units.
    pub tokens: u64,
    pub scaling: ScalingSpec,
}

impl Account {
    pub fn registered(proof: &IdentityProof, params: &ProtocolParams) -> Account {
        Account {
            role: Role::Member,
            platform_pubkey: proof.statement.platform_pubkey,
            proof_blob: proof.blob,
            nonce: 0,
            passive_remaining: params.passive_budget,
            active_received: 0,
            pending_in: 0,
            pending_out: 0,
            allocations: BTreeMap::new(),
            tokens: 0,
            scaling: ScalingSpec::new(&params.scaling_function).expect("scaling function validated with params"),
        }
    }

    pub fn refresh_role(&mut self, is_validator: bool) {
        self.role = if is_validator {
            Role::Validator
        } else if self.active_received > 0 || self.pending_in > 0 {
            Role::Creator
        } else {
            Role::Member
        };
    }
}
