use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::capital::{AccountStore, CapitalError};
use crate::crypto::Hash32;
use crate::identity::IdHash;
use crate::params::ProtocolParams;

/// Tracks which blocks have paid out, so a replayed block pays nothing.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardLedger {
    paid: BTreeSet<Hash32>,
    issued: u128,
}

impl RewardLedger {
    pub fn new() -> RewardLedger {
        RewardLedger::default()
    }

    /// Total micro-units minted so far.
    pub fn issued(&self) -> u128 {
        self.issued
    }

    /// Pays the proposer and every included attester. Returns the amount
    /// minted, zero if `block_hash` was already paid.
    pub fn distribute_rewards(
        &mut self,
        store: &mut impl AccountStore,
        block_hash: Hash32,
        proposer: &IdHash,
        attesters: &[IdHash],
        params: &ProtocolParams,
    ) -> Result<u64, CapitalError> {
        if self.paid.contains(&block_hash) {
            return Ok(0);
        }
        store.require(proposer)?;
        for a in attesters {
            store.require(a)?;
        }
        store.modify(proposer, |a| a.tokens += params.proposer_reward)?;
        for a in attesters {
            store.modify(a, |acct| acct.tokens += params.attester_reward)?;
        }
        let minted = params.proposer_reward + params.attester_reward * attesters.len() as u64;
        self.paid.insert(block_hash);
        self.issued += minted as u128;
        Ok(minted)
    }
}
