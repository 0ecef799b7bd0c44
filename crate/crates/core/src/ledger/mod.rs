//! Blocks, transactions and the deterministic state-transition function,
//! plus append-only JSON-lines persistence.

mod block;
mod genesis;
mod state;
mod store;
mod tx;

use thiserror::Error;

pub use block::{reward_key, Block, BlockBody};
pub use genesis::{GenesisAccount, GenesisConfig, GenesisEndorsement, GenesisIssuer};
pub use state::{BlockCandidates, BuiltBlock, ChainState, EpochSnapshot, SnapshotEntry};
pub use store::{encode_line, Chain, ChainFile, Recovered, StoreError};
pub use tx::{
    Attestation, GovernanceBody, GovernanceTx, JoinBody, JoinTx, RegisterTx, Transaction, TransferBody, TransferTx, Vote,
};

use crate::capital::CapitalError;
use crate::consensus::ConsensusError;
use crate::crypto::Hash32;
use crate::identity::{IdHash, IdentityError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TxError {
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error(transparent)]
    Capital(#[from] CapitalError),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error("unknown account {0}")]
    UnknownAccount(IdHash),
    #[error("signature does not verify")]
    BadSignature,
    #[error("expected nonce {expected}, got {got}")]
    BadNonce { expected: u64, got: u64 },
    #[error("needs {needed} micro-tokens, holds {available}")]
    InsufficientFunds { needed: u64, available: u64 },
    #[error("vote is for epoch {got}, current epoch is {expected}")]
    WrongEpoch { expected: u64, got: u64 },
    #[error("{0} voted twice")]
    DuplicateVoter(IdHash),
    #[error("{0} is not an active validator")]
    NotValidator(IdHash),
}

impl TxError {
    /// Name of the innermost error variant, for terse reporting.
    pub fn name(&self) -> String {
        let debug = match self {
            TxError::Identity(e) => format!("{e:?}"),
            TxError::Capital(e) => format!("{e:?}"),
            TxError::Consensus(e) => format!("{e:?}"),
            other => format!("{other:?}"),
        };
        debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LedgerError {
    #[error("invalid genesis: {0}")]
    Genesis(String),
    #[error("parent {got} is not the head {expected}")]
    UnknownParent { expected: Hash32, got: Hash32 },
    #[error("slot {slot} does not follow parent slot {parent_slot}")]
    SlotNotAfterParent { slot: u64, parent_slot: u64 },
    #[error("slot {slot} belongs to {expected}, block proposed by {got}")]
    WrongProposer { slot: u64, expected: IdHash, got: IdHash },
    #[error("slot {slot} belongs to {expected}")]
    NotLeader { slot: u64, expected: IdHash },
    #[error("body does not match the header's body hash")]
    BadBodyHash,
    #[error("proposer signature does not verify")]
    BadSignature,
    #[error("state root mismatch at slot {slot}: header {expected}, computed {computed}")]
    StateRootMismatch { slot: u64, expected: Hash32, computed: Hash32 },
    #[error("transaction {index}: {error}")]
    Tx { index: usize, error: TxError },
    #[error("attestation {index}: {error}")]
    Attestation { index: usize, error: ConsensusError },
    #[error("randao: {0}")]
    Randao(ConsensusError),
    #[error("slashing: {0}")]
    Slashing(ConsensusError),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error(transparent)]
    Capital(#[from] CapitalError),
}

impl LedgerError {
    /// Failures attributable to a proposer that signed a block with
    /// content that does not apply. Such blocks are slashable.
    pub fn is_proposer_fault(&self) -> bool {
        matches!(
            self,
            LedgerError::StateRootMismatch { .. }
                | LedgerError::Tx { .. }
                | LedgerError::Attestation { .. }
                | LedgerError::Randao(_)
                | LedgerError::Slashing(_)
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            LedgerError::Genesis(_) => "Genesis",
            LedgerError::UnknownParent { .. } => "UnknownParent",
            LedgerError::SlotNotAfterParent { .. } => "SlotNotAfterParent",
            LedgerError::WrongProposer { .. } => "WrongProposer",
            LedgerError::NotLeader { .. } => "NotLeader",
            LedgerError::BadBodyHash => "BadBodyHash",
            LedgerError::BadSignature => "BadSignature",
            LedgerError::StateRootMismatch { .. } => "StateRootMismatch",
            LedgerError::Tx { .. } => "Tx",
            LedgerError::Attestation { .. } => "Attestation",
            LedgerError::Randao(_) => "Randao",
            LedgerError::Slashing(_) => "Slashing",
            LedgerError::Consensus(_) => "Consensus",
            LedgerError::Capital(_) => "Capital",
        }
    }
}
