//! Deterministic discrete-event simulation of a network of protocol nodes.
//!
//! Every node holds its own replica of the chain and talks to the others
//! only through a simulated network with per-link latency. Adversaries are
//! strategies looked up by name in an [`AdversaryRegistry`] and act through
//! the same public interfaces as honest nodes.

mod adversary;
mod config;
mod network;
mod node;
mod report;
mod scheduler;
mod sim;

use thiserror::Error;

pub use adversary::{
    Adversary, AdversaryFactory, AdversaryRegistry, AttackOutcome, CapitalHoarder, Equivocator, GenesisAccess, LeaderDos,
    NodeCtx, OutcomeView, PublicServices, SlotAction, SybilRegistrar, ADVERSARY_PERSON_BASE,
};
pub use config::{AdversarySpec, FollowerSpec, LatencyModel, SimConfig, ValidatorSpec};
pub use network::{Message, Network};
pub use node::{BlockReceipt, BlockStatus, Replica};
pub use report::{OffenseRow, PowerEntry, SimReport, SlotRow};
pub use scheduler::EventQueue;
pub use sim::{run, run_with_registry, SimOutput};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("unknown adversary behavior {0:?}")]
    UnknownBehavior(String),
    #[error(transparent)]
    Ledger(#[from] posc_core::ledger::LedgerError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl SimError {
    pub fn name(&self) -> &'static str {
        match self {
            SimError::Config(_) | SimError::UnknownBehavior(_) | SimError::Json(_) => "ConfigError",
            SimError::Ledger(e) => e.name(),
            SimError::Csv(_) => "Csv",
        }
    }
}
