//! Social capital: passive budgets, sponsored endorsements, delayed
//! redistribution, and scaling of active capital into consensus power.

mod ledger;
mod scaling;

use thiserror::Error;

pub use ledger::{
    capital_in_circulation, AccountStore, CapitalLedger, EndorseBody, Endorsement, MetaBody, MetaTx, PendingTransfer,
    ReassignBody, Reassignment, SponsorRequest,
};
pub use scaling::{
    apply_penalty, consensus_power, effective_capital, meets_participation_threshold, normalize, quadratic_voting_weight,
    register_scaling, round_weight, scaling_function, scaling_names, Cbrt, Identity, Log2, Log2OnePlus, ScalingBaseline,
    ScalingFunction, ScalingRegistry, ScalingSpec, Severity, Sqrt,
};

use crate::identity::IdHash;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CapitalError {
    #[error("requested {requested} units but only {available} passive capital remains")]
    InsufficientBudget { requested: u64, available: u64 },
    #[error("unknown account {0}")]
    UnknownAccount(IdHash),
    #[error("signature does not verify")]
    BadSignature,
    #[error("sponsor must be the creator receiving the capital")]
    SponsorNotCreator,
    #[error("expected nonce {expected}, got {got}")]
    BadNonce { expected: u64, got: u64 },
    #[error("fee must be {expected}, got {got}")]
    BadFee { expected: u64, got: u64 },
    #[error("sponsor needs {needed} micro-tokens but holds {available}")]
    InsufficientFunds { needed: u64, available: u64 },
    #[error("cannot reassign {requested} units, only {movable} movable")]
    NothingToReassign { requested: u64, movable: u64 },
    #[error("no validator with positive effective capital")]
    EmptyValidatorSet,
    #[error("unknown scaling function {0:?}")]
    UnknownScaling(String),
    #[error("penalty divisor must be >= 1, got {0}")]
    BadDivisor(f64),
}
