//! Leader election weighted by effective social capital, randao randomness,
//! delayed validator activation, checkpoint finality, slashing and rewards.

mod election;
mod finality;
mod header;
mod randao;
mod rewards;
mod slashing;
mod validators;

use thiserror::Error;

pub use election::{elect_leader, election_schedule, election_seed, seed_fraction, ScheduleRow};
pub use finality::{Checkpoint, ConflictingVote, FinalityTracker};
pub use header::{BlockHeader, SignedHeader};
pub use randao::{commitment_of, reveal_for, RandaoState};
pub use rewards::RewardLedger;
pub use slashing::{Evidence, EvidenceVerifier, OffenseKind, OffenseLog, OffenseRecord};
pub use validators::{ValidatorEntry, ValidatorSet, ValidatorStatus};

use crate::capital::CapitalError;
use crate::identity::IdHash;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConsensusError {
    #[error("active capital {active} does not exceed the participation threshold {threshold}")]
    BelowThreshold { active: u64, threshold: u128 },
    #[error("{0} is already a validator")]
    AlreadyMember(IdHash),
    #[error("{0} is not an active validator")]
    NotActive(IdHash),
    #[error("reveal by {0} does not match its commitment")]
    CommitmentMismatch(IdHash),
    #[error("{0} has no randao commitment")]
    NoCommitment(IdHash),
    #[error("no active validator with positive weight")]
    EmptyValidatorSet,
    #[error("{validator} already attested for epoch {epoch}")]
    DoubleAttestation { validator: IdHash, epoch: u64 },
    #[error("no checkpoint for epoch {0} with that root")]
    UnknownCheckpoint(u64),
    #[error("bad evidence: {0}")]
    BadEvidence(String),
    #[error("offense already reported")]
    AlreadyReported,
    #[error(transparent)]
    Capital(#[from] CapitalError),
}
