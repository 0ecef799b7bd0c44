//! Core protocol types for a Proof-of-Social-Capital chain: identity
//! registration, social capital accounting, validator election and the
//! block ledger.

// `!(x >= y)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod account;
pub mod capital;
pub mod consensus;
pub mod crypto;
pub mod fixtures;
pub mod identity;
pub mod ledger;
pub mod params;

pub use account::{Account, Allocation, Role};
pub use crypto::{Hash32, Keypair, PublicKey, Signature};
pub use identity::IdHash;
pub use params::{ProtocolParams, MICROS_PER_TOKEN};
