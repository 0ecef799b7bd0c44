use serde::{Deserialize, Serialize};

/// Native token amounts are counted in micro-units.
pub const MICROS_PER_TOKEN: u64 = 1_000_000;

/// Protocol constants. Every field can be overridden from a genesis or
/// simulation config; missing fields fall back to the defaults below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolParams {
    /// Passive social capital granted to every registered identity.
    pub passive_budget: u64,
    /// Validators need active capital strictly above this many full endorsements.
    pub threshold_full_endorsements: u64,
    pub redistribution_delay_epochs: u64,
    pub activation_delay_slots: u64,
    pub slots_per_epoch: u64,
    pub penalty_epochs: u64,
    pub c_minor: f64,
    pub c_major: f64,
    pub inactivity_limit: u32,
    /// Micro-units minted for the proposer of each block.
    pub proposer_reward: u64,
    /// Micro-units minted for each attestation included in a block.
    pub attester_reward: u64,
    /// Flat endorsement fee in micro-units, paid by the sponsoring creator and burned.
    pub endorsement_fee: u64,
    /// Name of the default scaling function for new accounts.
    pub scaling_function: String,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            passive_budget: 100,
            threshold_full_endorsements: 10_000,
            redistribution_delay_epochs: 2,
            activation_delay_slots: 64,
            slots_per_epoch: 32,
            penalty_epochs: 8,
            c_minor: 2.0,
            c_major: 4.0,
            inactivity_limit: 8,
            proposer_reward: MICROS_PER_TOKEN,
            attester_reward: MICROS_PER_TOKEN / 100,
            endorsement_fee: MICROS_PER_TOKEN,
            scaling_function: "sqrt".to_string(),
        }
    }
}

impl ProtocolParams {
    /// Size of a full endorsement: a follower's entire passive budget.
    pub fn full_endorsement(&self) -> u64 {
        self.passive_budget
    }

    pub fn epoch_of(&self, slot: u64) -> u64 {
        slot / self.slots_per_epoch
    }

    pub fn participation_threshold(&self) -> u128 {
        self.threshold_full_endorsements as u128 * self.full_endorsement() as u128
    }
}
