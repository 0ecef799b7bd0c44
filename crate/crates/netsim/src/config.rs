use posc_core::crypto::{hash_canonical, Hash32};
use posc_core::fixtures::small_params;
use posc_core::ProtocolParams;
use serde::{Deserialize, Serialize};

use crate::SimError;

/// Uniform per-message latency bounds in milliseconds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub min_ms: u64,
    pub max_ms: u64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel { min_ms: 20, max_ms: 200 }
    }
}

/// An honest creator that is a validator from genesis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidatorSpec {
    /// Active capital at genesis, in full endorsements.
    pub full_endorsements: usize,
}

/// Honest followers registered at genesis with their budget unspent. Each
/// asks a validator, round robin, to sponsor an endorsement.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FollowerSpec {
    pub count: usize,
    /// Passive units each follower endorses.
    pub amount: u64,
    /// Slot at which the first follower sends its request; the rest follow
    /// one per slot.
    pub start_slot: u64,
}

/// An adversary selected by behavior name; the remaining fields are passed
/// to the registered factory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversarySpec {
    pub behavior: String,
    #[serde(flatten)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

impl AdversarySpec {
    pub fn new(behavior: &str, params: serde_json::Value) -> AdversarySpec {
        let params = match params {
            serde_json::Value::Object(m) => m,
            _ => serde_json::Map::new(),
        };
        AdversarySpec { behavior: behavior.to_string(), params }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub validators: Vec<ValidatorSpec>,
    #[serde(default)]
    pub followers: FollowerSpec,
    #[serde(default)]
    pub adversaries: Vec<AdversarySpec>,
    #[serde(default)]
    pub latency: LatencyModel,
    #[serde(default = "default_slot_ms")]
    pub slot_ms: u64,
    pub slots_to_run: u64,
    /// Protocol constants; defaults to the small simulation profile.
    #[serde(default = "small_params")]
    pub params: ProtocolParams,
}

fn default_slot_ms() -> u64 {
    1000
}

impl SimConfig {
    /// An all-honest network of validators with the given capital.
    pub fn honest(seed: u64, full_endorsements: &[usize], slots_to_run: u64) -> SimConfig {
        SimConfig {
            seed,
            validators: full_endorsements.iter().map(|n| ValidatorSpec { full_endorsements: *n }).collect(),
            followers: FollowerSpec::default(),
            adversaries: Vec::new(),
            latency: LatencyModel::default(),
            slot_ms: default_slot_ms(),
            slots_to_run,
            params: small_params(),
        }
    }

    pub fn with_adversary(mut self, spec: AdversarySpec) -> SimConfig {
        self.adversaries.push(spec);
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        if self.validators.is_empty() {
            return bad("at least one honest validator is required");
        }
        if self.validators.iter().any(|v| v.full_endorsements as u64 <= self.params.threshold_full_endorsements) {
            return bad("every validator needs more full endorsements than the participation threshold");
        }
        if self.latency.min_ms > self.latency.max_ms {
            return bad("latency min_ms exceeds max_ms");
        }
        if self.slot_ms == 0 || self.slots_to_run == 0 {
            return bad("slot_ms and slots_to_run must be positive");
        }
        if self.params.slots_per_epoch == 0 {
            return bad("slots_per_epoch must be positive");
        }
        if self.followers.count > 0 && (self.followers.amount == 0 || self.followers.amount > self.params.passive_budget) {
            return bad("follower amount must lie in 1..=passive_budget");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<SimConfig, SimError> {
        let c: SimConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn hash(&self) -> Hash32 {
        hash_canonical("posc/sim-config/v1", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_with_defaults() {
        let text = r#"{"seed": 3, "validators": [{"full_endorsements": 3}], "slots_to_run": 10,
            "adversaries": [{"behavior": "sybil_registrar", "n_attempts": 5}]}"#;
        let c = SimConfig::from_json(text).unwrap();
        assert_eq!(c.slot_ms, 1000);
        assert_eq!(c.params, small_params());
        assert_eq!(c.adversaries[0].params["n_attempts"], 5);
        let back: SimConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(SimConfig::honest(1, &[], 10).validate().is_err());
        assert!(SimConfig::honest(1, &[1], 10).validate().is_err(), "at the threshold, not above it");
        let mut c = SimConfig::honest(1, &[3], 10);
        c.latency = LatencyModel { min_ms: 10, max_ms: 5 };
        assert!(c.validate().is_err());
        assert!(SimConfig::from_json("{}").is_err());
    }
}
