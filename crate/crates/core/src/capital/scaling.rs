//! Scaling of active social capital into effective social capital.
//!
//! Scaling functions are strategies behind [`ScalingFunction`], looked up by
//! name in a process-wide [`ScalingRegistry`]. Accounts carry a
//! [`ScalingSpec`] naming their function plus any penalty in force.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::identity::IdHash;
use crate::params::ProtocolParams;

use super::CapitalError;

/// A concave, non-decreasing map from active to effective capital with f(0) = 0.
pub trait ScalingFunction: Send + Sync {
    fn name(&self) -> &'static str;

    fn apply(&self, active: f64) -> f64;

    /// Function a major penalty switches to. Must never exceed `self` on
    /// integer inputs.
    fn penalized(&self) -> &'static str {
        self.name()
    }
}

pub struct Sqrt;
pub struct Cbrt;
/// `log2(x)` for `x >= 1`, zero below. Matches the power tables computed
/// with a bare logarithm.
pub struct Log2;
/// `log2(1 + x)`: concave everywhere on `x >= 0`.
pub struct Log2OnePlus;
/// No scaling; used for raw-share comparisons.
pub struct Identity;

impl ScalingFunction for Sqrt {
    fn name(&self) -> &'static str {
        "sqrt"
    }
    fn apply(&self, active: f64) -> f64 {
        active.sqrt()
    }
    fn penalized(&self) -> &'static str {
        "cbrt"
    }
}

impl ScalingFunction for Cbrt {
    fn name(&self) -> &'static str {
        "cbrt"
    }
    fn apply(&self, active: f64) -> f64 {
        active.cbrt()
    }
}

impl ScalingFunction for Log2 {
    fn name(&self) -> &'static str {
        "log2"
    }
    fn apply(&self, active: f64) -> f64 {
        if active < 1.0 {
            0.0
        } else {
            active.log2()
        }
    }
}

impl ScalingFunction for Log2OnePlus {
    fn name(&self) -> &'static str {
        "log2p1"
    }
    fn apply(&self, active: f64) -> f64 {
        active.ln_1p() / std::f64::consts::LN_2
    }
}

impl ScalingFunction for Identity {
    fn name(&self) -> &'static str {
        "linear"
    }
    fn apply(&self, active: f64) -> f64 {
        active
    }
    fn penalized(&self) -> &'static str {
        "sqrt"
    }
}

#[derive(Clone, Default)]
pub struct ScalingRegistry {
    by_name: BTreeMap<&'static str, Arc<dyn ScalingFunction>>,
}

impl fmt::Debug for ScalingRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.by_name.keys()).finish()
    }
}

impl ScalingRegistry {
    pub fn with_builtins() -> ScalingRegistry {
        let mut r = ScalingRegistry::default();
        r.register(Arc::new(Sqrt));
        r.register(Arc::new(Cbrt));
        r.register(Arc::new(Log2));
        r.register(Arc::new(Log2OnePlus));
        r.register(Arc::new(Identity));
        r
    }

    pub fn register(&mut self, f: Arc<dyn ScalingFunction>) {
        self.by_name.insert(f.name(), f);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn ScalingFunction>, CapitalError> {
        self.by_name.get(name).cloned().ok_or_else(|| CapitalError::UnknownScaling(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.by_name.keys().copied().collect()
    }
}

fn global() -> &'static RwLock<ScalingRegistry> {
    static REGISTRY: OnceLock<RwLock<ScalingRegistry>> = OnceLock::new();
    REGISTRY.get_or_init(|| RwLock::new(ScalingRegistry::with_builtins()))
}

/// Adds a scaling function to the process-wide registry.
pub fn register_scaling(f: Arc<dyn ScalingFunction>) {
    global().write().expect("scaling registry poisoned").register(f);
}

pub fn scaling_function(name: &str) -> Result<Arc<dyn ScalingFunction>, CapitalError> {
    global().read().expect("scaling registry poisoned").get(name)
}

pub fn scaling_names() -> Vec<&'static str> {
    global().read().expect("scaling registry poisoned").names()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingBaseline {
    pub function: String,
    pub penalty_divisor: f64,
}

/// Scaling function and penalty state of one account.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScalingSpec")]
pub struct ScalingSpec {
    pub function: String,
    pub penalty_divisor: f64,
    /// First epoch at which the baseline is restored.
    pub penalty_expiry: Option<u64>,
    /// Spec in force before the first active penalty.
    pub baseline: Option<ScalingBaseline>,
}

#[derive(Deserialize)]
struct RawScalingSpec {
    function: String,
    penalty_divisor: f64,
    penalty_expiry: Option<u64>,
    baseline: Option<ScalingBaseline>,
}

impl TryFrom<RawScalingSpec> for ScalingSpec {
    type Error = CapitalError;

    fn try_from(raw: RawScalingSpec) -> Result<Self, Self::Error> {
        scaling_function(&raw.function)?;
        if let Some(b) = &raw.baseline {
            scaling_function(&b.function)?;
        }
        if !(raw.penalty_divisor >= 1.0) {
            return Err(CapitalError::BadDivisor(raw.penalty_divisor));
        }
        Ok(ScalingSpec {
            function: raw.function,
            penalty_divisor: raw.penalty_divisor,
            penalty_expiry: raw.penalty_expiry,
            baseline: raw.baseline,
        })
    }
}

impl ScalingSpec {
    /// An unpenalized spec using the named function.
    pub fn new(function: &str) -> Result<ScalingSpec, CapitalError> {
        scaling_function(function)?;
        Ok(ScalingSpec { function: function.to_string(), penalty_divisor: 1.0, penalty_expiry: None, baseline: None })
    }

    pub fn is_penalized(&self) -> bool {
        self.penalty_expiry.is_some()
    }

    /// The spec in force at `epoch`: the baseline once the penalty expired.
    pub fn refreshed(&self, epoch: u64) -> ScalingSpec {
        match (&self.penalty_expiry, &self.baseline) {
            (Some(expiry), Some(base)) if epoch >= *expiry => ScalingSpec {
                function: base.function.clone(),
                penalty_divisor: base.penalty_divisor,
                penalty_expiry: None,
                baseline: None,
            },
            _ => self.clone(),
        }
    }

    /// Effective value for a real-valued input.
    pub fn evaluate(&self, active: f64) -> f64 {
        let f = scaling_function(&self.function).expect("scaling spec names a registered function");
        f.apply(active) / self.penalty_divisor
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Minor,
    Major,
}

/// Minor offenses multiply the divisor by `c_minor`; major ones switch to the
/// function's penalized form and multiply by `c_major`. Both last
/// `penalty_epochs` from `current_epoch`; stacking extends the expiry.
pub fn apply_penalty(spec: &ScalingSpec, severity: Severity, current_epoch: u64, params: &ProtocolParams) -> ScalingSpec {
    let spec = spec.refreshed(current_epoch);
    let baseline = spec.baseline.clone().unwrap_or(ScalingBaseline {
        function: spec.function.clone(),
        penalty_divisor: spec.penalty_divisor,
    });
    let (function, factor) = match severity {
        Severity::Minor => (spec.function.clone(), params.c_minor),
        Severity::Major => {
            let f = scaling_function(&spec.function).expect("scaling spec names a registered function");
            (f.penalized().to_string(), params.c_major)
        }
    };
    let expiry = current_epoch + params.penalty_epochs;
    ScalingSpec {
        function,
        penalty_divisor: spec.penalty_divisor * factor,
        penalty_expiry: Some(spec.penalty_expiry.map_or(expiry, |e| e.max(expiry))),
        baseline: Some(baseline),
    }
}

/// Effective social capital of an account holding `active` units.
pub fn effective_capital(active: u64, spec: &ScalingSpec) -> f64 {
    spec.evaluate(active as f64)
}

/// Votes bought by spending `budget_spent` credits under quadratic voting.
pub fn quadratic_voting_weight(budget_spent: u64) -> f64 {
    (budget_spent as f64).sqrt()
}

pub fn meets_participation_threshold(active: u64, params: &ProtocolParams) -> bool {
    active as u128 > params.participation_threshold()
}

/// Rounds half-to-even at 1e-12.
pub fn round_weight(w: f64) -> f64 {
    (w * 1e12).round_ties_even() / 1e12
}

/// Normalized consensus power of each validator.
pub fn consensus_power(validators: &[(IdHash, u64, ScalingSpec)]) -> Result<Vec<(IdHash, f64)>, CapitalError> {
    let effective: Vec<f64> = validators.iter().map(|(_, a, s)| effective_capital(*a, s)).collect();
    normalize(validators.iter().map(|(id, _, _)| *id).zip(effective))
}

/// Normalizes (id, effective) pairs into rounded weights summing to ~1.
pub fn normalize(entries: impl IntoIterator<Item = (IdHash, f64)>) -> Result<Vec<(IdHash, f64)>, CapitalError> {
    let entries: Vec<(IdHash, f64)> = entries.into_iter().collect();
    let total: f64 = entries.iter().map(|(_, e)| e).sum();
    if !(total > 0.0) {
        return Err(CapitalError::EmptyValidatorSet);
    }
    Ok(entries.into_iter().map(|(id, e)| (id, round_weight(e / total))).collect())
}
