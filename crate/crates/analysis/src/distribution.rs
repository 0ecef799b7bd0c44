use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution as _, Pareto};
use serde::{Deserialize, Serialize};

use crate::gini::gini;
use crate::AnalysisError;

/// Smallest follower count in generated samples. Channels below this size
/// are not monetized on the large platforms, so real creator datasets start
/// here rather than at one.
pub const DEFAULT_MIN_COUNT: f64 = 1000.0;

/// Non-empty list of non-negative values, e.g. follower counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub label: String,
    values: Vec<f64>,
}

impl Distribution {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Distribution, AnalysisError> {
        if values.is_empty() {
            return Err(AnalysisError::Empty);
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(AnalysisError::BadValue(*bad));
        }
        Ok(Distribution { label: label.into(), values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, label: impl Into<String>, f: impl Fn(f64) -> f64) -> Result<Distribution, AnalysisError> {
        Distribution::new(label, self.values.iter().map(|v| f(*v)).collect())
    }
}

/// Seeded Pareto sample with tail index `alpha` and minimum
/// [`DEFAULT_MIN_COUNT`].
pub fn generate_powerlaw(n: usize, alpha: f64, seed: u64) -> Result<Distribution, AnalysisError> {
    if n == 0 {
        return Err(AnalysisError::BadParams("n must be at least 1".into()));
    }
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(AnalysisError::BadParams(format!("alpha must exceed 1, got {alpha}")));
    }
    let pareto = Pareto::new(DEFAULT_MIN_COUNT, alpha).map_err(|e| AnalysisError::BadParams(e.to_string()))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let values = (0..n).map(|_| pareto.sample(&mut rng).round()).collect();
    Distribution::new(format!("pareto(alpha={alpha:.4}, seed={seed})"), values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub alpha: f64,
    /// Seed of the sample that hit the target; differs from the requested
    /// seed when that sample could not reach it.
    pub sample_seed: u64,
    pub gini: f64,
    pub target: f64,
    pub iterations: usize,
    pub distribution: Distribution,
}

/// Sample seeds tried before calibration gives up.
const CALIBRATION_ATTEMPTS: u64 = 32;

/// Finds the tail index whose seeded sample has Gini `target ± tolerance`.
///
/// The same seed reuses the same uniform draws for every alpha, so the
/// sample Gini falls monotonically as alpha grows and bisection applies.
/// Sample Ginis of tails near alpha = 1 vary widely between draws, and
/// some draws cannot reach a high target at all. Those are skipped in
/// favor of the next derived seed.
pub fn calibrate_alpha(n: usize, seed: u64, target: f64, tolerance: f64) -> Result<Calibration, AnalysisError> {
    if !(0.0 < target && target < 1.0) {
        return Err(AnalysisError::BadParams(format!("target gini must lie in (0, 1), got {target}")));
    }
    for attempt in 0..CALIBRATION_ATTEMPTS {
        let sample_seed = seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        if let Some(c) = bisect(n, sample_seed, target, tolerance)? {
            return Ok(c);
        }
    }
    Err(AnalysisError::BadParams(format!("no alpha reaches gini {target} for n={n}, seed={seed}")))
}

fn bisect(n: usize, seed: u64, target: f64, tolerance: f64) -> Result<Option<Calibration>, AnalysisError> {
    let (mut lo, mut hi) = (1.0 + 1e-6, 64.0);
    let sample = |alpha: f64| -> Result<(Distribution, f64), AnalysisError> {
        let d = generate_powerlaw(n, alpha, seed)?;
        let g = gini(&d)?;
        Ok((d, g))
    };
    for iterations in 1..=200 {
        let mid = 0.5 * (lo + hi);
        let (distribution, g) = sample(mid)?;
        if (g - target).abs() <= tolerance {
            return Ok(Some(Calibration { alpha: mid, sample_seed: seed, gini: g, target, iterations, distribution }));
        }
        if g > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_negative() {
        assert!(matches!(Distribution::new("x", vec![]), Err(AnalysisError::Empty)));
        assert!(matches!(Distribution::new("x", vec![1.0, -1.0]), Err(AnalysisError::BadValue(_))));
        assert!(matches!(Distribution::new("x", vec![f64::NAN]), Err(AnalysisError::BadValue(_))));
    }

    #[test]
    fn same_seed_same_sample() {
        let a = generate_powerlaw(500, 1.5, 9).unwrap();
        let b = generate_powerlaw(500, 1.5, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values(), generate_powerlaw(500, 1.5, 10).unwrap().values());
        assert!(a.values().iter().all(|v| *v >= DEFAULT_MIN_COUNT));
    }

    #[test]
    fn bad_params() {
        assert!(matches!(generate_powerlaw(0, 2.0, 1), Err(AnalysisError::BadParams(_))));
        assert!(matches!(generate_powerlaw(10, 1.0, 1), Err(AnalysisError::BadParams(_))));
        assert!(matches!(calibrate_alpha(10, 1, 1.2, 0.01), Err(AnalysisError::BadParams(_))));
    }

    #[test]
    fn calibration_is_deterministic() {
        let a = calibrate_alpha(1000, 3, 0.6, 0.02).unwrap();
        assert_eq!(a, calibrate_alpha(1000, 3, 0.6, 0.02).unwrap());
        assert_eq!(a.distribution, generate_powerlaw(1000, a.alpha, a.sample_seed).unwrap());
    }

    #[test]
    fn calibration_hits_both_targets() {
        for target in [0.49, 0.78] {
            let c = calibrate_alpha(2250, 42, target, 0.02).unwrap();
            assert!((c.gini - target).abs() <= 0.02);
            assert!((gini(&c.distribution).unwrap() - c.gini).abs() < 1e-15);
        }
        // Population Gini of a Pareto tail is 1 / (2 alpha - 1). Sample Ginis
        // of heavier tails converge slowly, so only the lighter one is compared.
        let c = calibrate_alpha(2250, 42, 0.49, 0.02).unwrap();
        let implied = 1.0 / (2.0 * c.alpha - 1.0);
        assert!((implied - 0.49).abs() < 0.1, "alpha {} implies {implied}", c.alpha);
    }
}
