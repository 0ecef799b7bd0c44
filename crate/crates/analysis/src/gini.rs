use posc_core::capital::ScalingSpec;
use serde::{Deserialize, Serialize};

use crate::{AnalysisError, Distribution};

/// Population Gini coefficient in O(n log n).
///
/// With values sorted ascending, Σᵢ Σⱼ |xᵢ − xⱼ| = 2 Σᵢ (2i − n + 1) xᵢ
/// (0-based i), so the pairwise sum collapses to one weighted pass.
pub fn gini(d: &Distribution) -> Result<f64, AnalysisError> {
    let mut xs = d.values().to_vec();
    let total: f64 = xs.iter().sum();
    if total <= 0.0 {
        return Err(AnalysisError::AllZero);
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let weighted: f64 = xs.iter().enumerate().map(|(i, x)| (2.0 * i as f64 - n + 1.0) * x).sum();
    Ok(weighted / (n * total))
}

/// Direct O(n²) definition, kept as the reference for [`gini`].
pub fn gini_pairwise(d: &Distribution) -> Result<f64, AnalysisError> {
    let xs = d.values();
    let total: f64 = xs.iter().sum();
    if total <= 0.0 {
        return Err(AnalysisError::AllZero);
    }
    let n = xs.len() as f64;
    let mean = total / n;
    let sum: f64 = xs.iter().map(|a| xs.iter().map(|b| (a - b).abs()).sum::<f64>()).sum();
    Ok(sum / (2.0 * n * n * mean))
}

/// Gini of the distribution after mapping every value through `spec`.
pub fn scaled_gini(d: &Distribution, spec: &ScalingSpec) -> Result<f64, AnalysisError> {
    gini(&d.map(format!("{} ({})", d.label, spec.function), |x| spec.evaluate(x))?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledGini {
    pub function: String,
    pub gini: f64,
    /// Relative drop against the raw Gini, in [0, 1].
    pub reduction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GiniSummary {
    pub label: String,
    pub n: usize,
    pub raw: f64,
    pub scaled: Vec<ScaledGini>,
}

pub fn gini_summary(d: &Distribution, functions: &[&str]) -> Result<GiniSummary, AnalysisError> {
    let raw = gini(d)?;
    let scaled = functions
        .iter()
        .map(|f| {
            let g = scaled_gini(d, &ScalingSpec::new(f)?)?;
            let reduction = if raw > 0.0 { 1.0 - g / raw } else { 0.0 };
            Ok(ScaledGini { function: f.to_string(), gini: g, reduction })
        })
        .collect::<Result<_, AnalysisError>>()?;
    Ok(GiniSummary { label: d.label.clone(), n: d.len(), raw, scaled })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn dist(v: &[f64]) -> Distribution {
        Distribution::new("t", v.to_vec()).unwrap()
    }

    #[test]
    fn one_to_five() {
        // Pairwise |i - j| over 1..=5 sums to 40; 40 / (2 * 25 * 3).
        let expected = 40.0 / 150.0;
        assert!((gini(&dist(&[1.0, 2.0, 3.0, 4.0, 5.0])).unwrap() - expected).abs() < 1e-12);
        assert!((gini(&dist(&[1.0, 2.0, 3.0, 4.0, 5.0])).unwrap() - 0.2667).abs() < 1e-4);
    }

    #[test]
    fn constant_is_zero() {
        assert_eq!(gini(&dist(&[7.0; 40])).unwrap(), 0.0);
    }

    #[test]
    fn single_holder_approaches_one() {
        for n in [2usize, 10, 1000] {
            let mut v = vec![0.0; n];
            v[n - 1] = 5.0;
            let expected = (n as f64 - 1.0) / n as f64;
            assert!((gini(&dist(&v)).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn all_zero_is_an_error() {
        assert!(matches!(gini(&dist(&[0.0, 0.0])), Err(AnalysisError::AllZero)));
        assert!(matches!(gini_pairwise(&dist(&[0.0])), Err(AnalysisError::AllZero)));
    }

    #[test]
    fn guarded_log2_can_raise_gini_near_one() {
        let d = dist(&[1.0, 2.0]);
        let spec = ScalingSpec::new("log2").unwrap();
        assert!(scaled_gini(&d, &spec).unwrap() > gini(&d).unwrap());
    }

    #[test]
    fn summary_lists_requested_functions() {
        let s = gini_summary(&dist(&[1.0, 10.0, 100.0, 1000.0]), &["sqrt", "log2"]).unwrap();
        assert_eq!(s.scaled.len(), 2);
        assert!(s.scaled.iter().all(|g| g.gini < s.raw && g.reduction > 0.0));
        assert!(matches!(gini_summary(&dist(&[1.0]), &["nope"]), Err(AnalysisError::Scaling(_))));
    }

    fn values() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1e6, 1..300).prop_filter("positive total", |v| v.iter().sum::<f64>() > 0.0)
    }

    proptest! {
        #[test]
        fn fast_equals_pairwise(v in values()) {
            let d = dist(&v);
            prop_assert!((gini(&d).unwrap() - gini_pairwise(&d).unwrap()).abs() < 1e-10);
        }

        #[test]
        fn scale_invariant(v in values(), c in 1e-3f64..1e3) {
            let d = dist(&v);
            let scaled = d.map("c", |x| c * x).unwrap();
            prop_assert!((gini(&d).unwrap() - gini(&scaled).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn concave_scaling_never_raises_gini(
            v in prop::collection::vec(0.0f64..1e7, 1..300).prop_filter("positive", |v| v.iter().sum::<f64>() > 0.0),
            f in prop::sample::select(vec!["sqrt", "cbrt", "log2p1"]),
        ) {
            let d = dist(&v);
            let spec = ScalingSpec::new(f).unwrap();
            prop_assert!(scaled_gini(&d, &spec).unwrap() <= gini(&d).unwrap() + 1e-12);
        }

        // The guarded log2 is zero up to 1 and only star-shaped (f(x)/x
        // non-increasing) from e onwards, so the property holds there.
        #[test]
        fn guarded_log2_never_raises_gini_above_e(v in prop::collection::vec(std::f64::consts::E..1e7, 1..300)) {
            let d = dist(&v);
            let spec = ScalingSpec::new("log2").unwrap();
            prop_assert!(scaled_gini(&d, &spec).unwrap() <= gini(&d).unwrap() + 1e-12);
        }
    }
}
