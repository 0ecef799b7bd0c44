use std::hint::black_box;
use std::time::Instant;

use posc_core::capital::scaling_function;
use posc_core::ProtocolParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::AnalysisError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Median wall-clock over all repeats, in seconds.
    pub median_s: f64,
    pub ns_per_element: f64,
    pub runs_s: Vec<f64>,
}

impl Timing {
    fn from_runs(mut runs_s: Vec<f64>, n: usize) -> Timing {
        let mut sorted = runs_s.clone();
        sorted.sort_by(f64::total_cmp);
        let median_s = sorted[sorted.len() / 2];
        runs_s.shrink_to_fit();
        Timing { median_s, ns_per_element: median_s * 1e9 / n as f64, runs_s }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub n: usize,
    pub threads: usize,
    /// Threads the machine actually offers; speedup is bounded by this.
    pub available_parallelism: usize,
    pub function: String,
    pub serial: Timing,
    pub parallel: Timing,
    pub speedup: f64,
    /// Validators above the participation threshold, as a checksum.
    pub eligible: usize,
}

/// One validator's effective capital and threshold check.
#[inline]
fn evaluate(f: &dyn posc_core::capital::ScalingFunction, active: u64, divisor: f64, threshold: u128) -> (f64, bool) {
    (f.apply(active as f64) / divisor, active as u128 > threshold)
}

/// Times effective-capital evaluation plus the participation check over
/// `n` synthetic validators, serially and on a `threads`-wide pool, taking
/// the median of `repeats` runs each.
pub fn threshold_benchmark(
    n: usize,
    threads: usize,
    repeats: usize,
    function: &str,
    seed: u64,
) -> Result<BenchReport, AnalysisError> {
    if n == 0 || threads == 0 || repeats == 0 {
        return Err(AnalysisError::BadParams("n, threads and repeats must be at least 1".into()));
    }
    let f = scaling_function(function)?;
    let params = ProtocolParams::default();
    let threshold = params.participation_threshold();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    // Actives spread around the threshold so both branches are exercised.
    let validators: Vec<(u64, f64)> = (0..n)
        .map(|_| {
            let active = rng.random_range(0..=2 * threshold as u64);
            let divisor = if rng.random_bool(0.01) { params.c_minor } else { 1.0 };
            (active, divisor)
        })
        .collect();

    let serial_once = || {
        let start = Instant::now();
        let (mut sum, mut eligible) = (0.0, 0usize);
        for (a, d) in &validators {
            let (e, ok) = evaluate(f.as_ref(), *a, *d, threshold);
            sum += e;
            eligible += ok as usize;
        }
        black_box(sum);
        (start.elapsed().as_secs_f64(), eligible)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| AnalysisError::BadParams(e.to_string()))?;
    let parallel_once = || {
        pool.install(|| {
            let start = Instant::now();
            let (sum, eligible) = validators
                .par_iter()
                .map(|(a, d)| {
                    let (e, ok) = evaluate(f.as_ref(), *a, *d, threshold);
                    (e, ok as usize)
                })
                .reduce(|| (0.0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
            black_box(sum);
            (start.elapsed().as_secs_f64(), eligible)
        })
    };

    let mut serial = Vec::with_capacity(repeats);
    let mut parallel = Vec::with_capacity(repeats);
    let mut eligible = 0;
    for _ in 0..repeats {
        let (t, e) = serial_once();
        serial.push(t);
        let (tp, ep) = parallel_once();
        debug_assert_eq!(e, ep);
        parallel.push(tp);
        eligible = e;
    }
    let serial = Timing::from_runs(serial, n);
    let parallel = Timing::from_runs(parallel, n);
    let speedup = serial.median_s / parallel.median_s.max(f64::MIN_POSITIVE);
    Ok(BenchReport {
        n,
        threads,
        available_parallelism: std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1),
        function: function.to_string(),
        serial,
        parallel,
        speedup,
        eligible,
    })
}
