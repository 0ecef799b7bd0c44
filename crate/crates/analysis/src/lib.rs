//! Quantitative evaluation of social-capital scaling: Gini coefficients,
//! normalized consensus-power tables and a threshold-check benchmark.

// `!(x >= y)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod bench;
mod distribution;
mod gini;
mod io;
mod power;

use thiserror::Error;

pub use bench::{threshold_benchmark, BenchReport, Timing};
pub use distribution::{calibrate_alpha, generate_powerlaw, Calibration, Distribution, DEFAULT_MIN_COUNT};
pub use gini::{gini, gini_pairwise, gini_summary, scaled_gini, GiniSummary, ScaledGini};
pub use io::{read_distribution, write_csv};
pub use power::{
    power_table, quadratic_voting_shares, rescale_to_100, Divergence, PowerRow, PowerTable, LIVENESS_LIMIT_PERCENT, TABLE_1A_PRINTED, TABLE_1A_SHARES,
    TABLE_1B_PRINTED, TABLE_1B_SHARES, TABLE_TOTAL_UNITS,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("distribution is empty")]
    Empty,
    #[error("value {0} is negative or not finite")]
    BadValue(f64),
    #[error("all values are zero")]
    AllZero,
    #[error("shares must be non-negative and sum to 100, got {0}")]
    BadShares(f64),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Scaling(#[from] posc_core::capital::CapitalError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl AnalysisError {
    pub fn name(&self) -> &'static str {
        match self {
            AnalysisError::Empty => "Empty",
            AnalysisError::BadValue(_) => "BadValue",
            AnalysisError::AllZero => "AllZero",
            AnalysisError::BadShares(_) => "BadShares",
            AnalysisError::BadParams(_) => "BadParams",
            AnalysisError::Scaling(_) => "UnknownScaling",
            AnalysisError::Csv(_) => "Csv",
            AnalysisError::Io(_) => "Io",
        }
    }
}
