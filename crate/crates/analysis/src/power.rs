use posc_core::capital::{quadratic_voting_weight, ScalingSpec};
use serde::{Deserialize, Serialize};

use crate::AnalysisError;

/// Mild monopolization: five validators, the largest at 40%.
pub const TABLE_1A_SHARES: [f64; 5] = [40.0, 25.0, 15.0, 12.0, 8.0];
/// Strong monopolization: the largest validator at 70%. As printed these
/// add up to 99; use [`rescale_to_100`] before building a table.
pub const TABLE_1B_SHARES: [f64; 5] = [70.0, 12.0, 8.0, 5.0, 4.0];
/// Active units the shares are spread over. The reference log2 row only
/// reproduces for totals close to this.
pub const TABLE_TOTAL_UNITS: f64 = 1000.0;
/// Power above one third breaks the liveness guarantee of the BFT gadget.
pub const LIVENESS_LIMIT_PERCENT: f64 = 100.0 / 3.0;

/// Reference power rows for the mild and strong cases, in percent.
pub const TABLE_1A_PRINTED: [(&str, [f64; 5]); 2] = [
    ("sqrt", [29.43, 23.27, 18.02, 16.12, 13.16]),
    ("log2", [23.32, 21.49, 19.50, 18.63, 17.06]),
];
pub const TABLE_1B_PRINTED: [(&str, [f64; 5]); 2] = [
    ("sqrt", [44.7, 20.69, 15.11, 11.94, 7.56]),
    ("log2", [28.67, 21.93, 19.18, 17.12, 13.11]),
];

/// Deviations below this are rounding in the reference table.
const PRINT_TOLERANCE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub label: String,
    /// Normalized power per validator, in percent.
    pub percents: Vec<f64>,
    /// Entries above [`LIVENESS_LIMIT_PERCENT`].
    pub flagged: Vec<bool>,
}

impl PowerRow {
    fn new(label: impl Into<String>, weights: &[f64]) -> PowerRow {
        let total: f64 = weights.iter().sum();
        let percents: Vec<f64> = weights.iter().map(|w| 100.0 * w / total).collect();
        let flagged = percents.iter().map(|p| *p > LIVENESS_LIMIT_PERCENT).collect();
        PowerRow { label: label.into(), percents, flagged }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub function: String,
    pub printed: Vec<f64>,
    pub computed: Vec<f64>,
    pub max_abs_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerTable {
    pub shares: Vec<f64>,
    pub total_units: f64,
    pub rows: Vec<PowerRow>,
    /// Rows that disagree with a reference table for the same shares.
    pub divergences: Vec<Divergence>,
}

impl PowerTable {
    pub fn row(&self, label: &str) -> Option<&PowerRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Human-readable notes, one per divergence.
    pub fn notes(&self) -> Vec<String> {
        self.divergences
            .iter()
            .map(|d| {
                format!(
                    "{} row differs from the reference values by up to {:.2} pp: reference {:?}, computed {:?}",
                    d.function,
                    d.max_abs_diff,
                    d.printed,
                    d.computed.iter().map(|p| (p * 100.0).round() / 100.0).collect::<Vec<_>>()
                )
            })
            .collect()
    }
}

/// Rescales non-negative shares so they sum to 100.
pub fn rescale_to_100(shares: &[f64]) -> Vec<f64> {
    let sum: f64 = shares.iter().sum();
    shares.iter().map(|s| 100.0 * s / sum).collect()
}

fn same_shares(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9)
}

/// Normalized power when every follower puts a full budget behind a single
/// creator under quadratic voting, optionally split into `ballots` equal
/// parts. Vote ratios stay those of the follower counts.
pub fn quadratic_voting_shares(units: &[f64], full_endorsement: u64, ballots: u64) -> Vec<f64> {
    let per_ballot = full_endorsement / ballots.max(1);
    let per_follower = ballots.max(1) as f64 * quadratic_voting_weight(per_ballot);
    units.iter().map(|u| u / full_endorsement as f64 * per_follower).collect()
}

/// Consensus power of validators holding `shares` percent of
/// `total_units` active capital under each scaling function, plus raw and
/// quadratic-voting reference rows.
pub fn power_table(shares: &[f64], functions: &[&str], total_units: f64) -> Result<PowerTable, AnalysisError> {
    let sum: f64 = shares.iter().sum();
    if shares.is_empty() || shares.iter().any(|s| !(*s >= 0.0)) || (sum - 100.0).abs() > 1e-9 {
        return Err(AnalysisError::BadShares(sum));
    }
    if !(total_units > 0.0) {
        return Err(AnalysisError::BadParams(format!("total units must be positive, got {total_units}")));
    }
    let units: Vec<f64> = shares.iter().map(|s| s / 100.0 * total_units).collect();
    let full = posc_core::ProtocolParams::default().full_endorsement();
    let mut rows = vec![
        PowerRow::new("active", &units),
        PowerRow::new("q-voting", &quadratic_voting_shares(&units, full, 1)),
        PowerRow::new("q-voting (split vote)", &quadratic_voting_shares(&units, full, 2)),
    ];
    for f in functions {
        let spec = ScalingSpec::new(f)?;
        let eff: Vec<f64> = units.iter().map(|u| spec.evaluate(*u)).collect();
        rows.push(PowerRow::new(*f, &eff));
    }
    let mut table = PowerTable { shares: shares.to_vec(), total_units, rows, divergences: Vec::new() };
    table.divergences = reference_divergences(&table);
    Ok(table)
}

fn reference_divergences(table: &PowerTable) -> Vec<Divergence> {
    let printed: &[(&str, [f64; 5])] = if same_shares(&table.shares, &TABLE_1A_SHARES) {
        &TABLE_1A_PRINTED
    } else if same_shares(&table.shares, &rescale_to_100(&TABLE_1B_SHARES)) {
        &TABLE_1B_PRINTED
    } else {
        return Vec::new();
    };
    printed
        .iter()
        .filter_map(|(f, values)| {
            let row = table.row(f)?;
            let max_abs_diff = row.percents.iter().zip(values).map(|(c, p)| (c - p).abs()).fold(0.0, f64::max);
            (max_abs_diff > PRINT_TOLERANCE).then(|| Divergence {
                function: f.to_string(),
                printed: values.to_vec(),
                computed: row.percents.clone(),
                max_abs_diff,
            })
        })
        .collect()
}
