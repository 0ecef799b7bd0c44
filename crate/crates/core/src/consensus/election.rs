use serde::{Deserialize, Serialize};

use crate::crypto::Hash32;
use crate::identity::IdHash;

use super::ConsensusError;

/// Per-slot election seed: `H(mix || slot)`.
pub fn election_seed(mix: &Hash32, slot: u64) -> Hash32 {
    Hash32::digest_parts(&[mix.as_bytes(), &slot.to_be_bytes()])
}

/// Maps a seed to a uniform point in [0, 1) using its top 53 bits.
pub fn seed_fraction(seed: &Hash32) -> f64 {
    let mut top = [0u8; 8];
    top.copy_from_slice(&seed.as_bytes()[..8]);
    (u64::from_be_bytes(top) >> 11) as f64 / (1u64 << 53) as f64
}

/// Weighted pick along the cumulative weight line at `seed_fraction * W`.
/// `weights` must be in a canonical order (key order) for determinism.
pub fn elect_leader(weights: &[(IdHash, f64)], mix: &Hash32, slot: u64) -> Result<IdHash, ConsensusError> {
    let total: f64 = weights.iter().map(|(_, w)| w.max(0.0)).sum();
    if !(total > 0.0) {
        return Err(ConsensusError::EmptyValidatorSet);
    }
    let point = seed_fraction(&election_seed(mix, slot)) * total;
    let mut cumulative = 0.0;
    let mut last = None;
    for (id, w) in weights {
        if *w <= 0.0 {
            continue;
        }
        cumulative += w;
        last = Some(*id);
        if point < cumulative {
            return Ok(*id);
        }
    }
    // Only reachable through floating-point shortfall at the top end.
    Ok(last.expect("positive total implies a positive entry"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRow {
    pub slot: u64,
    pub leader: IdHash,
    pub mix: Hash32,
}

/// The leaders of `slots` under fixed weights and mix. Anyone holding the
/// public epoch snapshot can compute this.
pub fn election_schedule(
    weights: &[(IdHash, f64)],
    mix: &Hash32,
    slots: impl IntoIterator<Item = u64>,
) -> Result<Vec<ScheduleRow>, ConsensusError> {
    slots
        .into_iter()
        .map(|slot| Ok(ScheduleRow { slot, leader: elect_leader(weights, mix, slot)?, mix: *mix }))
        .collect()
}

#[cfg(test)]
mod tests {
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    use super::*;

    fn v(i: u8) -> IdHash {
        IdHash(Hash32([i; 32]))
    }

    fn frequencies(weights: &[(IdHash, f64)], slots: u64) -> Vec<u64> {
        let mix = Hash32::digest(b"election test");
        let mut counts = vec![0u64; weights.len()];
        for slot in 0..slots {
            let leader = elect_leader(weights, &mix, slot).unwrap();
            counts[weights.iter().position(|(id, _)| *id == leader).unwrap()] += 1;
        }
        counts
    }

    fn chi_square_p(counts: &[u64], weights: &[f64]) -> f64 {
        let n: u64 = counts.iter().sum();
        let total: f64 = weights.iter().sum();
        let stat: f64 = counts
            .iter()
            .zip(weights)
            .map(|(&c, w)| {
                let e = n as f64 * w / total;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
    }

    #[test]
    fn single_validator_always_wins() {
        let w = [(v(1), 3.0)];
        for slot in 0..100 {
            assert_eq!(elect_leader(&w, &Hash32::ZERO, slot).unwrap(), v(1));
        }
    }

    #[test]
    fn empty_or_zero_weight_set() {
        assert_eq!(elect_leader(&[], &Hash32::ZERO, 0), Err(ConsensusError::EmptyValidatorSet));
        assert_eq!(elect_leader(&[(v(1), 0.0)], &Hash32::ZERO, 0), Err(ConsensusError::EmptyValidatorSet));
    }

    #[test]
    fn zero_weight_never_elected() {
        let w = [(v(1), 0.0), (v(2), 1.0), (v(3), 0.0)];
        assert!(frequencies(&w, 500)[0] == 0 && frequencies(&w, 500)[2] == 0);
    }

    #[test]
    fn equal_weights_binomial_band() {
        let w = [(v(1), 1.0), (v(2), 1.0)];
        let counts = frequencies(&w, 10_000);
        let sigma = (10_000f64 * 0.25).sqrt();
        assert!((counts[0] as f64 - 5_000.0).abs() <= 3.0 * sigma, "{counts:?}");
        assert!(chi_square_p(&counts, &[1.0, 1.0]) > 0.001);
    }

    #[test]
    fn frequency_tracks_weight() {
        let ws = [0.5, 0.3, 0.15, 0.05];
        let w: Vec<(IdHash, f64)> = ws.iter().enumerate().map(|(i, x)| (v(i as u8), *x)).collect();
        let n = 20_000u64;
        let counts = frequencies(&w, n);
        for (c, p) in counts.iter().zip(ws) {
            let bound = 4.0 * (p * (1.0 - p) / n as f64).sqrt();
            assert!((*c as f64 / n as f64 - p).abs() <= bound, "{counts:?}");
        }
        assert!(chi_square_p(&counts, &ws) > 0.001);
    }

    #[test]
    fn deterministic_schedule() {
        let w = [(v(1), 2.0), (v(2), 1.0), (v(3), 1.5)];
        let mix = Hash32::digest(b"m");
        let a = election_schedule(&w, &mix, 0..64).unwrap();
        let b = election_schedule(&w, &mix, 0..64).unwrap();
        assert_eq!(a, b);
        let other = election_schedule(&w, &Hash32::digest(b"n"), 0..64).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn fraction_in_unit_interval() {
        assert_eq!(seed_fraction(&Hash32::ZERO), 0.0);
        assert!(seed_fraction(&Hash32([0xff; 32])) < 1.0);
    }
}
