//! Acceptance gate. Runs every criterion in order and prints one
//! `PASS`/`FAIL` line each. Exits non-zero if any criterion fails, except
//! the parallel speedup when the machine has fewer cores than the
//! benchmark's thread count. Built without the libtest harness so the
//! lines are never captured.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use posc_analysis::{
    calibrate_alpha, gini, gini_pairwise, power_table, scaled_gini, threshold_benchmark, Distribution, TABLE_1A_SHARES,
    TABLE_TOTAL_UNITS,
};
use posc_core::capital::{apply_penalty, ScalingSpec, Severity};
use posc_core::consensus::elect_leader;
use posc_core::fixtures::{small_params, GenesisBuilder, Member};
use posc_core::identity::GlobalStateTrie;
use posc_core::ledger::{Attestation, BlockCandidates, Chain, ChainFile, Transaction};
use posc_core::{Hash32, IdHash, ProtocolParams, MICROS_PER_TOKEN};
use posc_netsim::{run, AdversarySpec, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use statrs::distribution::{ChiSquared, ContinuousCDF};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// Runs one criterion, turning a panic into a failure so later ones still run.
fn guarded(f: fn() -> Verdict) -> Verdict {
    std::panic::catch_unwind(f).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        verdict(false, format!("panicked: {}", msg.unwrap_or_default()))
    })
}

fn posc(args: &[&str]) -> std::process::Output {
    let o = Command::new(env!("CARGO_BIN_EXE_posc")).args(args).output().unwrap();
    assert!(o.status.success(), "posc {args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn table_reproduction() -> Verdict {
    let start = Instant::now();
    let o = posc(&["analyze", "table1", "--which", "a", "--functions", "sqrt,log2", "--format", "json"]);
    let elapsed = start.elapsed();
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v[0]["table"]["rows"].as_array().unwrap();
    let row = |label: &str| -> Vec<f64> {
        let r = rows.iter().find(|r| r["label"] == label).unwrap();
        r["percents"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
    };
    let expected = [
        ("sqrt", [29.43, 23.27, 18.02, 16.12, 13.16]),
        ("log2", [23.32, 21.49, 19.50, 18.63, 17.06]),
    ];
    let mut worst: f64 = 0.0;
    for (label, values) in expected {
        for (got, want) in row(label).iter().zip(values) {
            worst = worst.max((got - want).abs());
        }
    }
    verdict(
        worst <= 0.01 && elapsed < Duration::from_secs(1),
        format!("max deviation {worst:.4} pp, runtime {:.3} s", elapsed.as_secs_f64()),
    )
}

fn quadratic_voting_invariance() -> Verdict {
    let t = power_table(&TABLE_1A_SHARES, &[], TABLE_TOTAL_UNITS).unwrap();
    let mut worst: f64 = 0.0;
    for label in ["q-voting", "q-voting (split vote)"] {
        for (q, share) in t.row(label).unwrap().percents.iter().zip(TABLE_1A_SHARES) {
            worst = worst.max((q - share).abs() / share);
        }
    }
    verdict(worst <= 8.0 * f64::EPSILON, format!("max relative error {worst:.2e}"))
}

fn sybil_rejection() -> Verdict {
    let base = SimConfig::honest(31, &[5, 4, 3, 3], 32);
    let honest = run(&base).unwrap().report;
    let attacked = run(&base.clone().with_adversary(AdversarySpec::new("sybil_registrar", json!({"n_attempts": 100}))))
        .unwrap()
        .report;
    let a = attacked.attack("sybil_registrar").unwrap();
    let accepted = a.get("accepted").unwrap_or(-1.0);
    let duplicates = a.get("rejected_duplicate").unwrap_or(-1.0);
    let adversary_power = attacked.final_power.iter().filter(|p| p.node == Some(a.node)).fold(0.0, |s, p| s + p.share);
    let delta: f64 = honest
        .final_power
        .iter()
        .zip(&attacked.final_power)
        .map(|(h, x)| (h.share - x.share).abs())
        .sum::<f64>()
        + (honest.final_power.len() as f64 - attacked.final_power.len() as f64).abs();
    verdict(
        accepted == 1.0 && duplicates == 99.0 && adversary_power == 0.0 && delta == 0.0 && a.get("power_share") == Some(0.0),
        format!("accepted {accepted}, duplicates rejected {duplicates}/99, adversary power {adversary_power}, power delta {delta}"),
    )
}

fn gini_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 1000 {
        let n = rng.random_range(1..=2000);
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1000.0f64).floor()).collect();
        let Ok(d) = Distribution::new("r", values) else { continue };
        let (Ok(fast), Ok(slow)) = (gini(&d), gini_pairwise(&d)) else { continue };
        worst = worst.max((fast - slow).abs());
        checked += 1;
    }
    let small = gini(&Distribution::new("1..5", vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap()).unwrap();
    verdict(
        worst <= 1e-10 && close(small, 0.2667, 1e-4),
        format!("{checked} distributions, max difference {worst:.1e}; gini(1..5) = {small:.4}"),
    )
}

fn gini_compression() -> Verdict {
    let mild = calibrate_alpha(2250, 7, 0.49, 0.02).unwrap();
    let heavy = calibrate_alpha(2250, 7, 0.78, 0.02).unwrap();
    let log2 = scaled_gini(&mild.distribution, &ScalingSpec::new("log2").unwrap()).unwrap();
    let sqrt = scaled_gini(&heavy.distribution, &ScalingSpec::new("sqrt").unwrap()).unwrap();
    let reduction = 1.0 - log2 / mild.gini;
    verdict(
        close(mild.gini, 0.49, 0.02) && close(heavy.gini, 0.78, 0.02) && reduction >= 0.8 && sqrt <= 0.35,
        format!(
            "raw {:.3} -> log2 {log2:.3} ({:.1}% reduction); raw {:.3} -> sqrt {sqrt:.3}",
            mild.gini,
            100.0 * reduction,
            heavy.gini
        ),
    )
}

fn leader_proportionality() -> Verdict {
    const SLOTS: u64 = 100_000;
    let start = Instant::now();
    let weights: Vec<(IdHash, f64)> = TABLE_1A_SHARES
        .iter()
        .enumerate()
        .map(|(i, s)| (IdHash(Hash32::digest(&[i as u8])), (s / 100.0 * TABLE_TOTAL_UNITS).sqrt()))
        .collect();
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    let mix = Hash32::digest(b"acceptance mix");
    let mut counts = vec![0u64; weights.len()];
    for slot in 0..SLOTS {
        let leader = elect_leader(&weights, &mix, slot).unwrap();
        counts[weights.iter().position(|(id, _)| *id == leader).unwrap()] += 1;
    }
    let mut worst_pp: f64 = 0.0;
    let mut stat = 0.0;
    for (c, (_, w)) in counts.iter().zip(&weights) {
        let expected = SLOTS as f64 * w / total;
        worst_pp = worst_pp.max(100.0 * (*c as f64 - expected).abs() / SLOTS as f64);
        stat += (*c as f64 - expected).powi(2) / expected;
    }
    let p = 1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat);
    let elapsed = start.elapsed();
    verdict(
        worst_pp <= 1.0 && p > 0.001 && elapsed < Duration::from_secs(30),
        format!("max deviation {worst_pp:.3} pp, chi-square p = {p:.3}, runtime {:.2} s", elapsed.as_secs_f64()),
    )
}

fn threshold_bench() -> (Verdict, bool) {
    let r = threshold_benchmark(3_000_000, 8, 5, "sqrt", 3).unwrap();
    let hardware_bound = r.available_parallelism < r.threads;
    (
        verdict(
            r.serial.median_s <= 0.5 && r.speedup >= 3.0,
            format!(
                "serial {:.4} s, 8 threads {:.4} s, speedup {:.2}x on {} available core(s)",
                r.serial.median_s, r.parallel.median_s, r.speedup, r.available_parallelism
            ),
        ),
        hardware_bound,
    )
}

fn slashing_efficacy() -> Verdict {
    let config = SimConfig::honest(9, &[5, 4, 3, 3], 48)
        .with_adversary(AdversarySpec::new("equivocator", json!({"full_endorsements": 4})));
    let r = run(&config).unwrap().report;
    let a = r.attack("equivocator").unwrap();
    let (before, after) = (a.get("share_before").unwrap(), a.get("share_after").unwrap());
    let params = ProtocolParams::default();
    let base = ScalingSpec::new("sqrt").unwrap();
    let penalized = apply_penalty(&base, Severity::Minor, 0, &params);
    let (full, halved) = (base.evaluate(1000.0), penalized.evaluate(1000.0));
    let oracle = 1000f64.sqrt() / 2.0;
    verdict(
        after < before && close(full, 31.62, 0.01) && close(halved, 15.81, 0.01) && close(halved, oracle, 1e-12),
        format!("equivocator share {before:.4} -> {after:.4}; sqrt(1000) {full:.2} -> {halved:.2} under c = {}", params.c_minor),
    )
}

fn build_local_chain(dir: &Path) -> Vec<u8> {
    let c = dir.join("chain.jsonl");
    let c = c.to_str().unwrap();
    posc(&["chain", "init", c, "--seed", "5"]);
    posc(&["chain", "append", c, "--blocks", "20", "--seed", "5"]);
    posc(&["register", c, "--person", "900", "--seed", "5"]);
    posc(&["endorse", c, "--follower", "900", "--creator", "0", "--amount", "60", "--seed", "5"]);
    posc(&["chain", "append", c, "--blocks", "10", "--seed", "5"]);
    std::fs::read(c).unwrap()
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    let mut replays = Vec::new();
    let mut sims = Vec::new();
    let config = dir.path().join("sim.json");
    std::fs::write(&config, posc(&["sim", "scenario", "equivocation"]).stdout).unwrap();
    for i in 0..3 {
        let d = dir.path().join(format!("run{i}"));
        std::fs::create_dir(&d).unwrap();
        files.push(build_local_chain(&d));
        // Replay: load and verify every block, then write the chain back out.
        let chain = ChainFile::new(d.join("chain.jsonl")).load().unwrap();
        let copy = d.join("replayed.jsonl");
        ChainFile::new(&copy).save(&chain).unwrap();
        replays.push((std::fs::read(&copy).unwrap(), chain.state().digest()));
        let log = d.join("sim.log");
        let o = posc(&["sim", "run", config.to_str().unwrap(), "--format", "json", "--log", log.to_str().unwrap()]);
        sims.push((o.stdout, std::fs::read(&log).unwrap()));
    }
    let chains_equal = files.iter().all(|f| *f == files[0]);
    let replays_equal = replays.iter().all(|(bytes, digest)| *bytes == files[0] && *digest == replays[0].1);
    let sims_equal = sims.iter().all(|s| *s == sims[0]);
    verdict(
        chains_equal && replays_equal && sims_equal,
        format!(
            "3 runs: chain files identical {chains_equal}, replays identical {replays_equal}, sim reports and logs identical {sims_equal}"
        ),
    )
}

fn attestations(chain: &Chain, members: &[Member]) -> Vec<Attestation> {
    let s = chain.state();
    let view = s.advanced_to(s.slot + 1).unwrap();
    let epoch = view.snapshot.epoch;
    let Some(cp) = view.finality.get(epoch).filter(|cp| !cp.finalized) else { return Vec::new() };
    view.snapshot
        .weights_at(view.snapshot.start_slot)
        .iter()
        .filter(|(id, _)| !cp.attesters.contains(id))
        .filter_map(|(id, _)| members.iter().find(|m| m.id() == *id))
        .map(|m| Attestation::sign(m.id(), epoch, cp.block_root, &m.key))
        .collect()
}

fn privacy_scan() -> Verdict {
    let mut b = GenesisBuilder::new(41, small_params());
    for n in [3, 2, 2] {
        b.add_validator(n, 100 * MICROS_PER_TOKEN);
    }
    let mut chain = Chain::new(b.build()).unwrap();
    let genesis_members = b.members().to_vec();
    let base = genesis_members.len() as u64;
    let newcomers: Vec<Member> = (0..500).map(|i| b.factory.member(base + i)).collect();
    let mut rejected = 0;
    for batch in newcomers.chunks(50) {
        let s = chain.state();
        let slot = s.slot + 1;
        let leader = s.leader_at(slot).unwrap();
        let m = genesis_members.iter().find(|m| m.id() == leader).unwrap();
        let candidates = BlockCandidates {
            transactions: batch.iter().map(|n| Transaction::Register(n.register_tx())).collect(),
            attestations: attestations(&chain, &genesis_members),
            slashings: Vec::new(),
        };
        let built = s.build_block(slot, leader, &m.key, &m.randao_secret, &candidates).unwrap();
        rejected += built.rejected.len();
        chain.append(built.block).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chain.jsonl");
    ChainFile::new(&path).save(&chain).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut scanned = 0;
    let mut leaks = Vec::new();
    for m in genesis_members.iter().chain(&newcomers) {
        for value in m.fields.private_values() {
            scanned += 1;
            if text.contains(&value) {
                leaks.push(value);
            }
        }
    }
    let registered = newcomers.iter().filter(|m| chain.state().account(&m.id()).is_some()).count();
    let ids_present = newcomers.iter().all(|m| text.contains(&m.id().to_string()));
    verdict(
        registered == 500 && rejected == 0 && ids_present && leaks.is_empty(),
        format!(
            "{registered} registrations, {} bytes scanned for {scanned} identity values, {} leaked",
            text.len(),
            leaks.len()
        ),
    )
}

fn trie_depth() -> Verdict {
    const N: u64 = 100_000;
    let mut trie = GlobalStateTrie::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    while trie.len() < N as usize {
        let mut key = [0u8; 32];
        rng.fill(&mut key);
        let _ = trie.insert(IdHash(Hash32(key)), 0u64);
    }
    let depths = trie.leaf_depths();
    let mean = depths.iter().sum::<usize>() as f64 / depths.len() as f64;
    let target = (N as f64).log(16.0).ceil();
    verdict(
        depths.len() == N as usize && (mean - target).abs() <= 2.0,
        format!("mean leaf depth {mean:.3} over {} leaves, target {target} +/- 2", depths.len()),
    )
}

fn main() {
    let (bench, bench_hardware_bound) =
        std::panic::catch_unwind(threshold_bench).unwrap_or_else(|_| (verdict(false, "panicked"), false));
    let results = [
        ("table reproduction", guarded(table_reproduction)),
        ("quadratic-voting invariance", guarded(quadratic_voting_invariance)),
        ("sybil rejection", guarded(sybil_rejection)),
        ("gini oracle equivalence", guarded(gini_oracle)),
        ("gini compression", guarded(gini_compression)),
        ("leader-election proportionality", guarded(leader_proportionality)),
        ("threshold benchmark", bench),
        ("slashing efficacy", guarded(slashing_efficacy)),
        ("determinism", guarded(determinism)),
        ("privacy scan", guarded(privacy_scan)),
        ("trie depth", guarded(trie_depth)),
    ];
    let mut blocking = Vec::new();
    for (i, (name, v)) in results.iter().enumerate() {
        println!("{} {:>2} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
        let excused = *name == "threshold benchmark" && bench_hardware_bound;
        if !v.pass && !excused {
            blocking.push(*name);
        }
    }
    if !results[6].1.pass && bench_hardware_bound {
        println!("note: the benchmark asks for more threads than this machine has cores, so its speedup cannot be met here");
    }
    if !blocking.is_empty() {
        eprintln!("failed: {blocking:?}");
        std::process::exit(1);
    }
}
