use posc_netsim::{run, AdversarySpec, FollowerSpec, SimConfig};
use serde_json::json;

fn honest(seed: u64) -> SimConfig {
    SimConfig::honest(seed, &[5, 4, 3, 3], 48)
}

#[test]
fn honest_network_is_live_and_finalizes() {
    let mut config = honest(7);
    config.followers = FollowerSpec { count: 6, amount: 40, start_slot: 3 };
    let out = run(&config).unwrap();
    let r = &out.report;
    assert!(r.missed_slots.is_empty(), "missed {:?}", r.missed_slots);
    assert_eq!(r.height, 48);
    assert!(r.heads_agree);
    assert!(r.supply_conserved);
    assert_eq!(r.txs_included, 6, "rejected {:?}", r.txs_rejected);
    let last_epoch = config.params.epoch_of(48);
    let expected: Vec<u64> = (0..last_epoch.saturating_sub(1)).collect();
    assert_eq!(r.finalized_epochs, expected);
    assert!(r.offenses.is_empty());
}

#[test]
fn equal_configs_give_identical_runs() {
    let config = honest(11).with_adversary(AdversarySpec::new("sybil_registrar", json!({"n_attempts": 4})));
    let runs: Vec<_> = (0..3).map(|_| run(&config).unwrap()).collect();
    for o in &runs[1..] {
        assert_eq!(o.report, runs[0].report);
        assert_eq!(o.log, runs[0].log);
    }
    assert_ne!(run(&honest(12)).unwrap().report.head, runs[0].report.head);
}

#[test]
fn adversary_cannot_touch_honest_traffic_before_it_acts() {
    let base = run(&honest(5)).unwrap();
    let config = honest(5).with_adversary(AdversarySpec::new("sybil_registrar", json!({"n_attempts": 3, "at_slot": 20})));
    let attacked = run(&config).unwrap();
    for s in 1..20 {
        assert_eq!(base.report.slot(s), attacked.report.slot(s), "slot {s}");
    }
}

#[test]
fn one_person_registers_once() {
    let config = honest(3).with_adversary(AdversarySpec::new("sybil_registrar", json!({"n_attempts": 99})));
    let r = run(&config).unwrap().report;
    let a = r.attack("sybil_registrar").unwrap();
    assert!(!a.succeeded);
    assert_eq!(a.get("accepted"), Some(1.0));
    assert_eq!(a.get("rejected_duplicate"), Some(98.0));
    assert_eq!(a.get("power_share"), Some(0.0));
}

#[test]
fn equivocation_is_caught_and_costs_power() {
    let config = honest(9).with_adversary(AdversarySpec::new("equivocator", json!({"full_endorsements": 4})));
    let r = run(&config).unwrap().report;
    let a = r.attack("equivocator").unwrap();
    assert!(!a.succeeded, "{a:?}");
    assert!(a.get("detection_delay_slots").unwrap() <= 1.0, "{a:?}");
    assert!(a.get("share_after").unwrap() < a.get("share_before").unwrap());
    assert!(r.heads_agree);
}

#[test]
fn flooded_leader_misses_its_slot() {
    let config = honest(4).with_adversary(AdversarySpec::new("leader_dos", json!({"delay_ms": 3000, "from_slot": 10, "slots": 2})));
    let r = run(&config).unwrap().report;
    let a = r.attack("leader_dos").unwrap();
    assert!(a.succeeded, "{a:?}");
    assert_eq!(a.get("missed_slots"), Some(2.0));
    assert_eq!(a.get("flagged_missed"), Some(2.0));
    assert!(r.missed_slots.contains(&10) && r.missed_slots.contains(&11));
}

#[test]
fn hoarded_capital_buys_less_power() {
    let mut config = SimConfig::honest(2, &[25, 15, 12, 8], 24);
    config = config.with_adversary(AdversarySpec::new("capital_hoarder", json!({"target_share": 0.4})));
    let r = run(&config).unwrap().report;
    let a = r.attack("capital_hoarder").unwrap();
    assert!((a.get("raw_share").unwrap() - 0.40).abs() < 1e-9);
    // sqrt(40) / (sqrt(40) + sqrt(25) + sqrt(15) + sqrt(12) + sqrt(8))
    let expected = 40f64.sqrt() / [40f64, 25.0, 15.0, 12.0, 8.0].iter().map(|x| x.sqrt()).sum::<f64>();
    assert!((a.get("power_share").unwrap() - expected).abs() < 1e-6);
    assert!((100.0 * expected - 29.43).abs() < 0.01);
    assert!(!a.succeeded);
}
