mod common;

use common::World;
use posc_core::capital::{apply_penalty, effective_capital, ScalingSpec};
use posc_core::capital::Severity;
use posc_core::consensus::{Evidence, OffenseKind};
use posc_core::fixtures::{small_params, GenesisBuilder};
use posc_core::identity::IssuerAction;
use posc_core::ledger::{BlockCandidates, Chain, GovernanceBody, GovernanceTx, Transaction, Vote};
use posc_core::{IdHash, Keypair, ProtocolParams};
use proptest::prelude::*;

/// Steps through slots, leaving every slot led by `victim` empty, until the
/// victim has an inactivity record.
fn starve(w: &mut World, victim: IdHash) -> u64 {
    for _ in 0..2000 {
        let mut slot = w.state().slot + 1;
        while w.state().leader_at(slot).unwrap() == victim {
            slot += 1;
        }
        let built = w.build_at(slot, &BlockCandidates { attestations: w.attestations(), ..Default::default() });
        w.chain.append(built.block).unwrap();
        if w.state().offenses.records().iter().any(|r| r.offender == victim) {
            return slot;
        }
    }
    panic!("victim never charged");
}

#[test]
fn eight_missed_proposals_cost_a_minor_penalty() {
    let mut w = World::new(21, &[3, 3, 3]);
    let victim = w.member(w.validators[0]).id();
    starve(&mut w, victim);
    let rec = &w.state().offenses.records()[0];
    assert_eq!(rec.kind, OffenseKind::Inactivity);
    assert_eq!(rec.severity, Severity::Minor);
    let missed = w.state().skipped_slots().values().filter(|l| **l == victim).count();
    assert_eq!(missed, 8);
    let spec = &w.state().account(&victim).unwrap().scaling;
    assert_eq!((spec.function.as_str(), spec.penalty_divisor), ("sqrt", 2.0));
    // 300 active units, sqrt, halved.
    assert!((effective_capital(300, spec) - 300f64.sqrt() / 2.0).abs() < 1e-9);
}

#[test]
fn equivocation_is_reported_and_power_drops_next_epoch() {
    let mut w = World::new(22, &[3, 3, 3]);
    let slot = 3;
    let a = w.build_at(slot, &Default::default()).block;
    let newcomer = w.builder.factory.member(777);
    let b = w
        .build_at(slot, &BlockCandidates { transactions: vec![Transaction::Register(newcomer.register_tx())], ..Default::default() })
        .block;
    let offender = a.header.header.proposer;
    assert_ne!(a.hash(), b.hash());
    w.chain.append(a.clone()).unwrap();

    let evidence = Evidence::Equivocation { first: b.header.clone(), second: a.header.clone() };
    let mut next = slot + 1;
    while w.state().leader_at(next).unwrap() == offender {
        next += 1;
    }
    let built = w.build_at(next, &BlockCandidates { slashings: vec![evidence.clone()], ..Default::default() });
    assert_eq!(built.block.body.slashings.len(), 1);
    w.chain.append(built.block).unwrap();

    let epoch = w.state().current_epoch();
    let before = w.state().snapshot.weight_at(&offender, w.state().slot).unwrap();
    assert!((before - 300f64.sqrt()).abs() < 1e-9, "snapshot is fixed for the epoch");
    let spec = &w.state().account(&offender).unwrap().scaling;
    assert_eq!((spec.function.as_str(), spec.penalty_divisor), ("cbrt", 4.0));

    // Same evidence again, in either order, is refused.
    let again = Evidence::Equivocation { first: a.header.clone(), second: b.header.clone() };
    let built = w.step(&BlockCandidates { slashings: vec![again], ..Default::default() });
    assert!(built.block.body.slashings.is_empty());

    let spe = w.state().params.slots_per_epoch;
    while w.state().current_epoch() == epoch {
        w.step_empty();
    }
    let after = w.state().snapshot.weight_at(&offender, (epoch + 1) * spe).unwrap();
    assert!((after - 300f64.cbrt() / 4.0).abs() < 1e-9);
    let share = |x: f64| x / (x + 2.0 * 300f64.sqrt());
    assert!(share(after) < share(before) / 5.0);
}

#[test]
fn penalty_expires_after_its_window() {
    let mut w = World::new(23, &[3, 3, 3]);
    let victim = w.member(w.validators[1]).id();
    starve(&mut w, victim);
    let p = w.state().params.clone();
    let expiry = w.state().account(&victim).unwrap().scaling.penalty_expiry.unwrap();
    while w.state().current_epoch() <= expiry {
        w.step(&BlockCandidates { attestations: w.attestations(), ..Default::default() });
    }
    let spec = &w.state().account(&victim).unwrap().scaling;
    assert!(!spec.is_penalized());
    let start = w.state().current_epoch() * p.slots_per_epoch;
    assert!((w.state().snapshot.weight_at(&victim, start).unwrap() - 300f64.sqrt()).abs() < 1e-9);
}

#[test]
fn governance_adds_issuer_with_majority() {
    let mut w = World::new(24, &[4, 3, 3]);
    let new_issuer = Keypair::derive("issuer", 999);
    let body = GovernanceBody {
        action: IssuerAction::Add { issuer_id: "issuer-1".into(), pubkey: new_issuer.public() },
        epoch: 0,
    };
    let voters: Vec<_> = w.validators.iter().map(|i| w.member(*i).clone()).collect();
    let vote = |i: usize| Vote::sign(&body, voters[i].id(), &voters[i].key);
    // sqrt(400) = 20 of 20 + 2 sqrt(300) ~ 54.6: not a majority.
    let weak = GovernanceTx { body: body.clone(), votes: vec![vote(0)] };
    let built = w.step(&BlockCandidates { transactions: vec![Transaction::Governance(weak)], ..Default::default() });
    assert_eq!(built.rejected[0].1.name(), "InsufficientSupport");
    let strong = GovernanceTx { body: body.clone(), votes: vec![vote(0), vote(2)] };
    let built = w.step(&BlockCandidates { transactions: vec![Transaction::Governance(strong)], ..Default::default() });
    assert!(built.rejected.is_empty(), "{:?}", built.rejected);
    assert!(w.state().issuers.contains("issuer-1"));
    let dup = GovernanceTx { body: body.clone(), votes: vec![vote(0), vote(0)] };
    let built = w.step(&BlockCandidates { transactions: vec![Transaction::Governance(dup)], ..Default::default() });
    assert_eq!(built.rejected[0].1.name(), "DuplicateVoter");
}

#[test]
fn joined_validator_leads_only_after_activation() {
    // A genesis-endorsed creator that did not join at genesis.
    let mut b = GenesisBuilder::new(25, small_params());
    let v0 = b.add_validator(3, 0);
    let v1 = b.add_validator(3, 0);
    let c = b.add_creator(2, 0);
    let mut w = World { chain: Chain::new(b.build()).unwrap(), validators: vec![v0, v1], builder: b };
    let joiner = w.member(c).clone();
    let built = w.step(&BlockCandidates { transactions: vec![Transaction::Join(joiner.join_tx(0))], ..Default::default() });
    assert!(built.rejected.is_empty(), "{:?}", built.rejected);
    let join_slot = w.state().slot;
    let activation = join_slot + w.state().params.activation_delay_slots;
    let mut led = Vec::new();
    for _ in 0..120 {
        let slot = w.state().slot + 1;
        let leader = w.state().leader_at(slot).unwrap();
        if leader == joiner.id() {
            led.push(slot);
        }
        w.step_empty();
    }
    assert!(!led.is_empty());
    assert!(led.iter().all(|s| *s >= activation), "{led:?} before {activation}");
    assert!(w.state().validators.get(&joiner.id()).unwrap().reveals > 0);
}

#[test]
fn replayed_block_pays_no_second_reward() {
    let mut w = World::new(26, &[2, 2]);
    let built = w.step_empty();
    let issued = w.state().rewards.issued();
    let mut store = w.state().accounts.clone();
    let mut rewards = w.state().rewards.clone();
    let minted = rewards
        .distribute_rewards(&mut store, built.block.reward_key(), &built.block.header.header.proposer, &[], &w.state().params)
        .unwrap();
    assert_eq!(minted, 0);
    assert_eq!(rewards.issued(), issued);
    assert_eq!(store.root(), w.state().accounts.root());
}

fn severity() -> impl Strategy<Value = Severity> {
    prop_oneof![Just(Severity::Minor), Just(Severity::Major)]
}

proptest! {
    #[test]
    fn slashing_never_raises_power(
        active in 101u64..10_000_000,
        function in prop::sample::select(vec!["sqrt", "cbrt", "log2", "linear"]),
        hits in prop::collection::vec(severity(), 1..4),
    ) {
        let params = ProtocolParams::default();
        let mut spec = ScalingSpec::new(function).unwrap();
        let mut power = effective_capital(active, &spec);
        for (epoch, s) in hits.into_iter().enumerate() {
            spec = apply_penalty(&spec, s, epoch as u64, &params);
            let next = effective_capital(active, &spec);
            prop_assert!(next < power, "{next} >= {power}");
            power = next;
        }
    }
}
