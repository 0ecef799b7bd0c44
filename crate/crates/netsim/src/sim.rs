use std::collections::{BTreeMap, BTreeSet};

use posc_core::capital::{normalize, EndorseBody, MetaTx};
use posc_core::fixtures::{GenesisBuilder, Member};
use posc_core::ledger::{Attestation, Block, ChainState, Transaction};
use posc_core::{Hash32, IdHash};

use crate::adversary::{GenesisAccess, Outgoing, OutcomeView, VALIDATOR_TOKENS};
use crate::node::BlockStatus;
use crate::report::{OffenseRow, PowerEntry, SlotRow};
use crate::{
    Adversary, AdversaryRegistry, EventQueue, Message, Network, NodeCtx, PublicServices, Replica, SimConfig, SimError,
    SimReport, SlotAction,
};

/// A finished run: the report and the event log it was digested from.
#[derive(Clone, Debug)]
pub struct SimOutput {
    pub report: SimReport,
    pub log: Vec<String>,
}

/// Runs a simulation with the built-in adversary strategies.
pub fn run(config: &SimConfig) -> Result<SimOutput, SimError> {
    run_with_registry(config, &AdversaryRegistry::with_builtins())
}

enum Kind {
    Validator,
    Follower { creator: usize, creator_id: IdHash, slot: u64, amount: u64 },
    Adversary(Box<dyn Adversary>),
}

struct Node {
    kind: Kind,
    member: Option<Member>,
    replica: Option<Replica>,
    attested: BTreeSet<u64>,
}

enum Event {
    Tick(u64),
    Deliver { from: usize, to: usize, msg: Box<Message> },
}

struct Sim<'a> {
    config: &'a SimConfig,
    nodes: Vec<Node>,
    network: Network,
    queue: EventQueue<Event>,
    directory: BTreeMap<IdHash, usize>,
    services: PublicServices,
    log: Vec<String>,
    rejections: BTreeMap<Hash32, String>,
    detections: BTreeMap<Hash32, (u64, usize)>,
}

/// Runs a simulation, resolving adversary behaviors in `registry`.
///
/// Nodes are numbered honest validators first, then followers, then
/// adversaries. Everything is derived from the config seed, so equal
/// configs give identical reports and logs.
pub fn run_with_registry(config: &SimConfig, registry: &AdversaryRegistry) -> Result<SimOutput, SimError> {
    config.validate()?;
    let mut builder = GenesisBuilder::new(config.seed, config.params.clone());
    let honest_capital: Vec<usize> = config.validators.iter().map(|v| v.full_endorsements).collect();
    let validators: Vec<usize> = honest_capital.iter().map(|n| builder.add_validator(*n, VALIDATOR_TOKENS)).collect();
    let followers: Vec<usize> = (0..config.followers.count).map(|_| builder.add_member(0)).collect();
    let mut adversaries = Vec::new();
    for spec in &config.adversaries {
        let mut adversary = registry.create(&spec.behavior, &spec.params)?;
        let mut access = GenesisAccess { builder: &mut builder, honest_capital: &honest_capital, tokens: VALIDATOR_TOKENS };
        let member = adversary.setup(&mut access);
        adversaries.push((adversary, member));
    }
    let genesis = builder.build();
    let replica = Replica::new(&genesis)?;
    let members = builder.members();

    let mut nodes = Vec::new();
    for m in &validators {
        nodes.push(Node {
            kind: Kind::Validator,
            member: Some(members[*m].clone()),
            replica: Some(replica.clone()),
            attested: BTreeSet::new(),
        });
    }
    for (i, m) in followers.iter().enumerate() {
        let creator = i % validators.len();
        nodes.push(Node {
            kind: Kind::Follower {
                creator,
                creator_id: members[validators[creator]].id(),
                slot: config.followers.start_slot.max(1) + i as u64,
                amount: config.followers.amount,
            },
            member: Some(members[*m].clone()),
            replica: None,
            attested: BTreeSet::new(),
        });
    }
    for (adversary, member) in adversaries {
        nodes.push(Node {
            kind: Kind::Adversary(adversary),
            member: member.map(|m| members[m].clone()),
            replica: Some(replica.clone()),
            attested: BTreeSet::new(),
        });
    }
    let directory = nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| !matches!(n.kind, Kind::Follower { .. }))
        .filter_map(|(i, n)| n.member.as_ref().map(|m| (m.id(), i)))
        .collect();

    let mut sim = Sim {
        config,
        nodes,
        network: Network::new(config.seed, config.latency),
        queue: EventQueue::new(),
        directory,
        services: PublicServices::new(builder.factory.clone()),
        log: Vec::new(),
        rejections: BTreeMap::new(),
        detections: BTreeMap::new(),
    };
    sim.run();
    Ok(sim.finish())
}

fn short(h: &Hash32) -> String {
    h.to_hex()[..16].to_string()
}

impl Sim<'_> {
    fn run(&mut self) {
        let slot_ms = self.config.slot_ms;
        for s in 1..=self.config.slots_to_run {
            self.queue.push(s * slot_ms, Event::Tick(s));
        }
        let end = (self.config.slots_to_run + 1) * slot_ms;
        while let Some((now, event)) = self.queue.pop() {
            if now >= end {
                break;
            }
            match event {
                Event::Tick(slot) => self.tick(now, slot),
                Event::Deliver { from, to, msg } => self.deliver(now, from, to, *msg),
            }
        }
    }

    fn dispatch(&mut self, from: usize, now: u64, outbox: Vec<Outgoing>) {
        for out in outbox {
            let targets: Vec<usize> = match out.to {
                Some(to) => vec![to],
                None => (0..self.nodes.len()).filter(|i| *i != from && self.nodes[*i].replica.is_some()).collect(),
            };
            for to in targets {
                let at = self.network.delivery_time(now + out.delay_ms, from, to);
                self.queue.push(at, Event::Deliver { from, to, msg: Box::new(out.msg.clone()) });
            }
        }
    }

    fn tick(&mut self, now: u64, slot: u64) {
        let params = &self.config.params;
        for i in 0..self.nodes.len() {
            let mut outbox = Vec::new();
            let mut suppressions = Vec::new();
            let node = &mut self.nodes[i];
            match &mut node.kind {
                Kind::Follower { creator, creator_id, slot: at, amount } => {
                    if *at == slot {
                        let m = node.member.as_ref().expect("followers are members");
                        let body = EndorseBody {
                            follower: m.id(),
                            creator: *creator_id,
                            amount: *amount,
                            nonce: 0,
                            submitted_epoch: params.epoch_of(slot),
                        };
                        let req = MetaTx::request(body, &m.key);
                        self.log.push(format!("{now} n{i} request sponsor from n{creator}"));
                        outbox.push(Outgoing { to: Some(*creator), delay_ms: 0, msg: Message::SponsorRequest(req) });
                    }
                }
                kind => {
                    let Some(replica) = node.replica.as_mut() else { continue };
                    let mut ctx = NodeCtx {
                        now,
                        slot,
                        slot_ms: self.config.slot_ms,
                        node: i,
                        member: node.member.as_ref(),
                        replica,
                        services: &self.services,
                        directory: &self.directory,
                        outbox: &mut outbox,
                        suppressions: &mut suppressions,
                        log: &mut self.log,
                    };
                    let action = match kind {
                        Kind::Adversary(a) => a.on_slot(&mut ctx),
                        _ => SlotAction::Honest,
                    };
                    if action == SlotAction::Honest {
                        propose(&mut ctx, &mut self.rejections);
                    }
                    if action != SlotAction::Idle {
                        attest(&mut ctx, &mut node.attested);
                    }
                }
            }
            for (target, until) in suppressions {
                self.network.suppress(target, until);
            }
            self.dispatch(i, now, outbox);
        }
    }

    fn deliver(&mut self, now: u64, from: usize, to: usize, msg: Message) {
        let slot = now / self.config.slot_ms;
        let fee = self.config.params.endorsement_fee;
        let honest = !matches!(self.nodes[to].kind, Kind::Adversary(_));
        let node = &mut self.nodes[to];
        let Some(replica) = node.replica.as_mut() else { return };
        let mut outbox = Vec::new();
        let reply = |msg| Outgoing { to: Some(from), delay_ms: 0, msg };
        let broadcast = |msg| Outgoing { to: None, delay_ms: 0, msg };
        match msg {
            Message::Block(b) => {
                let hash = b.hash();
                let receipt = replica.receive_block(b);
                let status = match &receipt.status {
                    BlockStatus::Applied { new_head: true } => "head".to_string(),
                    BlockStatus::Applied { new_head: false } => "fork".to_string(),
                    BlockStatus::Duplicate => "duplicate".to_string(),
                    BlockStatus::Orphan { .. } => "orphan".to_string(),
                    BlockStatus::Invalid(e) => format!("invalid {}", e.name()),
                };
                self.log.push(format!("{now} n{to} recv block {} from n{from} {status}", short(&hash)));
                if let BlockStatus::Orphan { missing } = receipt.status {
                    outbox.push(reply(Message::GetBlock(missing)));
                }
                for ev in receipt.evidence {
                    self.log.push(format!("{now} n{to} evidence {:?} against {}", ev.kind(), ev.offender()));
                    if honest {
                        self.detections.entry(ev.id()).or_insert((slot, to));
                    }
                    outbox.push(broadcast(Message::Evidence(ev)));
                }
            }
            Message::Tx(tx) => {
                let h = tx.hash();
                let fresh = replica.add_tx(tx);
                self.log.push(format!("{now} n{to} recv tx {} {}", short(&h), if fresh { "new" } else { "known" }));
            }
            Message::Attestation(a) => {
                replica.add_attestation(a);
            }
            Message::Evidence(ev) => {
                replica.add_evidence(ev);
            }
            Message::GetBlock(h) => {
                if let Some(b) = replica.block(&h) {
                    outbox.push(reply(Message::Block(b.clone())));
                }
            }
            Message::SponsorRequest(req) => {
                if let Some(m) = node.member.as_ref().filter(|m| m.id() == req.body.creator) {
                    let tx = Transaction::Endorse(MetaTx::sponsor(req, &m.key, fee));
                    self.log.push(format!("{now} n{to} sponsor endorsement {}", short(&tx.hash())));
                    replica.add_tx(tx.clone());
                    outbox.push(broadcast(Message::Tx(tx)));
                }
            }
        }
        self.dispatch(to, now, outbox);
    }

    fn finish(self) -> SimOutput {
        let reference = self.nodes[0].replica.as_ref().expect("honest validators hold replicas");
        let canonical: Vec<Block> = reference.canonical_chain().into_iter().cloned().collect();
        let genesis_hash = reference.head_state().genesis_hash;
        let states: Vec<&ChainState> = std::iter::once(genesis_hash)
            .chain(canonical.iter().map(Block::hash))
            .map(|h| reference.state(&h).expect("canonical blocks have states"))
            .collect();
        let final_state = *states.last().expect("genesis state");
        let params = &self.config.params;
        let node_of = |id: &IdHash| self.directory.get(id).copied();

        let mut slots = Vec::new();
        let mut parent = 0;
        for s in 1..=self.config.slots_to_run {
            let block = canonical.get(parent).filter(|b| b.slot() == s);
            let leader = states[parent].leader_at(s).ok();
            slots.push(SlotRow {
                slot: s,
                epoch: params.epoch_of(s),
                leader: leader.map(|l| l.to_string()),
                leader_node: leader.as_ref().and_then(node_of),
                block: block.map(|b| b.hash().to_hex()),
                txs: block.map_or(0, |b| b.body.transactions.len()),
                attestations: block.map_or(0, |b| b.body.attestations.len()),
                slashings: block.map_or(0, |b| b.body.slashings.len()),
                missed: block.is_none(),
            });
            if block.is_some() {
                parent += 1;
            }
        }

        let mut epoch_power: BTreeMap<u64, BTreeMap<IdHash, f64>> = BTreeMap::new();
        for st in &states {
            let snap = &st.snapshot;
            epoch_power
                .entry(snap.epoch)
                .or_insert_with(|| normalize(snap.weights_at(snap.start_slot)).unwrap_or_default().into_iter().collect());
        }

        let included: BTreeMap<Hash32, u64> =
            canonical.iter().flat_map(|b| b.body.slashings.iter().map(|e| (e.id(), b.slot()))).collect();
        let offenses: Vec<OffenseRow> = final_state
            .offenses
            .records()
            .iter()
            .map(|r| OffenseRow {
                offender: r.offender.to_string(),
                offender_node: node_of(&r.offender),
                kind: r.kind,
                severity: r.severity,
                epoch: r.epoch,
                evidence: r.evidence_id.to_hex(),
                included_slot: included.get(&r.evidence_id).copied(),
                detected_slot: self.detections.get(&r.evidence_id).map(|d| d.0),
                detected_by: self.detections.get(&r.evidence_id).map(|d| d.1),
            })
            .collect();

        let snap = &final_state.snapshot;
        let weights = snap.weights_at(snap.start_slot);
        let shares: BTreeMap<IdHash, f64> = normalize(weights.clone()).unwrap_or_default().into_iter().collect();
        let final_power = weights
            .iter()
            .map(|(id, w)| PowerEntry {
                id: id.to_string(),
                node: node_of(id),
                active_units: final_state.account(id).map_or(0, |a| a.active_received),
                weight: *w,
                share: shares.get(id).copied().unwrap_or(0.0),
            })
            .collect();

        let mut txs_rejected: BTreeMap<String, usize> = BTreeMap::new();
        for reason in self.rejections.values() {
            *txs_rejected.entry(reason.clone()).or_default() += 1;
        }
        let checkpoints: Vec<_> = final_state.finality.checkpoints().collect();
        let honest_heads: BTreeSet<Hash32> = self
            .nodes
            .iter()
            .filter(|n| matches!(n.kind, Kind::Validator))
            .filter_map(|n| n.replica.as_ref().map(Replica::head))
            .collect();

        let attacks = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match &n.kind {
                Kind::Adversary(a) => Some(a.outcome(&OutcomeView {
                    node: i,
                    member: n.member.as_ref(),
                    params,
                    final_state,
                    canonical: &canonical,
                    slots: &slots,
                    offenses: &offenses,
                    tx_rejections: &self.rejections,
                    epoch_power: &epoch_power,
                })),
                _ => None,
            })
            .collect();

        let log_digest = Hash32::digest(self.log.join("\n").as_bytes());
        let report = SimReport {
            config_hash: self.config.hash().to_hex(),
            seed: self.config.seed,
            slots_run: self.config.slots_to_run,
            nodes: self.nodes.len(),
            head: final_state.head.to_hex(),
            height: final_state.height,
            heads_agree: honest_heads.len() == 1,
            missed_slots: slots.iter().filter(|r| r.missed).map(|r| r.slot).collect(),
            justified_epochs: checkpoints.iter().filter(|c| c.justified).map(|c| c.epoch).collect(),
            finalized_epochs: checkpoints.iter().filter(|c| c.finalized).map(|c| c.epoch).collect(),
            supply_conserved: final_state.token_supply() == final_state.expected_supply(),
            txs_included: canonical.iter().map(|b| b.body.transactions.len()).sum(),
            txs_rejected,
            slots,
            offenses,
            final_power,
            attacks,
            log_digest: log_digest.to_hex(),
        };
        SimOutput { report, log: self.log }
    }
}

fn propose(ctx: &mut NodeCtx, rejections: &mut BTreeMap<Hash32, String>) {
    let Some(member) = ctx.member else { return };
    let head = ctx.replica.head_state();
    if !head.leader_at(ctx.slot).is_ok_and(|l| l == member.id()) {
        return;
    }
    let candidates = ctx.replica.candidates();
    match head.build_block(ctx.slot, member.id(), &member.key, &member.randao_secret, &candidates) {
        Ok(built) => {
            let mut dropped = BTreeSet::new();
            for (index, error) in &built.rejected {
                let h = candidates.transactions[*index].hash();
                rejections.entry(h).or_insert_with(|| error.name());
                dropped.insert(h);
            }
            ctx.replica.drop_txs(&dropped);
            let block = built.block.clone();
            ctx.note(format!(
                "propose slot {} block {} txs {} rejected {}",
                ctx.slot,
                short(&block.hash()),
                block.body.transactions.len(),
                dropped.len()
            ));
            ctx.replica.insert_own(built.block, built.state);
            ctx.broadcast(Message::Block(block));
        }
        Err(e) => ctx.note(format!("build failed {}", e.name())),
    }
}

/// Votes once per epoch for the checkpoint the node's head implies.
fn attest(ctx: &mut NodeCtx, attested: &mut BTreeSet<u64>) {
    let Some(member) = ctx.member else { return };
    let head = ctx.replica.head_state();
    let epoch = head.params.epoch_of(ctx.slot);
    if attested.contains(&epoch) {
        return;
    }
    let Ok(view) = head.advanced_to(ctx.slot) else { return };
    if view.snapshot.epoch != epoch || view.snapshot.weight_at(&member.id(), view.snapshot.start_slot).is_none() {
        return;
    }
    let Some(cp) = view.finality.get(epoch) else { return };
    let a = Attestation::sign(member.id(), epoch, cp.block_root, &member.key);
    attested.insert(epoch);
    ctx.note(format!("attest epoch {epoch} root {}", short(&cp.block_root)));
    ctx.replica.add_attestation(a.clone());
    ctx.broadcast(Message::Attestation(a));
}
