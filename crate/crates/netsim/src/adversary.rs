use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use posc_core::consensus::OffenseKind;
use posc_core::fixtures::{GenesisBuilder, IdentityFactory, Member};
use posc_core::identity::{synthetic_fields, IdentityError, IdentityProof, VerifiableCredential};
use posc_core::ledger::{Block, BlockCandidates, ChainState, RegisterTx, Transaction, TransferBody, TransferTx};
use posc_core::{Hash32, IdHash, Keypair, PublicKey, MICROS_PER_TOKEN};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::report::{OffenseRow, SlotRow};
use crate::{Message, Replica, SimError};

/// First person index used for identities that adversaries obtain at run
/// time. Genesis members use small indices, so these never collide.
pub const ADVERSARY_PERSON_BASE: u64 = 1_000_000;

/// The services an ordinary participant can use: the credential issuer and
/// the proving service. The oracle key behind the prover stays private.
#[derive(Clone, Debug)]
pub struct PublicServices {
    factory: IdentityFactory,
}

impl PublicServices {
    pub(crate) fn new(factory: IdentityFactory) -> PublicServices {
        PublicServices { factory }
    }

    /// Person `person` presents a platform key and gets their credential.
    /// The issuer verifies who the person is, not how many keys they hold.
    pub fn issue_credential(&self, person: u64, platform_pubkey: PublicKey) -> VerifiableCredential {
        let fields = synthetic_fields(person, self.factory.seed);
        self.factory.issuer.issue(fields, platform_pubkey).expect("synthetic fields are valid")
    }

    pub fn prove(&self, vc: &VerifiableCredential, platform_key: &Keypair) -> Result<IdentityProof, IdentityError> {
        self.factory.prove(vc, platform_key)
    }
}

/// Limited access to the genesis under construction.
pub struct GenesisAccess<'a> {
    pub(crate) builder: &'a mut GenesisBuilder,
    pub(crate) honest_capital: &'a [usize],
    pub(crate) tokens: u64,
}

impl GenesisAccess<'_> {
    /// Full endorsements of each honest validator.
    pub fn honest_capital(&self) -> &[usize] {
        self.honest_capital
    }

    /// Adds a genesis validator the adversary controls and returns its
    /// member index.
    pub fn add_validator(&mut self, full_endorsements: usize) -> usize {
        self.builder.add_validator(full_endorsements, self.tokens)
    }
}

/// A message queued by a node during its turn.
#[derive(Clone, Debug)]
pub(crate) struct Outgoing {
    /// `None` sends to every full node except the sender.
    pub to: Option<usize>,
    pub delay_ms: u64,
    pub msg: Message,
}

/// What a node may do during its slot tick.
pub struct NodeCtx<'a> {
    pub now: u64,
    pub slot: u64,
    pub slot_ms: u64,
    pub node: usize,
    pub member: Option<&'a Member>,
    pub replica: &'a mut Replica,
    pub services: &'a PublicServices,
    pub(crate) directory: &'a BTreeMap<IdHash, usize>,
    pub(crate) outbox: &'a mut Vec<Outgoing>,
    pub(crate) suppressions: &'a mut Vec<(usize, u64)>,
    pub(crate) log: &'a mut Vec<String>,
}

impl NodeCtx<'_> {
    pub fn send(&mut self, to: usize, msg: Message) {
        self.outbox.push(Outgoing { to: Some(to), delay_ms: 0, msg });
    }

    pub fn broadcast(&mut self, msg: Message) {
        self.broadcast_after(0, msg);
    }

    pub fn broadcast_after(&mut self, delay_ms: u64, msg: Message) {
        self.outbox.push(Outgoing { to: None, delay_ms, msg });
    }

    /// Floods `node` so that its traffic is held until `until`.
    pub fn suppress(&mut self, node: usize, until: u64) {
        self.suppressions.push((node, until));
    }

    /// Network address of a validator. Validators announce their
    /// addresses, so this is public knowledge.
    pub fn locate(&self, id: &IdHash) -> Option<usize> {
        self.directory.get(id).copied()
    }

    pub fn note(&mut self, text: impl AsRef<str>) {
        self.log.push(format!("{} n{} {}", self.now, self.node, text.as_ref()));
    }

    /// Whether this node's member leads `slot` on its current head.
    pub fn leads(&self, slot: u64) -> bool {
        self.member.is_some_and(|m| self.replica.head_state().leader_at(slot).is_ok_and(|l| l == m.id()))
    }
}

/// How the node proceeds after the adversary's hook.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotAction {
    /// Perform the honest duties of proposing and attesting.
    Honest,
    /// The adversary proposed (or chose not to); only attest.
    AttestOnly,
    /// Do nothing further this slot.
    Idle,
}

/// Facts about a finished run that an adversary can use to judge itself.
pub struct OutcomeView<'a> {
    pub node: usize,
    pub member: Option<&'a Member>,
    pub params: &'a posc_core::ProtocolParams,
    pub final_state: &'a ChainState,
    pub canonical: &'a [Block],
    pub slots: &'a [SlotRow],
    pub offenses: &'a [OffenseRow],
    /// Reason for every transaction a proposer rejected, by hash.
    pub tx_rejections: &'a BTreeMap<Hash32, String>,
    /// Normalized consensus power per epoch on the canonical chain.
    pub epoch_power: &'a BTreeMap<u64, BTreeMap<IdHash, f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub behavior: String,
    pub node: usize,
    /// Whether the attack achieved its aim against the protocol.
    pub succeeded: bool,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl AttackOutcome {
    fn new(behavior: &str, node: usize, succeeded: bool) -> AttackOutcome {
        AttackOutcome { behavior: behavior.to_string(), node, succeeded, metrics: BTreeMap::new(), notes: Vec::new() }
    }

    fn metric(mut self, name: &str, value: f64) -> AttackOutcome {
        self.metrics.insert(name.to_string(), value);
        self
    }

    fn note(mut self, text: impl Into<String>) -> AttackOutcome {
        self.notes.push(text.into());
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }
}

/// A strategy run by one adversarial node.
pub trait Adversary {
    fn behavior(&self) -> &'static str;

    /// Adds genesis state the adversary starts with. Returns the member
    /// index it controls, if any.
    fn setup(&mut self, _genesis: &mut GenesisAccess) -> Option<usize> {
        None
    }

    /// Called at the start of every slot before the honest duties.
    fn on_slot(&mut self, ctx: &mut NodeCtx) -> SlotAction;

    fn outcome(&self, view: &OutcomeView) -> AttackOutcome;
}

pub type AdversaryFactory = Arc<dyn Fn(&Map<String, Value>) -> Result<Box<dyn Adversary>, SimError> + Send + Sync>;

/// Adversary strategies by behavior name.
#[derive(Clone, Default)]
pub struct AdversaryRegistry {
    factories: BTreeMap<String, AdversaryFactory>,
}

impl AdversaryRegistry {
    pub fn new() -> AdversaryRegistry {
        AdversaryRegistry::default()
    }

    pub fn with_builtins() -> AdversaryRegistry {
        let mut r = AdversaryRegistry::new();
        r.register("sybil_registrar", Arc::new(|p| Ok(Box::new(SybilRegistrar::from_params(p)?) as Box<dyn Adversary>)));
        r.register("equivocator", Arc::new(|p| Ok(Box::new(Equivocator::from_params(p)?) as Box<dyn Adversary>)));
        r.register("leader_dos", Arc::new(|p| Ok(Box::new(LeaderDos::from_params(p)?) as Box<dyn Adversary>)));
        r.register("capital_hoarder", Arc::new(|p| Ok(Box::new(CapitalHoarder::from_params(p)?) as Box<dyn Adversary>)));
        r
    }

    pub fn register(&mut self, name: &str, factory: AdversaryFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn create(&self, name: &str, params: &Map<String, Value>) -> Result<Box<dyn Adversary>, SimError> {
        let f = self.factories.get(name).ok_or_else(|| SimError::UnknownBehavior(name.to_string()))?;
        f(params)
    }
}

impl std::fmt::Debug for AdversaryRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

fn param_u64(p: &Map<String, Value>, key: &str, default: u64) -> Result<u64, SimError> {
    match p.get(key) {
        None => Ok(default),
        Some(v) => v.as_u64().ok_or_else(|| SimError::Config(format!("{key} must be a non-negative integer"))),
    }
}

fn param_f64(p: &Map<String, Value>, key: &str, default: f64) -> Result<f64, SimError> {
    match p.get(key) {
        None => Ok(default),
        Some(v) => v.as_f64().ok_or_else(|| SimError::Config(format!("{key} must be a number"))),
    }
}

fn share_of(view: &OutcomeView, epoch: u64, id: &IdHash) -> f64 {
    view.epoch_power.get(&epoch).and_then(|m| m.get(id)).copied().unwrap_or(0.0)
}

/// One person obtains several credentials for fresh platform keys and tries
/// to register each as a separate identity.
#[derive(Clone, Debug)]
pub struct SybilRegistrar {
    pub attempts: u64,
    pub at_slot: u64,
    person: Option<u64>,
    id: Option<IdHash>,
    sent: Vec<Hash32>,
}

impl SybilRegistrar {
    pub fn new(attempts: u64, at_slot: u64) -> SybilRegistrar {
        SybilRegistrar { attempts, at_slot, person: None, id: None, sent: Vec::new() }
    }

    fn from_params(p: &Map<String, Value>) -> Result<SybilRegistrar, SimError> {
        let attempts = param_u64(p, "n_attempts", 10)?;
        if attempts == 0 {
            return Err(SimError::Config("n_attempts must be positive".into()));
        }
        Ok(SybilRegistrar::new(attempts, param_u64(p, "at_slot", 1)?.max(1)))
    }
}

impl Adversary for SybilRegistrar {
    fn behavior(&self) -> &'static str {
        "sybil_registrar"
    }

    fn on_slot(&mut self, ctx: &mut NodeCtx) -> SlotAction {
        if ctx.slot != self.at_slot {
            return SlotAction::Idle;
        }
        let person = ADVERSARY_PERSON_BASE + ctx.node as u64;
        self.person = Some(person);
        for k in 0..self.attempts {
            let key = Keypair::derive(&format!("sybil/{person}"), k);
            let vc = ctx.services.issue_credential(person, key.public());
            let proof = match ctx.services.prove(&vc, &key) {
                Ok(p) => p,
                Err(e) => {
                    ctx.note(format!("sybil prove failed: {e}"));
                    continue;
                }
            };
            self.id = Some(proof.statement.id_hash);
            let tx = Transaction::Register(RegisterTx::new(proof, &key));
            self.sent.push(tx.hash());
            ctx.broadcast(Message::Tx(tx));
        }
        ctx.note(format!("sybil sent {} registrations", self.sent.len()));
        SlotAction::Idle
    }

    fn outcome(&self, view: &OutcomeView) -> AttackOutcome {
        let sent: BTreeSet<Hash32> = self.sent.iter().copied().collect();
        let accepted = view
            .canonical
            .iter()
            .flat_map(|b| &b.body.transactions)
            .filter(|tx| sent.contains(&tx.hash()))
            .count();
        let rejected: Vec<&String> = self.sent.iter().filter_map(|h| view.tx_rejections.get(h)).collect();
        let duplicates = rejected.iter().filter(|r| r.as_str() == "DuplicateIdentity").count();
        let id = self.id;
        let final_epoch = view.final_state.current_epoch();
        let power = id.map_or(0.0, |id| share_of(view, final_epoch, &id));
        let is_validator = id.is_some_and(|id| view.final_state.validators.is_member(&id));
        AttackOutcome::new(self.behavior(), view.node, accepted > 1 || power > 0.0)
            .metric("attempts", self.sent.len() as f64)
            .metric("accepted", accepted as f64)
            .metric("rejected", rejected.len() as f64)
            .metric("rejected_duplicate", duplicates as f64)
            .metric("power_share", power)
            .metric("validator", f64::from(u8::from(is_validator)))
            .note(match id {
                Some(id) => format!("all attempts share identity {id}"),
                None => "no registration was produced".to_string(),
            })
    }
}

/// A validator that signs two different blocks for a slot it leads.
#[derive(Clone, Debug)]
pub struct Equivocator {
    pub full_endorsements: usize,
    pub max_equivocations: u64,
    member: Option<usize>,
    slots: Vec<u64>,
}

impl Equivocator {
    pub fn new(full_endorsements: usize) -> Equivocator {
        Equivocator { full_endorsements, max_equivocations: 1, member: None, slots: Vec::new() }
    }

    fn from_params(p: &Map<String, Value>) -> Result<Equivocator, SimError> {
        let mut e = Equivocator::new(param_u64(p, "full_endorsements", 3)? as usize);
        e.max_equivocations = param_u64(p, "max_equivocations", 1)?;
        Ok(e)
    }

    /// Slots at which it equivocated.
    pub fn slots(&self) -> &[u64] {
        &self.slots
    }
}

impl Adversary for Equivocator {
    fn behavior(&self) -> &'static str {
        "equivocator"
    }

    fn setup(&mut self, genesis: &mut GenesisAccess) -> Option<usize> {
        self.member = Some(genesis.add_validator(self.full_endorsements));
        self.member
    }

    fn on_slot(&mut self, ctx: &mut NodeCtx) -> SlotAction {
        if self.slots.len() as u64 >= self.max_equivocations || !ctx.leads(ctx.slot) {
            return SlotAction::Honest;
        }
        let member = ctx.member.expect("equivocator controls a member");
        let head = ctx.replica.head_state();
        let first = ctx.replica.candidates();
        let nonce = head.account(&member.id()).map_or(0, |a| a.nonce);
        let twist = TransferTx::sign(TransferBody { from: member.id(), to: member.id(), amount: 0, nonce }, &member.key);
        let mut second = BlockCandidates { transactions: vec![Transaction::Transfer(twist)], ..first.clone() };
        second.transactions.extend(first.transactions.iter().cloned());
        let built = |c: &BlockCandidates| head.build_block(ctx.slot, member.id(), &member.key, &member.randao_secret, c);
        let (a, b) = match (built(&first), built(&second)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return SlotAction::Honest,
        };
        if a.block.hash() == b.block.hash() {
            return SlotAction::Honest;
        }
        let (block_a, block_b) = (a.block.clone(), b.block.clone());
        ctx.note(format!("equivocate slot {} blocks {} {}", ctx.slot, block_a.hash(), block_b.hash()));
        ctx.replica.insert_own(a.block, a.state);
        ctx.broadcast(Message::Block(block_a));
        ctx.broadcast_after(ctx.slot_ms / 4, Message::Block(block_b));
        self.slots.push(ctx.slot);
        SlotAction::AttestOnly
    }

    fn outcome(&self, view: &OutcomeView) -> AttackOutcome {
        let Some(member) = view.member else {
            return AttackOutcome::new(self.behavior(), view.node, false).note("no validator was created");
        };
        let id = member.id();
        let Some(&slot) = self.slots.first() else {
            return AttackOutcome::new(self.behavior(), view.node, false).note("never led a slot");
        };
        let row = view.offenses.iter().find(|o| o.offender == id.to_string() && o.kind == OffenseKind::Equivocation);
        let epoch = view.params.epoch_of(slot);
        let before = share_of(view, epoch, &id);
        let mut out = AttackOutcome::new(self.behavior(), view.node, row.is_none())
            .metric("equivocation_slot", slot as f64)
            .metric("share_before", before);
        if let Some(row) = row {
            let after = share_of(view, row.epoch + 1, &id);
            out.succeeded = after >= before;
            out = out.metric("penalty_epoch", row.epoch as f64).metric("share_after", after);
            if let Some(d) = row.detected_slot {
                out = out.metric("detected_slot", d as f64).metric("detection_delay_slots", d.saturating_sub(slot) as f64);
            }
            if let Some(i) = row.included_slot {
                out = out.metric("included_slot", i as f64);
            }
        } else {
            out = out.note("equivocation was never punished");
        }
        out
    }
}

/// Floods each upcoming leader so its block arrives too late to count.
#[derive(Clone, Debug)]
pub struct LeaderDos {
    pub delay_ms: u64,
    pub from_slot: u64,
    pub slots: u64,
    targets: BTreeMap<u64, IdHash>,
}

impl LeaderDos {
    pub fn new(delay_ms: u64, from_slot: u64, slots: u64) -> LeaderDos {
        LeaderDos { delay_ms, from_slot, slots, targets: BTreeMap::new() }
    }

    fn from_params(p: &Map<String, Value>) -> Result<LeaderDos, SimError> {
        let from_slot = param_u64(p, "from_slot", 2)?;
        if from_slot < 2 {
            return Err(SimError::Config("from_slot must be at least 2".into()));
        }
        Ok(LeaderDos::new(param_u64(p, "delay_ms", 3000)?, from_slot, param_u64(p, "slots", 1)?))
    }
}

impl Adversary for LeaderDos {
    fn behavior(&self) -> &'static str {
        "leader_dos"
    }

    fn on_slot(&mut self, ctx: &mut NodeCtx) -> SlotAction {
        let target = ctx.slot + 1;
        if target < self.from_slot || target >= self.from_slot + self.slots {
            return SlotAction::Idle;
        }
        // The schedule for the next slot is public once the current epoch's
        // mix is known.
        let Ok(leader) = ctx.replica.head_state().leader_at(target) else { return SlotAction::Idle };
        if let Some(node) = ctx.locate(&leader) {
            let until = ctx.now + self.delay_ms;
            ctx.suppress(node, until);
            ctx.note(format!("flood n{node} leader of slot {target} until {until}"));
            self.targets.insert(target, leader);
        }
        SlotAction::Idle
    }

    fn outcome(&self, view: &OutcomeView) -> AttackOutcome {
        let missed: Vec<u64> =
            self.targets.keys().copied().filter(|s| view.slots.iter().any(|r| r.slot == *s && r.missed)).collect();
        let flagged = self.targets.iter().filter(|(s, l)| view.final_state.skipped_slots().get(s) == Some(*l)).count();
        let all = !self.targets.is_empty() && missed.len() == self.targets.len();
        AttackOutcome::new(self.behavior(), view.node, all)
            .metric("targeted_slots", self.targets.len() as f64)
            .metric("missed_slots", missed.len() as f64)
            .metric("flagged_missed", flagged as f64)
            .note(format!("missed {missed:?}"))
    }
}

/// Accumulates a large share of active capital and then behaves honestly,
/// to measure how much consensus power the capital buys.
#[derive(Clone, Debug)]
pub struct CapitalHoarder {
    pub target_share: f64,
    full_endorsements: usize,
}

impl CapitalHoarder {
    pub fn new(target_share: f64) -> CapitalHoarder {
        CapitalHoarder { target_share, full_endorsements: 0 }
    }

    fn from_params(p: &Map<String, Value>) -> Result<CapitalHoarder, SimError> {
        let t = param_f64(p, "target_share", 0.4)?;
        if !(0.0 < t && t < 1.0) {
            return Err(SimError::Config("target_share must lie in (0, 1)".into()));
        }
        Ok(CapitalHoarder::new(t))
    }
}

impl Adversary for CapitalHoarder {
    fn behavior(&self) -> &'static str {
        "capital_hoarder"
    }

    fn setup(&mut self, genesis: &mut GenesisAccess) -> Option<usize> {
        let honest: usize = genesis.honest_capital().iter().sum();
        let n = (self.target_share / (1.0 - self.target_share) * honest as f64).round() as usize;
        self.full_endorsements = n.max(2);
        Some(genesis.add_validator(self.full_endorsements))
    }

    fn on_slot(&mut self, _ctx: &mut NodeCtx) -> SlotAction {
        SlotAction::Honest
    }

    fn outcome(&self, view: &OutcomeView) -> AttackOutcome {
        let Some(member) = view.member else {
            return AttackOutcome::new(self.behavior(), view.node, false);
        };
        let id = member.id();
        let s = view.final_state;
        let active: Vec<(IdHash, u64)> = s
            .snapshot
            .entries
            .iter()
            .filter_map(|e| s.account(&e.id).map(|a| (e.id, a.active_received)))
            .collect();
        let total: u64 = active.iter().map(|(_, a)| a).sum();
        let mine = active.iter().find(|(i, _)| *i == id).map_or(0, |(_, a)| *a);
        let raw = if total == 0 { 0.0 } else { mine as f64 / total as f64 };
        let power = share_of(view, s.current_epoch(), &id);
        let led = view.slots.iter().filter(|r| r.leader_node == Some(view.node) && !r.missed).count();
        let filled = view.slots.iter().filter(|r| !r.missed).count().max(1);
        AttackOutcome::new(self.behavior(), view.node, power > 1.0 / 3.0)
            .metric("full_endorsements", self.full_endorsements as f64)
            .metric("raw_share", raw)
            .metric("power_share", power)
            .metric("block_share", led as f64 / filled as f64)
            .note(format!("{:.2}% of capital buys {:.2}% of power", 100.0 * raw, 100.0 * power))
    }
}

/// Tokens each genesis validator starts with, enough for many sponsorship fees.
pub(crate) const VALIDATOR_TOKENS: u64 = 100 * MICROS_PER_TOKEN;
