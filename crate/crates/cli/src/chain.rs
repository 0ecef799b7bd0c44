use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use posc_core::capital::{EndorseBody, MetaTx, ReassignBody};
use posc_core::fixtures::{small_params, GenesisBuilder, IdentityFactory, Member};
use posc_core::ledger::{Attestation, Block, BlockCandidates, Chain, ChainFile, Transaction};
use posc_core::{ProtocolParams, MICROS_PER_TOKEN};
use serde::Serialize;

use crate::output::{emit, table};
use crate::{split_list, CliError, Ctx, Format, Profile};

const DEFAULT_CHAIN: &str = "chain.jsonl";
const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Subcommand)]
pub enum ChainCommand {
    /// Write a new chain file holding a genesis block.
    Init(InitArgs),
    /// Append empty blocks, each signed by the elected leader.
    Append(AppendArgs),
    /// Replay the file and check every block and state root.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct InitArgs {
    /// Chain file; defaults to chain.jsonl in the data directory.
    pub path: Option<PathBuf>,
    /// Full endorsements of each genesis validator.
    #[arg(long, default_value = "3,3,3")]
    pub validators: String,
    /// Extra registered members with unspent budgets.
    #[arg(long, default_value_t = 2)]
    pub members: usize,
    /// Tokens held by each validator and member.
    #[arg(long, default_value_t = 10)]
    pub tokens: u64,
    #[arg(long, value_enum, default_value_t = Profile::Small)]
    pub profile: Profile,
}

#[derive(Debug, Args)]
pub struct AppendArgs {
    pub path: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub blocks: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub path: Option<PathBuf>,
    /// Truncate the file to its longest valid prefix instead of failing.
    #[arg(long)]
    pub recover: bool,
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    pub path: Option<PathBuf>,
    /// Index of the person registering.
    #[arg(long)]
    pub person: u64,
}

#[derive(Debug, Args)]
pub struct EndorseArgs {
    pub path: Option<PathBuf>,
    #[arg(long)]
    pub follower: u64,
    #[arg(long)]
    pub creator: u64,
    #[arg(long)]
    pub amount: u64,
}

#[derive(Debug, Args)]
pub struct ReassignArgs {
    pub path: Option<PathBuf>,
    #[arg(long)]
    pub follower: u64,
    #[arg(long)]
    pub from: u64,
    #[arg(long)]
    pub to: u64,
    #[arg(long)]
    pub amount: u64,
}

pub fn run(ctx: &Ctx, cmd: ChainCommand, out: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        ChainCommand::Init(a) => init(ctx, a, out),
        ChainCommand::Append(a) => {
            let mut local = LocalChain::open(ctx, &a.path)?;
            let mut blocks = Vec::new();
            for _ in 0..a.blocks {
                blocks.push(local.append(Vec::new())?);
            }
            print_blocks(ctx.format, &blocks, out)
        }
        ChainCommand::Verify(a) => verify(ctx, a, out),
    }
}

#[derive(Serialize)]
struct MemberRow {
    index: usize,
    role: &'static str,
    id: String,
    full_endorsements: usize,
}

fn init(ctx: &Ctx, a: InitArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let path = ctx.path_or_default(&a.path, DEFAULT_CHAIN)?;
    let params = match a.profile {
        Profile::Small => small_params(),
        Profile::Default => ProtocolParams::default(),
    };
    let mut capital = Vec::new();
    for v in split_list(&a.validators) {
        let n: usize = v.parse().map_err(|_| CliError::BadArgument(format!("bad validator capital {v:?}")))?;
        capital.push(n);
    }
    if capital.is_empty() {
        return Err(CliError::BadArgument("at least one validator is required".into()));
    }
    let tokens = a.tokens * MICROS_PER_TOKEN;
    let mut b = GenesisBuilder::new(ctx.seed_or(DEFAULT_SEED), params);
    let mut rows = Vec::new();
    for n in &capital {
        let v = b.add_validator(*n, tokens);
        rows.push(MemberRow { index: v, role: "validator", id: b.members()[v].id().to_string(), full_endorsements: *n });
    }
    for _ in 0..a.members {
        let m = b.add_member(tokens);
        rows.push(MemberRow { index: m, role: "member", id: b.members()[m].id().to_string(), full_endorsements: 0 });
    }
    let genesis = b.build();
    ChainFile::new(&path).create(&genesis)?;
    let table_rows: Vec<Vec<String>> =
        rows.iter().map(|r| vec![r.index.to_string(), r.role.into(), r.id.clone(), r.full_endorsements.to_string()]).collect();
    if ctx.format == Format::Human {
        writeln!(out, "created {} with genesis {}", path.display(), genesis.hash())?;
        writeln!(out, "endorsing followers occupy the indices between validators")?;
    }
    emit(out, ctx.format, &rows, &["index", "role", "id", "full_endorsements"], &table_rows)
}

#[derive(Serialize)]
struct VerifyReport {
    path: String,
    height: u64,
    slot: u64,
    head: String,
    state_digest: String,
    finalized_epoch: Option<u64>,
    dropped_lines: usize,
}

fn verify(ctx: &Ctx, a: VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let path = ctx.path_or_default(&a.path, DEFAULT_CHAIN)?;
    let file = ChainFile::new(&path);
    let (chain, dropped) = if a.recover {
        let r = file.recover()?;
        (r.chain, r.dropped_lines)
    } else {
        (file.load()?, 0)
    };
    let s = chain.state();
    let report = VerifyReport {
        path: path.display().to_string(),
        height: s.height,
        slot: s.slot,
        head: s.head.to_hex(),
        state_digest: s.digest().to_hex(),
        finalized_epoch: chain.finalized_checkpoint().map(|c| c.epoch),
        dropped_lines: dropped,
    };
    let row = vec![
        report.height.to_string(),
        report.slot.to_string(),
        report.head.clone(),
        report.finalized_epoch.map_or("-".into(), |e| e.to_string()),
        report.dropped_lines.to_string(),
    ];
    emit(out, ctx.format, &report, &["height", "slot", "head", "finalized_epoch", "dropped_lines"], &[row])
}

/// A chain file whose genesis members can all be re-derived from the seed,
/// so any of them can sign.
struct LocalChain {
    file: ChainFile,
    chain: Chain,
    factory: IdentityFactory,
}

impl LocalChain {
    fn open(ctx: &Ctx, path: &Option<PathBuf>) -> Result<LocalChain, CliError> {
        let path = ctx.path_or_default(path, DEFAULT_CHAIN)?;
        let file = ChainFile::new(path);
        let chain = file.load()?;
        let seed = ctx.seed_or(DEFAULT_SEED);
        let factory = IdentityFactory::new(seed);
        if factory.oracle_key != chain.genesis().oracle_key {
            return Err(CliError::SeedMismatch(seed));
        }
        Ok(LocalChain { file, chain, factory })
    }

    fn member(&self, index: u64) -> Member {
        self.factory.member(index)
    }

    /// Genesis member with the given identity.
    fn genesis_member(&self, id: &posc_core::IdHash) -> Option<Member> {
        let pos = self.chain.genesis().accounts.iter().position(|a| a.proof.statement.id_hash == *id)?;
        Some(self.member(pos as u64))
    }

    fn next_slot(&self) -> u64 {
        self.chain.state().slot + 1
    }

    /// Builds the next block with `txs` and votes from every known
    /// validator, and appends it. Fails without writing if a transaction
    /// is rejected.
    fn append(&mut self, txs: Vec<Transaction>) -> Result<Block, CliError> {
        let state = self.chain.state();
        let slot = self.next_slot();
        let leader = state.leader_at(slot)?;
        let proposer = self.genesis_member(&leader).ok_or_else(|| CliError::UnknownKey(leader.to_string()))?;
        let view = state.advanced_to(slot)?;
        let epoch = view.snapshot.epoch;
        // Votes already counted are dropped by the block builder.
        let mut attestations = Vec::new();
        if let Some(cp) = view.finality.get(epoch).filter(|cp| !cp.finalized) {
            for (id, _) in view.snapshot.weights_at(view.snapshot.start_slot) {
                if let Some(m) = self.genesis_member(&id) {
                    attestations.push(Attestation::sign(id, epoch, cp.block_root, &m.key));
                }
            }
        }
        let candidates = BlockCandidates { transactions: txs, attestations, slashings: Vec::new() };
        let built = state.build_block(slot, leader, &proposer.key, &proposer.randao_secret, &candidates)?;
        if let Some((_, e)) = built.rejected.into_iter().next() {
            return Err(e.into());
        }
        self.chain.append(built.block.clone())?;
        self.file.append(&built.block)?;
        Ok(built.block)
    }

    fn nonce(&self, m: &Member) -> u64 {
        self.chain.state().account(&m.id()).map_or(0, |a| a.nonce)
    }

    fn epoch(&self) -> u64 {
        self.chain.state().params.epoch_of(self.next_slot())
    }
}

#[derive(Serialize)]
struct BlockRow {
    slot: u64,
    hash: String,
    proposer: String,
    transactions: usize,
    attestations: usize,
}

fn print_blocks(format: Format, blocks: &[Block], out: &mut dyn Write) -> Result<(), CliError> {
    let rows: Vec<BlockRow> = blocks
        .iter()
        .map(|b| BlockRow {
            slot: b.slot(),
            hash: b.hash().to_hex(),
            proposer: b.header.header.proposer.to_string(),
            transactions: b.body.transactions.len(),
            attestations: b.body.attestations.len(),
        })
        .collect();
    let table_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.slot.to_string(), r.hash.clone(), r.proposer.clone(), r.transactions.to_string(), r.attestations.to_string()])
        .collect();
    emit(out, format, &rows, &["slot", "hash", "proposer", "txs", "attestations"], &table_rows)
}

pub fn register(ctx: &Ctx, a: RegisterArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut local = LocalChain::open(ctx, &a.path)?;
    let m = local.member(a.person);
    let block = local.append(vec![Transaction::Register(m.register_tx())])?;
    if ctx.format == Format::Human {
        table(out, &["person", "id"], &[vec![a.person.to_string(), m.id().to_string()]])?;
    }
    print_blocks(ctx.format, &[block], out)
}

pub fn endorse(ctx: &Ctx, a: EndorseArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut local = LocalChain::open(ctx, &a.path)?;
    let (f, c) = (local.member(a.follower), local.member(a.creator));
    let body = EndorseBody { follower: f.id(), creator: c.id(), amount: a.amount, nonce: local.nonce(&f), submitted_epoch: local.epoch() };
    let fee = local.chain.state().params.endorsement_fee;
    let tx = Transaction::Endorse(MetaTx::sign(body, &f.key, &c.key, fee));
    let block = local.append(vec![tx])?;
    print_blocks(ctx.format, &[block], out)
}

pub fn reassign(ctx: &Ctx, a: ReassignArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut local = LocalChain::open(ctx, &a.path)?;
    let (f, from, to) = (local.member(a.follower), local.member(a.from), local.member(a.to));
    let body = ReassignBody {
        follower: f.id(),
        from_creator: from.id(),
        to_creator: to.id(),
        amount: a.amount,
        nonce: local.nonce(&f),
        submitted_epoch: local.epoch(),
    };
    let fee = local.chain.state().params.endorsement_fee;
    let tx = Transaction::Reassign(MetaTx::sign(body, &f.key, &to.key, fee));
    let block = local.append(vec![tx])?;
    print_blocks(ctx.format, &[block], out)
}
