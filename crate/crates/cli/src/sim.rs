use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use posc_netsim::{AdversarySpec, FollowerSpec, SimConfig, SimReport};
use serde_json::json;

use crate::output::{json, table};
use crate::{CliError, Ctx, Format};

const SCENARIOS: [(&str, &str); 5] = [
    ("honest", "four honest validators and six sponsored followers"),
    ("sybil", "one person tries to register 99 identities"),
    ("equivocation", "a validator signs two blocks for one slot"),
    ("leader-dos", "an attacker floods two upcoming leaders"),
    ("hoarder", "a validator holds 40% of active capital"),
];

/// A built-in configuration by name.
pub fn scenario(name: &str, seed: u64) -> Result<SimConfig, CliError> {
    let base = SimConfig::honest(seed, &[5, 4, 3, 3], 48);
    let adv = |behavior: &str, params| base.clone().with_adversary(AdversarySpec::new(behavior, params));
    Ok(match name {
        "honest" => SimConfig { followers: FollowerSpec { count: 6, amount: 40, start_slot: 3 }, ..base },
        "sybil" => adv("sybil_registrar", json!({"n_attempts": 99})),
        "equivocation" => adv("equivocator", json!({"full_endorsements": 4})),
        "leader-dos" => adv("leader_dos", json!({"delay_ms": 3000, "from_slot": 10, "slots": 2})),
        "hoarder" => SimConfig::honest(seed, &[25, 15, 12, 8], 24)
            .with_adversary(AdversarySpec::new("capital_hoarder", json!({"target_share": 0.4}))),
        other => return Err(CliError::UnknownScenario(other.to_string())),
    })
}

#[derive(Debug, Subcommand)]
pub enum SimCommand {
    /// Run a simulation from a config file or a named scenario.
    Run(RunArgs),
    /// List the built-in scenarios.
    Scenarios,
    /// Print the config of a built-in scenario.
    Scenario { name: String },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Simulation config (JSON).
    #[arg(required_unless_present = "scenario", conflicts_with = "scenario")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub scenario: Option<String>,
    /// Overrides the number of slots.
    #[arg(long)]
    pub slots: Option<u64>,
    /// Also write the per-slot table here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Also write the event log here.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

pub fn run(ctx: &Ctx, cmd: SimCommand, out: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        SimCommand::Scenarios => {
            let rows: Vec<Vec<String>> = SCENARIOS.iter().map(|(n, d)| vec![n.to_string(), d.to_string()]).collect();
            crate::output::emit(out, ctx.format, &SCENARIOS.iter().map(|(n, _)| *n).collect::<Vec<_>>(), &["name", "description"], &rows)
        }
        SimCommand::Scenario { name } => json(out, &scenario(&name, ctx.seed_or(1))?),
        SimCommand::Run(a) => run_sim(ctx, a, out),
    }
}

fn run_sim(ctx: &Ctx, a: RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut config = match (&a.config, &a.scenario) {
        (Some(path), _) => SimConfig::from_json(&std::fs::read_to_string(path)?)?,
        (None, Some(name)) => scenario(name, 1)?,
        (None, None) => unreachable!("clap requires one of them"),
    };
    if let Some(seed) = ctx.seed {
        config.seed = seed;
    }
    if let Some(slots) = a.slots {
        config.slots_to_run = slots;
    }
    let output = posc_netsim::run(&config)?;
    let report = &output.report;
    if let Some(path) = &a.csv {
        report.write_slots_csv(std::fs::File::create(path)?)?;
    }
    if let Some(path) = &a.log {
        std::fs::write(path, output.log.join("\n") + "\n")?;
    }
    match ctx.format {
        Format::Json => json(out, report),
        Format::Csv => Ok(report.write_slots_csv(out)?),
        Format::Human => human(report, out),
    }
}

fn human(r: &SimReport, out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(out, "config {}  seed {}  nodes {}  slots {}", &r.config_hash[..16], r.seed, r.nodes, r.slots_run)?;
    writeln!(out, "height {}  heads agree {}  supply conserved {}", r.height, r.heads_agree, r.supply_conserved)?;
    writeln!(out, "missed slots {:?}", r.missed_slots)?;
    writeln!(out, "finalized epochs {:?}", r.finalized_epochs)?;
    writeln!(out, "transactions included {}  rejected {:?}", r.txs_included, r.txs_rejected)?;
    writeln!(out)?;
    let rows: Vec<Vec<String>> = r
        .final_power
        .iter()
        .map(|p| {
            vec![
                p.node.map_or("-".into(), |n| n.to_string()),
                p.id[..16].to_string(),
                p.active_units.to_string(),
                format!("{:.4}", p.weight),
                format!("{:.2}", 100.0 * p.share),
            ]
        })
        .collect();
    table(out, &["node", "validator", "active", "weight", "power %"], &rows)?;
    if !r.offenses.is_empty() {
        writeln!(out)?;
        let rows: Vec<Vec<String>> = r
            .offenses
            .iter()
            .map(|o| {
                let opt = |x: Option<u64>| x.map_or("-".into(), |v| v.to_string());
                vec![
                    o.offender_node.map_or("-".into(), |n| n.to_string()),
                    format!("{:?}", o.kind),
                    format!("{:?}", o.severity),
                    o.epoch.to_string(),
                    opt(o.detected_slot),
                    opt(o.included_slot),
                ]
            })
            .collect();
        table(out, &["node", "offense", "severity", "epoch", "detected", "included"], &rows)?;
    }
    for a in &r.attacks {
        writeln!(out)?;
        writeln!(out, "attack {} (node {}): {}", a.behavior, a.node, if a.succeeded { "succeeded" } else { "failed" })?;
        for (k, v) in &a.metrics {
            writeln!(out, "  {k} = {v}")?;
        }
        for n in &a.notes {
            writeln!(out, "  {n}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_scenario_is_valid() {
        for (name, _) in SCENARIOS {
            scenario(name, 1).unwrap().validate().unwrap();
        }
        assert!(matches!(scenario("nope", 1), Err(CliError::UnknownScenario(_))));
    }
}
