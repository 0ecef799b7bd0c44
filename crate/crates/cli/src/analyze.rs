use std::io::Write;
use std::path::PathBuf;

use clap::{Subcommand, ValueEnum};
use posc_analysis::{
    calibrate_alpha, gini_summary, power_table, read_distribution, rescale_to_100, threshold_benchmark, GiniSummary,
    PowerTable, TABLE_1A_SHARES, TABLE_1B_SHARES, TABLE_TOTAL_UNITS,
};
use serde::Serialize;

use crate::output::{emit, json, pct};
use crate::{split_list, CliError, Ctx, Format};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Which {
    A,
    B,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Consensus power of five validators under each scaling function.
    Table1 {
        #[arg(long, value_enum, default_value_t = Which::Both)]
        which: Which,
        #[arg(long, default_value = "sqrt,cbrt,log2")]
        functions: String,
        /// Total active capital the shares are taken of.
        #[arg(long, default_value_t = TABLE_TOTAL_UNITS)]
        total: f64,
    },
    /// Gini coefficient of a distribution before and after scaling.
    Gini {
        /// CSV with one count per line.
        #[arg(required_unless_present = "synthetic", conflicts_with = "synthetic")]
        csv: Option<PathBuf>,
        /// Use a power-law sample calibrated to this raw Gini instead.
        #[arg(long)]
        synthetic: Option<f64>,
        /// Size of the synthetic sample.
        #[arg(long, default_value_t = 2250)]
        n: usize,
        #[arg(long, default_value = "sqrt,cbrt,log2")]
        functions: String,
    },
    /// Time the participation-threshold check over n validators.
    Bench {
        n: usize,
        threads: usize,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value = "sqrt")]
        function: String,
    },
}

pub fn run(ctx: &Ctx, cmd: AnalyzeCommand, out: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        AnalyzeCommand::Table1 { which, functions, total } => table1(ctx, which, &split_list(&functions), total, out),
        AnalyzeCommand::Gini { csv, synthetic, n, functions } => {
            let d = match (csv, synthetic) {
                (Some(path), _) => read_distribution(path.display().to_string(), std::fs::File::open(&path)?)?,
                (None, Some(target)) => calibrate_alpha(n, ctx.seed_or(0), target, 0.02)?.distribution,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let names = split_list(&functions);
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            gini(ctx, &gini_summary(&d, &refs)?, out)
        }
        AnalyzeCommand::Bench { n, threads, repeats, function } => {
            if n == 0 || threads == 0 || repeats == 0 {
                return Err(CliError::BadArgument("n, threads and repeats must be positive".into()));
            }
            let r = threshold_benchmark(n, threads, repeats, &function, ctx.seed_or(0))?;
            let rows = vec![
                vec!["serial".into(), "1".into(), format!("{:.6}", r.serial.median_s), format!("{:.2}", r.serial.ns_per_element)],
                vec![
                    "parallel".into(),
                    r.threads.to_string(),
                    format!("{:.6}", r.parallel.median_s),
                    format!("{:.2}", r.parallel.ns_per_element),
                ],
            ];
            if ctx.format == Format::Human {
                writeln!(out, "n {}  function {}  cores {}  eligible {}", r.n, r.function, r.available_parallelism, r.eligible)?;
            }
            emit(out, ctx.format, &r, &["mode", "threads", "median_s", "ns_per_element"], &rows)?;
            if ctx.format == Format::Human {
                writeln!(out, "speedup {:.2}x", r.speedup)?;
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct Table1 {
    name: &'static str,
    table: PowerTable,
}

fn table1(ctx: &Ctx, which: Which, functions: &[String], total: f64, out: &mut dyn Write) -> Result<(), CliError> {
    let refs: Vec<&str> = functions.iter().map(String::as_str).collect();
    let mut tables = Vec::new();
    if which != Which::B {
        tables.push(Table1 { name: "a", table: power_table(&TABLE_1A_SHARES, &refs, total)? });
    }
    if which != Which::A {
        tables.push(Table1 { name: "b", table: power_table(&rescale_to_100(&TABLE_1B_SHARES), &refs, total)? });
    }
    match ctx.format {
        Format::Json => json(out, &tables),
        Format::Csv => {
            let rows: Vec<Vec<String>> = tables
                .iter()
                .flat_map(|t| {
                    t.table.rows.iter().map(move |r| {
                        let mut row = vec![t.name.to_string(), r.label.clone()];
                        row.extend(r.percents.iter().map(|p| format!("{p:.4}")));
                        row.push(r.flagged.iter().any(|f| *f).to_string());
                        row
                    })
                })
                .collect();
            crate::output::csv(out, &["table", "row", "v1", "v2", "v3", "v4", "v5", "over_one_third"], &rows)
        }
        Format::Human => {
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    writeln!(out)?;
                }
                let shares: Vec<String> = t.table.shares.iter().map(|s| pct(*s)).collect();
                writeln!(out, "table1({}): shares {} of {} units; * marks power above one third", t.name, shares.join(" "), total)?;
                let rows: Vec<Vec<String>> = t
                    .table
                    .rows
                    .iter()
                    .map(|r| {
                        let mut row = vec![r.label.clone()];
                        row.extend(r.percents.iter().zip(&r.flagged).map(|(p, f)| format!("{}{}", pct(*p), if *f { "*" } else { "" })));
                        row
                    })
                    .collect();
                crate::output::table(out, &["", "v1", "v2", "v3", "v4", "v5"], &rows)?;
                for n in t.table.notes() {
                    writeln!(out, "note: {n}")?;
                }
            }
            Ok(())
        }
    }
}

fn gini(ctx: &Ctx, s: &GiniSummary, out: &mut dyn Write) -> Result<(), CliError> {
    let mut rows = vec![vec!["raw".to_string(), format!("{:.4}", s.raw), "-".to_string()]];
    rows.extend(s.scaled.iter().map(|g| vec![g.function.clone(), format!("{:.4}", g.gini), format!("{:.1}", 100.0 * g.reduction)]));
    if ctx.format == Format::Human {
        writeln!(out, "{} ({} values)", s.label, s.n)?;
    }
    emit(out, ctx.format, s, &["scaling", "gini", "reduction %"], &rows)
}
