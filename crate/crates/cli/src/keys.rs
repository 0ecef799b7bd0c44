use std::io::Write;

use clap::Subcommand;
use posc_core::Keypair;
use serde::Serialize;

use crate::output::{emit, json};
use crate::{CliError, Ctx};

#[derive(Debug, Subcommand)]
pub enum KeysCommand {
    /// Derive platform keypairs from the seed.
    Generate {
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, default_value = "platform")]
        label: String,
        /// Also store each key under keys/ in the data directory.
        #[arg(long)]
        save: bool,
    },
}

#[derive(Serialize)]
struct KeyRecord {
    label: String,
    index: u64,
    public_key: String,
    secret_key: String,
}

pub fn run(ctx: &Ctx, cmd: KeysCommand, out: &mut dyn Write) -> Result<(), CliError> {
    let KeysCommand::Generate { count, label, save } = cmd;
    let base = ctx.seed_or(0);
    let records: Vec<KeyRecord> = (0..count)
        .map(|i| {
            let k = Keypair::derive(&label, base.wrapping_add(i));
            KeyRecord {
                label: label.clone(),
                index: base.wrapping_add(i),
                public_key: hex(&k.public().to_bytes()),
                secret_key: hex(&k.secret_bytes()),
            }
        })
        .collect();
    if save {
        let dir = ctx.data_dir()?.join("keys");
        std::fs::create_dir_all(&dir)?;
        for r in &records {
            let mut f = std::fs::File::create(dir.join(format!("{}-{}.json", r.label, r.index)))?;
            json(&mut f, r)?;
        }
    }
    let rows: Vec<Vec<String>> = records.iter().map(|r| vec![r.index.to_string(), r.public_key.clone(), r.secret_key.clone()]).collect();
    emit(out, ctx.format, &records, &["index", "public_key", "secret_key"], &rows)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
