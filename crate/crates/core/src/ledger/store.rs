use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::consensus::Checkpoint;
use crate::crypto::{canonical_json, Hash32};

use super::{Block, ChainState, GenesisConfig, LedgerError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StoreError {
    #[error("io: {0}")]
    Io(String),
    #[error("chain file has no genesis line")]
    MissingGenesis,
    #[error("line {line} is not a valid record")]
    CorruptLine { line: usize },
    #[error("state root mismatch at slot {slot}")]
    RootMismatch { slot: u64 },
    #[error("line {line}: {error}")]
    InvalidBlock { line: usize, error: LedgerError },
    #[error("genesis: {0}")]
    Genesis(LedgerError),
    #[error("chain file {0} already exists")]
    Exists(String),
}

impl From<std::io::Error> for StoreError {
    fn from(e: std::io::Error) -> Self {
        StoreError::Io(e.to_string())
    }
}

impl StoreError {
    pub fn name(&self) -> &'static str {
        match self {
            StoreError::Io(_) => "Io",
            StoreError::MissingGenesis => "MissingGenesis",
            StoreError::CorruptLine { .. } => "CorruptLine",
            StoreError::RootMismatch { .. } => "RootMismatch",
            StoreError::InvalidBlock { .. } => "InvalidBlock",
            StoreError::Genesis(_) => "Genesis",
            StoreError::Exists(_) => "Exists",
        }
    }
}

/// A validated chain: genesis, blocks in order, and the resulting state.
#[derive(Clone, Debug)]
pub struct Chain {
    genesis: GenesisConfig,
    blocks: Vec<Block>,
    index: BTreeMap<Hash32, usize>,
    state: ChainState,
}

impl Chain {
    pub fn new(genesis: GenesisConfig) -> Result<Chain, LedgerError> {
        let state = ChainState::genesis(&genesis)?;
        Ok(Chain { genesis, blocks: Vec::new(), index: BTreeMap::new(), state })
    }

    pub fn genesis(&self) -> &GenesisConfig {
        &self.genesis
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn head_hash(&self) -> Hash32 {
        self.state.head
    }

    pub fn block(&self, hash: &Hash32) -> Option<&Block> {
        self.index.get(hash).map(|i| &self.blocks[*i])
    }

    pub fn finalized_checkpoint(&self) -> Option<&Checkpoint> {
        self.state.finality.latest_finalized()
    }

    pub fn append(&mut self, block: Block) -> Result<(), LedgerError> {
        self.state = self.state.apply_block(&block)?;
        self.index.insert(block.hash(), self.blocks.len());
        self.blocks.push(block);
        Ok(())
    }
}

/// One record per line in canonical JSON.
pub fn encode_line<T: Serialize>(value: &T) -> String {
    String::from_utf8(canonical_json(value)).expect("json is utf-8")
}

/// Chain loaded as far as it validates.
#[derive(Debug)]
pub struct Recovered {
    pub chain: Chain,
    /// Why loading stopped early, if it did.
    pub error: Option<StoreError>,
    /// Non-empty lines after the last good block.
    pub dropped_lines: usize,
}

/// Append-only JSON-lines chain file: line 1 holds the genesis config, each
/// further line one block.
#[derive(Clone, Debug)]
pub struct ChainFile {
    path: PathBuf,
}

impl ChainFile {
    pub fn new(path: impl AsRef<Path>) -> ChainFile {
        ChainFile { path: path.as_ref().to_path_buf() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Starts a new chain file; refuses to overwrite an existing one.
    pub fn create(&self, genesis: &GenesisConfig) -> Result<(), StoreError> {
        ChainState::genesis(genesis).map_err(StoreError::Genesis)?;
        let mut f = OpenOptions::new().write(true).create_new(true).open(&self.path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                StoreError::Exists(self.path.display().to_string())
            } else {
                e.into()
            }
        })?;
        writeln!(f, "{}", encode_line(genesis))?;
        Ok(())
    }

    pub fn append(&self, block: &Block) -> Result<(), StoreError> {
        let mut f = OpenOptions::new().append(true).open(&self.path)?;
        writeln!(f, "{}", encode_line(block))?;
        Ok(())
    }

    /// Writes a whole chain, replacing the file.
    pub fn save(&self, chain: &Chain) -> Result<(), StoreError> {
        let mut out = encode_line(chain.genesis());
        out.push('\n');
        for b in chain.blocks() {
            out.push_str(&encode_line(b));
            out.push('\n');
        }
        fs::write(&self.path, out)?;
        Ok(())
    }

    /// Loads and replays every block, failing on the first bad line.
    pub fn load(&self) -> Result<Chain, StoreError> {
        let r = self.load_recovering()?;
        match r.error {
            Some(e) => Err(e),
            None => Ok(r.chain),
        }
    }

    /// Loads the longest valid prefix. Errors only when the genesis line
    /// itself is unusable.
    pub fn load_recovering(&self) -> Result<Recovered, StoreError> {
        let text = fs::read_to_string(&self.path)?;
        let mut lines = text.split('\n').enumerate().filter(|(_, l)| !l.is_empty());
        let (_, first) = lines.next().ok_or(StoreError::MissingGenesis)?;
        let genesis: GenesisConfig = serde_json::from_str(first).map_err(|_| StoreError::CorruptLine { line: 1 })?;
        let mut chain = Chain::new(genesis).map_err(StoreError::Genesis)?;
        let rest: Vec<(usize, &str)> = lines.collect();
        for (pos, (i, line)) in rest.iter().enumerate() {
            let line_no = i + 1;
            let failure = match serde_json::from_str::<Block>(line) {
                Err(_) => Some(StoreError::CorruptLine { line: line_no }),
                Ok(block) => {
                    let slot = block.slot();
                    match chain.append(block) {
                        Ok(()) => None,
                        Err(LedgerError::StateRootMismatch { .. }) => Some(StoreError::RootMismatch { slot }),
                        Err(error) => Some(StoreError::InvalidBlock { line: line_no, error }),
                    }
                }
            };
            if let Some(e) = failure {
                return Ok(Recovered { chain, error: Some(e), dropped_lines: rest.len() - pos });
            }
        }
        Ok(Recovered { chain, error: None, dropped_lines: 0 })
    }

    /// Truncates the file to its longest valid prefix.
    pub fn recover(&self) -> Result<Recovered, StoreError> {
        let r = self.load_recovering()?;
        if r.error.is_some() {
            self.save(&r.chain)?;
        }
        Ok(r)
    }
}
