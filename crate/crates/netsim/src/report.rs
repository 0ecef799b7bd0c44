use std::collections::BTreeMap;
use std::io::Write;

use posc_core::capital::Severity;
use posc_core::consensus::OffenseKind;
use serde::{Deserialize, Serialize};

use crate::{AttackOutcome, SimError};

/// One slot of the canonical chain as seen by the reference node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotRow {
    pub slot: u64,
    pub epoch: u64,
    pub leader: Option<String>,
    pub leader_node: Option<usize>,
    pub block: Option<String>,
    pub txs: usize,
    pub attestations: usize,
    pub slashings: usize,
    pub missed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffenseRow {
    pub offender: String,
    pub offender_node: Option<usize>,
    pub kind: OffenseKind,
    pub severity: Severity,
    /// Epoch in which the penalty was applied.
    pub epoch: u64,
    pub evidence: String,
    /// Slot of the block that carried the evidence; none for penalties the
    /// chain applies on its own.
    pub included_slot: Option<u64>,
    /// First slot in which an honest node held checked evidence.
    pub detected_slot: Option<u64>,
    pub detected_by: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerEntry {
    pub id: String,
    pub node: Option<usize>,
    pub active_units: u64,
    pub weight: f64,
    pub share: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config_hash: String,
    pub seed: u64,
    pub slots_run: u64,
    pub nodes: usize,
    pub head: String,
    pub height: u64,
    /// Whether every honest validator ended on the same head.
    pub heads_agree: bool,
    pub missed_slots: Vec<u64>,
    pub justified_epochs: Vec<u64>,
    pub finalized_epochs: Vec<u64>,
    /// Token supply equals genesis supply plus rewards minus fees.
    pub supply_conserved: bool,
    pub txs_included: usize,
    pub txs_rejected: BTreeMap<String, usize>,
    pub slots: Vec<SlotRow>,
    pub offenses: Vec<OffenseRow>,
    pub final_power: Vec<PowerEntry>,
    pub attacks: Vec<AttackOutcome>,
    pub log_digest: String,
}

impl SimReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn slot(&self, slot: u64) -> Option<&SlotRow> {
        self.slots.iter().find(|r| r.slot == slot)
    }

    pub fn attack(&self, behavior: &str) -> Option<&AttackOutcome> {
        self.attacks.iter().find(|a| a.behavior == behavior)
    }

    /// Writes the per-slot rows as CSV.
    pub fn write_slots_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.slots {
            w.serialize(r)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}
