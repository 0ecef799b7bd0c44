use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::capital::meets_participation_threshold;
use crate::identity::IdHash;
use crate::params::ProtocolParams;

use super::ConsensusError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ValidatorStatus {
    Pending { activation_slot: u64 },
    Active,
    /// Dropped below the participation threshold; may join again.
    Exited,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidatorEntry {
    pub status: ValidatorStatus,
    /// Effective social capital as of the last epoch boundary.
    pub weight: f64,
    /// Reveals consumed so far; the next reveal has this index.
    pub reveals: u64,
}

impl ValidatorEntry {
    pub fn is_active_at(&self, slot: u64) -> bool {
        match self.status {
            ValidatorStatus::Active => true,
            ValidatorStatus::Pending { activation_slot } => slot >= activation_slot,
            ValidatorStatus::Exited => false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidatorSet {
    entries: BTreeMap<IdHash, ValidatorEntry>,
}

impl ValidatorSet {
    pub fn new() -> ValidatorSet {
        ValidatorSet::default()
    }

    pub fn get(&self, id: &IdHash) -> Option<&ValidatorEntry> {
        self.entries.get(id)
    }

    pub fn get_mut(&mut self, id: &IdHash) -> Option<&mut ValidatorEntry> {
        self.entries.get_mut(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&IdHash, &ValidatorEntry)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Whether `id` is a current member (pending or active).
    pub fn is_member(&self, id: &IdHash) -> bool {
        self.entries.get(id).is_some_and(|e| e.status != ValidatorStatus::Exited)
    }

    pub fn check_join(&self, id: &IdHash, active_capital: u64, params: &ProtocolParams) -> Result<(), ConsensusError> {
        if self.is_member(id) {
            return Err(ConsensusError::AlreadyMember(*id));
        }
        if !meets_participation_threshold(active_capital, params) {
            return Err(ConsensusError::BelowThreshold { active: active_capital, threshold: params.participation_threshold() });
        }
        Ok(())
    }

    /// Adds a pending entry that activates `activation_delay_slots` after
    /// `current_slot`.
    pub fn join(
        &mut self,
        id: IdHash,
        active_capital: u64,
        weight: f64,
        current_slot: u64,
        params: &ProtocolParams,
    ) -> Result<(), ConsensusError> {
        self.check_join(&id, active_capital, params)?;
        let reveals = self.entries.get(&id).map_or(0, |e| e.reveals);
        let status = ValidatorStatus::Pending { activation_slot: current_slot + params.activation_delay_slots };
        self.entries.insert(id, ValidatorEntry { status, weight, reveals });
        Ok(())
    }

    /// Genesis members skip the activation delay.
    pub fn insert_active(&mut self, id: IdHash, weight: f64) {
        self.entries.insert(id, ValidatorEntry { status: ValidatorStatus::Active, weight, reveals: 0 });
    }

    /// Promotes every pending entry whose activation slot has been reached.
    pub fn activate_due(&mut self, slot: u64) -> Vec<IdHash> {
        let mut activated = Vec::new();
        for (id, e) in self.entries.iter_mut() {
            if matches!(e.status, ValidatorStatus::Pending { activation_slot } if activation_slot <= slot) {
                e.status = ValidatorStatus::Active;
                activated.push(*id);
            }
        }
        activated
    }

    pub fn exit(&mut self, id: &IdHash) {
        if let Some(e) = self.entries.get_mut(id) {
            e.status = ValidatorStatus::Exited;
        }
    }

    /// Members eligible at `slot` with their weights, in key order.
    pub fn active_weights(&self, slot: u64) -> Vec<(IdHash, f64)> {
        self.entries.iter().filter(|(_, e)| e.is_active_at(slot)).map(|(id, e)| (*id, e.weight)).collect()
    }
}
