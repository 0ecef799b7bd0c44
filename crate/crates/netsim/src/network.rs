use std::collections::BTreeMap;

use posc_core::capital::{EndorseBody, SponsorRequest};
use posc_core::consensus::Evidence;
use posc_core::ledger::{Attestation, Block, Transaction};
use posc_core::Hash32;
use serde::{Deserialize, Serialize};

use crate::LatencyModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Block(Block),
    Tx(Transaction),
    Attestation(Attestation),
    Evidence(Evidence),
    /// Request for a block the sender is missing.
    GetBlock(Hash32),
    /// A follower asking a creator to sponsor its endorsement.
    SponsorRequest(SponsorRequest<EndorseBody>),
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Block(_) => "block",
            Message::Tx(_) => "tx",
            Message::Attestation(_) => "attestation",
            Message::Evidence(_) => "evidence",
            Message::GetBlock(_) => "get_block",
            Message::SponsorRequest(_) => "sponsor_request",
        }
    }
}

/// Link latencies and DoS suppression windows.
///
/// The latency of the k-th message on a link is a hash of (seed, from, to,
/// k), so traffic on one link never shifts the delays seen on another.
#[derive(Clone, Debug)]
pub struct Network {
    seed: u64,
    latency: LatencyModel,
    link_counters: BTreeMap<(usize, usize), u64>,
    suppressed_until: BTreeMap<usize, u64>,
}

impl Network {
    pub fn new(seed: u64, latency: LatencyModel) -> Network {
        Network { seed, latency, link_counters: BTreeMap::new(), suppressed_until: BTreeMap::new() }
    }

    fn link_latency(&mut self, from: usize, to: usize) -> u64 {
        let counter = self.link_counters.entry((from, to)).or_default();
        let h = Hash32::digest_parts(&[
            b"posc/latency",
            &self.seed.to_be_bytes(),
            &(from as u64).to_be_bytes(),
            &(to as u64).to_be_bytes(),
            &counter.to_be_bytes(),
        ]);
        *counter += 1;
        let x = u64::from_be_bytes(h.as_bytes()[..8].try_into().expect("8 bytes"));
        let span = self.latency.max_ms - self.latency.min_ms + 1;
        self.latency.min_ms + x % span
    }

    /// Arrival time of a message sent at `now`. Traffic to or from a
    /// suppressed node is held until its window closes.
    pub fn delivery_time(&mut self, now: u64, from: usize, to: usize) -> u64 {
        let hold = [from, to].iter().filter_map(|n| self.suppressed_until.get(n)).copied().max().unwrap_or(0);
        now.max(hold) + self.link_latency(from, to)
    }

    /// Holds all traffic of `node` until `until`.
    pub fn suppress(&mut self, node: usize, until: u64) {
        let e = self.suppressed_until.entry(node).or_default();
        *e = (*e).max(until);
    }

    pub fn suppressed_until(&self, node: usize) -> Option<u64> {
        self.suppressed_until.get(&node).copied()
    }
}
