use std::collections::{BTreeMap, BTreeSet};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::account::Account;
use crate::crypto::{canonical_json, hash_canonical, Hash32, Keypair, Signature};
use crate::identity::{GlobalStateTrie, IdHash};
use crate::params::ProtocolParams;

use super::CapitalError;

/// Anything that stores accounts by identity.
pub trait AccountStore {
    fn account(&self, id: &IdHash) -> Option<&Account>;

    fn modify(&mut self, id: &IdHash, f: impl FnOnce(&mut Account)) -> Result<(), CapitalError>;

    fn require(&self, id: &IdHash) -> Result<&Account, CapitalError> {
        self.account(id).ok_or(CapitalError::UnknownAccount(*id))
    }
}

impl AccountStore for GlobalStateTrie<Account> {
    fn account(&self, id: &IdHash) -> Option<&Account> {
        self.get(id)
    }

    fn modify(&mut self, id: &IdHash, f: impl FnOnce(&mut Account)) -> Result<(), CapitalError> {
        self.update(id, f).map_err(|_| CapitalError::UnknownAccount(*id))
    }
}

impl AccountStore for BTreeMap<IdHash, Account> {
    fn account(&self, id: &IdHash) -> Option<&Account> {
        self.get(id)
    }

    fn modify(&mut self, id: &IdHash, f: impl FnOnce(&mut Account)) -> Result<(), CapitalError> {
        f(self.get_mut(id).ok_or(CapitalError::UnknownAccount(*id))?);
        Ok(())
    }
}

/// Body of a sponsored meta-transaction: signed by `signer`, paid for by
/// `sponsor`.
pub trait MetaBody: Serialize + DeserializeOwned {
    const DOMAIN: &'static str;
    fn signer(&self) -> IdHash;
    fn sponsor(&self) -> IdHash;
    fn nonce(&self) -> u64;
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndorseBody {
    pub follower: IdHash,
    pub creator: IdHash,
    pub amount: u64,
    pub nonce: u64,
    pub submitted_epoch: u64,
}

impl MetaBody for EndorseBody {
    const DOMAIN: &'static str = "posc/endorse/v1";
    fn signer(&self) -> IdHash {
        self.follower
    }
    fn sponsor(&self) -> IdHash {
        self.creator
    }
    fn nonce(&self) -> u64 {
        self.nonce
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReassignBody {
    pub follower: IdHash,
    pub from_creator: IdHash,
    pub to_creator: IdHash,
    pub amount: u64,
    pub nonce: u64,
    pub submitted_epoch: u64,
}

impl MetaBody for ReassignBody {
    const DOMAIN: &'static str = "posc/reassign/v1";
    fn signer(&self) -> IdHash {
        self.follower
    }
    fn sponsor(&self) -> IdHash {
        self.to_creator
    }
    fn nonce(&self) -> u64 {
        self.nonce
    }
}

/// A follower-signed action whose fee is paid by the sponsoring creator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "B: MetaBody")]
pub struct MetaTx<B: MetaBody> {
    pub body: B,
    pub follower_signature: Signature,
    pub sponsor: IdHash,
    pub fee: u64,
    pub sponsor_signature: Signature,
}

/// The follower's half of a meta-transaction, sent to the sponsor for
/// countersigning.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "B: MetaBody")]
pub struct SponsorRequest<B: MetaBody> {
    pub body: B,
    pub follower_signature: Signature,
}

pub type Endorsement = MetaTx<EndorseBody>;
pub type Reassignment = MetaTx<ReassignBody>;

#[derive(Serialize)]
struct SponsorPayload {
    body_hash: Hash32,
    sponsor: IdHash,
    fee: u64,
}

impl<B: MetaBody> MetaTx<B> {
    pub fn follower_payload(body: &B) -> Vec<u8> {
        let mut out = B::DOMAIN.as_bytes().to_vec();
        out.extend_from_slice(&canonical_json(body));
        out
    }

    pub fn sponsor_payload(body: &B, sponsor: &IdHash, fee: u64) -> Vec<u8> {
        let mut out = b"posc/sponsor/v1".to_vec();
        out.extend_from_slice(&canonical_json(&SponsorPayload {
            body_hash: hash_canonical(B::DOMAIN, body),
            sponsor: *sponsor,
            fee,
        }));
        out
    }

    /// Signs as follower, then as the sponsor named by the body.
    pub fn sign(body: B, follower_key: &Keypair, sponsor_key: &Keypair, fee: u64) -> MetaTx<B> {
        Self::sponsor(Self::request(body, follower_key), sponsor_key, fee)
    }

    pub fn request(body: B, follower_key: &Keypair) -> SponsorRequest<B> {
        let follower_signature = follower_key.sign(&Self::follower_payload(&body));
        SponsorRequest { body, follower_signature }
    }

    /// Countersigns a follower's request as the sponsor named by its body.
    pub fn sponsor(request: SponsorRequest<B>, sponsor_key: &Keypair, fee: u64) -> MetaTx<B> {
        let SponsorRequest { body, follower_signature } = request;
        let sponsor = body.sponsor();
        let sponsor_signature = sponsor_key.sign(&Self::sponsor_payload(&body, &sponsor, fee));
        MetaTx { body, follower_signature, sponsor, fee, sponsor_signature }
    }

    /// Checks sponsorship, both signatures, nonce and the flat fee.
    fn authorize(&self, store: &impl AccountStore, params: &ProtocolParams) -> Result<(), CapitalError> {
        let signer = store.require(&self.body.signer())?;
        let sponsor = store.require(&self.body.sponsor())?;
        if self.sponsor != self.body.sponsor() {
            return Err(CapitalError::SponsorNotCreator);
        }
        if !signer.platform_pubkey.verify(&Self::follower_payload(&self.body), &self.follower_signature)
            || !sponsor.platform_pubkey.verify(&Self::sponsor_payload(&self.body, &self.sponsor, self.fee), &self.sponsor_signature)
        {
            return Err(CapitalError::BadSignature);
        }
        if self.body.nonce() != signer.nonce {
            return Err(CapitalError::BadNonce { expected: signer.nonce, got: self.body.nonce() });
        }
        if self.fee != params.endorsement_fee {
            return Err(CapitalError::BadFee { expected: params.endorsement_fee, got: self.fee });
        }
        if sponsor.tokens < self.fee {
            return Err(CapitalError::InsufficientFunds { needed: self.fee, available: sponsor.tokens });
        }
        Ok(())
    }
}

/// A queued movement of capital, applied when its epoch is settled.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingTransfer {
    pub follower: IdHash,
    /// `None` for a fresh endorsement out of the follower's passive budget.
    pub from_creator: Option<IdHash>,
    pub to_creator: IdHash,
    pub amount: u64,
}

/// Queue of pending capital transfers plus burned fees. Balances live in the
/// accounts; this holds what is not yet effective.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CapitalLedger {
    pending: BTreeMap<u64, Vec<PendingTransfer>>,
    fees_burned: u64,
}

impl CapitalLedger {
    pub fn new() -> CapitalLedger {
        CapitalLedger::default()
    }

    pub fn fees_burned(&self) -> u64 {
        self.fees_burned
    }

    pub fn pending(&self) -> impl Iterator<Item = (u64, &PendingTransfer)> {
        self.pending.iter().flat_map(|(e, v)| v.iter().map(move |t| (*e, t)))
    }

    /// Validates an endorsement against current state without applying it.
    pub fn check_endorse(&self, store: &impl AccountStore, e: &Endorsement, params: &ProtocolParams) -> Result<(), CapitalError> {
        e.authorize(store, params)?;
        let follower = store.require(&e.body.follower)?;
        if e.body.amount == 0 || e.body.amount > follower.passive_remaining {
            return Err(CapitalError::InsufficientBudget { requested: e.body.amount, available: follower.passive_remaining });
        }
        Ok(())
    }

    /// Moves `amount` of the follower's passive budget toward the creator,
    /// effective after the redistribution delay. The creator pays the fee.
    pub fn endorse(
        &mut self,
        store: &mut impl AccountStore,
        e: &Endorsement,
        current_epoch: u64,
        params: &ProtocolParams,
    ) -> Result<(), CapitalError> {
        self.check_endorse(store, e, params)?;
        let EndorseBody { follower, creator, amount, .. } = e.body;
        store.modify(&follower, |a| {
            a.passive_remaining -= amount;
            a.nonce += 1;
            a.allocations.entry(creator).or_default().pending += amount;
        })?;
        store.modify(&creator, |a| {
            a.pending_in += amount;
            a.tokens -= e.fee;
        })?;
        self.fees_burned += e.fee;
        self.pending
            .entry(current_epoch + params.redistribution_delay_epochs)
            .or_default()
            .push(PendingTransfer { follower, from_creator: None, to_creator: creator, amount });
        Ok(())
    }

    pub fn check_reassign(&self, store: &impl AccountStore, r: &Reassignment, params: &ProtocolParams) -> Result<(), CapitalError> {
        store.require(&r.body.from_creator)?;
        r.authorize(store, params)?;
        let follower = store.require(&r.body.follower)?;
        let movable = follower
            .allocations
            .get(&r.body.from_creator)
            .map_or(0, |al| al.active - al.leaving);
        if r.body.amount == 0 || r.body.amount > movable || r.body.from_creator == r.body.to_creator {
            return Err(CapitalError::NothingToReassign { requested: r.body.amount, movable });
        }
        Ok(())
    }

    /// Schedules moving already-active capital between creators. Balances
    /// change only when the effective epoch is settled.
    pub fn reassign(
        &mut self,
        store: &mut impl AccountStore,
        r: &Reassignment,
        current_epoch: u64,
        params: &ProtocolParams,
    ) -> Result<(), CapitalError> {
        self.check_reassign(store, r, params)?;
        let ReassignBody { follower, from_creator, to_creator, amount, .. } = r.body;
        store.modify(&follower, |a| {
            a.nonce += 1;
            a.allocations.entry(from_creator).or_default().leaving += amount;
            a.allocations.entry(to_creator).or_default().pending += amount;
        })?;
        store.modify(&from_creator, |a| a.pending_out += amount)?;
        store.modify(&to_creator, |a| {
            a.pending_in += amount;
            a.tokens -= r.fee;
        })?;
        self.fees_burned += r.fee;
        self.pending
            .entry(current_epoch + params.redistribution_delay_epochs)
            .or_default()
            .push(PendingTransfer { follower, from_creator: Some(from_creator), to_creator, amount });
        Ok(())
    }

    /// Applies every transfer due at or before `epoch`. Returns the creators
    /// whose active capital changed.
    pub fn settle_epoch(&mut self, store: &mut impl AccountStore, epoch: u64) -> Result<BTreeSet<IdHash>, CapitalError> {
        let later = self.pending.split_off(&(epoch + 1));
        let due = std::mem::replace(&mut self.pending, later);
        let mut touched = BTreeSet::new();
        for t in due.into_values().flatten() {
            let PendingTransfer { follower, from_creator, to_creator, amount } = t;
            store.modify(&follower, |a| {
                if let Some(from) = from_creator {
                    let al = a.allocations.entry(from).or_default();
                    al.leaving -= amount;
                    al.active -= amount;
                    if al.is_empty() {
                        a.allocations.remove(&from);
                    }
                }
                let al = a.allocations.entry(to_creator).or_default();
                al.pending -= amount;
                al.active += amount;
            })?;
            if let Some(from) = from_creator {
                store.modify(&from, |a| {
                    a.pending_out -= amount;
                    a.active_received -= amount;
                })?;
                touched.insert(from);
            }
            store.modify(&to_creator, |a| {
                a.pending_in -= amount;
                a.active_received += amount;
            })?;
            touched.insert(to_creator);
        }
        Ok(touched)
    }
}

/// Capital units accounted for across `accounts`: passive + active + queued
/// endorsements not yet active. Equals `passive_budget * accounts` when
/// conservation holds.
pub fn capital_in_circulation<'a>(accounts: impl IntoIterator<Item = &'a Account>) -> u128 {
    accounts
        .into_iter()
        .map(|a| a.passive_remaining as u128 + a.active_received as u128 + a.pending_in as u128 - a.pending_out as u128)
        .sum()
}
