use serde::{Deserialize, Serialize};

use crate::capital::{Endorsement, Reassignment};
use crate::crypto::{canonical_json, hash_canonical, Hash32, Keypair, PublicKey, Signature};
use crate::identity::{IdHash, IdentityProof, IssuerAction};

fn payload<T: Serialize>(domain: &str, body: &T) -> Vec<u8> {
    let mut out = domain.as_bytes().to_vec();
    out.extend_from_slice(&canonical_json(body));
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterTx {
    pub proof: IdentityProof,
    /// Signature over the proof statement by the platform key it names.
    pub signature: Signature,
}

impl RegisterTx {
    pub fn new(proof: IdentityProof, platform_key: &Keypair) -> RegisterTx {
        let signature = platform_key.sign(&proof.statement.signing_payload());
        RegisterTx { proof, signature }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferBody {
    pub from: IdHash,
    pub to: IdHash,
    pub amount: u64,
    pub nonce: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferTx {
    pub body: TransferBody,
    pub signature: Signature,
}

impl TransferTx {
    pub fn sign(body: TransferBody, key: &Keypair) -> TransferTx {
        let signature = key.sign(&payload("posc/transfer/v1", &body));
        TransferTx { body, signature }
    }

    pub fn verify(&self, key: &PublicKey) -> bool {
        key.verify(&payload("posc/transfer/v1", &self.body), &self.signature)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinBody {
    pub validator: IdHash,
    /// Commitment to the validator's first randao reveal.
    pub randao_commitment: Hash32,
    pub nonce: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinTx {
    pub body: JoinBody,
    pub signature: Signature,
}

impl JoinTx {
    pub fn sign(body: JoinBody, key: &Keypair) -> JoinTx {
        let signature = key.sign(&payload("posc/join/v1", &body));
        JoinTx { body, signature }
    }

    pub fn verify(&self, key: &PublicKey) -> bool {
        key.verify(&payload("posc/join/v1", &self.body), &self.signature)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GovernanceBody {
    pub action: IssuerAction,
    /// Votes are weighted by this epoch's validator weights.
    pub epoch: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub voter: IdHash,
    pub signature: Signature,
}

impl Vote {
    pub fn sign(body: &GovernanceBody, voter: IdHash, key: &Keypair) -> Vote {
        Vote { voter, signature: key.sign(&payload("posc/governance/v1", body)) }
    }

    pub fn verify(&self, body: &GovernanceBody, key: &PublicKey) -> bool {
        key.verify(&payload("posc/governance/v1", body), &self.signature)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GovernanceTx {
    pub body: GovernanceBody,
    pub votes: Vec<Vote>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Transaction {
    Register(RegisterTx),
    Endorse(Endorsement),
    Reassign(Reassignment),
    Transfer(TransferTx),
    Governance(GovernanceTx),
    Join(JoinTx),
}

impl Transaction {
    pub fn hash(&self) -> Hash32 {
        hash_canonical("posc/tx/v1", self)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Transaction::Register(_) => "register",
            Transaction::Endorse(_) => "endorse",
            Transaction::Reassign(_) => "reassign",
            Transaction::Transfer(_) => "transfer",
            Transaction::Governance(_) => "governance",
            Transaction::Join(_) => "join",
        }
    }
}

/// A validator's vote for the checkpoint of `epoch`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attestation {
    pub validator: IdHash,
    pub epoch: u64,
    pub checkpoint_root: Hash32,
    pub signature: Signature,
}

#[derive(Serialize)]
struct AttestationBody<'a> {
    validator: &'a IdHash,
    epoch: u64,
    checkpoint_root: &'a Hash32,
}

impl Attestation {
    pub fn sign(validator: IdHash, epoch: u64, checkpoint_root: Hash32, key: &Keypair) -> Attestation {
        let body = AttestationBody { validator: &validator, epoch, checkpoint_root: &checkpoint_root };
        let signature = key.sign(&payload("posc/attest/v1", &body));
        Attestation { validator, epoch, checkpoint_root, signature }
    }

    pub fn verify(&self, key: &PublicKey) -> bool {
        let body = AttestationBody { validator: &self.validator, epoch: self.epoch, checkpoint_root: &self.checkpoint_root };
        key.verify(&payload("posc/attest/v1", &body), &self.signature)
    }
}
