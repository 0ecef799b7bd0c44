//! Identity proofs.
//!
//! The on-chain contract only needs a verifier for the statement "this
//! IdHash was derived from a genuine credential bound to this platform key".
//! [`SimulatedSnark`] stands in for the zkSNARK: the proving oracle is a
//! keyed MAC held by the harness. It has the size and interface of a real
//! proof but no zero-knowledge or cryptographic soundness beyond secrecy of
//! the MAC key. Do not use it outside simulations.

use std::fmt;

use hmac::{Hmac, Mac};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::Sha256;

use crate::crypto::{canonical_json, Hash32, Keypair, PublicKey};

use super::{derive_id_hash, IdHash, IdentityError, IssuerRegistry, VerifiableCredential};

pub const PROOF_BLOB_LEN: usize = 288;

/// Public inputs of an identity proof.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofStatement {
    pub id_hash: IdHash,
    pub platform_pubkey: PublicKey,
    pub issuer_id: String,
}

impl ProofStatement {
    pub fn signing_payload(&self) -> Vec<u8> {
        let mut out = b"posc/register/v1".to_vec();
        out.extend_from_slice(&canonical_json(self));
        out
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct ProofBlob(pub [u8; PROOF_BLOB_LEN]);

impl fmt::Debug for ProofBlob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ProofBlob({}..)", hex::encode(&self.0[..6]))
    }
}

impl Serialize for ProofBlob {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(self.0))
    }
}

impl<'de> Deserialize<'de> for ProofBlob {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let mut b = [0u8; PROOF_BLOB_LEN];
        hex::decode_to_slice(&s, &mut b).map_err(serde::de::Error::custom)?;
        Ok(ProofBlob(b))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityProof {
    pub statement: ProofStatement,
    pub blob: ProofBlob,
}

/// A proving system for identity statements.
pub trait ProofSystem: Send + Sync {
    fn name(&self) -> &'static str;
    fn prove(&self, statement: &ProofStatement) -> ProofBlob;
    fn verify(&self, statement: &ProofStatement, blob: &ProofBlob) -> bool;
}

/// Keyed-MAC stand-in for a zkSNARK (see module docs).
#[derive(Clone)]
pub struct SimulatedSnark {
    key: [u8; 32],
}

impl SimulatedSnark {
    pub const NAME: &'static str = "simulated-mac";

    pub fn new(key: [u8; 32]) -> SimulatedSnark {
        SimulatedSnark { key }
    }

    pub fn key(&self) -> &[u8; 32] {
        &self.key
    }

    fn tag(&self, statement: &ProofStatement) -> [u8; PROOF_BLOB_LEN] {
        let msg = canonical_json(statement);
        let mut out = [0u8; PROOF_BLOB_LEN];
        for (i, chunk) in out.chunks_mut(32).enumerate() {
            let mut mac = Hmac::<Sha256>::new_from_slice(&self.key).expect("hmac accepts any key length");
            mac.update(b"posc/zk-sim");
            mac.update(&(i as u32).to_be_bytes());
            mac.update(&msg);
            chunk.copy_from_slice(&mac.finalize().into_bytes());
        }
        out
    }
}

impl fmt::Debug for SimulatedSnark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SimulatedSnark({})", Hash32::digest(&self.key))
    }
}

impl ProofSystem for SimulatedSnark {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn prove(&self, statement: &ProofStatement) -> ProofBlob {
        ProofBlob(self.tag(statement))
    }

    fn verify(&self, statement: &ProofStatement, blob: &ProofBlob) -> bool {
        let expected = self.tag(statement);
        expected.iter().zip(blob.0.iter()).fold(0u8, |acc, (a, b)| acc | (a ^ b)) == 0
    }
}

/// Produces an identity proof for a genuine credential owned by the caller.
pub fn prove_identity(
    vc: &VerifiableCredential,
    platform_key: &Keypair,
    issuers: &IssuerRegistry,
    prover: &dyn ProofSystem,
) -> Result<IdentityProof, IdentityError> {
    let issuer_key = issuers
        .key(&vc.issuer_id)
        .ok_or_else(|| IdentityError::UnknownIssuer(vc.issuer_id.clone()))?;
    if !vc.signature_valid(issuer_key) {
        return Err(IdentityError::ForgedCredential);
    }
    if platform_key.public() != vc.platform_pubkey {
        return Err(IdentityError::KeyMismatch);
    }
    let statement = ProofStatement {
        id_hash: derive_id_hash(vc)?,
        platform_pubkey: vc.platform_pubkey,
        issuer_id: vc.issuer_id.clone(),
    };
    let blob = prover.prove(&statement);
    Ok(IdentityProof { statement, blob })
}

/// True iff the proof verifies and names a currently trusted issuer.
pub fn verify_identity_proof(proof: &IdentityProof, issuers: &IssuerRegistry, verifier: &dyn ProofSystem) -> bool {
    issuers.contains(&proof.statement.issuer_id) && verifier.verify(&proof.statement, &proof.blob)
}
