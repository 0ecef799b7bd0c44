use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::crypto::{hex_bytes, push_length_prefixed, Hash32, Keypair, PublicKey, Signature};

use super::IdentityError;

/// Identity of a registered person: the digest of the private fields of their
/// credential. Doubles as the key of their account in the global state.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IdHash(pub Hash32);

impl IdHash {
    pub fn as_hash(&self) -> &Hash32 {
        &self.0
    }
}

impl fmt::Display for IdHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl fmt::Debug for IdHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IdHash({})", &self.0.to_hex()[..12])
    }
}

/// An issuer-signed identity document binding a person to a platform key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifiableCredential {
    pub name: String,
    pub surname: String,
    pub residence: String,
    pub birth_number: String,
    pub place_of_birth: String,
    pub nationality: String,
    #[serde(with = "hex_bytes")]
    pub vc_id: Vec<u8>,
    pub issued_at: NaiveDate,
    pub expires_at: NaiveDate,
    pub platform_pubkey: PublicKey,
    pub issuer_id: String,
    pub issuer_signature: Signature,
}

/// The credential fields that are hashed into the [`IdHash`]. Issuers sign
/// these together with the platform key and their own id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityFields {
    pub name: String,
    pub surname: String,
    pub residence: String,
    pub birth_number: String,
    pub place_of_birth: String,
    pub nationality: String,
    #[serde(with = "hex_bytes")]
    pub vc_id: Vec<u8>,
    pub issued_at: NaiveDate,
    pub expires_at: NaiveDate,
}

pub const VC_ID_LEN: usize = 32;

const DATE_FORMAT: &str = "%Y-%m-%d";

impl IdentityFields {
    fn text_fields(&self) -> [(&'static str, &str); 6] {
        [
            ("name", &self.name),
            ("surname", &self.surname),
            ("residence", &self.residence),
            ("birth_number", &self.birth_number),
            ("place_of_birth", &self.place_of_birth),
            ("nationality", &self.nationality),
        ]
    }

    pub fn validate(&self) -> Result<(), IdentityError> {
        for (field, value) in self.text_fields() {
            if value.is_empty() {
                return Err(IdentityError::MalformedCredential(format!("{field} is empty")));
            }
        }
        if self.vc_id.len() != VC_ID_LEN {
            return Err(IdentityError::MalformedCredential(format!(
                "vc_id is {} bytes, expected {VC_ID_LEN}",
                self.vc_id.len()
            )));
        }
        if self.expires_at <= self.issued_at {
            return Err(IdentityError::MalformedCredential("expires_at must be after issued_at".into()));
        }
        Ok(())
    }

    /// Length-prefixed concatenation in declaration order; dates as ISO `YYYY-MM-DD`.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(256);
        for (_, value) in self.text_fields() {
            push_length_prefixed(&mut out, value.as_bytes());
        }
        push_length_prefixed(&mut out, &self.vc_id);
        push_length_prefixed(&mut out, self.issued_at.format(DATE_FORMAT).to_string().as_bytes());
        push_length_prefixed(&mut out, self.expires_at.format(DATE_FORMAT).to_string().as_bytes());
        out
    }

    /// The values that must never leak into chain data.
    pub fn private_values(&self) -> Vec<String> {
        let mut v: Vec<String> = self.text_fields().iter().map(|(_, s)| s.to_string()).collect();
        v.push(hex::encode(&self.vc_id));
        v
    }
}

fn signing_payload(fields: &IdentityFields, platform_pubkey: &PublicKey, issuer_id: &str) -> Vec<u8> {
    let mut out = b"posc/vc/v1".to_vec();
    out.extend_from_slice(&fields.canonical_bytes());
    push_length_prefixed(&mut out, &platform_pubkey.to_bytes());
    push_length_prefixed(&mut out, issuer_id.as_bytes());
    out
}

impl VerifiableCredential {
    pub fn fields(&self) -> IdentityFields {
        IdentityFields {
            name: self.name.clone(),
            surname: self.surname.clone(),
            residence: self.residence.clone(),
            birth_number: self.birth_number.clone(),
            place_of_birth: self.place_of_birth.clone(),
            nationality: self.nationality.clone(),
            vc_id: self.vc_id.clone(),
            issued_at: self.issued_at,
            expires_at: self.expires_at,
        }
    }

    pub fn signing_payload(&self) -> Vec<u8> {
        signing_payload(&self.fields(), &self.platform_pubkey, &self.issuer_id)
    }

    pub fn signature_valid(&self, issuer_key: &PublicKey) -> bool {
        issuer_key.verify(&self.signing_payload(), &self.issuer_signature)
    }
}

/// A credential authority holding a signing key.
#[derive(Clone, Debug)]
pub struct Issuer {
    pub id: String,
    pub key: Keypair,
}

impl Issuer {
    pub fn new(id: impl Into<String>, key: Keypair) -> Issuer {
        Issuer { id: id.into(), key }
    }

    pub fn issue(&self, fields: IdentityFields, platform_pubkey: PublicKey) -> Result<VerifiableCredential, IdentityError> {
        fields.validate()?;
        let issuer_signature = self.key.sign(&signing_payload(&fields, &platform_pubkey, &self.id));
        Ok(VerifiableCredential {
            name: fields.name,
            surname: fields.surname,
            residence: fields.residence,
            birth_number: fields.birth_number,
            place_of_birth: fields.place_of_birth,
            nationality: fields.nationality,
            vc_id: fields.vc_id,
            issued_at: fields.issued_at,
            expires_at: fields.expires_at,
            platform_pubkey,
            issuer_id: self.id.clone(),
            issuer_signature,
        })
    }
}

/// Digest of every credential field except the platform key, issuer id and
/// issuer signature.
pub fn derive_id_hash(vc: &VerifiableCredential) -> Result<IdHash, IdentityError> {
    let fields = vc.fields();
    fields.validate()?;
    Ok(IdHash(Hash32::digest(&fields.canonical_bytes())))
}

/// Deterministic synthetic identity fields for simulations and fixtures.
pub fn synthetic_fields(index: u64, seed: u64) -> IdentityFields {
    let vc_id = Hash32::digest_parts(&[b"posc/vc-id", &seed.to_le_bytes(), &index.to_le_bytes()]);
    IdentityFields {
        name: format!("Given{index:06}x{seed}"),
        surname: format!("Family{index:06}x{seed}"),
        residence: format!("{index} Synthetic Street, Town {seed}"),
        birth_number: format!("BN{seed:04}{index:08}"),
        place_of_birth: format!("Birthplace{index:05}"),
        nationality: "Simland".to_string(),
        vc_id: vc_id.0.to_vec(),
        issued_at: NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date"),
        expires_at: NaiveDate::from_ymd_opt(2034, 1, 1).expect("valid date"),
    }
}
