//! Identity-unique registration.
//!
//! A person registers once: their credential's private fields hash to an
//! [`IdHash`], a proof ties that hash to a trusted issuer and to the
//! platform key that signs the registration, and the hash is inserted into
//! the global state trie, which refuses duplicates.

mod credential;
mod issuers;
mod proof;
pub mod trie;

use thiserror::Error;

pub use credential::{derive_id_hash, synthetic_fields, IdHash, IdentityFields, Issuer, VerifiableCredential, VC_ID_LEN};
pub use issuers::{GovernanceRecord, IssuerAction, IssuerRegistry};
pub use proof::{
    prove_identity, verify_identity_proof, IdentityProof, ProofBlob, ProofStatement, ProofSystem, SimulatedSnark,
    PROOF_BLOB_LEN,
};
pub use trie::{verify_inclusion, GlobalStateTrie, InclusionProof, TrieError, TrieSnapshot};

use crate::account::Account;
use crate::crypto::Signature;
use crate::params::ProtocolParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdentityError {
    #[error("malformed credential: {0}")]
    MalformedCredential(String),
    #[error("unknown issuer {0}")]
    UnknownIssuer(String),
    #[error("issuer {0} already trusted")]
    IssuerExists(String),
    #[error("credential signature does not verify under the issuer key")]
    ForgedCredential,
    #[error("platform key does not match the credential")]
    KeyMismatch,
    #[error("identity proof does not verify")]
    InvalidProof,
    #[error("registration signature does not verify under the platform key")]
    Unauthorized,
    #[error("identity {0} is already registered")]
    DuplicateIdentity(IdHash),
    #[error("governance support {support} of {total} is below quorum")]
    InsufficientSupport { support: f64, total: f64 },
    #[error(transparent)]
    Trie(#[from] TrieError),
}

/// Checks everything [`register_identity`] checks, without touching state.
pub fn check_registration(
    state: &GlobalStateTrie<Account>,
    proof: &IdentityProof,
    registration_signature: &Signature,
    issuers: &IssuerRegistry,
    verifier: &dyn ProofSystem,
) -> Result<(), IdentityError> {
    let statement = &proof.statement;
    if !statement.platform_pubkey.verify(&statement.signing_payload(), registration_signature) {
        return Err(IdentityError::Unauthorized);
    }
    if !verify_identity_proof(proof, issuers, verifier) {
        return Err(IdentityError::InvalidProof);
    }
    if state.contains(&statement.id_hash) {
        return Err(IdentityError::DuplicateIdentity(statement.id_hash));
    }
    Ok(())
}

/// The registration contract: verifies the proof and the platform-key
/// signature, then inserts a fresh account under the proof's IdHash.
pub fn register_identity(
    state: &mut GlobalStateTrie<Account>,
    proof: &IdentityProof,
    registration_signature: &Signature,
    issuers: &IssuerRegistry,
    verifier: &dyn ProofSystem,
    params: &ProtocolParams,
) -> Result<Account, IdentityError> {
    check_registration(state, proof, registration_signature, issuers, verifier)?;
    let account = Account::registered(proof, params);
    state.insert(proof.statement.id_hash, account.clone())?;
    Ok(account)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use proptest::prelude::*;

    use super::*;
    use crate::crypto::{Hash32, Keypair};

    struct Fixture {
        issuer: Issuer,
        issuers: IssuerRegistry,
        snark: SimulatedSnark,
        params: ProtocolParams,
    }

    fn fixture() -> Fixture {
        let issuer = Issuer::new("gov-eid", Keypair::derive("issuer", 1));
        let issuers = IssuerRegistry::with_genesis([(issuer.id.clone(), issuer.key.public())]);
        Fixture { issuer, issuers, snark: SimulatedSnark::new([7u8; 32]), params: ProtocolParams::default() }
    }

    fn credential(f: &Fixture, index: u64) -> (VerifiableCredential, Keypair) {
        let platform = Keypair::derive("platform", index);
        (f.issuer.issue(synthetic_fields(index, 1), platform.public()).unwrap(), platform)
    }

    fn registration(f: &Fixture, index: u64) -> (IdentityProof, Signature) {
        let (vc, key) = credential(f, index);
        let proof = prove_identity(&vc, &key, &f.issuers, &f.snark).unwrap();
        let sig = key.sign(&proof.statement.signing_payload());
        (proof, sig)
    }

    #[test]
    fn platform_key_does_not_affect_id_hash() {
        let f = fixture();
        let fields = synthetic_fields(3, 1);
        let a = f.issuer.issue(fields.clone(), Keypair::derive("a", 0).public()).unwrap();
        let b = f.issuer.issue(fields, Keypair::derive("b", 0).public()).unwrap();
        assert_eq!(derive_id_hash(&a).unwrap(), derive_id_hash(&b).unwrap());
    }

    #[test]
    fn vc_id_changes_id_hash() {
        let f = fixture();
        let mut fields = synthetic_fields(3, 1);
        let a = f.issuer.issue(fields.clone(), Keypair::derive("a", 0).public()).unwrap();
        fields.vc_id[0] ^= 0xff;
        let b = f.issuer.issue(fields, Keypair::derive("a", 0).public()).unwrap();
        assert_ne!(derive_id_hash(&a).unwrap(), derive_id_hash(&b).unwrap());
    }

    #[test]
    fn malformed_credentials_are_rejected() {
        let f = fixture();
        let (vc, _) = credential(&f, 1);
        let mut empty = vc.clone();
        empty.surname.clear();
        assert!(matches!(derive_id_hash(&empty), Err(IdentityError::MalformedCredential(_))));
        let mut short = vc.clone();
        short.vc_id.truncate(31);
        assert!(matches!(derive_id_hash(&short), Err(IdentityError::MalformedCredential(_))));
        let mut backwards = vc;
        backwards.expires_at = backwards.issued_at;
        assert!(matches!(derive_id_hash(&backwards), Err(IdentityError::MalformedCredential(_))));
    }

    #[test]
    fn honest_proof_verifies() {
        let f = fixture();
        let (proof, _) = registration(&f, 1);
        assert!(verify_identity_proof(&proof, &f.issuers, &f.snark));
        assert_eq!(proof.blob.0.len(), PROOF_BLOB_LEN);
    }

    #[test]
    fn wrong_platform_key_is_rejected() {
        let f = fixture();
        let (vc, _) = credential(&f, 1);
        let other = Keypair::derive("platform", 2);
        assert_eq!(prove_identity(&vc, &other, &f.issuers, &f.snark), Err(IdentityError::KeyMismatch));
    }

    #[test]
    fn forged_issuer_signature_is_rejected() {
        let f = fixture();
        let (mut vc, key) = credential(&f, 1);
        vc.name.push('x');
        assert_eq!(prove_identity(&vc, &key, &f.issuers, &f.snark), Err(IdentityError::ForgedCredential));
        let imposter = Issuer::new("gov-eid", Keypair::derive("imposter", 0));
        let forged = imposter.issue(synthetic_fields(9, 9), key.public()).unwrap();
        assert_eq!(prove_identity(&forged, &key, &f.issuers, &f.snark), Err(IdentityError::ForgedCredential));
    }

    #[test]
    fn unknown_issuer_is_rejected() {
        let f = fixture();
        let rogue = Issuer::new("rogue", Keypair::derive("rogue", 0));
        let key = Keypair::derive("platform", 1);
        let vc = rogue.issue(synthetic_fields(1, 1), key.public()).unwrap();
        assert_eq!(prove_identity(&vc, &key, &f.issuers, &f.snark), Err(IdentityError::UnknownIssuer("rogue".into())));
    }

    #[test]
    fn every_single_byte_flip_breaks_the_proof() {
        let f = fixture();
        let (proof, _) = registration(&f, 1);
        for i in 0..PROOF_BLOB_LEN {
            let mut bad = proof.clone();
            bad.blob.0[i] ^= 0x01;
            assert!(!verify_identity_proof(&bad, &f.issuers, &f.snark), "flip at byte {i} accepted");
        }
    }

    #[test]
    fn unregistered_issuer_in_statement_fails_verification() {
        let f = fixture();
        let (mut proof, _) = registration(&f, 1);
        proof.statement.issuer_id = "elsewhere".into();
        proof.blob = f.snark.prove(&proof.statement);
        assert!(!verify_identity_proof(&proof, &f.issuers, &f.snark));
    }

    #[test]
    fn proof_from_another_oracle_fails() {
        let f = fixture();
        let (mut proof, _) = registration(&f, 1);
        proof.blob = SimulatedSnark::new([8u8; 32]).prove(&proof.statement);
        assert!(!verify_identity_proof(&proof, &f.issuers, &f.snark));
    }

    #[test]
    fn register_then_duplicate() {
        let f = fixture();
        let mut trie = GlobalStateTrie::new();
        let (proof, sig) = registration(&f, 1);
        let account = register_identity(&mut trie, &proof, &sig, &f.issuers, &f.snark, &f.params).unwrap();
        assert_eq!(account.passive_remaining, f.params.passive_budget);
        assert_eq!(account.active_received, 0);
        assert_eq!(trie.len(), 1);
        let root = trie.root();
        let again = register_identity(&mut trie, &proof, &sig, &f.issuers, &f.snark, &f.params);
        assert_eq!(again, Err(IdentityError::DuplicateIdentity(proof.statement.id_hash)));
        assert_eq!(trie.root(), root);
    }

    #[test]
    fn bad_registration_signature_is_unauthorized() {
        let f = fixture();
        let mut trie = GlobalStateTrie::new();
        let (proof, _) = registration(&f, 1);
        let sig = Keypair::derive("platform", 99).sign(&proof.statement.signing_payload());
        assert_eq!(
            register_identity(&mut trie, &proof, &sig, &f.issuers, &f.snark, &f.params),
            Err(IdentityError::Unauthorized)
        );
    }

    #[test]
    fn swapped_platform_key_invalidates_proof() {
        let f = fixture();
        let mut trie = GlobalStateTrie::new();
        let (mut proof, _) = registration(&f, 1);
        let thief = Keypair::derive("thief", 0);
        proof.statement.platform_pubkey = thief.public();
        let sig = thief.sign(&proof.statement.signing_payload());
        assert_eq!(
            register_identity(&mut trie, &proof, &sig, &f.issuers, &f.snark, &f.params),
            Err(IdentityError::InvalidProof)
        );
    }

    #[test]
    fn thousand_registrations_match_flat_set() {
        let f = fixture();
        let mut trie = GlobalStateTrie::new();
        let mut flat = BTreeSet::new();
        let mut roots = BTreeSet::new();
        roots.insert(trie.root());
        for i in 0..1000 {
            let (proof, sig) = registration(&f, i);
            register_identity(&mut trie, &proof, &sig, &f.issuers, &f.snark, &f.params).unwrap();
            flat.insert(proof.statement.id_hash);
            assert!(roots.insert(trie.root()), "root repeated after insert {i}");
        }
        assert_eq!(trie.len(), 1000);
        for id in &flat {
            assert!(trie.contains(id));
        }
        assert_eq!(trie.entries().iter().map(|(k, _)| *k).collect::<BTreeSet<_>>(), flat);
    }

    #[test]
    fn identical_sequences_give_identical_roots() {
        let f = fixture();
        let run = || {
            let mut trie = GlobalStateTrie::new();
            for i in 0..50 {
                let (proof, sig) = registration(&f, i);
                register_identity(&mut trie, &proof, &sig, &f.issuers, &f.snark, &f.params).unwrap();
            }
            trie.root()
        };
        assert_eq!(run(), run());
        assert_ne!(run(), Hash32::ZERO);
    }

    #[test]
    fn account_json_has_no_identity_fields() {
        let f = fixture();
        let mut trie = GlobalStateTrie::new();
        let (vc, _) = credential(&f, 4);
        let (proof, sig) = registration(&f, 4);
        register_identity(&mut trie, &proof, &sig, &f.issuers, &f.snark, &f.params).unwrap();
        let json = serde_json::to_string(&trie.snapshot()).unwrap();
        for secret in vc.fields().private_values() {
            assert!(!json.contains(&secret), "snapshot leaks {secret}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn at_most_one_account_per_identity(seq in proptest::collection::vec(0u64..12, 1..40)) {
            let f = fixture();
            let mut trie = GlobalStateTrie::new();
            let mut seen = BTreeSet::new();
            for i in seq {
                let (proof, sig) = registration(&f, i);
                let r = register_identity(&mut trie, &proof, &sig, &f.issuers, &f.snark, &f.params);
                if seen.insert(i) {
                    prop_assert!(r.is_ok());
                } else {
                    prop_assert_eq!(r, Err(IdentityError::DuplicateIdentity(proof.statement.id_hash)));
                }
            }
            prop_assert_eq!(trie.len(), seen.len());
        }
    }
}
