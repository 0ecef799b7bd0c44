//! Deterministic identities and genesis configurations for simulations,
//! examples and tests. Everything is derived from a seed, so two builders
//! with the same seed and calls produce byte-identical output.

use crate::capital::{Endorsement, EndorseBody, MetaTx, ReassignBody, Reassignment};
use crate::consensus::{commitment_of, reveal_for};
use crate::crypto::{Hash32, Keypair};
use crate::identity::{
    prove_identity, synthetic_fields, IdHash, IdentityFields, IdentityProof, Issuer, IssuerRegistry, SimulatedSnark,
    VerifiableCredential,
};
use crate::ledger::{GenesisAccount, GenesisConfig, GenesisEndorsement, GenesisIssuer, JoinBody, JoinTx, RegisterTx};
use crate::params::ProtocolParams;

/// A person with a credential, a platform key and a valid proof.
#[derive(Clone, Debug)]
pub struct Member {
    pub index: u64,
    pub fields: IdentityFields,
    pub vc: VerifiableCredential,
    pub key: Keypair,
    pub proof: IdentityProof,
    pub randao_secret: [u8; 32],
}

impl Member {
    pub fn id(&self) -> IdHash {
        self.proof.statement.id_hash
    }

    pub fn register_tx(&self) -> RegisterTx {
        RegisterTx::new(self.proof.clone(), &self.key)
    }

    pub fn join_tx(&self, nonce: u64) -> JoinTx {
        let body = JoinBody {
            validator: self.id(),
            randao_commitment: commitment_of(&reveal_for(&self.randao_secret, 0)),
            nonce,
        };
        JoinTx::sign(body, &self.key)
    }
}

/// Issuer, prover and identity factory sharing one seed.
#[derive(Clone, Debug)]
pub struct IdentityFactory {
    pub seed: u64,
    pub issuer: Issuer,
    pub issuers: IssuerRegistry,
    pub oracle_key: Hash32,
    prover: SimulatedSnark,
}

impl IdentityFactory {
    pub fn new(seed: u64) -> IdentityFactory {
        let issuer = Issuer::new("issuer-0", Keypair::derive("issuer", seed));
        let issuers = IssuerRegistry::with_genesis([(issuer.id.clone(), issuer.key.public())]);
        let oracle_key = Hash32::digest_parts(&[b"posc/oracle", &seed.to_be_bytes()]);
        IdentityFactory { seed, issuer, issuers, oracle_key, prover: SimulatedSnark::new(oracle_key.0) }
    }

    /// The honest proving service: proves genuine credentials for their
    /// owners and nothing else.
    pub fn prove(&self, vc: &VerifiableCredential, platform_key: &Keypair) -> Result<IdentityProof, crate::identity::IdentityError> {
        prove_identity(vc, platform_key, &self.issuers, &self.prover)
    }

    pub fn member(&self, index: u64) -> Member {
        let fields = synthetic_fields(index, self.seed);
        let key = Keypair::derive(&format!("platform/{}", self.seed), index);
        let vc = self.issuer.issue(fields.clone(), key.public()).expect("synthetic fields are valid");
        let proof = self.prove(&vc, &key).expect("genuine credential");
        let randao_secret = Hash32::digest_parts(&[b"posc/randao-secret", &self.seed.to_be_bytes(), &index.to_be_bytes()]).0;
        Member { index, fields, vc, key, proof, randao_secret }
    }
}

/// Builds a genesis config out of fixture members.
#[derive(Clone, Debug)]
pub struct GenesisBuilder {
    pub factory: IdentityFactory,
    pub params: ProtocolParams,
    members: Vec<Member>,
    accounts: Vec<GenesisAccount>,
}

impl GenesisBuilder {
    pub fn new(seed: u64, params: ProtocolParams) -> GenesisBuilder {
        GenesisBuilder { factory: IdentityFactory::new(seed), params, members: Vec::new(), accounts: Vec::new() }
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    /// Adds a registered account holding `tokens` micro-units. Returns its
    /// position in [`GenesisBuilder::members`].
    pub fn add_member(&mut self, tokens: u64) -> usize {
        let m = self.factory.member(self.members.len() as u64);
        self.accounts.push(GenesisAccount { proof: m.proof.clone(), tokens, endorsements: Vec::new(), randao_commitment: None });
        self.members.push(m);
        self.members.len() - 1
    }

    pub fn endorse(&mut self, follower: usize, creator: usize, amount: u64) {
        let creator = self.members[creator].id();
        self.accounts[follower].endorsements.push(GenesisEndorsement { creator, amount });
    }

    pub fn make_validator(&mut self, member: usize) {
        let c = commitment_of(&reveal_for(&self.members[member].randao_secret, 0));
        self.accounts[member].randao_commitment = Some(c);
    }

    /// Adds a creator endorsed in full by `followers` new accounts.
    pub fn add_creator(&mut self, followers: usize, tokens: u64) -> usize {
        let creator = self.add_member(tokens);
        for _ in 0..followers {
            let f = self.add_member(0);
            self.endorse(f, creator, self.params.full_endorsement());
        }
        creator
    }

    /// Adds a genesis validator holding `full_endorsements` worth of active
    /// capital.
    pub fn add_validator(&mut self, full_endorsements: usize, tokens: u64) -> usize {
        let v = self.add_creator(full_endorsements, tokens);
        self.make_validator(v);
        v
    }

    pub fn build(&self) -> GenesisConfig {
        GenesisConfig {
            params: self.params.clone(),
            issuers: self
                .factory
                .issuers
                .iter()
                .map(|(id, pk)| GenesisIssuer { issuer_id: id.clone(), pubkey: *pk })
                .collect(),
            accounts: self.accounts.clone(),
            randao_seed: Hash32::digest_parts(&[b"posc/randao-seed", &self.factory.seed.to_be_bytes()]),
            oracle_key: self.factory.oracle_key,
        }
    }
}

/// Endorsement signed by the follower and sponsored by the creator.
pub fn endorsement(follower: &Member, creator: &Member, amount: u64, nonce: u64, epoch: u64, fee: u64) -> Endorsement {
    let body = EndorseBody { follower: follower.id(), creator: creator.id(), amount, nonce, submitted_epoch: epoch };
    MetaTx::sign(body, &follower.key, &creator.key, fee)
}

pub fn reassignment(
    follower: &Member,
    from: &Member,
    to: &Member,
    amount: u64,
    nonce: u64,
    epoch: u64,
    fee: u64,
) -> Reassignment {
    let body = ReassignBody {
        follower: follower.id(),
        from_creator: from.id(),
        to_creator: to.id(),
        amount,
        nonce,
        submitted_epoch: epoch,
    };
    MetaTx::sign(body, &follower.key, &to.key, fee)
}

/// Protocol constants scaled down for small simulations: a validator needs
/// more than one full endorsement and epochs are 8 slots.
pub fn small_params() -> ProtocolParams {
    ProtocolParams {
        threshold_full_endorsements: 1,
        slots_per_epoch: 8,
        activation_delay_slots: 16,
        ..ProtocolParams::default()
    }
}
