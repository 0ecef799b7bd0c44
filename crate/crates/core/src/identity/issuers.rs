use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::crypto::PublicKey;

use super::IdentityError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum IssuerAction {
    Add { issuer_id: String, pubkey: PublicKey },
    Remove { issuer_id: String },
}

impl IssuerAction {
    pub fn issuer_id(&self) -> &str {
        match self {
            IssuerAction::Add { issuer_id, .. } | IssuerAction::Remove { issuer_id } => issuer_id,
        }
    }
}

/// A recorded membership change and the effective capital that carried it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GovernanceRecord {
    pub action: IssuerAction,
    pub epoch: u64,
    pub support_weight: f64,
    pub total_weight: f64,
}

/// Trusted credential issuers. Membership changes after genesis only through
/// [`IssuerRegistry::apply_governance`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IssuerRegistry {
    issuers: BTreeMap<String, PublicKey>,
    log: Vec<GovernanceRecord>,
}

impl IssuerRegistry {
    pub fn with_genesis<I: IntoIterator<Item = (String, PublicKey)>>(issuers: I) -> IssuerRegistry {
        IssuerRegistry { issuers: issuers.into_iter().collect(), log: Vec::new() }
    }

    pub fn key(&self, issuer_id: &str) -> Option<&PublicKey> {
        self.issuers.get(issuer_id)
    }

    pub fn contains(&self, issuer_id: &str) -> bool {
        self.issuers.contains_key(issuer_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &PublicKey)> {
        self.issuers.iter()
    }

    pub fn log(&self) -> &[GovernanceRecord] {
        &self.log
    }

    /// Checks quorum without mutating: additions need more than half of the
    /// total effective capital, removals at least two thirds.
    pub fn check_governance(&self, action: &IssuerAction, support_weight: f64, total_weight: f64) -> Result<(), IdentityError> {
        let passes = match action {
            IssuerAction::Add { issuer_id, .. } => {
                if self.contains(issuer_id) {
                    return Err(IdentityError::IssuerExists(issuer_id.clone()));
                }
                2.0 * support_weight > total_weight
            }
            IssuerAction::Remove { issuer_id } => {
                if !self.contains(issuer_id) {
                    return Err(IdentityError::UnknownIssuer(issuer_id.clone()));
                }
                3.0 * support_weight >= 2.0 * total_weight
            }
        };
        if total_weight <= 0.0 || !passes {
            return Err(IdentityError::InsufficientSupport { support: support_weight, total: total_weight });
        }
        Ok(())
    }

    pub fn apply_governance(&mut self, action: IssuerAction, support_weight: f64, total_weight: f64, epoch: u64) -> Result<(), IdentityError> {
        self.check_governance(&action, support_weight, total_weight)?;
        match &action {
            IssuerAction::Add { issuer_id, pubkey } => {
                self.issuers.insert(issuer_id.clone(), *pubkey);
            }
            IssuerAction::Remove { issuer_id } => {
                self.issuers.remove(issuer_id);
            }
        }
        self.log.push(GovernanceRecord { action, epoch, support_weight, total_weight });
        Ok(())
    }
}
