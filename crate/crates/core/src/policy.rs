use serde::{Deserialize, Serialize};

use crate::catalog::Dataset;
use crate::purpose::PurposeCategory;

/// A written organizational policy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Policy {
    pub policy_id: String,
    pub title: String,
    pub text: String,
    /// Dataset scope tags this policy applies to.
    pub scope_tags: Vec<String>,
    /// Human citation, e.g. a handbook section.
    pub citation: String,
    /// Purposes this policy speaks to; empty means every purpose.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub applies_to_purposes: Vec<PurposeCategory>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub prohibited_purposes: Vec<PurposeCategory>,
    /// Failure rules and gate ids this policy is the authority for.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub governs: Vec<String>,
}

impl Policy {
    pub fn applies_to(&self, dataset: &Dataset) -> bool {
        self.scope_tags.iter().any(|t| dataset.has_tag(t))
    }

    pub fn covers_purpose(&self, purpose: PurposeCategory) -> bool {
        self.applies_to_purposes.is_empty() || self.applies_to_purposes.contains(&purpose)
    }

    pub fn governs(&self, rule: &str) -> bool {
        self.governs.iter().any(|g| g == rule)
    }
}

/// Ordered set of policies. An empty store is valid and denies everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolicyStore {
    policies: Vec<Policy>,
}

impl PolicyStore {
    pub fn new(policies: Vec<Policy>) -> Self {
        Self { policies }
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }

    pub fn len(&self) -> usize {
        self.policies.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Policy> {
        self.policies.iter()
    }

    pub fn get(&self, id: &str) -> Option<&Policy> {
        self.policies.iter().find(|p| p.policy_id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.get(id).is_some()
    }

    pub fn push(&mut self, policy: Policy) {
        self.policies.push(policy);
    }

    /// Policies whose scope tags intersect the dataset's tags.
    pub fn relevant_to<'a>(&'a self, dataset: &Dataset) -> Vec<&'a Policy> {
        self.policies.iter().filter(|p| p.applies_to(dataset)).collect()
    }

    pub fn with_scope_tag<'a>(&'a self, tag: &'a str) -> impl Iterator<Item = &'a Policy> + 'a {
        self.policies
            .iter()
            .filter(move |p| p.scope_tags.iter().any(|t| t == tag))
    }

    pub fn into_vec(self) -> Vec<Policy> {
        self.policies
    }
}

impl FromIterator<Policy> for PolicyStore {
    fn from_iter<I: IntoIterator<Item = Policy>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// Policies from `candidates` that govern any of `rules`, in candidate order.
pub fn governing<'a>(candidates: &[&'a Policy], rules: &[String]) -> Vec<&'a Policy> {
    candidates
        .iter()
        .copied()
        .filter(|p| rules.iter().any(|r| p.governs(r)))
        .collect()
}
