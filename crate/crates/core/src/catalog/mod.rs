//! Data catalog, user directory, separation-of-duties rules and the
//! agreements registry. Holds metadata only: schema, labels and flags.

mod load;
mod synth;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::policy::PolicyStore;
use crate::purpose::PurposeCategory;

pub use load::{CatalogError, RecordError, CSV_DATASET_HEADER, CSV_SOD_HEADER, CSV_USER_HEADER};
pub use synth::{generate_synthetic_org, Sector};

/// Sensitivity ladder, totally ordered from least to most sensitive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SensitivityLabel {
    Public,
    Internal,
    Confidential,
    Restricted,
}

impl SensitivityLabel {
    pub const ALL: [SensitivityLabel; 4] = [
        Self::Public,
        Self::Internal,
        Self::Confidential,
        Self::Restricted,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Public => "Public",
            Self::Internal => "Internal",
            Self::Confidential => "Confidential",
            Self::Restricted => "Restricted",
        }
    }
}

impl fmt::Display for SensitivityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SensitivityLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown sensitivity label `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldCategory {
    Pii,
    Financial,
    Health,
    Location,
    PublicMetric,
    Operational,
}

impl FieldCategory {
    pub const ALL: [FieldCategory; 6] = [
        Self::Pii,
        Self::Financial,
        Self::Health,
        Self::Location,
        Self::PublicMetric,
        Self::Operational,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pii => "pii",
            Self::Financial => "financial",
            Self::Health => "health",
            Self::Location => "location",
            Self::PublicMetric => "public_metric",
            Self::Operational => "operational",
        }
    }
}

impl fmt::Display for FieldCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FieldCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| format!("unknown field category `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub name: String,
    pub category: FieldCategory,
    /// `None` when the field has not been labeled yet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<SensitivityLabel>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub quasi_identifier: bool,
    /// Raw example values captured at upload. Kept for catalog preview only
    /// and never placed in a reasoner prompt.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sample_values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dataset {
    pub dataset_id: String,
    pub name: String,
    pub fields: Vec<FieldSpec>,
    pub sensitivity: SensitivityLabel,
    #[serde(default)]
    pub scope_tags: Vec<String>,
    pub region: String,
    pub max_retention_days: u32,
    #[serde(default)]
    pub allowed_purposes: Vec<PurposeCategory>,
    /// Departments with a standing need to know; empty means any.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub allowed_departments: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub supports_tokenization: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub supports_aggregation: bool,
}

impl Dataset {
    pub fn has_category(&self, category: FieldCategory) -> bool {
        self.fields.iter().any(|f| f.category == category)
    }

    pub fn categories(&self) -> BTreeSet<FieldCategory> {
        self.fields.iter().map(|f| f.category).collect()
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.scope_tags.iter().any(|t| t == tag)
    }

    pub fn max_field_label(&self) -> Option<SensitivityLabel> {
        self.fields.iter().filter_map(|f| f.label).max()
    }

    pub fn labels_complete(&self) -> bool {
        self.fields.iter().all(|f| f.label.is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserRecord {
    pub user_id: String,
    pub display_name: String,
    pub role: String,
    pub department: String,
    pub clearance: SensitivityLabel,
    pub active: bool,
    /// Additional role-like entitlements considered by SoD rules.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub permissions: Vec<String>,
}

impl UserRecord {
    pub fn holds(&self, entitlement: &str) -> bool {
        self.role == entitlement || self.permissions.iter().any(|p| p == entitlement)
    }
}

/// A pair of mutually exclusive entitlements. Either side may name a role,
/// a permission, a dataset id or a dataset scope tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoDRule {
    pub rule_id: String,
    pub side_a: String,
    pub side_b: String,
    pub citation: String,
}

impl SoDRule {
    fn matches(&self, user: &UserRecord, dataset: &Dataset) -> bool {
        let targets = |side: &str| dataset.dataset_id == side || dataset.has_tag(side);
        (user.holds(&self.side_a) && targets(&self.side_b))
            || (user.holds(&self.side_b) && targets(&self.side_a))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartyAgreement {
    #[serde(default)]
    pub has_dsa: bool,
    #[serde(default)]
    pub has_dpa: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionPair {
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Agreements {
    #[serde(default)]
    pub parties: BTreeMap<String, PartyAgreement>,
    /// Region pairs with a standing DPO approval for transfers.
    #[serde(default)]
    pub dpo_approvals: Vec<RegionPair>,
}

impl Agreements {
    /// Unknown parties have no agreement.
    pub fn has_dsa(&self, party: &str) -> bool {
        self.parties.get(party).is_some_and(|p| p.has_dsa)
    }

    pub fn has_dpa(&self, party: &str) -> bool {
        self.parties.get(party).is_some_and(|p| p.has_dpa)
    }

    pub fn dpo_approved(&self, from: &str, to: &str) -> bool {
        self.dpo_approvals.iter().any(|p| p.from == from && p.to == to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositionFlag {
    PiiLocation,
    PiiFinancial,
    QuasiIdentifierSet,
}

impl CompositionFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PiiLocation => "pii_location",
            Self::PiiFinancial => "pii_financial",
            Self::QuasiIdentifierSet => "quasi_identifier_set",
        }
    }
}

/// Quasi-identifier fields needed before a combination is flagged.
pub const QUASI_IDENTIFIER_THRESHOLD: usize = 3;

/// Read-only metadata view used during a decision.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    #[serde(default)]
    pub datasets: Vec<Dataset>,
    #[serde(default)]
    pub users: Vec<UserRecord>,
    #[serde(default)]
    pub sod_rules: Vec<SoDRule>,
    #[serde(default)]
    pub agreements: Agreements,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown dataset `{0}`")]
pub struct UnknownDataset(pub String);

impl Catalog {
    pub fn dataset(&self, id: &str) -> Option<&Dataset> {
        self.datasets.iter().find(|d| d.dataset_id == id)
    }

    pub fn user(&self, id: &str) -> Option<&UserRecord> {
        self.users.iter().find(|u| u.user_id == id)
    }

    /// Maximum label over the datasets plus composition flags over the
    /// union of their fields.
    pub fn effective_sensitivity<S: AsRef<str>>(
        &self,
        dataset_ids: &[S],
    ) -> Result<(SensitivityLabel, BTreeSet<CompositionFlag>), UnknownDataset> {
        let mut datasets = Vec::with_capacity(dataset_ids.len());
        for id in dataset_ids {
            let id = id.as_ref();
            datasets.push(self.dataset(id).ok_or_else(|| UnknownDataset(id.to_string()))?);
        }
        let label = datasets
            .iter()
            .map(|d| d.sensitivity)
            .max()
            .unwrap_or(SensitivityLabel::Public);
        Ok((label, composition_flags(datasets.iter().flat_map(|d| &d.fields))))
    }

    /// First SoD rule (by `rule_id`) that pairs one of the user's
    /// entitlements with the dataset.
    pub fn check_sod(&self, user: &UserRecord, dataset: &Dataset) -> Option<&SoDRule> {
        check_sod(user, dataset, &self.sod_rules)
    }
}

pub fn check_sod<'r>(user: &UserRecord, dataset: &Dataset, rules: &'r [SoDRule]) -> Option<&'r SoDRule> {
    rules
        .iter()
        .filter(|r| r.matches(user, dataset))
        .min_by(|a, b| a.rule_id.cmp(&b.rule_id))
}

pub fn composition_flags<'a>(fields: impl IntoIterator<Item = &'a FieldSpec>) -> BTreeSet<CompositionFlag> {
    let mut categories = BTreeSet::new();
    let mut quasi = 0usize;
    for field in fields {
        categories.insert(field.category);
        if field.quasi_identifier {
            quasi += 1;
        }
    }
    let mut flags = BTreeSet::new();
    let pii = categories.contains(&FieldCategory::Pii);
    if pii && categories.contains(&FieldCategory::Location) {
        flags.insert(CompositionFlag::PiiLocation);
    }
    if pii && categories.contains(&FieldCategory::Financial) {
        flags.insert(CompositionFlag::PiiFinancial);
    }
    if quasi >= QUASI_IDENTIFIER_THRESHOLD {
        flags.insert(CompositionFlag::QuasiIdentifierSet);
    }
    flags
}

/// A catalog together with its written policies; the unit that the
/// service swaps atomically and that org files describe.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Org {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sector: Option<Sector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub catalog: Catalog,
    #[serde(default)]
    pub policies: PolicyStore,
}

pub const SCHEMA_VERSION: u32 = 1;

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}
