//! The five evaluated stages. Each stage is a deterministic function of the
//! request, the catalog and the policy store; model-assisted stages are
//! then merged with the reasoner's reading (see [`merge_reasoner`]).

mod business;
mod classification;
mod compliance;
mod context;
mod user;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, Dataset, UserRecord};
use crate::control::{Control, ControlRegistry};
use crate::label::{Stage, StageStatus};
use crate::policy::{governing, Policy, PolicyStore};
use crate::reasoner::ReasonerVerdict;
use crate::request::AccessRequest;

pub use business::business_purpose;
pub use classification::data_classification;
pub use compliance::{compliance, Regulation, MAPPING_TABLE};
pub use context::context;
pub use user::user_validation;

/// Signal names shared between stages and gates.
pub mod signal {
    pub const PURPOSE_CLEAR: &str = "purpose_clear";
    pub const PURPOSE_CATEGORY: &str = "purpose_category";
    pub const BROAD_REQUEST: &str = "broad_request";
    pub const RETENTION_DAYS: &str = "retention_days";
    pub const SHARING_SCOPE: &str = "sharing_scope";
    pub const DESTINATION_REGION: &str = "destination_region";
    pub const RELEVANT_POLICIES: &str = "relevant_policies";
    pub const POLICY_SCOPE_CONFLICT: &str = "policy_scope_conflict";

    pub const IDENTITY_VERIFIED: &str = "identity_verified";
    pub const ROLE: &str = "role";
    pub const DEPARTMENT: &str = "department";
    pub const CLEARANCE: &str = "clearance";
    pub const CLEARANCE_SUFFICIENT: &str = "clearance_sufficient";
    pub const SOD_CONFLICT: &str = "sod_conflict";
    pub const SOD_RULE: &str = "sod_rule";

    pub const DATASET_KNOWN: &str = "dataset_known";
    pub const EFFECTIVE_SENSITIVITY: &str = "effective_sensitivity";
    pub const PII_PRESENT: &str = "pii_present";
    pub const CATEGORIES: &str = "categories";
    pub const COMPOSITION_FLAGS: &str = "composition_flags";
    pub const LABELS_COMPLETE: &str = "labels_complete";

    pub const PURPOSE_PERMITTED: &str = "purpose_permitted";
    pub const DEPARTMENT_PERMITTED: &str = "department_permitted";
    pub const NEED_TO_KNOW: &str = "need_to_know";
    pub const TIME_BOUND: &str = "time_bound";

    pub const REGULATIONS: &str = "regulations";
    pub const MATCHED_RULES: &str = "matched_rules";
    pub const MAPPING_GAPS: &str = "mapping_gaps";

    pub const REASONER_STATUS: &str = "reasoner_status";
    pub const REASONER_PURPOSE_CATEGORY: &str = "reasoner_purpose_category";
    pub const ABLATED: &str = "ablated";
}

/// Failure rule names.
pub mod rule {
    pub const NO_STATED_PURPOSE: &str = "no_stated_purpose";
    pub const PURPOSE_UNCLEAR: &str = "purpose_unclear";
    pub const POLICY_SCOPE_CONFLICT: &str = "policy_scope_conflict";
    pub const PURPOSE_PROHIBITED: &str = "purpose_prohibited";
    pub const IDENTITY_UNVERIFIED: &str = "identity_unverified";
    pub const MISSING_ROLE: &str = "missing_role";
    pub const SOD_VIOLATION: &str = "sod_violation";
    pub const CLEARANCE_INSUFFICIENT: &str = "clearance_insufficient";
    pub const UNKNOWN_DATASET: &str = "unknown_dataset";
    pub const LABELS_MISSING: &str = "labels_missing";
    pub const NO_NEED_TO_KNOW: &str = "no_need_to_know";
    pub const NO_TIME_BOUND: &str = "no_time_bound";
    pub const MAPPING_UNCERTAIN: &str = "mapping_uncertain";
    pub const CONTROL_CONFLICT: &str = "control_conflict";
    pub const REASONER_UNCERTAIN: &str = "reasoner_uncertain";
    pub const REASONER_FAIL: &str = "reasoner_fail";
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SignalValue {
    Bool(bool),
    Int(i64),
    Text(String),
    List(Vec<String>),
}

impl From<bool> for SignalValue {
    fn from(v: bool) -> Self {
        Self::Bool(v)
    }
}

impl From<u32> for SignalValue {
    fn from(v: u32) -> Self {
        Self::Int(i64::from(v))
    }
}

impl From<&str> for SignalValue {
    fn from(v: &str) -> Self {
        Self::Text(v.to_string())
    }
}

impl From<String> for SignalValue {
    fn from(v: String) -> Self {
        Self::Text(v)
    }
}

impl From<Vec<String>> for SignalValue {
    fn from(v: Vec<String>) -> Self {
        Self::List(v)
    }
}

impl std::fmt::Display for SignalValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Bool(b) => write!(f, "{b}"),
            Self::Int(i) => write!(f, "{i}"),
            Self::Text(s) => f.write_str(s),
            Self::List(items) => write!(f, "[{}]", items.join(",")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Signals(BTreeMap<String, SignalValue>);

impl Signals {
    pub fn set(&mut self, name: &str, value: impl Into<SignalValue>) {
        self.0.insert(name.to_string(), value.into());
    }

    pub fn get(&self, name: &str) -> Option<&SignalValue> {
        self.0.get(name)
    }

    pub fn flag(&self, name: &str) -> Option<bool> {
        match self.0.get(name) {
            Some(SignalValue::Bool(b)) => Some(*b),
            _ => None,
        }
    }

    pub fn text(&self, name: &str) -> Option<&str> {
        match self.0.get(name) {
            Some(SignalValue::Text(s)) => Some(s),
            _ => None,
        }
    }

    pub fn int(&self, name: &str) -> Option<i64> {
        match self.0.get(name) {
            Some(SignalValue::Int(i)) => Some(*i),
            _ => None,
        }
    }

    pub fn list(&self, name: &str) -> &[String] {
        match self.0.get(name) {
            Some(SignalValue::List(items)) => items,
            _ => &[],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &SignalValue)> {
        self.0.iter()
    }
}

/// Output of one stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageVerdict {
    pub stage: Stage,
    pub status: StageStatus,
    pub signals: Signals,
    /// Named rules behind a non-pass status.
    #[serde(default)]
    pub failure_rules: Vec<String>,
    #[serde(default)]
    pub proposed_controls: Vec<Control>,
    /// Policy ids supporting the verdict.
    #[serde(default)]
    pub citations: Vec<String>,
    #[serde(default)]
    pub notes: String,
}

impl StageVerdict {
    pub(crate) fn new(stage: Stage) -> Self {
        Self {
            stage,
            status: StageStatus::Pass,
            signals: Signals::default(),
            failure_rules: Vec::new(),
            proposed_controls: Vec::new(),
            citations: Vec::new(),
            notes: String::new(),
        }
    }

    /// Raise status to at least `status` and record the rule.
    pub(crate) fn flag(&mut self, status: StageStatus, rule: &str) {
        self.status = self.status.max(status);
        if !self.failure_rules.iter().any(|r| r == rule) {
            self.failure_rules.push(rule.to_string());
        }
    }

    fn note(&mut self, text: impl AsRef<str>) {
        if !self.notes.is_empty() {
            self.notes.push_str("; ");
        }
        self.notes.push_str(text.as_ref());
    }
}

/// Everything a stage may read. Immutable for the whole decision.
pub struct StageEnv<'a> {
    pub request: &'a AccessRequest,
    pub catalog: &'a Catalog,
    pub policies: &'a PolicyStore,
    pub controls: &'a ControlRegistry,
    pub dataset: Option<&'a Dataset>,
    pub user: Option<&'a UserRecord>,
    pub relevant_policies: Vec<&'a Policy>,
}

impl<'a> StageEnv<'a> {
    pub fn new(
        request: &'a AccessRequest,
        catalog: &'a Catalog,
        policies: &'a PolicyStore,
        controls: &'a ControlRegistry,
    ) -> Self {
        let dataset = catalog.dataset(&request.dataset_id);
        let user = catalog.user(&request.requester_id);
        let relevant_policies = dataset.map(|d| policies.relevant_to(d)).unwrap_or_default();
        Self {
            request,
            catalog,
            policies,
            controls,
            dataset,
            user,
            relevant_policies,
        }
    }

    /// Fill in controls and citations for the verdict's failure rules.
    /// `extra_rules` are matched rules that only need citing.
    pub(crate) fn finish(&self, mut verdict: StageVerdict, extra_rules: &[String]) -> StageVerdict {
        verdict.proposed_controls = if verdict.status == StageStatus::Pass {
            Vec::new()
        } else {
            self.controls
                .controls_for_all(verdict.failure_rules.iter().map(String::as_str))
        };
        let mut cite_rules = verdict.failure_rules.clone();
        cite_rules.extend(extra_rules.iter().cloned());
        verdict.citations = governing(&self.relevant_policies, &cite_rules)
            .into_iter()
            .map(|p| p.policy_id.clone())
            .collect();
        verdict
    }
}

/// Run the deterministic part of `stage`.
pub fn evaluate_stage(stage: Stage, env: &StageEnv<'_>, prior: &[StageVerdict]) -> StageVerdict {
    match stage {
        Stage::Context => context(env),
        Stage::UserValidation => user_validation(env),
        Stage::DataClassification => data_classification(env),
        Stage::BusinessPurpose => business_purpose(env, prior),
        Stage::Compliance => compliance(env, prior),
    }
}

/// Placeholder verdict for a stage disabled by an ablation switch.
pub fn ablated(stage: Stage) -> StageVerdict {
    let mut verdict = StageVerdict::new(stage);
    verdict.signals.set(signal::ABLATED, true);
    verdict.note("stage disabled");
    verdict
}

/// Fold a reasoner reading into a deterministic verdict. The reasoner can
/// only make a stage stricter; deterministic signals are never replaced.
pub fn merge_reasoner(env: &StageEnv<'_>, mut verdict: StageVerdict, reading: &ReasonerVerdict) -> StageVerdict {
    verdict.signals.set(signal::REASONER_STATUS, reading.status.as_str());
    if let Some(category) = reading.entities.purpose_category {
        verdict
            .signals
            .set(signal::REASONER_PURPOSE_CATEGORY, category.as_str());
    }
    if reading.status > verdict.status {
        let rule = match reading.status {
            StageStatus::Fail => rule::REASONER_FAIL,
            _ => rule::REASONER_UNCERTAIN,
        };
        verdict.flag(reading.status, rule);
        let rules = verdict.failure_rules.clone();
        let extra: Vec<String> = verdict.signals.list(signal::MATCHED_RULES).to_vec();
        verdict.citations.clear();
        verdict = env.finish(
            StageVerdict {
                failure_rules: rules,
                ..verdict
            },
            &extra,
        );
    }
    for citation in &reading.citations {
        if env.policies.contains(citation) && !verdict.citations.contains(citation) {
            verdict.citations.push(citation.clone());
        }
    }
    if !reading.note.is_empty() {
        verdict.note(format!("reasoner: {}", reading.note));
    }
    verdict
}

pub(crate) fn prior_signals(prior: &[StageVerdict], stage: Stage) -> Option<&Signals> {
    prior.iter().find(|v| v.stage == stage).map(|v| &v.signals)
}
