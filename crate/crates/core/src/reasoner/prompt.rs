//! Prompt assembly. Every line of a prompt comes from a classified entry;
//! entries classed as raw values are refused outright.

use serde::{Deserialize, Serialize};

use crate::catalog::{composition_flags, Dataset, UserRecord};
use crate::label::Stage;
use crate::policy::Policy;
use crate::request::AccessRequest;

pub const PROMPT_TEMPLATE_ID: &str = "stage-assessment-v1";

/// Provenance class of a prompt entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaClass {
    /// A field of the access request itself.
    RequestField,
    PolicyText,
    FieldName,
    Label,
    Category,
    Flag,
    /// A data value from the underlying dataset. Never allowed.
    RawValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaEntry {
    pub key: String,
    pub class: MetaClass,
    pub value: String,
}

impl MetaEntry {
    pub fn new(key: impl Into<String>, class: MetaClass, value: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            class,
            value: value.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("raw data value in prompt entry `{0}`")]
    RawValue(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub template: String,
    pub stage: Stage,
    pub entries: Vec<MetaEntry>,
    pub text: String,
}

const RESPONSE_SCHEMA: &str = "Respond with one JSON object: {\"status\": \"pass\"|\"uncertain\"|\"fail\", \
\"entities\": {\"purpose_category\", \"retention_days\", \"sharing_scope\"}, \
\"suggested_label\": \"A\"|\"D\"|\"C\", \"citations\": [policy ids], \"note\": short text}.";

fn stage_question(stage: Stage) -> &'static str {
    match stage {
        Stage::Context => "Extract the purpose category, retention and sharing scope. Is the purpose clear and within policy scope?",
        Stage::UserValidation => "Is the requester's identity, role and clearance adequate, with no separation-of-duties conflict?",
        Stage::DataClassification => "Are the sensitivity labels complete, and do field combinations raise sensitivity?",
        Stage::BusinessPurpose => "Is there a legitimate, time-bound need to know for this purpose?",
        Stage::Compliance => "Which regulations apply, and which controls are required?",
    }
}

impl Prompt {
    /// Assemble from classified entries, refusing raw values.
    pub fn from_entries(stage: Stage, entries: Vec<MetaEntry>) -> Result<Self, PromptError> {
        if let Some(raw) = entries.iter().find(|e| e.class == MetaClass::RawValue) {
            return Err(PromptError::RawValue(raw.key.clone()));
        }
        let mut text = String::new();
        text.push_str("You review data access requests against written policy. ");
        text.push_str("Use only the policy text and metadata below.\n");
        text.push_str(&format!("Stage: {stage}\n"));
        text.push_str(stage_question(stage));
        text.push('\n');
        for entry in &entries {
            text.push_str(&format!("{}: {}\n", entry.key, entry.value));
        }
        text.push_str(RESPONSE_SCHEMA);
        Ok(Self {
            template: PROMPT_TEMPLATE_ID.to_string(),
            stage,
            entries,
            text,
        })
    }
}

/// Build the prompt for `stage` from the request, relevant policies and
/// catalog metadata. Field sample values are never read.
pub fn build_prompt(
    stage: Stage,
    request: &AccessRequest,
    policies: &[&Policy],
    dataset: Option<&Dataset>,
    user: Option<&UserRecord>,
) -> Result<Prompt, PromptError> {
    use MetaClass::*;
    let mut entries = vec![
        MetaEntry::new("request.purpose", RequestField, request.purpose.as_str()),
        MetaEntry::new("request.sharing_scope", RequestField, request.sharing_scope.as_str()),
    ];
    if let Some(days) = request.declared_retention_days {
        entries.push(MetaEntry::new("request.retention_days", RequestField, days.to_string()));
    }
    if let Some(region) = &request.destination_region {
        entries.push(MetaEntry::new("request.destination_region", RequestField, region.as_str()));
    }
    if let Some(party) = &request.external_party {
        entries.push(MetaEntry::new("request.external_party", RequestField, party.as_str()));
    }
    for policy in policies {
        entries.push(MetaEntry::new(
            format!("policy.{}", policy.policy_id),
            PolicyText,
            format!("{} - {}", policy.title, policy.text),
        ));
    }
    if let Some(user) = user {
        entries.push(MetaEntry::new("requester.role", Label, user.role.as_str()));
        entries.push(MetaEntry::new("requester.department", Label, user.department.as_str()));
        entries.push(MetaEntry::new("requester.clearance", Label, user.clearance.as_str()));
    }
    if let Some(dataset) = dataset {
        entries.push(MetaEntry::new("dataset.name", Label, dataset.name.as_str()));
        entries.push(MetaEntry::new("dataset.sensitivity", Label, dataset.sensitivity.as_str()));
        entries.push(MetaEntry::new("dataset.region", Label, dataset.region.as_str()));
        entries.push(MetaEntry::new(
            "dataset.max_retention_days",
            Label,
            dataset.max_retention_days.to_string(),
        ));
        for field in &dataset.fields {
            entries.push(MetaEntry::new("field.name", FieldName, field.name.as_str()));
            entries.push(MetaEntry::new(
                format!("field.{}.category", field.name),
                Category,
                field.category.as_str(),
            ));
            let label = field.label.map_or("unlabeled", |l| l.as_str());
            entries.push(MetaEntry::new(format!("field.{}.label", field.name), Label, label));
        }
        let flags: Vec<&str> = composition_flags(&dataset.fields)
            .into_iter()
            .map(|f| f.as_str())
            .collect();
        if !flags.is_empty() {
            entries.push(MetaEntry::new("dataset.composition_flags", Flag, flags.join(", ")));
        }
        entries.push(MetaEntry::new(
            "dataset.supports_tokenization",
            Flag,
            dataset.supports_tokenization.to_string(),
        ));
        entries.push(MetaEntry::new(
            "dataset.supports_aggregation",
            Flag,
            dataset.supports_aggregation.to_string(),
        ));
    }
    Prompt::from_entries(stage, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{org_fixture, request};

    #[test]
    fn transactions_prompt_carries_policy_text_and_labels_only() {
        let mut org = org_fixture();
        let sentinel = "SENTINEL-7781-RAW";
        let ds = org
            .catalog
            .datasets
            .iter_mut()
            .find(|d| d.dataset_id == "transactions_2024")
            .unwrap();
        for field in &mut ds.fields {
            field.sample_values = vec![sentinel.to_string()];
        }
        let ds = org.catalog.dataset("transactions_2024").unwrap();
        let req = request("transactions_2024", "u-analyst-01", "train churn model for Q4", Some(90));
        let policies = org.policies.relevant_to(ds);
        let p1 = org.policies.get("POL-PRIV-01").unwrap();
        let prompt = build_prompt(Stage::Context, &req, &policies, Some(ds), org.catalog.user("u-analyst-01")).unwrap();
        assert!(prompt.text.contains(&p1.text));
        assert!(prompt.text.contains("Confidential"));
        assert!(!prompt.text.contains(sentinel));
        assert_eq!(prompt.template, PROMPT_TEMPLATE_ID);
    }

    #[test]
    fn empty_policy_list_gives_minimal_prompt() {
        let req = request("nowhere", "nobody", "reporting", None);
        let prompt = build_prompt(Stage::Compliance, &req, &[], None, None).unwrap();
        assert!(prompt.entries.iter().all(|e| e.class == MetaClass::RequestField));
    }

    #[test]
    fn raw_value_entry_is_refused() {
        let entries = vec![
            MetaEntry::new("field.name", MetaClass::FieldName, "email"),
            MetaEntry::new("field.email.sample", MetaClass::RawValue, "jane@example.com"),
        ];
        assert_eq!(
            Prompt::from_entries(Stage::Context, entries).unwrap_err(),
            PromptError::RawValue("field.email.sample".into())
        );
    }
}
