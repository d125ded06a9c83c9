//! Human summary plus machine fields for every decision, and the stable
//! digest stored in the audit log.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::control::Control;
use crate::gates::GateHit;
use crate::label::{DecisionLabel, Stage, StageStatus};
use crate::policy::PolicyStore;
use crate::stages::{signal, StageVerdict};

/// Identifier recorded next to every rationale hash.
pub const HASH_ALGORITHM: &str = "sha256";

pub const SUMMARY_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionReason {
    InsufficientContext,
    PolicyGate,
    AllStagesPass,
    Mitigable,
    Escalate,
    ReasonerFailure,
}

impl DecisionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::InsufficientContext => "insufficient context",
            Self::PolicyGate => "policy gate violated",
            Self::AllStagesPass => "all stages pass",
            Self::Mitigable => "mitigable with controls",
            Self::Escalate => "escalate",
            Self::ReasonerFailure => "reasoner unavailable, escalate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rationale {
    pub summary: String,
    pub cited_policies: Vec<String>,
    pub stage_findings: Vec<String>,
    pub machine_fields: BTreeMap<String, Value>,
}

pub struct RationaleInput<'a> {
    pub label: DecisionLabel,
    pub raw_label: DecisionLabel,
    pub reason: DecisionReason,
    pub verdicts: &'a [StageVerdict],
    pub controls: &'a [Control],
    pub gate_hit: Option<&'a GateHit>,
    pub policies: &'a PolicyStore,
    /// Extra context for short-circuits and escalations.
    pub detail: Option<&'a str>,
}

fn regulations(verdicts: &[StageVerdict]) -> Vec<String> {
    verdicts
        .iter()
        .find(|v| v.stage == Stage::Compliance)
        .map(|v| v.signals.list(signal::REGULATIONS).to_vec())
        .unwrap_or_default()
}

fn truncate(mut text: String, limit: usize) -> String {
    if text.len() <= limit {
        return text;
    }
    let mut cut = limit.saturating_sub(3);
    while !text.is_char_boundary(cut) {
        cut -= 1;
    }
    text.truncate(cut);
    text.push_str("...");
    text
}

/// Deterministic for identical inputs.
pub fn generate_rationale(input: &RationaleInput<'_>) -> Rationale {
    let mut cited: Vec<String> = Vec::new();
    let mut cite = |id: &str| {
        if input.policies.contains(id) && !cited.iter().any(|c| c == id) {
            cited.push(id.to_string());
        }
    };
    if let Some(hit) = input.gate_hit {
        cite(&hit.citation);
    }
    for v in input.verdicts {
        for c in &v.citations {
            cite(c);
        }
    }

    let stage_findings: Vec<String> = input
        .verdicts
        .iter()
        .map(|v| {
            let mut line = format!("{}: {}", v.stage, v.status);
            if !v.failure_rules.is_empty() {
                line.push_str(&format!(" [{}]", v.failure_rules.join(", ")));
            }
            if !v.notes.is_empty() {
                line.push_str(&format!(" - {}", v.notes));
            }
            line
        })
        .collect();

    let mut summary = format!("{}: {}", input.label, input.reason.as_str());
    if let Some(hit) = input.gate_hit {
        summary.push_str(&format!(" ({}: {})", hit.gate_id, hit.message));
    }
    if let Some(detail) = input.detail {
        summary.push_str(&format!(" - {detail}"));
    }
    summary.push('.');
    let issues: Vec<&str> = input
        .verdicts
        .iter()
        .filter(|v| v.status != StageStatus::Pass)
        .flat_map(|v| v.failure_rules.iter().map(String::as_str))
        .collect();
    if !issues.is_empty() {
        summary.push_str(&format!(" Findings: {}.", issues.join(", ")));
    }
    if input.controls.is_empty() {
        summary.push_str(" No controls required.");
    } else {
        let names: Vec<&str> = input.controls.iter().map(|c| c.description.as_str()).collect();
        summary.push_str(&format!(" Controls: {}.", names.join("; ")));
    }
    if !cited.is_empty() {
        let refs: Vec<String> = cited
            .iter()
            .map(|id| match input.policies.get(id) {
                Some(p) => format!("{id} ({})", p.title),
                None => id.clone(),
            })
            .collect();
        summary.push_str(&format!(" Policies: {}.", refs.join("; ")));
    }
    let summary = truncate(summary, SUMMARY_LIMIT);

    let mut machine_fields = BTreeMap::new();
    machine_fields.insert("decision".into(), json!(input.label));
    machine_fields.insert("raw_label".into(), json!(input.raw_label));
    machine_fields.insert("reason".into(), json!(input.reason));
    machine_fields.insert(
        "gate_id".into(),
        input.gate_hit.map_or(Value::Null, |h| json!(h.gate_id)),
    );
    machine_fields.insert(
        "control_ids".into(),
        json!(input.controls.iter().map(|c| &c.control_id).collect::<Vec<_>>()),
    );
    machine_fields.insert("regulations".into(), json!(regulations(input.verdicts)));
    machine_fields.insert("cited_policies".into(), json!(cited));
    machine_fields.insert(
        "stage_status".into(),
        Value::Object(
            input
                .verdicts
                .iter()
                .map(|v| (v.stage.as_str().to_string(), json!(v.status)))
                .collect(),
        ),
    );

    Rationale {
        summary,
        cited_policies: cited,
        stage_findings,
        machine_fields,
    }
}

impl Rationale {
    /// Canonical bytes: compact JSON of the machine fields (keys sorted),
    /// a newline, then the summary as UTF-8.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec(&canonical(&serde_json::to_value(&self.machine_fields).unwrap_or(Value::Null)))
            .unwrap_or_default();
        bytes.push(b'\n');
        bytes.extend_from_slice(self.summary.as_bytes());
        bytes
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_bytes()))
    }

    pub fn regulations(&self) -> Vec<String> {
        match self.machine_fields.get("regulations") {
            Some(Value::Array(items)) => items.iter().filter_map(|v| v.as_str().map(String::from)).collect(),
            _ => Vec::new(),
        }
    }
}

/// Rebuild with sorted object keys at every depth.
fn canonical(value: &Value) -> Value {
    match value {
        Value::Object(map) => {
            let sorted: BTreeMap<&String, Value> = map.iter().map(|(k, v)| (k, canonical(v))).collect();
            Value::Object(sorted.into_iter().map(|(k, v)| (k.clone(), v)).collect())
        }
        Value::Array(items) => Value::Array(items.iter().map(canonical).collect()),
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input<'a>(policies: &'a PolicyStore) -> RationaleInput<'a> {
        RationaleInput {
            label: DecisionLabel::Approve,
            raw_label: DecisionLabel::Approve,
            reason: DecisionReason::AllStagesPass,
            verdicts: &[],
            controls: &[],
            gate_hit: None,
            policies,
            detail: None,
        }
    }

    #[test]
    fn approve_without_controls_says_so() {
        let store = PolicyStore::default();
        let r = generate_rationale(&input(&store));
        assert!(r.summary.contains("No controls required"));
        assert_eq!(r.machine_fields["decision"], json!("APPROVE"));
    }

    #[test]
    fn identical_inputs_hash_identically() {
        let store = PolicyStore::default();
        let a = generate_rationale(&input(&store));
        let b = generate_rationale(&input(&store));
        assert_eq!(
            serde_json::to_vec(&a.machine_fields).unwrap(),
            serde_json::to_vec(&b.machine_fields).unwrap()
        );
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn canonical_bytes_match_independent_sha256() {
        let store = PolicyStore::default();
        let r = generate_rationale(&input(&store));
        // oracle: hand-assembled canonical form
        let manual = format!(
            "{}\n{}",
            serde_json::to_string(&r.machine_fields).unwrap(),
            r.summary
        );
        assert_eq!(r.canonical_bytes(), manual.as_bytes());
        assert_eq!(r.hash(), hex::encode(Sha256::digest(manual.as_bytes())));
    }

    #[test]
    fn machine_fields_round_trip() {
        let store = PolicyStore::default();
        let r = generate_rationale(&input(&store));
        let text = serde_json::to_string(&r).unwrap();
        let back: Rationale = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn long_summaries_are_capped() {
        let s = truncate("é".repeat(3000), SUMMARY_LIMIT);
        assert!(s.len() <= SUMMARY_LIMIT);
        assert!(s.ends_with("..."));
    }
}
