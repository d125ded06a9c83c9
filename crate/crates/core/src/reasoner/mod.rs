//! Pluggable interpretation layer consulted by the model-assisted stages.

mod prompt;
mod remote;
mod resilience;
mod rule;
mod scripted;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::label::{DecisionLabel, Stage, StageStatus};
use crate::purpose::PurposeCategory;
use crate::request::{AccessRequest, SharingScope};

pub use prompt::{build_prompt, MetaClass, MetaEntry, Prompt, PromptError, PROMPT_TEMPLATE_ID};
pub use remote::{
    RemoteModelConfig, RemoteReasoner, RemoteRequest, Transport, TransportError, UreqTransport,
    MAX_TEMPERATURE,
};
pub use resilience::{
    call_with_resilience, CallError, CallErrorKind, CircuitBreaker, CircuitSnapshot, CircuitState, Clock, FakeClock,
    Resilient, ResiliencePolicy, ResilienceState, RetryBudget, SystemClock,
};
pub use rule::RuleReasoner;
pub use scripted::{CaseScript, ScriptEntry, ScriptError, ScriptFile, ScriptedReasoner, SCRIPT_VERSION};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasonerEntities {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purpose_category: Option<PurposeCategory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retention_days: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sharing_scope: Option<SharingScope>,
}

/// One stage reading from a reasoner. The suggested label is advisory: it is
/// recorded as the raw-model channel and never decides anything.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasonerVerdict {
    pub status: StageStatus,
    #[serde(default)]
    pub entities: ReasonerEntities,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggested_label: Option<DecisionLabel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub citations: Vec<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
    /// Retries spent obtaining this reading; filled in by the client.
    #[serde(default, skip_serializing)]
    pub retries: u32,
}

impl ReasonerVerdict {
    pub fn pass() -> Self {
        Self {
            status: StageStatus::Pass,
            entities: ReasonerEntities::default(),
            suggested_label: None,
            citations: Vec::new(),
            note: String::new(),
            retries: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCause {
    Timeout,
    BudgetExhausted,
    CircuitOpen,
    NonRetryable,
}

impl FailureCause {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Timeout => "timeout",
            Self::BudgetExhausted => "budget_exhausted",
            Self::CircuitOpen => "circuit_open",
            Self::NonRetryable => "non_retryable",
        }
    }
}

impl fmt::Display for FailureCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Terminal failure of a reasoner call. `decide` turns this into DENY.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("reasoner failed ({cause}) after {attempts} attempt(s): {message}")]
pub struct ReasonerFailure {
    pub cause: FailureCause,
    pub message: String,
    pub attempts: u32,
}

impl ReasonerFailure {
    pub fn new(cause: FailureCause, message: impl Into<String>) -> Self {
        Self {
            cause,
            message: message.into(),
            attempts: 0,
        }
    }
}

/// What a reasoner is asked: one stage of one request, with the prompt the
/// remote client would send.
#[derive(Debug, Clone, Copy)]
pub struct ReasonerQuery<'a> {
    pub request: &'a AccessRequest,
    pub stage: Stage,
    pub prompt: &'a Prompt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasonerKind {
    Rule,
    Scripted,
    Remote,
}

impl ReasonerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Rule => "rule",
            Self::Scripted => "scripted",
            Self::Remote => "remote",
        }
    }
}

impl fmt::Display for ReasonerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReasonerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "rule" => Ok(Self::Rule),
            "scripted" => Ok(Self::Scripted),
            "remote" => Ok(Self::Remote),
            other => Err(format!("unknown reasoner `{other}` (expected rule, scripted or remote)")),
        }
    }
}

/// Settings recorded with every audit record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    pub reasoner: ReasonerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f32>,
}

pub trait Reasoner: Send + Sync {
    fn settings(&self) -> ModelSettings;

    fn interpret(&self, query: &ReasonerQuery<'_>) -> Result<ReasonerVerdict, ReasonerFailure>;

    /// Circuit state for health reporting; `None` for local reasoners.
    fn circuit(&self) -> Option<CircuitSnapshot> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_parses_minimal_document() {
        let v: ReasonerVerdict = serde_json::from_str(r#"{"status":"uncertain"}"#).unwrap();
        assert_eq!(v.status, StageStatus::Uncertain);
        assert_eq!(v.suggested_label, None);
        let v: ReasonerVerdict = serde_json::from_str(
            r#"{"status":"pass","entities":{"purpose_category":"reporting"},"suggested_label":"C"}"#,
        )
        .unwrap();
        assert_eq!(v.entities.purpose_category, Some(PurposeCategory::Reporting));
        assert_eq!(v.suggested_label, Some(DecisionLabel::Conditional));
    }

    #[test]
    fn kind_parses() {
        assert_eq!("remote".parse::<ReasonerKind>().unwrap(), ReasonerKind::Remote);
        assert!("gpt".parse::<ReasonerKind>().is_err());
    }
}
