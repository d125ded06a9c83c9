//! Replay reasoner: returns fixture entries keyed by (case id, stage).

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::label::Stage;

use super::{FailureCause, ModelSettings, Reasoner, ReasonerFailure, ReasonerKind, ReasonerQuery, ReasonerVerdict};

pub const SCRIPT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptEntry {
    /// Simulated terminal failure.
    Failure {
        failure: FailureCause,
        #[serde(default)]
        message: String,
    },
    Verdict(ReasonerVerdict),
}

pub type CaseScript = BTreeMap<Stage, ScriptEntry>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub cases: BTreeMap<String, CaseScript>,
    /// Per-seed replacements, used to inject run-to-run noise.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub seed_overrides: BTreeMap<u64, BTreeMap<String, CaseScript>>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error("reading script {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing script: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported script version {0} (expected {SCRIPT_VERSION})")]
    Version(u32),
}

impl ScriptFile {
    pub fn from_json(text: &str) -> Result<Self, ScriptError> {
        let file: ScriptFile = serde_json::from_str(text)?;
        if file.version != SCRIPT_VERSION {
            return Err(ScriptError::Version(file.version));
        }
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScriptError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScriptError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Clone)]
pub struct ScriptedReasoner {
    script: Arc<ScriptFile>,
    seed: Option<u64>,
}

impl ScriptedReasoner {
    pub fn new(script: Arc<ScriptFile>) -> Self {
        Self { script, seed: None }
    }

    /// View of the script as replayed under `seed`, overrides applied.
    pub fn for_seed(script: Arc<ScriptFile>, seed: u64) -> Self {
        Self {
            script,
            seed: Some(seed),
        }
    }

    fn lookup(&self, case_id: &str, stage: Stage) -> Option<&ScriptEntry> {
        let overridden = self
            .seed
            .and_then(|seed| self.script.seed_overrides.get(&seed))
            .and_then(|cases| cases.get(case_id))
            .and_then(|stages| stages.get(&stage));
        overridden.or_else(|| self.script.cases.get(case_id).and_then(|s| s.get(&stage)))
    }
}

/// Case id for a request id; benchmark runs use `case@seedN`.
fn case_keys(request_id: &str) -> impl Iterator<Item = &str> {
    let base = request_id.split_once('@').map(|(base, _)| base);
    std::iter::once(request_id).chain(base)
}

impl Reasoner for ScriptedReasoner {
    fn settings(&self) -> ModelSettings {
        ModelSettings {
            reasoner: ReasonerKind::Scripted,
            model: Some(format!("script-v{}", self.script.version)),
            temperature: None,
        }
    }

    fn interpret(&self, query: &ReasonerQuery<'_>) -> Result<ReasonerVerdict, ReasonerFailure> {
        let entry = case_keys(&query.request.request_id)
            .find_map(|key| self.lookup(key, query.stage))
            .ok_or_else(|| {
                ReasonerFailure::new(
                    FailureCause::NonRetryable,
                    format!(
                        "no scripted entry for {} / {}",
                        query.request.request_id, query.stage
                    ),
                )
            })?;
        match entry {
            ScriptEntry::Verdict(v) => Ok(v.clone()),
            ScriptEntry::Failure { failure, message } => Err(ReasonerFailure {
                cause: *failure,
                message: if message.is_empty() {
                    "scripted failure".into()
                } else {
                    message.clone()
                },
                attempts: 1,
            }),
        }
    }
}
