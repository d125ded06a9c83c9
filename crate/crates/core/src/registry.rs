//! Declarative registry of policies, gates and controls.
//!
//! One JSON document per line, discriminated by `type`:
//!
//! ```text
//! {"type":"policy","policy_id":"POL-GOV-01",...}
//! {"type":"gate","gate_id":"NoStatedPurpose","citation":"POL-GOV-02","message":"..."}
//! {"type":"control","control_id":"tokenize_pii","description":"...","kind":"tokenize_pii","mitigates":[...]}
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use serde::{Deserialize, Serialize};

use crate::control::{ControlDefinition, ControlRegistry};
use crate::gates::{GateRule, GateSet};
use crate::policy::{Policy, PolicyStore};

const DEFAULT_REGISTRY: &str = include_str!("../registry/default.jsonl");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Document {
    Policy(Policy),
    Gate(GateRule),
    Control(ControlDefinition),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("duplicate {kind} id `{id}` on line {line}")]
    Duplicate { kind: &'static str, id: String, line: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Registry {
    pub policies: PolicyStore,
    pub gates: GateSet,
    pub controls: ControlRegistry,
}

impl Registry {
    /// The registry shipped with the crate.
    pub fn default_registry() -> Self {
        Self::from_jsonl(DEFAULT_REGISTRY).expect("bundled registry is valid")
    }

    pub fn from_jsonl(text: &str) -> Result<Self, RegistryError> {
        let mut policies: Vec<Policy> = Vec::new();
        let mut gates: Vec<GateRule> = Vec::new();
        let mut controls: Vec<ControlDefinition> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let doc: Document = serde_json::from_str(trimmed).map_err(|e| RegistryError::Line {
                line,
                message: e.to_string(),
            })?;
            match doc {
                Document::Policy(p) => {
                    if policies.iter().any(|q| q.policy_id == p.policy_id) {
                        return Err(RegistryError::Duplicate {
                            kind: "policy",
                            id: p.policy_id,
                            line,
                        });
                    }
                    policies.push(p);
                }
                Document::Gate(g) => {
                    if gates.iter().any(|q| q.gate_id == g.gate_id) {
                        return Err(RegistryError::Duplicate {
                            kind: "gate",
                            id: g.gate_id.to_string(),
                            line,
                        });
                    }
                    gates.push(g);
                }
                Document::Control(c) => {
                    if controls.iter().any(|q| q.control.control_id == c.control.control_id) {
                        return Err(RegistryError::Duplicate {
                            kind: "control",
                            id: c.control.control_id,
                            line,
                        });
                    }
                    controls.push(c);
                }
            }
        }
        Ok(Self {
            policies: PolicyStore::new(policies),
            gates: GateSet::new(gates),
            controls: ControlRegistry::new(controls),
        })
    }

    /// Policies, then gates (declared order), then controls; one per line.
    pub fn to_jsonl(&self) -> String {
        let docs = self
            .policies
            .iter()
            .cloned()
            .map(Document::Policy)
            .chain(self.gates.rules().iter().cloned().map(Document::Gate))
            .chain(self.controls.entries().iter().cloned().map(Document::Control));
        let mut out = String::new();
        for doc in docs {
            out.push_str(&serde_json::to_string(&doc).expect("registry documents serialize"));
            out.push('\n');
        }
        out
    }
}
