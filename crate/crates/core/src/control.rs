use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlKind {
    TokenizePii,
    AggregateOnly,
    TimeBoxedAccess,
    EnhancedLogging,
    ApprovalRequired { approver_role: String },
    DpoReview,
    DsaRequired,
    DpaRequired,
    RetentionCap { days: u32 },
}

/// An enforceable mitigation attached to a conditional decision.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Control {
    pub control_id: String,
    pub description: String,
    pub kind: ControlKind,
}

/// Registry entry: a control plus the failure rules it mitigates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlDefinition {
    #[serde(flatten)]
    pub control: Control,
    #[serde(default)]
    pub mitigates: Vec<String>,
}

/// Closed set of controls. Anything not registered here cannot be proposed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ControlRegistry {
    entries: Vec<ControlDefinition>,
}

impl ControlRegistry {
    pub fn new(entries: Vec<ControlDefinition>) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &[ControlDefinition] {
        &self.entries
    }

    pub fn get(&self, control_id: &str) -> Option<&Control> {
        self.entries
            .iter()
            .map(|e| &e.control)
            .find(|c| c.control_id == control_id)
    }

    /// Controls that mitigate `rule`, in registry order.
    pub fn controls_for(&self, rule: &str) -> Vec<&Control> {
        self.entries
            .iter()
            .filter(|e| e.mitigates.iter().any(|m| m == rule))
            .map(|e| &e.control)
            .collect()
    }

    pub fn is_mitigable(&self, rule: &str) -> bool {
        self.entries
            .iter()
            .any(|e| e.mitigates.iter().any(|m| m == rule))
    }

    /// Union of controls for `rules`, deduplicated, first-seen order.
    pub fn controls_for_all<'a, I>(&self, rules: I) -> Vec<Control>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut out: Vec<Control> = Vec::new();
        for rule in rules {
            for control in self.controls_for(rule) {
                if !out.iter().any(|c| c.control_id == control.control_id) {
                    out.push(control.clone());
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_serialize_in_snake_case() {
        let json = serde_json::to_string(&ControlKind::ApprovalRequired {
            approver_role: "dpo".into(),
        })
        .unwrap();
        assert_eq!(json, r#"{"approval_required":{"approver_role":"dpo"}}"#);
        assert_eq!(
            serde_json::to_string(&ControlKind::TokenizePii).unwrap(),
            "\"tokenize_pii\""
        );
    }

    #[test]
    fn union_is_deduplicated_in_first_seen_order() {
        let def = |id: &str, mitigates: &[&str]| ControlDefinition {
            control: Control {
                control_id: id.into(),
                description: id.into(),
                kind: ControlKind::EnhancedLogging,
            },
            mitigates: mitigates.iter().map(|s| s.to_string()).collect(),
        };
        let registry = ControlRegistry::new(vec![
            def("tokenize_pii", &["pii_modeling", "pii_cross_border"]),
            def("dpo_review", &["pii_cross_border", "pii_location_residency"]),
        ]);
        let ids: Vec<_> = registry
            .controls_for_all(["pii_cross_border", "pii_location_residency", "pii_modeling"])
            .into_iter()
            .map(|c| c.control_id)
            .collect();
        assert_eq!(ids, ["tokenize_pii", "dpo_review"]);
        assert!(!registry.is_mitigable("sod_violation"));
    }
}
