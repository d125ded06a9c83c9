use serde::{Deserialize, Serialize};

use crate::control::{Control, ControlRegistry};
use crate::label::{DecisionLabel, Stage, StageStatus};
use crate::stages::StageVerdict;

/// Summary of the five stage verdicts that aggregation decides on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateScore {
    pub per_stage_status: Vec<(Stage, StageStatus)>,
    /// Number of Uncertain stages.
    pub uncertainty: u8,
    /// Every Fail/Uncertain rule has a registered control.
    pub mitigable: bool,
    /// Rules without a control; empty when `mitigable`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unmitigated: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aggregate {
    pub score: AggregateScore,
    pub label: DecisionLabel,
    pub controls: Vec<Control>,
}

/// All pass: APPROVE. Otherwise CONDITIONAL when every failure rule is
/// mitigable, else DENY (escalate). Deny wins any mix.
pub fn aggregate_and_decide(verdicts: &[StageVerdict], registry: &ControlRegistry) -> Aggregate {
    let per_stage_status: Vec<(Stage, StageStatus)> = verdicts.iter().map(|v| (v.stage, v.status)).collect();
    let uncertainty = verdicts
        .iter()
        .filter(|v| v.status == StageStatus::Uncertain)
        .count() as u8;

    let mut rules: Vec<&str> = Vec::new();
    let mut unmitigated: Vec<String> = Vec::new();
    for v in verdicts.iter().filter(|v| v.status != StageStatus::Pass) {
        if v.failure_rules.is_empty() {
            unmitigated.push(format!("{}:unspecified", v.stage));
        }
        for rule in &v.failure_rules {
            if !rules.contains(&rule.as_str()) {
                rules.push(rule);
                if !registry.is_mitigable(rule) {
                    unmitigated.push(rule.clone());
                }
            }
        }
    }
    let any_issue = verdicts.iter().any(|v| v.status != StageStatus::Pass);
    let mitigable = unmitigated.is_empty();
    let score = AggregateScore {
        per_stage_status,
        uncertainty,
        mitigable,
        unmitigated,
    };
    if !any_issue {
        return Aggregate {
            score,
            label: DecisionLabel::Approve,
            controls: Vec::new(),
        };
    }
    if mitigable {
        let controls = registry.controls_for_all(rules);
        if !controls.is_empty() {
            return Aggregate {
                score,
                label: DecisionLabel::Conditional,
                controls,
            };
        }
    }
    Aggregate {
        score,
        label: DecisionLabel::Deny,
        controls: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::Registry;

    fn verdict(stage: Stage, status: StageStatus, rules: &[&str]) -> StageVerdict {
        let mut v = StageVerdict::new(stage);
        for r in rules {
            v.flag(status, r);
        }
        v.status = status;
        v
    }

    fn all_pass() -> Vec<StageVerdict> {
        Stage::ORDER.iter().map(|s| verdict(*s, StageStatus::Pass, &[])).collect()
    }

    #[test]
    fn all_pass_approves_without_controls() {
        let reg = Registry::default_registry();
        let agg = aggregate_and_decide(&all_pass(), &reg.controls);
        assert_eq!(agg.label, DecisionLabel::Approve);
        assert!(agg.controls.is_empty());
        assert!(agg.score.mitigable);
        assert_eq!(agg.score.uncertainty, 0);
    }

    #[test]
    fn pii_modeling_is_conditional_with_tokenization_and_dpo() {
        let reg = Registry::default_registry();
        let mut vs = all_pass();
        vs[4] = verdict(
            Stage::Compliance,
            StageStatus::Uncertain,
            &["pii_modeling", "pii_location_residency"],
        );
        let agg = aggregate_and_decide(&vs, &reg.controls);
        assert_eq!(agg.label, DecisionLabel::Conditional);
        let ids: Vec<_> = agg.controls.iter().map(|c| c.control_id.as_str()).collect();
        assert_eq!(ids, ["tokenize_pii", "dpo_review"]);
    }

    #[test]
    fn unmapped_uncertainty_escalates_to_deny() {
        let reg = Registry::default_registry();
        let mut vs = all_pass();
        vs[4] = verdict(Stage::Compliance, StageStatus::Uncertain, &["mapping_uncertain"]);
        let agg = aggregate_and_decide(&vs, &reg.controls);
        assert_eq!(agg.label, DecisionLabel::Deny);
        assert_eq!(agg.score.unmitigated, ["mapping_uncertain"]);
    }

    #[test]
    fn mixed_mitigable_and_unmitigable_denies() {
        let reg = Registry::default_registry();
        let mut vs = all_pass();
        vs[3] = verdict(Stage::BusinessPurpose, StageStatus::Uncertain, &["no_time_bound"]);
        vs[1] = verdict(Stage::UserValidation, StageStatus::Fail, &["clearance_insufficient"]);
        let agg = aggregate_and_decide(&vs, &reg.controls);
        assert_eq!(agg.label, DecisionLabel::Deny);
        assert!(agg.controls.is_empty());
    }
}
