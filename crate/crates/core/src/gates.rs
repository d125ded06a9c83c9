//! Non-negotiable policy gates, evaluated after the stages and before
//! aggregation. Any hit forces DENY.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, FieldCategory, SensitivityLabel};
use crate::label::Stage;
use crate::purpose::PurposeCategory;
use crate::request::{AccessRequest, SharingScope};
use crate::stages::{signal, SignalValue, Signals, StageVerdict};

/// The ten gates, in evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GateId {
    MissingIdentityOrRole,
    NoStatedPurpose,
    SoDViolation,
    RestrictedFinanceNoClearance,
    ExternalSharingNoAgreement,
    CrossBorderNoDpoApproval,
    PiiModelingNoProtection,
    RetentionBeyondPolicy,
    ThirdPartyNoDpa,
    NoPolicyContext,
}

impl GateId {
    pub const ALL: [GateId; 10] = [
        Self::MissingIdentityOrRole,
        Self::NoStatedPurpose,
        Self::SoDViolation,
        Self::RestrictedFinanceNoClearance,
        Self::ExternalSharingNoAgreement,
        Self::CrossBorderNoDpoApproval,
        Self::PiiModelingNoProtection,
        Self::RetentionBeyondPolicy,
        Self::ThirdPartyNoDpa,
        Self::NoPolicyContext,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::MissingIdentityOrRole => "MissingIdentityOrRole",
            Self::NoStatedPurpose => "NoStatedPurpose",
            Self::SoDViolation => "SoDViolation",
            Self::RestrictedFinanceNoClearance => "RestrictedFinanceNoClearance",
            Self::ExternalSharingNoAgreement => "ExternalSharingNoAgreement",
            Self::CrossBorderNoDpoApproval => "CrossBorderNoDpoApproval",
            Self::PiiModelingNoProtection => "PiiModelingNoProtection",
            Self::RetentionBeyondPolicy => "RetentionBeyondPolicy",
            Self::ThirdPartyNoDpa => "ThirdPartyNoDpa",
            Self::NoPolicyContext => "NoPolicyContext",
        }
    }

    fn position(self) -> usize {
        Self::ALL.iter().position(|g| *g == self).unwrap_or(usize::MAX)
    }
}

impl fmt::Display for GateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GateId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| format!("unknown gate `{s}`"))
    }
}

/// Registry entry for a gate: which policy it enforces and the fixed
/// denial message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateRule {
    pub gate_id: GateId,
    pub citation: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub signal: String,
    pub value: SignalValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateHit {
    pub gate_id: GateId,
    pub evidence: Vec<Evidence>,
    pub citation: String,
    pub message: String,
}

/// The active gate set. Always evaluated in declared (table) order, no
/// matter the order rules were registered in.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GateSet {
    rules: Vec<GateRule>,
}

impl GateSet {
    pub fn new(mut rules: Vec<GateRule>) -> Self {
        rules.sort_by_key(|r| r.gate_id.position());
        rules.dedup_by_key(|r| r.gate_id);
        Self { rules }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn rules(&self) -> &[GateRule] {
        &self.rules
    }

    pub fn contains(&self, gate: GateId) -> bool {
        self.rules.iter().any(|r| r.gate_id == gate)
    }

    pub fn without(&self, gate: GateId) -> Self {
        Self {
            rules: self.rules.iter().filter(|r| r.gate_id != gate).cloned().collect(),
        }
    }

    pub fn retain(&self, keep: impl Fn(GateId) -> bool) -> Self {
        Self {
            rules: self.rules.iter().filter(|r| keep(r.gate_id)).cloned().collect(),
        }
    }

    /// First firing gate in declared order.
    pub fn evaluate(&self, input: &GateInput<'_>) -> Option<GateHit> {
        self.rules.iter().find_map(|rule| fire(rule, input))
    }

    /// Every firing gate, for diagnostics.
    pub fn evaluate_all(&self, input: &GateInput<'_>) -> Vec<GateHit> {
        self.rules.iter().filter_map(|rule| fire(rule, input)).collect()
    }
}

fn fire(rule: &GateRule, input: &GateInput<'_>) -> Option<GateHit> {
    predicate(rule.gate_id, input).map(|evidence| GateHit {
        gate_id: rule.gate_id,
        evidence,
        citation: rule.citation.clone(),
        message: rule.message.clone(),
    })
}

pub struct GateInput<'a> {
    pub request: &'a AccessRequest,
    pub verdicts: &'a [StageVerdict],
    pub catalog: &'a Catalog,
    pub policies: &'a crate::policy::PolicyStore,
}

impl GateInput<'_> {
    fn signals(&self, stage: Stage) -> Option<&Signals> {
        self.verdicts.iter().find(|v| v.stage == stage).map(|v| &v.signals)
    }

    fn flag(&self, stage: Stage, name: &str) -> Option<bool> {
        self.signals(stage).and_then(|s| s.flag(name))
    }

    fn text(&self, stage: Stage, name: &str) -> Option<&str> {
        self.signals(stage).and_then(|s| s.text(name))
    }

    fn purpose(&self) -> Option<PurposeCategory> {
        self.text(Stage::Context, signal::PURPOSE_CATEGORY)
            .and_then(|c| c.parse().ok())
    }
}

fn ev(signal: &str, value: impl Into<SignalValue>) -> Evidence {
    Evidence {
        signal: signal.to_string(),
        value: value.into(),
    }
}

/// `Some(evidence)` when the gate's predicate holds. Reads only
/// deterministic stage signals, the request and the catalog.
pub fn predicate(gate: GateId, input: &GateInput<'_>) -> Option<Vec<Evidence>> {
    let request = input.request;
    let dataset = input.catalog.dataset(&request.dataset_id);
    let party = request.external_party.as_deref().unwrap_or("");
    match gate {
        GateId::MissingIdentityOrRole => {
            let verified = input
                .flag(Stage::UserValidation, signal::IDENTITY_VERIFIED)
                .unwrap_or(false);
            let role = input.text(Stage::UserValidation, signal::ROLE).unwrap_or("");
            (!verified || role.trim().is_empty()).then(|| {
                vec![
                    ev(signal::IDENTITY_VERIFIED, verified),
                    ev(signal::ROLE, role),
                ]
            })
        }
        GateId::NoStatedPurpose => {
            let clear = input
                .flag(Stage::Context, signal::PURPOSE_CLEAR)
                .unwrap_or(false);
            (!clear).then(|| {
                vec![
                    ev(signal::PURPOSE_CLEAR, false),
                    ev("purpose", request.purpose.as_str()),
                ]
            })
        }
        GateId::SoDViolation => {
            let conflict = input
                .flag(Stage::UserValidation, signal::SOD_CONFLICT)
                .unwrap_or(false);
            conflict.then(|| {
                let rule = input.text(Stage::UserValidation, signal::SOD_RULE).unwrap_or("");
                vec![ev(signal::SOD_CONFLICT, true), ev(signal::SOD_RULE, rule)]
            })
        }
        GateId::RestrictedFinanceNoClearance => {
            let dataset = dataset?;
            let restricted = dataset.sensitivity == SensitivityLabel::Restricted;
            let financial = dataset.has_category(FieldCategory::Financial);
            let clearance = input
                .text(Stage::UserValidation, signal::CLEARANCE)
                .and_then(|c| c.parse::<SensitivityLabel>().ok())
                .unwrap_or(SensitivityLabel::Public);
            (restricted && financial && clearance < SensitivityLabel::Restricted).then(|| {
                vec![
                    ev(signal::EFFECTIVE_SENSITIVITY, dataset.sensitivity.as_str()),
                    ev("financial_fields", true),
                    ev(signal::CLEARANCE, clearance.as_str()),
                ]
            })
        }
        GateId::ExternalSharingNoAgreement => {
            let external = request.sharing_scope == SharingScope::ExternalThirdParty;
            let has_dsa = input.catalog.agreements.has_dsa(party);
            (external && !has_dsa).then(|| {
                vec![
                    ev(signal::SHARING_SCOPE, request.sharing_scope.as_str()),
                    ev("external_party", party),
                    ev("has_dsa", false),
                ]
            })
        }
        GateId::CrossBorderNoDpoApproval => {
            if request.sharing_scope != SharingScope::CrossBorder {
                return None;
            }
            let from = dataset.map(|d| d.region.as_str()).unwrap_or("");
            let to = request.destination_region.as_deref().unwrap_or("");
            let approved = input.catalog.agreements.dpo_approved(from, to);
            (!approved).then(|| {
                vec![
                    ev(signal::SHARING_SCOPE, request.sharing_scope.as_str()),
                    ev("source_region", from),
                    ev(signal::DESTINATION_REGION, to),
                    ev("dpo_approval_on_file", false),
                ]
            })
        }
        GateId::PiiModelingNoProtection => {
            let dataset = dataset?;
            let modeling = input.purpose() == Some(PurposeCategory::AnalyticsModeling);
            let pii = input
                .flag(Stage::DataClassification, signal::PII_PRESENT)
                .unwrap_or(false);
            let protected = dataset.supports_tokenization || dataset.supports_aggregation;
            (modeling && pii && !protected).then(|| {
                vec![
                    ev(signal::PURPOSE_CATEGORY, PurposeCategory::AnalyticsModeling.as_str()),
                    ev(signal::PII_PRESENT, true),
                    ev("protection_available", false),
                ]
            })
        }
        GateId::RetentionBeyondPolicy => {
            let dataset = dataset?;
            let declared = request.declared_retention_days?;
            (declared > dataset.max_retention_days).then(|| {
                vec![
                    ev(signal::RETENTION_DAYS, declared),
                    ev("max_retention_days", dataset.max_retention_days),
                ]
            })
        }
        GateId::ThirdPartyNoDpa => {
            let has_dpa = input.catalog.agreements.has_dpa(party);
            (request.third_party_processor && !has_dpa).then(|| {
                vec![
                    ev("third_party_processor", true),
                    ev("external_party", party),
                    ev("has_dpa", false),
                ]
            })
        }
        GateId::NoPolicyContext => {
            let purpose = input.purpose()?;
            let relevant = dataset
                .map(|d| input.policies.relevant_to(d))
                .unwrap_or_default();
            let covered = relevant.iter().any(|p| p.covers_purpose(purpose));
            (!covered).then(|| {
                vec![
                    ev(signal::PURPOSE_CATEGORY, purpose.as_str()),
                    ev(
                        signal::RELEVANT_POLICIES,
                        relevant.iter().map(|p| p.policy_id.clone()).collect::<Vec<_>>(),
                    ),
                ]
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_set_sorts_into_table_order() {
        let rule = |g: GateId| GateRule {
            gate_id: g,
            citation: "P".into(),
            message: "m".into(),
        };
        let set = GateSet::new(vec![
            rule(GateId::NoPolicyContext),
            rule(GateId::MissingIdentityOrRole),
            rule(GateId::SoDViolation),
        ]);
        let order: Vec<_> = set.rules().iter().map(|r| r.gate_id).collect();
        assert_eq!(
            order,
            [GateId::MissingIdentityOrRole, GateId::SoDViolation, GateId::NoPolicyContext]
        );
    }

    #[test]
    fn gate_ids_round_trip_through_strings() {
        for gate in GateId::ALL {
            assert_eq!(gate.as_str().parse::<GateId>().unwrap(), gate);
            let json = serde_json::to_string(&gate).unwrap();
            assert_eq!(json, format!("\"{}\"", gate.as_str()));
        }
    }
}
