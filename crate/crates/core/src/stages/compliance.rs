use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::{composition_flags, CompositionFlag, Dataset, FieldCategory};
use crate::control::ControlKind;
use crate::label::{Stage, StageStatus};
use crate::purpose::PurposeCategory;
use crate::request::{AccessRequest, SharingScope};

use super::{prior_signals, rule, signal, StageEnv, StageVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Regulation {
    #[serde(rename = "GDPR")]
    Gdpr,
    #[serde(rename = "HIPAA")]
    Hipaa,
    #[serde(rename = "SOX")]
    Sox,
}

impl Regulation {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Gdpr => "GDPR",
            Self::Hipaa => "HIPAA",
            Self::Sox => "SOX",
        }
    }
}

impl fmt::Display for Regulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionMatch {
    Any,
    Eu,
    NonEu,
}

/// Regions treated as GDPR jurisdictions.
pub const EU_REGIONS: &[&str] = &["EU", "EEA"];

/// One row of the regulation mapping table. Empty slices match anything.
#[derive(Debug, Clone, Copy)]
pub struct MappingRow {
    pub rule: &'static str,
    pub category: Option<FieldCategory>,
    pub flag: Option<CompositionFlag>,
    pub dataset_tag: Option<&'static str>,
    pub scopes: &'static [SharingScope],
    pub region: RegionMatch,
    pub purposes: &'static [PurposeCategory],
    pub regulations: &'static [Regulation],
    /// Covers its category for gap detection.
    pub base: bool,
    /// Row requires controls; it becomes a failure rule of the stage.
    pub requires_controls: bool,
}

const INTERNAL_SCOPES: &[SharingScope] = &[SharingScope::Internal, SharingScope::CrossDepartment];

const ROW: MappingRow = MappingRow {
    rule: "",
    category: None,
    flag: None,
    dataset_tag: None,
    scopes: &[],
    region: RegionMatch::Any,
    purposes: &[],
    regulations: &[],
    base: false,
    requires_controls: false,
};

/// Sensitivity/category x sharing scope x region x purpose -> regulations
/// and required controls. Sensitive categories without a matching base row
/// are mapping gaps.
pub const MAPPING_TABLE: &[MappingRow] = &[
    MappingRow {
        rule: "gdpr_personal_data",
        category: Some(FieldCategory::Pii),
        region: RegionMatch::Eu,
        regulations: &[Regulation::Gdpr],
        base: true,
        ..ROW
    },
    MappingRow {
        rule: "personal_data_domestic",
        category: Some(FieldCategory::Pii),
        scopes: INTERNAL_SCOPES,
        region: RegionMatch::NonEu,
        base: true,
        ..ROW
    },
    MappingRow {
        rule: "pii_modeling",
        category: Some(FieldCategory::Pii),
        purposes: &[PurposeCategory::AnalyticsModeling],
        requires_controls: true,
        ..ROW
    },
    MappingRow {
        rule: "pii_cross_border",
        category: Some(FieldCategory::Pii),
        scopes: &[SharingScope::CrossBorder],
        requires_controls: true,
        ..ROW
    },
    MappingRow {
        rule: "pii_location_residency",
        flag: Some(CompositionFlag::PiiLocation),
        region: RegionMatch::Eu,
        requires_controls: true,
        ..ROW
    },
    MappingRow {
        rule: "hipaa_phi",
        category: Some(FieldCategory::Health),
        scopes: INTERNAL_SCOPES,
        regulations: &[Regulation::Hipaa],
        base: true,
        ..ROW
    },
    MappingRow {
        rule: "hipaa_emergency",
        category: Some(FieldCategory::Health),
        purposes: &[PurposeCategory::IncidentResponse],
        regulations: &[Regulation::Hipaa],
        requires_controls: true,
        ..ROW
    },
    MappingRow {
        rule: "sox_financial_reporting",
        category: Some(FieldCategory::Financial),
        dataset_tag: Some("financial_reporting"),
        scopes: INTERNAL_SCOPES,
        regulations: &[Regulation::Sox],
        base: true,
        ..ROW
    },
    MappingRow {
        rule: "financial_internal",
        category: Some(FieldCategory::Financial),
        scopes: INTERNAL_SCOPES,
        base: true,
        ..ROW
    },
    MappingRow {
        rule: "sox_audit_access",
        category: Some(FieldCategory::Financial),
        dataset_tag: Some("financial_reporting"),
        purposes: &[PurposeCategory::ComplianceAudit],
        regulations: &[Regulation::Sox],
        requires_controls: true,
        ..ROW
    },
    MappingRow {
        rule: "external_share_minimization",
        scopes: &[SharingScope::ExternalThirdParty],
        requires_controls: true,
        ..ROW
    },
];

const SENSITIVE: [FieldCategory; 3] = [FieldCategory::Pii, FieldCategory::Financial, FieldCategory::Health];

pub fn is_eu(region: &str) -> bool {
    EU_REGIONS.iter().any(|r| r.eq_ignore_ascii_case(region))
}

impl MappingRow {
    fn matches(
        &self,
        dataset: &Dataset,
        request: &AccessRequest,
        purpose: Option<PurposeCategory>,
        flags: &BTreeSet<CompositionFlag>,
    ) -> bool {
        self.category.is_none_or(|c| dataset.has_category(c))
            && self.flag.is_none_or(|f| flags.contains(&f))
            && self.dataset_tag.is_none_or(|t| dataset.has_tag(t))
            && (self.scopes.is_empty() || self.scopes.contains(&request.sharing_scope))
            && match self.region {
                RegionMatch::Any => true,
                RegionMatch::Eu => is_eu(&dataset.region),
                RegionMatch::NonEu => !is_eu(&dataset.region),
            }
            && (self.purposes.is_empty() || purpose.is_some_and(|p| self.purposes.contains(&p)))
    }
}

/// Map the request to regulations, required controls and gaps.
pub fn compliance(env: &StageEnv<'_>, prior: &[StageVerdict]) -> StageVerdict {
    let mut verdict = StageVerdict::new(Stage::Compliance);
    let Some(dataset) = env.dataset else {
        verdict.signals.set(signal::REGULATIONS, Vec::<String>::new());
        verdict.flag(StageStatus::Uncertain, rule::MAPPING_UNCERTAIN);
        verdict.note("no catalog entry to map");
        return env.finish(verdict, &[]);
    };
    let purpose: Option<PurposeCategory> = prior_signals(prior, Stage::Context)
        .and_then(|s| s.text(signal::PURPOSE_CATEGORY))
        .and_then(|c| c.parse().ok());
    let flags = composition_flags(&dataset.fields);

    let matched: Vec<&MappingRow> = MAPPING_TABLE
        .iter()
        .filter(|row| row.matches(dataset, env.request, purpose, &flags))
        .collect();
    let regulations: BTreeSet<Regulation> = matched
        .iter()
        .flat_map(|row| row.regulations.iter().copied())
        .collect();
    let gaps: Vec<String> = SENSITIVE
        .into_iter()
        .filter(|c| dataset.has_category(*c))
        .filter(|c| !matched.iter().any(|row| row.base && row.category == Some(*c)))
        .map(|c| c.as_str().to_string())
        .collect();

    verdict.signals.set(
        signal::REGULATIONS,
        regulations
            .iter()
            .map(|r| r.as_str().to_string())
            .collect::<Vec<_>>(),
    );
    let matched_rules: Vec<String> = matched.iter().map(|r| r.rule.to_string()).collect();
    verdict
        .signals
        .set(signal::MATCHED_RULES, matched_rules.clone());
    verdict.signals.set(signal::MAPPING_GAPS, gaps.clone());

    for row in matched.iter().filter(|r| r.requires_controls) {
        verdict.flag(StageStatus::Uncertain, row.rule);
    }
    if !gaps.is_empty() {
        verdict.flag(StageStatus::Uncertain, rule::MAPPING_UNCERTAIN);
        verdict.note(format!(
            "no regulation mapping for {} under {} sharing",
            gaps.join(", "),
            env.request.sharing_scope
        ));
    }

    // Required controls the dataset cannot technically honor.
    let required = env
        .controls
        .controls_for_all(verdict.failure_rules.iter().map(String::as_str));
    let unsupported: Vec<&str> = required
        .iter()
        .filter(|c| match c.kind {
            ControlKind::TokenizePii => !dataset.supports_tokenization,
            ControlKind::AggregateOnly => !dataset.supports_aggregation,
            _ => false,
        })
        .map(|c| c.control_id.as_str())
        .collect();
    if !unsupported.is_empty() {
        verdict.flag(StageStatus::Fail, rule::CONTROL_CONFLICT);
        verdict.note(format!("dataset cannot enforce {}", unsupported.join(", ")));
    }
    if !regulations.is_empty() {
        verdict.note(format!(
            "applicable: {}",
            regulations.iter().map(|r| r.as_str()).collect::<Vec<_>>().join(", ")
        ));
    }

    env.finish(verdict, &matched_rules)
}
