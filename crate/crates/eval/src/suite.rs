//! Benchmark case definitions and the suite file format.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use accessgov_core::{AccessRequest, DecisionLabel, SharingScope};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub const SUITE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    BasicAccess,
    CrossDepartment,
    Financial,
    Emergency,
    ComplianceSpecific,
    ExportSharing,
    TimeSensitive,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Self::BasicAccess,
        Self::CrossDepartment,
        Self::Financial,
        Self::Emergency,
        Self::ComplianceSpecific,
        Self::ExportSharing,
        Self::TimeSensitive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::BasicAccess => "basic_access",
            Self::CrossDepartment => "cross_department",
            Self::Financial => "financial",
            Self::Emergency => "emergency",
            Self::ComplianceSpecific => "compliance_specific",
            Self::ExportSharing => "export_sharing",
            Self::TimeSensitive => "time_sensitive",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown family `{s}`"))
    }
}

/// Request fields a case fixes; id and timestamp are filled in per run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestTemplate {
    pub requester_id: String,
    pub dataset_id: String,
    #[serde(default)]
    pub purpose: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_retention_days: Option<u32>,
    pub sharing_scope: SharingScope,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destination_region: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_party: Option<String>,
    #[serde(default)]
    pub third_party_processor: bool,
}

impl RequestTemplate {
    pub fn instantiate(&self, request_id: String, submitted_at: DateTime<Utc>) -> AccessRequest {
        AccessRequest {
            request_id,
            requester_id: self.requester_id.clone(),
            dataset_id: self.dataset_id.clone(),
            purpose: self.purpose.clone(),
            declared_retention_days: self.declared_retention_days,
            sharing_scope: self.sharing_scope,
            destination_region: self.destination_region.clone(),
            external_party: self.external_party.clone(),
            third_party_processor: self.third_party_processor,
            submitted_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkCase {
    pub case_id: String,
    pub family: Family,
    #[serde(default)]
    pub title: String,
    pub request: RequestTemplate,
    pub ground_truth: DecisionLabel,
    #[serde(default)]
    pub must_deny: bool,
    #[serde(default)]
    pub must_approve: bool,
    /// Control ids a correct CONDITIONAL decision must carry.
    #[serde(default)]
    pub required_controls: Vec<String>,
    /// Regulation tags the rationale must cover.
    #[serde(default)]
    pub expected_regulations: Vec<String>,
}

impl BenchmarkCase {
    /// Request id used for `seed`; scripted fixtures key on the part before `@`.
    pub fn request_id(&self, seed: u64) -> String {
        format!("{}@{seed}", self.case_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    pub version: u32,
    #[serde(default)]
    pub description: String,
    /// Org file, relative to the suite file.
    pub org: String,
    pub submitted_at: DateTime<Utc>,
    pub cases: Vec<BenchmarkCase>,
}

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing suite: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported suite version {0} (expected {SUITE_VERSION})")]
    Version(u32),
    #[error("invalid suite: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

impl Suite {
    pub fn from_json(text: &str) -> Result<Self, SuiteError> {
        let suite: Suite = serde_json::from_str(text)?;
        if suite.version != SUITE_VERSION {
            return Err(SuiteError::Version(suite.version));
        }
        suite.validate()?;
        Ok(suite)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SuiteError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SuiteError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Per-case invariants; any suite size is allowed.
    pub fn validate(&self) -> Result<(), SuiteError> {
        let mut problems = Vec::new();
        if self.cases.is_empty() {
            problems.push("suite has no cases".to_string());
        }
        let mut seen = BTreeSet::new();
        for case in &self.cases {
            let id = &case.case_id;
            if id.trim().is_empty() || id.contains('@') {
                problems.push(format!("case id `{id}` must be non-empty and free of '@'"));
            }
            if !seen.insert(id.as_str()) {
                problems.push(format!("duplicate case id `{id}`"));
            }
            if case.must_deny && case.ground_truth != DecisionLabel::Deny {
                problems.push(format!("{id}: must_deny requires ground truth DENY"));
            }
            if case.must_approve && case.ground_truth != DecisionLabel::Approve {
                problems.push(format!("{id}: must_approve requires ground truth APPROVE"));
            }
            if case.ground_truth != DecisionLabel::Conditional && !case.required_controls.is_empty() {
                problems.push(format!("{id}: required_controls only apply to CONDITIONAL cases"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SuiteError::Invalid(problems))
        }
    }

    /// Ground-truth supports in class order (A, D, C).
    pub fn supports(&self) -> [usize; 3] {
        let mut out = [0; 3];
        for case in &self.cases {
            out[case.ground_truth.index()] += 1;
        }
        out
    }

    pub fn families(&self) -> BTreeSet<Family> {
        self.cases.iter().map(|c| c.family).collect()
    }

    /// Shape of the shipped suite: 14 cases, all seven families, A=4 D=5 C=5.
    pub fn check_reference_shape(&self) -> Result<(), String> {
        if self.cases.len() != 14 {
            return Err(format!("expected 14 cases, found {}", self.cases.len()));
        }
        if self.families().len() != Family::ALL.len() {
            return Err(format!("expected 7 families, found {}", self.families().len()));
        }
        if self.supports() != [4, 5, 5] {
            return Err(format!("expected supports A=4 D=5 C=5, found {:?}", self.supports()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHIPPED: &str = include_str!("../../../benchmark/suite.json");

    #[test]
    fn shipped_suite_has_reference_shape() {
        let suite = Suite::from_json(SHIPPED).unwrap();
        suite.check_reference_shape().unwrap();
        assert_eq!(suite.cases.iter().filter(|c| c.must_deny).count(), 5);
        assert_eq!(suite.cases.iter().filter(|c| c.must_approve).count(), 4);
    }

    #[test]
    fn must_deny_flag_requires_deny_truth() {
        let mut suite = Suite::from_json(SHIPPED).unwrap();
        suite.cases[0].must_deny = true;
        let err = suite.validate().unwrap_err();
        assert!(err.to_string().contains("must_deny requires ground truth DENY"), "{err}");
    }

    #[test]
    fn request_ids_carry_the_seed() {
        let suite = Suite::from_json(SHIPPED).unwrap();
        let case = &suite.cases[0];
        let req = case.request.instantiate(case.request_id(3), suite.submitted_at);
        assert_eq!(req.request_id, format!("{}@3", case.case_id));
        req.validate().unwrap();
    }
}
