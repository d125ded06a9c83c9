//! Purpose categories and the deterministic keyword classifier used by the
//! context stage and the rule reasoner.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PurposeCategory {
    AnalyticsModeling,
    Reporting,
    Marketing,
    ComplianceAudit,
    IncidentResponse,
    DataSubjectRequest,
    Operations,
}

impl PurposeCategory {
    pub const ALL: [PurposeCategory; 7] = [
        Self::AnalyticsModeling,
        Self::Reporting,
        Self::Marketing,
        Self::ComplianceAudit,
        Self::IncidentResponse,
        Self::DataSubjectRequest,
        Self::Operations,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::AnalyticsModeling => "analytics_modeling",
            Self::Reporting => "reporting",
            Self::Marketing => "marketing",
            Self::ComplianceAudit => "compliance_audit",
            Self::IncidentResponse => "incident_response",
            Self::DataSubjectRequest => "data_subject_request",
            Self::Operations => "operations",
        }
    }
}

impl fmt::Display for PurposeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PurposeCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown purpose category `{s}`"))
    }
}

/// Keyword table, checked in order; the first category with a matching
/// keyword wins. A trailing `*` matches any token with that prefix.
const KEYWORDS: &[(PurposeCategory, &[&str])] = &[
    (
        PurposeCategory::DataSubjectRequest,
        &["data subject", "subject access", "dsr", "erasure", "portability"],
    ),
    (
        PurposeCategory::IncidentResponse,
        &["incident*", "urgent", "emergency", "outage*", "on call", "hotfix"],
    ),
    (
        PurposeCategory::ComplianceAudit,
        &["audit*", "sox", "regulator*", "compliance review", "internal controls"],
    ),
    (
        PurposeCategory::Marketing,
        &["marketing", "co marketing", "campaign*", "promotion*", "outreach"],
    ),
    (
        PurposeCategory::AnalyticsModeling,
        &["model*", "churn", "train", "training", "forecast*", "trend*", "analy*", "segmentation"],
    ),
    (
        PurposeCategory::Reporting,
        &["report*", "dashboard*", "kpi*", "month end", "quarterly close"],
    ),
    (
        PurposeCategory::Operations,
        &["operation*", "fulfil*", "support", "inventory", "reconcil*"],
    ),
];

const BROAD_TOKENS: &[&str] = &["all", "everything", "any", "entire", "whole", "broad", "complete"];

/// Result of classifying free-text purpose.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PurposeReading {
    pub category: Option<PurposeCategory>,
    /// Non-empty text that asks for data wholesale ("all customer data").
    pub broad: bool,
    pub empty: bool,
}

fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn matches(tokens: &[String], keyword: &str) -> bool {
    let parts: Vec<&str> = keyword.split(' ').collect();
    tokens.windows(parts.len()).any(|window| {
        window.iter().zip(&parts).all(|(tok, part)| match part.strip_suffix('*') {
            Some(prefix) => tok.starts_with(prefix),
            None => tok == part,
        })
    })
}

pub fn classify_purpose(text: &str) -> PurposeReading {
    let toks = tokens(text);
    if toks.is_empty() {
        return PurposeReading {
            category: None,
            broad: false,
            empty: true,
        };
    }
    let category = KEYWORDS
        .iter()
        .find(|(_, words)| words.iter().any(|w| matches(&toks, w)))
        .map(|(category, _)| *category);
    let broad = toks.iter().any(|t| BROAD_TOKENS.contains(&t.as_str()));
    PurposeReading {
        category,
        broad,
        empty: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn churn_model_is_analytics() {
        let r = classify_purpose("train churn model for Q4");
        assert_eq!(r.category, Some(PurposeCategory::AnalyticsModeling));
        assert!(!r.broad);
    }

    #[test]
    fn vague_request_has_no_category() {
        let r = classify_purpose("need all customer data");
        assert_eq!(r.category, None);
        assert!(r.broad);
        assert!(!r.empty);
    }

    #[test]
    fn empty_and_punctuation_only_are_empty() {
        assert!(classify_purpose("").empty);
        assert!(classify_purpose("  -- ").empty);
    }

    #[test]
    fn earlier_rows_win() {
        // "urgent" (incident) precedes "report" (reporting)
        let r = classify_purpose("urgent report on failed payments");
        assert_eq!(r.category, Some(PurposeCategory::IncidentResponse));
        let r = classify_purpose("Fulfil GDPR data subject access request export");
        assert_eq!(r.category, Some(PurposeCategory::DataSubjectRequest));
    }

    #[test]
    fn train_does_not_match_inside_words() {
        let r = classify_purpose("constraint review");
        assert_eq!(r.category, None);
    }
}
