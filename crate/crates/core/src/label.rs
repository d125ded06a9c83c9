use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Final (or raw) outcome of an access decision.
///
/// Serialized as `"APPROVE"`, `"DENY"` or `"CONDITIONAL"`; the short codes
/// `"A"`, `"D"` and `"C"` are accepted on input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecisionLabel {
    #[serde(rename = "APPROVE", alias = "A")]
    Approve,
    #[serde(rename = "DENY", alias = "D")]
    Deny,
    #[serde(rename = "CONDITIONAL", alias = "C")]
    Conditional,
}

impl DecisionLabel {
    /// Class order used by confusion matrices and reports.
    pub const ALL: [DecisionLabel; 3] = [Self::Approve, Self::Deny, Self::Conditional];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Approve => "APPROVE",
            Self::Deny => "DENY",
            Self::Conditional => "CONDITIONAL",
        }
    }

    pub fn code(self) -> char {
        match self {
            Self::Approve => 'A',
            Self::Deny => 'D',
            Self::Conditional => 'C',
        }
    }

    pub fn index(self) -> usize {
        match self {
            Self::Approve => 0,
            Self::Deny => 1,
            Self::Conditional => 2,
        }
    }

    /// Permissiveness rank: Deny < Conditional < Approve.
    pub fn permissiveness(self) -> u8 {
        match self {
            Self::Deny => 0,
            Self::Conditional => 1,
            Self::Approve => 2,
        }
    }
}

impl fmt::Display for DecisionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown decision label `{0}`")]
pub struct ParseLabelError(pub String);

impl FromStr for DecisionLabel {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" | "APPROVE" => Ok(Self::Approve),
            "D" | "DENY" => Ok(Self::Deny),
            "C" | "CONDITIONAL" => Ok(Self::Conditional),
            _ => Err(ParseLabelError(s.to_string())),
        }
    }
}

/// The five evaluated stages, in pipeline order. Risk synthesis is the
/// aggregation step and does not produce a verdict of its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Context,
    UserValidation,
    DataClassification,
    BusinessPurpose,
    Compliance,
}

impl Stage {
    pub const ORDER: [Stage; 5] = [
        Self::Context,
        Self::UserValidation,
        Self::DataClassification,
        Self::BusinessPurpose,
        Self::Compliance,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Context => "context",
            Self::UserValidation => "user_validation",
            Self::DataClassification => "data_classification",
            Self::BusinessPurpose => "business_purpose",
            Self::Compliance => "compliance",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ORDER
            .into_iter()
            .find(|stage| stage.as_str() == s)
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

/// Stage status, ordered by severity (`Pass < Uncertain < Fail`).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    #[default]
    Pass,
    Uncertain,
    Fail,
}

impl StageStatus {
    pub const ALL: [StageStatus; 3] = [Self::Pass, Self::Uncertain, Self::Fail];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Uncertain => "uncertain",
            Self::Fail => "fail",
        }
    }
}

impl fmt::Display for StageStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
