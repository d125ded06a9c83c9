//! JSON documents exchanged with the service, beyond the core types.

use std::fmt;
use std::str::FromStr;

use accessgov_core::audit::OnAuditFailure;
use accessgov_core::catalog::RecordError;
use accessgov_core::reasoner::CircuitSnapshot;
use accessgov_core::request::FieldError;
use accessgov_core::{AuditRecord, ModelSettings};
use serde::{Deserialize, Serialize};

/// Error body for every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
    /// Request fields that failed parsing or validation.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<FieldError>,
    /// Catalog records that failed validation.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<RecordError>,
}

impl ApiError {
    pub fn new(error: impl Into<String>) -> Self {
        Self {
            error: error.into(),
            fields: Vec::new(),
            records: Vec::new(),
        }
    }
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.error)?;
        for e in &self.fields {
            write!(f, "\n  {e}")?;
        }
        for e in &self.records {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

/// One page of `GET /audit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditPage {
    pub records: Vec<AuditRecord>,
    /// Pass as `after` to fetch the next page; absent on the last page.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_after: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogCounts {
    pub datasets: usize,
    pub users: usize,
    pub sod_rules: usize,
    pub parties: usize,
    pub policies: usize,
}

/// `GET /healthz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub org: String,
    pub reasoner: ModelSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<CircuitSnapshot>,
    pub audit_records: usize,
    pub audit_mode: OnAuditFailure,
    pub catalog: CatalogCounts,
    pub eval_running: bool,
}

/// Addressable parts of the org under `/catalog/{section}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogSection {
    Datasets,
    Users,
    Sod,
    Agreements,
    Policies,
}

impl CatalogSection {
    pub const ALL: [CatalogSection; 5] = [
        Self::Datasets,
        Self::Users,
        Self::Sod,
        Self::Agreements,
        Self::Policies,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Datasets => "datasets",
            Self::Users => "users",
            Self::Sod => "sod",
            Self::Agreements => "agreements",
            Self::Policies => "policies",
        }
    }
}

impl fmt::Display for CatalogSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CatalogSection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sod_rules" => Ok(Self::Sod),
            _ => Self::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| {
                format!("unknown catalog section `{s}` (expected datasets, users, sod, agreements or policies)")
            }),
        }
    }
}
