use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharingScope {
    Internal,
    CrossDepartment,
    ExternalThirdParty,
    CrossBorder,
}

impl SharingScope {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Internal => "internal",
            Self::CrossDepartment => "cross_department",
            Self::ExternalThirdParty => "external_third_party",
            Self::CrossBorder => "cross_border",
        }
    }
}

impl fmt::Display for SharingScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A request by a user (`requester_id`) for a dataset for a purpose.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccessRequest {
    pub request_id: String,
    pub requester_id: String,
    pub dataset_id: String,
    #[serde(default)]
    pub purpose: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_retention_days: Option<u32>,
    pub sharing_scope: SharingScope,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destination_region: Option<String>,
    /// Receiving organization for external sharing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_party: Option<String>,
    /// The external party processes the data on the organization's behalf.
    #[serde(default, skip_serializing_if = "is_false")]
    pub third_party_processor: bool,
    pub submitted_at: DateTime<Utc>,
}

fn is_false(value: &bool) -> bool {
    !*value
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid access request: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct RequestValidationError(pub Vec<FieldError>);

impl AccessRequest {
    /// Structural checks only. Missing requester or purpose are decision
    /// inputs (they deny), not schema violations.
    pub fn validate(&self) -> Result<(), RequestValidationError> {
        let mut errors = Vec::new();
        if self.request_id.trim().is_empty() {
            errors.push(FieldError {
                field: "request_id".into(),
                message: "must be non-empty".into(),
            });
        }
        if self.dataset_id.trim().is_empty() {
            errors.push(FieldError {
                field: "dataset_id".into(),
                message: "must be non-empty".into(),
            });
        }
        if self.sharing_scope == SharingScope::CrossBorder
            && self
                .destination_region
                .as_deref()
                .is_none_or(|r| r.trim().is_empty())
        {
            errors.push(FieldError {
                field: "destination_region".into(),
                message: "required when sharing_scope is cross_border".into(),
            });
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(RequestValidationError(errors))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> AccessRequest {
        AccessRequest {
            request_id: "r-1".into(),
            requester_id: "u-1".into(),
            dataset_id: "d-1".into(),
            purpose: "monthly reporting".into(),
            declared_retention_days: Some(30),
            sharing_scope: SharingScope::Internal,
            destination_region: None,
            external_party: None,
            third_party_processor: false,
            submitted_at: "2025-01-01T00:00:00Z".parse().unwrap(),
        }
    }

    #[test]
    fn cross_border_requires_destination() {
        let mut req = base();
        req.sharing_scope = SharingScope::CrossBorder;
        let err = req.validate().unwrap_err();
        assert_eq!(err.0[0].field, "destination_region");
        req.destination_region = Some("EU".into());
        assert!(req.validate().is_ok());
    }

    #[test]
    fn empty_request_id_rejected() {
        let mut req = base();
        req.request_id = " ".into();
        assert!(req.validate().is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        let json = r#"{"request_id":"x","requester_id":"u","dataset_id":"d","sharing_scope":"internal",
            "submitted_at":"2025-01-01T00:00:00Z","bogus":1}"#;
        assert!(serde_json::from_str::<AccessRequest>(json).is_err());
    }
}
