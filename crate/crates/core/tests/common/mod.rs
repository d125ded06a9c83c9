#![allow(dead_code)]

use std::sync::Arc;

use accessgov_core::reasoner::RuleReasoner;
use accessgov_core::{AccessRequest, Controller, ControllerOptions, Org, Registry, SharingScope};
use chrono::{TimeZone, Utc};

pub fn org() -> Org {
    Org::from_json(include_str!("../../../../benchmark/org.json")).expect("benchmark org")
}

pub fn controller(org: Org) -> Controller {
    Controller::new(Arc::new(org), &Registry::default_registry(), Arc::new(RuleReasoner)).with_options(
        ControllerOptions {
            diagnostics: true,
            ..ControllerOptions::default()
        },
    )
}

pub fn request(user: &str, dataset: &str, purpose: &str, retention: Option<u32>) -> AccessRequest {
    AccessRequest {
        request_id: "it-1".into(),
        requester_id: user.into(),
        dataset_id: dataset.into(),
        purpose: purpose.into(),
        declared_retention_days: retention,
        sharing_scope: SharingScope::Internal,
        destination_region: None,
        external_party: None,
        third_party_processor: false,
        submitted_at: Utc.with_ymd_and_hms(2026, 3, 2, 9, 0, 0).unwrap(),
    }
}
