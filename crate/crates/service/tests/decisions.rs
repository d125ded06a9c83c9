mod common;

use std::sync::Arc;

use accessgov_client::ApiError;
use accessgov_core::audit::{AuditBackend, AuditError, OnAuditFailure};
use accessgov_core::{AccessRequest, AuditLog, AuditRecord, DecisionLabel, DecisionOutcome, DecisionReason};
use axum::http::StatusCode;
use common::*;

#[tokio::test]
async fn churn_model_request_is_conditional_with_controls() {
    let state = state();
    let app = app(&state);
    let body = request_json(
        "churn-1",
        "u-analyst-01",
        "transactions_2024",
        "Train churn model for Q4",
        Some(90),
    );
    let r = post(&app, "/decisions", None, body).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    let outcome: DecisionOutcome = r.json();
    assert_eq!(outcome.label, DecisionLabel::Conditional);
    assert_eq!(outcome.request_id, "churn-1");
    assert!(outcome.controls.len() >= 2, "{:?}", outcome.control_ids());
    assert!(!outcome.stage_trace.is_empty());
    assert!(!outcome.rationale.summary.is_empty());
    assert_eq!(state.audit().len(), 1);
}

#[tokio::test]
async fn api_and_library_decisions_match() {
    let state = state();
    let app = app(&state);
    let body = request_json("lib-1", "u-marketing-01", "salary_table", "Salary benchmarks for campaign", Some(30));
    let served: DecisionOutcome = post(&app, "/decisions", None, body.clone()).await.json();
    let request: AccessRequest = serde_json::from_str(&body).unwrap();
    let local = state.controller().decide(&request).unwrap();
    assert_eq!(served.without_timing(), local.without_timing());
    assert_eq!(served.label, DecisionLabel::Deny);
}

#[tokio::test]
async fn malformed_body_points_at_the_field() {
    let app = app(&state());
    let r = post(
        &app,
        "/decisions",
        None,
        r#"{"request_id":"x","requester_id":"u","dataset_id":"d","sharing_scope":"sideways","submitted_at":"2026-03-02T09:00:00Z"}"#,
    )
    .await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let err: ApiError = r.json();
    assert_eq!(err.fields.len(), 1);
    assert_eq!(err.fields[0].field, "sharing_scope");

    let r = post(&app, "/decisions", None, "{not json").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);

    // Parses, but fails structural validation.
    let r = post(
        &app,
        "/decisions",
        None,
        r#"{"request_id":"x","requester_id":"u","dataset_id":"","sharing_scope":"internal","submitted_at":"2026-03-02T09:00:00Z"}"#,
    )
    .await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let err: ApiError = r.json();
    assert_eq!(err.fields[0].field, "dataset_id");
}

#[tokio::test]
async fn unknown_requester_is_a_deny_decision_not_an_error() {
    let state = state();
    let app = app(&state);
    let r = post(
        &app,
        "/decisions",
        None,
        request_json("ghost-1", "u-nobody", "product_metrics", "Dashboard", Some(30)),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK);
    let outcome: DecisionOutcome = r.json();
    assert_eq!(outcome.label, DecisionLabel::Deny);
    assert_eq!(outcome.reason, DecisionReason::InsufficientContext);
    assert!(outcome.stage_trace.is_empty());
    assert_eq!(state.audit().len(), 1);
}

struct Broken;

impl AuditBackend for Broken {
    fn append(&self, _: AuditRecord) -> Result<AuditRecord, AuditError> {
        Err(AuditError::Storage("disk full".into()))
    }
    fn snapshot(&self) -> Vec<AuditRecord> {
        Vec::new()
    }
    fn describe(&self) -> String {
        "broken".into()
    }
}

#[tokio::test]
async fn unauditable_decisions_are_withheld_when_fail_closed() {
    let body = request_json("b-1", "u-analyst-01", "product_metrics", "Feature adoption analytics", Some(90));

    let closed = state_with(AuditLog::new(Box::new(Broken)));
    let r = post(&app(&closed), "/decisions", None, body.clone()).await;
    assert_eq!(r.status, StatusCode::SERVICE_UNAVAILABLE);
    assert!(!r.body.contains("\"label\""));

    let log = AuditLog::new(Box::new(Broken)).with_failure_mode(OnAuditFailure::FailOpen);
    let monitor = log.monitor();
    let open = state_with(log);
    let r = post(&app(&open), "/decisions", None, body).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(monitor.try_recv().unwrap().request_id, "b-1");
}

#[tokio::test]
async fn concurrent_decisions_each_get_a_record() {
    let state = state();
    let app = Arc::new(app(&state));
    let mut tasks = Vec::new();
    for i in 0..32 {
        let app = app.clone();
        tasks.push(tokio::spawn(async move {
            let body = request_json(&format!("p-{i}"), "u-analyst-01", "product_metrics", "Adoption analytics", Some(30));
            post(&app, "/decisions", None, body).await.status
        }));
    }
    for t in tasks {
        assert_eq!(t.await.unwrap(), StatusCode::OK);
    }
    let records = state.audit().query(&Default::default()).unwrap();
    assert_eq!(records.len(), 32);
    let seqs: Vec<u64> = records.iter().map(|r| r.sequence).collect();
    assert_eq!(seqs, (1..=32).collect::<Vec<_>>());
}
