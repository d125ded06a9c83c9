#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use accessgov_core::reasoner::RuleReasoner;
use accessgov_core::{AuditLog, ControllerOptions, Org, Registry};
use accessgov_service::{router, AppParts, AppState, Secret};
use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use tower::ServiceExt;

pub const TOKEN: &str = "test-admin-token";

pub fn benchmark_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../benchmark")
}

pub fn org() -> Org {
    Org::from_json(&std::fs::read_to_string(benchmark_dir().join("org.json")).unwrap()).unwrap()
}

pub fn state_with(audit: AuditLog) -> AppState {
    AppState::new(AppParts {
        org: org(),
        registry: Registry::default_registry(),
        reasoner: Arc::new(RuleReasoner),
        options: ControllerOptions::default(),
        audit,
        admin_token: Secret::new(TOKEN),
        benchmark_dir: benchmark_dir(),
    })
}

pub fn state() -> AppState {
    state_with(AuditLog::in_memory())
}

pub struct Reply {
    pub status: StatusCode,
    pub content_type: Option<String>,
    pub body: String,
}

impl Reply {
    pub fn json<T: serde::de::DeserializeOwned>(&self) -> T {
        serde_json::from_str(&self.body).unwrap_or_else(|e| panic!("{e}: {}", self.body))
    }
}

pub async fn call(app: &Router, method: Method, uri: &str, token: Option<&str>, body: Option<String>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header(header::AUTHORIZATION, format!("Bearer {t}"));
    }
    if body.is_some() {
        req = req.header(header::CONTENT_TYPE, "application/json");
    }
    let req = req.body(body.map_or_else(Body::empty, Body::from)).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let content_type = resp
        .headers()
        .get(header::CONTENT_TYPE)
        .map(|v| v.to_str().unwrap().to_string());
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    Reply {
        status,
        content_type,
        body: String::from_utf8(bytes.to_vec()).unwrap(),
    }
}

pub async fn post(app: &Router, uri: &str, token: Option<&str>, body: impl Into<String>) -> Reply {
    call(app, Method::POST, uri, token, Some(body.into())).await
}

pub async fn get(app: &Router, uri: &str, token: Option<&str>) -> Reply {
    call(app, Method::GET, uri, token, None).await
}

pub fn app(state: &AppState) -> Router {
    router(state.clone())
}

pub fn request_json(id: &str, user: &str, dataset: &str, purpose: &str, retention: Option<u32>) -> String {
    let mut v = serde_json::json!({
        "request_id": id,
        "requester_id": user,
        "dataset_id": dataset,
        "purpose": purpose,
        "sharing_scope": "internal",
        "submitted_at": "2026-03-02T09:00:00Z",
    });
    if let Some(r) = retention {
        v["declared_retention_days"] = r.into();
    }
    v.to_string()
}
