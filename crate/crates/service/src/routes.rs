use accessgov_client::{AuditPage, CatalogCounts, CatalogSection, Health};
use accessgov_core::catalog::{Agreements, CatalogError, Dataset, SoDRule, UserRecord};
use accessgov_core::reasoner::CircuitState;
use accessgov_core::{AccessRequest, AuditQuery, DecisionOutcome, Org, PolicyStore, ReasonerKind};
use accessgov_eval::{EvalError, Fixtures, ReasonerSource, RunConfig};
use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{FromRequestParts, Path, Query, State};
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};

use crate::error::{parse_json, AppError};
use crate::state::AppState;

/// Default and maximum page size for `GET /audit`.
pub const AUDIT_PAGE: usize = 100;
pub const AUDIT_PAGE_MAX: usize = 1000;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/decisions", post(decide))
        .route("/audit", get(audit_page))
        .route("/audit/export", get(audit_export))
        .route("/catalog", get(catalog).post(replace_catalog))
        .route("/catalog/{section}", get(catalog_section).post(replace_section))
        .route("/eval/runs", post(eval_run))
        .route("/healthz", get(healthz))
        .with_state(state)
}

/// Proof that the caller presented the admin token.
pub struct Admin;

impl FromRequestParts<AppState> for Admin {
    type Rejection = AppError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        let token = parts
            .headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::trim);
        match token {
            Some(t) if state.is_admin(t) => Ok(Admin),
            _ => Err(AppError::forbidden()),
        }
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, AppError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| AppError::internal(format!("worker failed: {e}")))
}

async fn decide(State(state): State<AppState>, body: Bytes) -> Result<Json<DecisionOutcome>, AppError> {
    let request: AccessRequest = parse_json("access request", &body)?;
    request.validate()?;
    let outcome = blocking(move || {
        let controller = state.controller();
        let outcome = controller.decide(&request)?;
        // The record is written before the response leaves.
        state
            .audit()
            .record(&outcome, &request, &controller.settings())
            .map_err(|e| AppError::new(StatusCode::SERVICE_UNAVAILABLE, format!("decision not recorded: {e}")))?;
        Ok::<_, AppError>(outcome)
    })
    .await??;
    tracing::info!(request_id = %outcome.request_id, label = %outcome.label, "decided");
    Ok(Json(outcome))
}

fn audit_query(q: Result<Query<AuditQuery>, QueryRejection>) -> Result<AuditQuery, AppError> {
    let Query(q) = q.map_err(|e| AppError::bad_request(format!("invalid audit filter: {}", e.body_text())))?;
    q.validate().map_err(|e| AppError::bad_request(e.to_string()))?;
    Ok(q)
}

async fn audit_page(
    _: Admin,
    State(state): State<AppState>,
    q: Result<Query<AuditQuery>, QueryRejection>,
) -> Result<Json<AuditPage>, AppError> {
    let mut q = audit_query(q)?;
    let limit = q.limit.unwrap_or(AUDIT_PAGE).clamp(1, AUDIT_PAGE_MAX);
    q.limit = Some(limit + 1);
    let mut records = state
        .audit()
        .query(&q)
        .map_err(|e| AppError::new(StatusCode::SERVICE_UNAVAILABLE, e.to_string()))?;
    let next_after = if records.len() > limit {
        records.truncate(limit);
        records.last().map(|r| r.sequence)
    } else {
        None
    };
    Ok(Json(AuditPage { records, next_after }))
}

async fn audit_export(
    _: Admin,
    State(state): State<AppState>,
    q: Result<Query<AuditQuery>, QueryRejection>,
) -> Result<Response, AppError> {
    let q = audit_query(q)?;
    let csv = state
        .audit()
        .export_csv(&q)
        .map_err(|e| AppError::new(StatusCode::SERVICE_UNAVAILABLE, e.to_string()))?;
    Ok((
        [
            (header::CONTENT_TYPE, "text/csv; charset=utf-8"),
            (header::CONTENT_DISPOSITION, "attachment; filename=\"audit.csv\""),
        ],
        csv,
    )
        .into_response())
}

fn section(name: &str) -> Result<CatalogSection, AppError> {
    name.parse().map_err(|e: String| AppError::new(StatusCode::NOT_FOUND, e))
}

fn section_value(org: &Org, section: CatalogSection) -> serde_json::Value {
    let value = match section {
        CatalogSection::Datasets => serde_json::to_value(&org.catalog.datasets),
        CatalogSection::Users => serde_json::to_value(&org.catalog.users),
        CatalogSection::Sod => serde_json::to_value(&org.catalog.sod_rules),
        CatalogSection::Agreements => serde_json::to_value(&org.catalog.agreements),
        CatalogSection::Policies => serde_json::to_value(&org.policies),
    };
    value.expect("catalog sections serialize")
}

async fn catalog(_: Admin, State(state): State<AppState>) -> Json<Org> {
    Json((*state.org()).clone())
}

async fn catalog_section(
    _: Admin,
    State(state): State<AppState>,
    Path(name): Path<String>,
) -> Result<Json<serde_json::Value>, AppError> {
    Ok(Json(section_value(&state.org(), section(&name)?)))
}

async fn replace_catalog(_: Admin, State(state): State<AppState>, body: Bytes) -> Result<Json<Org>, AppError> {
    let text = std::str::from_utf8(&body).map_err(|_| AppError::bad_request("body is not UTF-8"))?;
    let org = Org::from_json(text)?;
    let next = state.update_org(|current| {
        *current = org;
        Ok::<_, AppError>(())
    })?;
    Ok(Json((*next).clone()))
}

async fn replace_section(
    _: Admin,
    State(state): State<AppState>,
    Path(name): Path<String>,
    body: Bytes,
) -> Result<Json<Org>, AppError> {
    let section = section(&name)?;
    // Parse before taking the writer lock.
    let edit: Box<dyn FnOnce(&mut Org) + Send> = match section {
        CatalogSection::Datasets => {
            let v: Vec<Dataset> = parse_json("datasets", &body)?;
            Box::new(move |o| o.catalog.datasets = v)
        }
        CatalogSection::Users => {
            let v: Vec<UserRecord> = parse_json("users", &body)?;
            Box::new(move |o| o.catalog.users = v)
        }
        CatalogSection::Sod => {
            let v: Vec<SoDRule> = parse_json("sod rules", &body)?;
            Box::new(move |o| o.catalog.sod_rules = v)
        }
        CatalogSection::Agreements => {
            let v: Agreements = parse_json("agreements", &body)?;
            Box::new(move |o| o.catalog.agreements = v)
        }
        CatalogSection::Policies => {
            let v: PolicyStore = parse_json("policies", &body)?;
            Box::new(move |o| o.policies = v)
        }
    };
    let next = state.update_org(|org| {
        edit(org);
        Ok::<_, CatalogError>(())
    })?;
    Ok(Json((*next).clone()))
}

async fn eval_run(State(state): State<AppState>, body: Bytes) -> Result<Response, AppError> {
    let config: RunConfig = parse_json("run config", &body)?;
    config.validate().map_err(|e| AppError::bad_request(e.to_string()))?;
    let Some(guard) = state.try_reserve_eval() else {
        return Err(AppError::new(StatusCode::CONFLICT, "a benchmark run is already in progress"));
    };
    let json = blocking(move || {
        let _guard = guard;
        let fx = Fixtures::load_dir(state.benchmark_dir())
            .map_err(|e| AppError::new(StatusCode::SERVICE_UNAVAILABLE, format!("benchmark fixtures: {e}")))?;
        let source = match config.reasoner {
            ReasonerKind::Remote => {
                let reasoner = state.reasoner();
                if reasoner.settings().reasoner != ReasonerKind::Remote {
                    return Err(AppError::bad_request("the service is not configured with a remote reasoner"));
                }
                ReasonerSource::Shared(reasoner)
            }
            _ => fx.source(&config).map_err(|e| AppError::bad_request(e.to_string()))?,
        };
        let audit = state.audit();
        let (_, report) = fx
            .evaluate(state.registry(), &source, &config, Some(&audit))
            .map_err(|e| match e {
                EvalError::Config(_) => AppError::bad_request(e.to_string()),
                EvalError::Audit(_) => AppError::new(StatusCode::SERVICE_UNAVAILABLE, e.to_string()),
                EvalError::Metric(_) => AppError::internal(e.to_string()),
            })?;
        Ok(report.to_json())
    })
    .await??;
    Ok(([(header::CONTENT_TYPE, "application/json")], json).into_response())
}

async fn healthz(State(state): State<AppState>) -> Json<Health> {
    let reasoner = state.reasoner();
    let circuit = reasoner.circuit();
    let org = state.org();
    let status = match circuit.as_ref().map(|c| c.state) {
        Some(CircuitState::Open) => "degraded",
        _ => "ok",
    };
    Json(Health {
        status: status.into(),
        org: org.name.clone(),
        reasoner: reasoner.settings(),
        circuit,
        audit_records: state.audit().len(),
        audit_mode: state.audit_mode(),
        catalog: CatalogCounts {
            datasets: org.catalog.datasets.len(),
            users: org.catalog.users.len(),
            sod_rules: org.catalog.sod_rules.len(),
            parties: org.catalog.agreements.parties.len(),
            policies: org.policies.len(),
        },
        eval_running: state.eval_running(),
    })
}
