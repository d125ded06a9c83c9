//! Append-only decision log: one record per decision, filtered queries,
//! CSV export and latency percentiles.

mod backend;
mod export;
mod stats;

use std::sync::mpsc;

use chrono::{DateTime, Utc};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::controller::DecisionOutcome;
use crate::gates::GateId;
use crate::label::DecisionLabel;
use crate::rationale::HASH_ALGORITHM;
use crate::reasoner::{ModelSettings, ReasonerKind};
use crate::request::AccessRequest;

pub use backend::{AuditBackend, FileBackend, MemoryBackend};
pub use export::{export_csv, parse_csv, CSV_HEADER};
pub use stats::{latency_percentiles, nearest_rank, LatencySummary, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    /// Assigned on append; strictly increasing from 1.
    pub sequence: u64,
    pub request_id: String,
    pub requester_id: String,
    pub dataset_id: String,
    pub purpose: String,
    pub decision: DecisionLabel,
    pub raw_label: DecisionLabel,
    #[serde(default)]
    pub reasoner_label: Option<DecisionLabel>,
    #[serde(default)]
    pub gate_id: Option<GateId>,
    pub controls: Vec<String>,
    pub policy_citations: Vec<String>,
    /// When the controller received the request.
    pub submitted_at: DateTime<Utc>,
    pub decided_at: DateTime<Utc>,
    pub latency_ms: u64,
    pub reasoner: ReasonerKind,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub temperature: Option<f32>,
    pub retry_count: u32,
    pub rationale_hash_alg: String,
    pub rationale_hash: String,
}

impl AuditRecord {
    /// Builds an unsequenced record (sequence 0) for `outcome`.
    pub fn from_outcome(outcome: &DecisionOutcome, request: &AccessRequest, settings: &ModelSettings) -> Self {
        Self {
            sequence: 0,
            request_id: outcome.request_id.clone(),
            requester_id: request.requester_id.clone(),
            dataset_id: request.dataset_id.clone(),
            purpose: request.purpose.clone(),
            decision: outcome.label,
            raw_label: outcome.raw_label,
            reasoner_label: outcome.reasoner_label,
            gate_id: outcome.gate_hit.as_ref().map(|h| h.gate_id),
            controls: outcome.controls.iter().map(|c| c.control_id.clone()).collect(),
            policy_citations: outcome.rationale.cited_policies.clone(),
            submitted_at: outcome.received_at,
            decided_at: outcome.decided_at,
            latency_ms: outcome.latency_ms,
            reasoner: settings.reasoner,
            model: settings.model.clone(),
            temperature: settings.temperature,
            retry_count: outcome.retry_count,
            rationale_hash_alg: HASH_ALGORITHM.to_string(),
            rationale_hash: outcome.rationale.hash(),
        }
    }

    pub fn model_settings(&self) -> ModelSettings {
        ModelSettings {
            reasoner: self.reasoner,
            model: self.model.clone(),
            temperature: self.temperature,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error("audit storage failure: {0}")]
    Storage(String),
    #[error("invalid audit query: {0}")]
    Query(String),
    #[error("audit log line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

/// Conjunctive filters; the default matches everything.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditQuery {
    pub decision: Option<DecisionLabel>,
    pub gate_id: Option<GateId>,
    pub requester: Option<String>,
    pub dataset: Option<String>,
    /// Inclusive bounds on `decided_at`.
    pub from: Option<DateTime<Utc>>,
    pub to: Option<DateTime<Utc>>,
    /// Only records with a sequence number above this (pagination).
    pub after: Option<u64>,
    pub limit: Option<usize>,
}

impl AuditQuery {
    pub fn validate(&self) -> Result<(), AuditError> {
        if let (Some(from), Some(to)) = (self.from, self.to) {
            if from > to {
                return Err(AuditError::Query(format!("time range is inverted: {from} > {to}")));
            }
        }
        Ok(())
    }

    pub fn matches(&self, r: &AuditRecord) -> bool {
        self.decision.is_none_or(|d| r.decision == d)
            && self.gate_id.is_none_or(|g| r.gate_id == Some(g))
            && self.requester.as_ref().is_none_or(|q| &r.requester_id == q)
            && self.dataset.as_ref().is_none_or(|q| &r.dataset_id == q)
            && self.from.is_none_or(|t| r.decided_at >= t)
            && self.to.is_none_or(|t| r.decided_at <= t)
            && self.after.is_none_or(|s| r.sequence > s)
    }
}

/// What to do when a record cannot be stored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnAuditFailure {
    /// Fail the request: no decision without a record.
    #[default]
    FailClosed,
    /// Return the decision anyway; the loss is reported on the monitor channel.
    FailOpen,
}

/// Sent on the monitoring channel for every storage failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditFailure {
    pub request_id: String,
    pub message: String,
}

pub struct AuditLog {
    backend: Box<dyn AuditBackend>,
    on_failure: OnAuditFailure,
    monitor: Mutex<Option<mpsc::Sender<AuditFailure>>>,
}

impl std::fmt::Debug for AuditLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AuditLog")
            .field("backend", &self.backend.describe())
            .field("on_failure", &self.on_failure)
            .finish()
    }
}

impl AuditLog {
    pub fn new(backend: Box<dyn AuditBackend>) -> Self {
        Self {
            backend,
            on_failure: OnAuditFailure::default(),
            monitor: Mutex::new(None),
        }
    }

    pub fn in_memory() -> Self {
        Self::new(Box::new(MemoryBackend::default()))
    }

    pub fn with_failure_mode(mut self, mode: OnAuditFailure) -> Self {
        self.on_failure = mode;
        self
    }

    pub fn failure_mode(&self) -> OnAuditFailure {
        self.on_failure
    }

    /// Storage failures are sent to the returned receiver.
    pub fn monitor(&self) -> mpsc::Receiver<AuditFailure> {
        let (tx, rx) = mpsc::channel();
        *self.monitor.lock() = Some(tx);
        rx
    }

    /// Appends one record. Under fail-open a storage failure yields
    /// `Ok(None)`; under fail-closed it is an error.
    pub fn record(
        &self,
        outcome: &DecisionOutcome,
        request: &AccessRequest,
        settings: &ModelSettings,
    ) -> Result<Option<AuditRecord>, AuditError> {
        let record = AuditRecord::from_outcome(outcome, request, settings);
        match self.backend.append(record) {
            Ok(stored) => Ok(Some(stored)),
            Err(e) => {
                tracing::error!(request_id = %outcome.request_id, error = %e, "audit append failed");
                if let Some(tx) = self.monitor.lock().as_ref() {
                    let _ = tx.send(AuditFailure {
                        request_id: outcome.request_id.clone(),
                        message: e.to_string(),
                    });
                }
                match self.on_failure {
                    OnAuditFailure::FailClosed => Err(e),
                    OnAuditFailure::FailOpen => Ok(None),
                }
            }
        }
    }

    /// Matching records in sequence order.
    pub fn query(&self, q: &AuditQuery) -> Result<Vec<AuditRecord>, AuditError> {
        q.validate()?;
        let mut out: Vec<AuditRecord> = self.backend.snapshot().into_iter().filter(|r| q.matches(r)).collect();
        out.sort_by_key(|r| r.sequence);
        if let Some(limit) = q.limit {
            out.truncate(limit);
        }
        Ok(out)
    }

    pub fn export_csv(&self, q: &AuditQuery) -> Result<String, AuditError> {
        Ok(export_csv(&self.query(q)?))
    }

    pub fn len(&self) -> usize {
        self.backend.snapshot().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
