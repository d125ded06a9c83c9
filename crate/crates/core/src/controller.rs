//! The decision controller: short-circuit checks, the five stages, gates,
//! aggregation and rationale.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::aggregate::{aggregate_and_decide, AggregateScore};
use crate::catalog::Org;
use crate::control::{Control, ControlRegistry};
use crate::gates::{GateHit, GateInput, GateSet};
use crate::label::{DecisionLabel, Stage};
use crate::rationale::{generate_rationale, DecisionReason, Rationale, RationaleInput};
use crate::reasoner::{build_prompt, FailureCause, ModelSettings, Reasoner, ReasonerFailure, ReasonerQuery};
use crate::registry::Registry;
use crate::request::{AccessRequest, RequestValidationError};
use crate::stages::{ablated, evaluate_stage, merge_reasoner, StageEnv, StageVerdict};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerOptions {
    /// Stages whose deterministic verdict is merged with a reasoner reading.
    pub model_assisted: BTreeSet<Stage>,
    /// Stages replaced by a neutral pass (ablation studies).
    pub ablated: BTreeSet<Stage>,
    pub gates_enabled: bool,
    /// Evaluate every gate, not just the first, and report all hits.
    pub diagnostics: bool,
}

impl Default for ControllerOptions {
    fn default() -> Self {
        Self {
            model_assisted: BTreeSet::from([Stage::Context, Stage::BusinessPurpose, Stage::Compliance]),
            ablated: BTreeSet::new(),
            gates_enabled: true,
            diagnostics: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionOutcome {
    pub request_id: String,
    pub label: DecisionLabel,
    /// Aggregate label before gates.
    pub raw_label: DecisionLabel,
    /// Last label suggested by the reasoner, if it offered one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoner_label: Option<DecisionLabel>,
    pub reason: DecisionReason,
    pub rationale: Rationale,
    pub controls: Vec<Control>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_hit: Option<GateHit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub all_gate_hits: Vec<GateHit>,
    pub stage_trace: Vec<StageVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<AggregateScore>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escalation: Option<String>,
    pub retry_count: u32,
    pub received_at: DateTime<Utc>,
    pub decided_at: DateTime<Utc>,
    pub latency_ms: u64,
}

impl DecisionOutcome {
    /// Copy with timing fields zeroed, for comparing decisions.
    pub fn without_timing(&self) -> Self {
        Self {
            received_at: DateTime::<Utc>::UNIX_EPOCH,
            decided_at: DateTime::<Utc>::UNIX_EPOCH,
            latency_ms: 0,
            ..self.clone()
        }
    }

    pub fn regulations(&self) -> Vec<String> {
        self.rationale.regulations()
    }

    pub fn control_ids(&self) -> Vec<&str> {
        self.controls.iter().map(|c| c.control_id.as_str()).collect()
    }
}

/// Everything a decision reads, bundled for sharing across threads.
#[derive(Clone)]
pub struct Controller {
    pub org: Arc<Org>,
    pub gates: GateSet,
    pub controls: Arc<ControlRegistry>,
    pub reasoner: Arc<dyn Reasoner>,
    pub options: ControllerOptions,
}

impl std::fmt::Debug for Controller {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Controller")
            .field("org", &self.org.name)
            .field("reasoner", &self.reasoner.settings())
            .field("options", &self.options)
            .finish()
    }
}

impl Controller {
    pub fn new(org: Arc<Org>, registry: &Registry, reasoner: Arc<dyn Reasoner>) -> Self {
        Self {
            org,
            gates: registry.gates.clone(),
            controls: Arc::new(registry.controls.clone()),
            reasoner,
            options: ControllerOptions::default(),
        }
    }

    pub fn with_options(mut self, options: ControllerOptions) -> Self {
        self.options = options;
        self
    }

    pub fn settings(&self) -> ModelSettings {
        self.reasoner.settings()
    }

    pub fn decide(&self, request: &AccessRequest) -> Result<DecisionOutcome, RequestValidationError> {
        decide(
            request,
            &self.org,
            &self.gates,
            &self.controls,
            self.reasoner.as_ref(),
            &self.options,
        )
    }
}

struct Timer {
    received_at: DateTime<Utc>,
    started: Instant,
}

impl Timer {
    fn start() -> Self {
        Self {
            received_at: Utc::now(),
            started: Instant::now(),
        }
    }

    /// (decided_at, latency_ms) with decided_at - received_at == latency.
    fn stop(&self) -> (DateTime<Utc>, u64) {
        let elapsed = self.started.elapsed();
        let latency_ms = elapsed.as_millis() as u64;
        let decided_at = self.received_at + chrono::Duration::milliseconds(latency_ms as i64);
        (decided_at, latency_ms)
    }
}

/// Decide one request. Only structurally invalid requests are errors;
/// every other condition, including reasoner failure, yields a decision.
pub fn decide(
    request: &AccessRequest,
    org: &Org,
    gates: &GateSet,
    controls: &ControlRegistry,
    reasoner: &dyn Reasoner,
    options: &ControllerOptions,
) -> Result<DecisionOutcome, RequestValidationError> {
    request.validate()?;
    let timer = Timer::start();
    let env = StageEnv::new(request, &org.catalog, &org.policies, controls);

    let missing_identity = request.requester_id.trim().is_empty() || env.user.is_none();
    if missing_identity || env.relevant_policies.is_empty() {
        let detail = if missing_identity {
            "requester identity missing"
        } else {
            "no applicable policy for this dataset"
        };
        let rationale = generate_rationale(&RationaleInput {
            label: DecisionLabel::Deny,
            raw_label: DecisionLabel::Deny,
            reason: DecisionReason::InsufficientContext,
            verdicts: &[],
            controls: &[],
            gate_hit: None,
            policies: &org.policies,
            detail: Some(detail),
        });
        let (decided_at, latency_ms) = timer.stop();
        return Ok(DecisionOutcome {
            request_id: request.request_id.clone(),
            label: DecisionLabel::Deny,
            raw_label: DecisionLabel::Deny,
            reasoner_label: None,
            reason: DecisionReason::InsufficientContext,
            rationale,
            controls: Vec::new(),
            gate_hit: None,
            all_gate_hits: Vec::new(),
            stage_trace: Vec::new(),
            score: None,
            escalation: None,
            retry_count: 0,
            received_at: timer.received_at,
            decided_at,
            latency_ms,
        });
    }

    // Deterministic verdicts feed later stages and the gates.
    let mut deterministic: Vec<StageVerdict> = Vec::with_capacity(5);
    for stage in Stage::ORDER {
        let verdict = evaluate_stage(stage, &env, &deterministic);
        deterministic.push(verdict);
    }

    let mut trace: Vec<StageVerdict> = Vec::with_capacity(5);
    let mut reasoner_label = None;
    let mut retry_count = 0u32;
    let mut failure: Option<ReasonerFailure> = None;
    for verdict in &deterministic {
        let stage = verdict.stage;
        if options.ablated.contains(&stage) {
            trace.push(ablated(stage));
            continue;
        }
        if !options.model_assisted.contains(&stage) || failure.is_some() {
            trace.push(verdict.clone());
            continue;
        }
        let reading = build_prompt(stage, request, &env.relevant_policies, env.dataset, env.user)
            .map_err(|e| ReasonerFailure::new(FailureCause::NonRetryable, e.to_string()))
            .and_then(|prompt| {
                reasoner.interpret(&ReasonerQuery {
                    request,
                    stage,
                    prompt: &prompt,
                })
            });
        match reading {
            Ok(reading) => {
                retry_count += reading.retries;
                if reading.suggested_label.is_some() {
                    reasoner_label = reading.suggested_label;
                }
                trace.push(merge_reasoner(&env, verdict.clone(), &reading));
            }
            Err(f) => {
                retry_count += f.attempts.saturating_sub(1);
                tracing::warn!(request_id = %request.request_id, stage = %stage, cause = %f.cause, "reasoner failed");
                failure = Some(f);
                trace.push(verdict.clone());
            }
        }
    }

    let gate_input = GateInput {
        request,
        verdicts: &deterministic,
        catalog: &org.catalog,
        policies: &org.policies,
    };
    let (gate_hit, all_gate_hits) = if !options.gates_enabled {
        (None, Vec::new())
    } else if options.diagnostics {
        let hits = gates.evaluate_all(&gate_input);
        (hits.first().cloned(), hits)
    } else {
        (gates.evaluate(&gate_input), Vec::new())
    };

    let aggregate = aggregate_and_decide(&trace, controls);
    let escalation = failure
        .as_ref()
        .map(|f| format!("reasoner unavailable ({}): {}; escalate to a human reviewer", f.cause, f.message));
    let raw_label = if failure.is_some() {
        DecisionLabel::Deny
    } else {
        aggregate.label
    };

    let (label, reason, controls_out) = if gate_hit.is_some() {
        (DecisionLabel::Deny, DecisionReason::PolicyGate, Vec::new())
    } else if failure.is_some() {
        (DecisionLabel::Deny, DecisionReason::ReasonerFailure, Vec::new())
    } else {
        let reason = match aggregate.label {
            DecisionLabel::Approve => DecisionReason::AllStagesPass,
            DecisionLabel::Conditional => DecisionReason::Mitigable,
            DecisionLabel::Deny => DecisionReason::Escalate,
        };
        (aggregate.label, reason, aggregate.controls.clone())
    };
    let escalation = escalation.or_else(|| {
        (reason == DecisionReason::Escalate).then(|| {
            format!(
                "no registered control for {}; escalate to a human reviewer",
                aggregate.score.unmitigated.join(", ")
            )
        })
    });

    let rationale = generate_rationale(&RationaleInput {
        label,
        raw_label,
        reason,
        verdicts: &trace,
        controls: &controls_out,
        gate_hit: gate_hit.as_ref(),
        policies: &org.policies,
        detail: escalation.as_deref(),
    });
    let (decided_at, latency_ms) = timer.stop();
    Ok(DecisionOutcome {
        request_id: request.request_id.clone(),
        label,
        raw_label,
        reasoner_label,
        reason,
        rationale,
        controls: controls_out,
        gate_hit,
        all_gate_hits,
        stage_trace: trace,
        score: Some(aggregate.score),
        escalation,
        retry_count,
        received_at: timer.received_at,
        decided_at,
        latency_ms,
    })
}
