//! Run protocol: every case once per seed, in a per-seed shuffled order.

use std::sync::Arc;

use accessgov_core::audit::AuditError;
use accessgov_core::reasoner::{RuleReasoner, ScriptFile, ScriptedReasoner};
use accessgov_core::{
    AuditLog, Controller, ControllerOptions, DecisionLabel, DecisionOutcome, Org, Reasoner, ReasonerKind, Registry,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::suite::Suite;

pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seeds: Vec<u64>,
    pub shuffle: bool,
    pub reasoner: ReasonerKind,
    /// Scripted fixture name inside the benchmark directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub script: Option<String>,
    pub options: ControllerOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seeds: DEFAULT_SEEDS.to_vec(),
            shuffle: true,
            reasoner: ReasonerKind::Scripted,
            script: None,
            options: ControllerOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.seeds.is_empty() {
            return Err(EvalError::Config("at least one seed is required".into()));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(EvalError::Config("seeds must be distinct".into()));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("invalid run config: {0}")]
    Config(String),
    #[error("writing audit record: {0}")]
    Audit(#[from] AuditError),
    #[error(transparent)]
    Metric(#[from] crate::metrics::MetricError),
}

/// Where each seed's reasoner comes from.
#[derive(Clone)]
pub enum ReasonerSource {
    Rule,
    /// Replay with per-seed overrides applied.
    Scripted(Arc<ScriptFile>),
    /// One shared reasoner for every seed (e.g. a remote model).
    Shared(Arc<dyn Reasoner>),
}

impl std::fmt::Debug for ReasonerSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Rule => f.write_str("Rule"),
            Self::Scripted(s) => write!(f, "Scripted({} cases)", s.cases.len()),
            Self::Shared(r) => write!(f, "Shared({:?})", r.settings()),
        }
    }
}

impl ReasonerSource {
    pub fn for_seed(&self, seed: u64) -> Arc<dyn Reasoner> {
        match self {
            Self::Rule => Arc::new(RuleReasoner),
            Self::Scripted(script) => Arc::new(ScriptedReasoner::for_seed(script.clone(), seed)),
            Self::Shared(r) => r.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: String,
    pub seed: u64,
    /// Position in this seed's decision order.
    pub position: usize,
    /// Model-only label: the reasoner's suggestion, else the aggregate.
    pub raw: DecisionLabel,
    /// `raw` with gate hits forced to DENY.
    pub post_gate: DecisionLabel,
    /// What the controller returned.
    pub outcome: DecisionOutcome,
    /// The controller rejected the request; recorded as DENY.
    #[serde(default)]
    pub error: Option<String>,
}

impl CaseResult {
    pub fn final_label(&self) -> DecisionLabel {
        self.outcome.label
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    /// Case ids in decision order.
    pub order: Vec<String>,
    /// One result per case, in suite order.
    pub results: Vec<CaseResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub runs: Vec<SeedRun>,
}

impl RunResult {
    pub fn seeds(&self) -> Vec<u64> {
        self.runs.iter().map(|r| r.seed).collect()
    }

    /// Results for one case across seeds.
    pub fn case(&self, index: usize) -> Vec<&CaseResult> {
        self.runs.iter().map(|r| &r.results[index]).collect()
    }
}

/// Deterministic decision order for a seed.
pub fn case_order(n: usize, seed: u64, shuffle: bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if shuffle {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    order
}

fn fail_safe(request_id: String, message: &str) -> DecisionOutcome {
    use accessgov_core::rationale::{DecisionReason, Rationale};
    let now = chrono::Utc::now();
    DecisionOutcome {
        request_id,
        label: DecisionLabel::Deny,
        raw_label: DecisionLabel::Deny,
        reasoner_label: None,
        reason: DecisionReason::InsufficientContext,
        rationale: Rationale {
            summary: format!("DENY: request rejected - {message}."),
            cited_policies: Vec::new(),
            stage_findings: Vec::new(),
            machine_fields: Default::default(),
        },
        controls: Vec::new(),
        gate_hit: None,
        all_gate_hits: Vec::new(),
        stage_trace: Vec::new(),
        score: None,
        escalation: Some(message.to_string()),
        retry_count: 0,
        received_at: now,
        decided_at: now,
        latency_ms: 0,
    }
}

/// Decide every case once per seed. Cases within a seed run concurrently;
/// audit records are appended in decision order once the seed completes.
pub fn run_benchmark(
    suite: &Suite,
    org: Arc<Org>,
    registry: &Registry,
    source: &ReasonerSource,
    config: &RunConfig,
    audit: Option<&AuditLog>,
) -> Result<RunResult, EvalError> {
    config.validate()?;
    let mut runs = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let controller =
            Controller::new(org.clone(), registry, source.for_seed(seed)).with_options(config.options.clone());
        let order = case_order(suite.cases.len(), seed, config.shuffle);
        let requests: Vec<_> = suite
            .cases
            .iter()
            .map(|c| c.request.instantiate(c.request_id(seed), suite.submitted_at))
            .collect();

        let decided: Vec<(usize, DecisionOutcome, Option<String>)> = std::thread::scope(|scope| {
            let handles: Vec<_> = order
                .iter()
                .map(|&i| {
                    let controller = &controller;
                    let request = &requests[i];
                    scope.spawn(move || match controller.decide(request) {
                        Ok(outcome) => (i, outcome, None),
                        Err(e) => {
                            let message = e.to_string();
                            (i, fail_safe(request.request_id.clone(), &message), Some(message))
                        }
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("decision thread panicked"))
                .collect()
        });

        let settings = controller.settings();
        let mut slots: Vec<Option<CaseResult>> = vec![None; suite.cases.len()];
        for (position, (i, outcome, error)) in decided.into_iter().enumerate() {
            if let Some(log) = audit {
                log.record(&outcome, &requests[i], &settings)?;
            }
            let raw = outcome.reasoner_label.unwrap_or(outcome.raw_label);
            let post_gate = if outcome.gate_hit.is_some() { DecisionLabel::Deny } else { raw };
            slots[i] = Some(CaseResult {
                case_id: suite.cases[i].case_id.clone(),
                seed,
                position,
                raw,
                post_gate,
                outcome,
                error,
            });
        }
        runs.push(SeedRun {
            seed,
            order: order.iter().map(|&i| suite.cases[i].case_id.clone()).collect(),
            results: slots.into_iter().map(|s| s.expect("every case decided")).collect(),
        });
    }
    Ok(RunResult { runs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_a_seeded_permutation() {
        let a = case_order(14, 7, true);
        assert_eq!(a, case_order(14, 7, true));
        let mut sorted = a.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..14).collect::<Vec<_>>());
        assert_eq!(case_order(4, 7, false), vec![0, 1, 2, 3]);
        assert_ne!(case_order(14, 1, true), case_order(14, 2, true));
    }

    #[test]
    fn config_requires_distinct_seeds() {
        let mut cfg = RunConfig::default();
        cfg.validate().unwrap();
        cfg.seeds = vec![];
        assert!(cfg.validate().is_err());
        cfg.seeds = vec![1, 1];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_parses_with_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"seeds":[9],"reasoner":"rule"}"#).unwrap();
        assert_eq!(cfg.seeds, vec![9]);
        assert!(cfg.shuffle);
        assert_eq!(cfg.reasoner, ReasonerKind::Rule);
    }
}
