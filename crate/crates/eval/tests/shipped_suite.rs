use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use accessgov_core::{AuditLog, DecisionLabel, Registry, Stage};
use accessgov_eval::report::MetricsReport;
use accessgov_eval::{wilson, Fixtures, ReasonerSource, RunConfig, RunResult, DEFAULT_Z};
use DecisionLabel::{Approve as A, Conditional as C, Deny as D};

fn fixtures() -> Fixtures {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../benchmark");
    Fixtures::load_dir(dir).expect("shipped fixtures load")
}

fn evaluate(config: &RunConfig) -> (Fixtures, RunResult, MetricsReport) {
    let fx = fixtures();
    let source = fx.source(config).unwrap();
    let (run, report) = fx.evaluate(&Registry::default_registry(), &source, config, None).unwrap();
    (fx, run, report)
}

fn close(a: Option<f64>, b: f64) -> bool {
    a.is_some_and(|a| (a - b).abs() <= 0.001)
}

#[test]
fn scripted_replay_reproduces_both_confusion_matrices() {
    let start = Instant::now();
    let (_, _, report) = evaluate(&RunConfig::default());
    assert!(start.elapsed().as_secs_f64() < 5.0);
    assert_eq!(report.raw.confusion.counts, [[4, 0, 0], [0, 2, 3], [1, 0, 4]]);
    assert_eq!(report.post_gate.confusion.counts, [[4, 0, 0], [0, 5, 0], [1, 0, 4]]);
}

#[test]
fn gates_flip_only_the_lenient_must_deny_cases() {
    let (fx, run, report) = evaluate(&RunConfig::default());
    assert_eq!(report.gate_corrections, ["c03", "c04", "c05"]);
    for seed_run in &run.runs {
        for (case, r) in fx.suite.cases.iter().zip(&seed_run.results) {
            if r.raw != r.post_gate {
                assert!(case.must_deny, "{}", case.case_id);
                assert_eq!((r.raw, r.post_gate), (C, D), "{}", case.case_id);
            }
            assert!(r.post_gate.permissiveness() <= r.raw.permissiveness(), "{}", case.case_id);
        }
    }
}

#[test]
fn summary_metrics_match_reference_values() {
    let (_, _, r) = evaluate(&RunConfig::default());
    assert_eq!((r.raw.edm.k, r.raw.edm.n), (10, 14));
    assert_eq!((r.post_gate.edm.k, r.post_gate.edm.n), (13, 14));
    assert!(close(r.raw.edm.value(), 0.714));
    assert!(close(r.post_gate.edm.value(), 0.929));

    let recalls = |m: &accessgov_eval::report::ChannelMetrics| {
        [A, D, C].map(|c| m.class(c).recall.value().unwrap())
    };
    let raw_recall = recalls(&r.raw);
    let post_recall = recalls(&r.post_gate);
    for (got, want) in raw_recall.iter().zip([1.0, 0.4, 0.8]) {
        assert!(close(Some(*got), want), "{raw_recall:?}");
    }
    for (got, want) in post_recall.iter().zip([1.0, 1.0, 0.8]) {
        assert!(close(Some(*got), want), "{post_recall:?}");
    }
    assert!(close(r.raw.class(A).precision.value(), 0.800));
    assert!(close(r.raw.class(D).precision.value(), 1.000));
    assert!(close(r.raw.class(C).precision.value(), 0.571));
    assert!(close(r.post_gate.class(C).precision.value(), 1.000));
    assert!(close(r.post_gate.class(D).precision.value(), 1.000));
    assert!(close(r.raw.balanced_accuracy.value(), 0.733));
    assert!(close(r.post_gate.balanced_accuracy.value(), 0.933));
}

#[test]
fn reported_intervals_match_two_decimal_display() {
    let (_, _, r) = evaluate(&RunConfig::default());
    let shown = |p: &accessgov_eval::Proportion| p.interval.unwrap().to_string();
    assert_eq!(shown(&r.raw.edm), "[0.45, 0.88]");
    assert_eq!(shown(&r.post_gate.edm), "[0.69, 0.99]");
    assert_eq!(shown(&r.raw.class(D).recall), "[0.12, 0.77]");
    assert_eq!(shown(&r.raw.class(C).precision), "[0.25, 0.84]");
    assert_eq!(wilson(4, 4, DEFAULT_Z).unwrap().to_string(), "[0.51, 1.00]");
    assert_eq!(wilson(4, 5, DEFAULT_Z).unwrap().to_string(), "[0.38, 0.96]");
    assert_eq!(wilson(5, 5, DEFAULT_Z).unwrap().to_string(), "[0.57, 1.00]");
}

#[test]
fn safety_metrics_in_both_modes() {
    let (fx, run, r) = evaluate(&RunConfig::default());
    assert_eq!((r.raw.far_must_deny.k, r.raw.far_must_deny.n), (3, 5));
    assert_eq!((r.post_gate.far_must_deny.k, r.post_gate.far_must_deny.n), (0, 5));
    assert_eq!((r.raw.far_must_deny_strict.k, r.raw.far_must_deny_strict.n), (0, 5));
    assert_eq!((r.post_gate.far_must_deny_strict.k, r.post_gate.far_must_deny_strict.n), (0, 5));
    assert_eq!((r.raw.fdr_must_approve.k, r.raw.fdr_must_approve.n), (0, 4));
    assert_eq!((r.post_gate.fdr_must_approve.k, r.post_gate.fdr_must_approve.n), (0, 4));

    // Oracle: direct tally over the first seed's predictions.
    let results = &run.runs[0].results;
    let tally = |keep: fn(&accessgov_eval::BenchmarkCase) -> bool, bad: fn(DecisionLabel) -> bool| {
        fx.suite
            .cases
            .iter()
            .zip(results)
            .filter(|(c, r)| keep(c) && bad(r.raw))
            .count() as u64
    };
    assert_eq!(tally(|c| c.must_deny, |l| l != D), r.raw.far_must_deny.k);
    assert_eq!(tally(|c| c.must_deny, |l| l == A), r.raw.far_must_deny_strict.k);
    assert_eq!(tally(|c| c.must_approve, |l| l == D), r.raw.fdr_must_approve.k);
}

#[test]
fn rubric_passes_in_full_and_compliance_ablation_breaks_it() {
    let (_, _, r) = evaluate(&RunConfig::default());
    assert_eq!((r.fa.k, r.ca.k), (14, 14));

    let mut cfg = RunConfig::default();
    cfg.options.ablated.insert(Stage::Compliance);
    let (_, _, ablated) = evaluate(&cfg);
    assert!(ablated.ca.k < 14, "CA stayed at {}", ablated.ca.k);
}

#[test]
fn rule_reasoner_is_stable_under_shuffling() {
    let cfg = RunConfig {
        reasoner: accessgov_core::ReasonerKind::Rule,
        ..RunConfig::default()
    };
    let (_, run, r) = evaluate(&cfg);
    let orders: Vec<_> = run.runs.iter().map(|s| s.order.clone()).collect();
    assert!(orders.windows(2).any(|w| w[0] != w[1]), "shuffle had no effect");
    let vectors: Vec<Vec<DecisionLabel>> = run
        .runs
        .iter()
        .map(|s| s.results.iter().map(|c| c.outcome.label).collect())
        .collect();
    assert!(vectors.windows(2).all(|w| w[0] == w[1]));
    let s = r.stability.unwrap();
    assert_eq!((s.k, s.n), (14, 14));
}

#[test]
fn noise_fixture_destabilizes_exactly_one_case() {
    let cfg = RunConfig {
        script: Some("scripted_noise.json".into()),
        ..RunConfig::default()
    };
    let (_, _, r) = evaluate(&cfg);
    let s = r.stability.unwrap();
    assert_eq!((s.k, s.n), (13, 14));
    let unstable: Vec<_> = r.rows.iter().filter(|row| row.stable == Some(false)).map(|row| &row.case_id).collect();
    assert_eq!(unstable, ["c12"]);
}

#[test]
fn single_seed_omits_stability() {
    let cfg = RunConfig {
        seeds: vec![11],
        ..RunConfig::default()
    };
    let (_, _, r) = evaluate(&cfg);
    assert!(r.stability.is_none());
    assert!(!r.to_text().contains("Stability"));
}

#[test]
fn audit_log_holds_one_record_per_case_and_seed() {
    let fx = fixtures();
    let cfg = RunConfig::default();
    let source = fx.source(&cfg).unwrap();
    let log = AuditLog::in_memory();
    fx.evaluate(&Registry::default_registry(), &source, &cfg, Some(&log)).unwrap();
    let records = log.query(&Default::default()).unwrap();
    assert_eq!(records.len(), 14 * cfg.seeds.len());
    for seed in &cfg.seeds {
        let suffix = format!("@{seed}");
        assert_eq!(records.iter().filter(|r| r.request_id.ends_with(&suffix)).count(), 14);
    }
    assert_eq!(records.iter().filter(|r| r.decision == D).count(), 5 * cfg.seeds.len());
}

#[test]
fn shared_source_reuses_one_reasoner() {
    let fx = fixtures();
    let cfg = RunConfig {
        seeds: vec![1, 2],
        ..RunConfig::default()
    };
    let source = ReasonerSource::Shared(Arc::new(accessgov_core::reasoner::RuleReasoner));
    let (run, report) = fx.evaluate(&Registry::default_registry(), &source, &cfg, None).unwrap();
    assert_eq!(run.runs.len(), 2);
    assert_eq!(report.reasoner.reasoner, accessgov_core::ReasonerKind::Rule);
}

#[test]
fn json_report_round_trips() {
    let (_, _, r) = evaluate(&RunConfig::default());
    let back: MetricsReport = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back, r);
}
