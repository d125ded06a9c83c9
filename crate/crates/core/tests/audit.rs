mod common;

use std::sync::Arc;

use accessgov_core::audit::{export_csv, latency_percentiles, parse_csv, FileBackend, CSV_HEADER};
use accessgov_core::reasoner::RuleReasoner;
use accessgov_core::{AuditLog, AuditQuery, Controller, DecisionLabel, Registry};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PURPOSES: [&str; 4] = [
    "Weekly support ticket volume dashboard for the platform team",
    "Salary benchmarks, \"Q3\" marketing, compensation campaign",
    "",
    "Month-end inventory report due Friday\nsecond line",
];

fn filled_log(log: &AuditLog) {
    let controller = Controller::new(Arc::new(common::org()), &Registry::default_registry(), Arc::new(RuleReasoner));
    let settings = controller.settings();
    for (i, (user, dataset)) in [
        ("u-eng-01", "support_metrics"),
        ("u-marketing-01", "salary_table"),
        ("u-eng-01", "support_metrics"),
        ("u-ops-01", "inventory_levels"),
        ("ghost", "inventory_levels"),
    ]
    .into_iter()
    .enumerate()
    {
        let mut req = common::request(user, dataset, PURPOSES[i % PURPOSES.len()], Some(30));
        req.request_id = format!("a-{i}");
        let out = controller.decide(&req).unwrap();
        log.record(&out, &req, &settings).unwrap();
    }
}

#[test]
fn csv_export_reads_back_through_a_plain_csv_reader() {
    let log = AuditLog::in_memory();
    filled_log(&log);
    let records = log.query(&AuditQuery::default()).unwrap();
    let text = export_csv(&records);

    // Reference reader: a generic RFC 4180 parser with no knowledge of the schema.
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, CSV_HEADER);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), records.len());
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    for (row, rec) in rows.iter().zip(&records) {
        assert_eq!(&row[col("request_id")], rec.request_id);
        assert_eq!(&row[col("purpose")], rec.purpose);
        assert_eq!(&row[col("decision")], rec.decision.as_str());
        assert_eq!(&row[col("rationale_hash")], rec.rationale_hash);
        assert_eq!(row[col("sequence")].parse::<u64>().unwrap(), rec.sequence);
    }
    assert_eq!(parse_csv(&text).unwrap(), records);
}

#[test]
fn every_record_carries_the_full_field_set() {
    let log = AuditLog::in_memory();
    filled_log(&log);
    for r in log.query(&AuditQuery::default()).unwrap() {
        assert!(r.sequence > 0);
        assert!(!r.request_id.is_empty());
        assert_eq!(r.rationale_hash_alg, "sha256");
        assert_eq!(r.rationale_hash.len(), 64);
        assert!(r.decided_at >= r.submitted_at);
        assert_eq!(r.reasoner, accessgov_core::ReasonerKind::Rule);
    }
}

#[test]
fn file_backend_survives_reopen_and_filters() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("audit.jsonl");
    let before = {
        let log = AuditLog::new(Box::new(FileBackend::open(&path).unwrap()));
        filled_log(&log);
        log.query(&AuditQuery::default()).unwrap()
    };
    let log = AuditLog::new(Box::new(FileBackend::open(&path).unwrap()));
    assert_eq!(log.query(&AuditQuery::default()).unwrap(), before);
    let denies = log
        .query(&AuditQuery {
            decision: Some(DecisionLabel::Deny),
            ..AuditQuery::default()
        })
        .unwrap();
    assert!(!denies.is_empty());
    assert!(denies.iter().all(|r| r.decision == DecisionLabel::Deny));
    // sequences keep increasing after reopen
    filled_log(&log);
    let all = log.query(&AuditQuery::default()).unwrap();
    assert!(all.windows(2).all(|w| w[0].sequence < w[1].sequence));
}

/// Sort-based oracle: the smallest value with at least p% of the sample
/// at or below it.
fn oracle(values: &[u64], p: f64) -> u64 {
    let mut sorted = values.to_vec();
    sorted.sort();
    let n = sorted.len() as f64;
    *sorted
        .iter()
        .find(|&&v| sorted.iter().filter(|&&w| w <= v).count() as f64 >= p / 100.0 * n - 1e-9)
        .unwrap()
}

#[test]
fn percentiles_match_sort_oracle_on_random_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let n = rng.random_range(1..200);
        let values: Vec<u64> = (0..n).map(|_| rng.random_range(0..5_000)).collect();
        let got = latency_percentiles(&values, &[50.0, 95.0, 99.0, 100.0]).unwrap();
        for (p, v) in got {
            assert_eq!(v, oracle(&values, p), "p{p} of {values:?}");
        }
    }
}

proptest! {
    #[test]
    fn purpose_text_survives_export(purpose in "\\PC{0,40}") {
        let log = AuditLog::in_memory();
        let controller = Controller::new(Arc::new(common::org()), &Registry::default_registry(), Arc::new(RuleReasoner));
        let req = common::request("u-eng-01", "support_metrics", &purpose, Some(30));
        let out = controller.decide(&req).unwrap();
        log.record(&out, &req, &controller.settings()).unwrap();
        let records = log.query(&AuditQuery::default()).unwrap();
        prop_assert_eq!(parse_csv(&export_csv(&records)).unwrap(), records);
    }
}
