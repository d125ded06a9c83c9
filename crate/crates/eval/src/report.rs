//! Metrics report over a completed run, rendered as text tables or JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use accessgov_core::audit::LatencySummary;
use accessgov_core::{DecisionLabel, GateId, ModelSettings};
use serde::{Deserialize, Serialize};

use crate::metrics::{
    balanced_accuracy, compliance_adherence, far_must_deny, fdr_must_approve, functional_appropriateness, stability,
    ConfusionMatrix, Estimate, FarMode, MetricError, Proportion, DEFAULT_Z,
};
use crate::run::{CaseResult, RunResult};
use crate::suite::{Family, Suite};

/// The three label channels every case produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Raw,
    PostGate,
    Final,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Self::Raw, Self::PostGate, Self::Final];

    pub fn title(self) -> &'static str {
        match self {
            Self::Raw => "Raw model",
            Self::PostGate => "After gates",
            Self::Final => "Final",
        }
    }

    pub fn pick(self, r: &CaseResult) -> DecisionLabel {
        match self {
            Self::Raw => r.raw,
            Self::PostGate => r.post_gate,
            Self::Final => r.final_label(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: DecisionLabel,
    pub support: u64,
    pub precision: Proportion,
    pub recall: Proportion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMetrics {
    pub channel: Channel,
    pub confusion: ConfusionMatrix,
    pub edm: Proportion,
    pub classes: Vec<ClassMetrics>,
    pub balanced_accuracy: Estimate,
    pub far_must_deny: Proportion,
    pub far_must_deny_strict: Proportion,
    pub fdr_must_approve: Proportion,
}

impl ChannelMetrics {
    pub fn class(&self, class: DecisionLabel) -> &ClassMetrics {
        &self.classes[class.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRow {
    pub case_id: String,
    pub family: Family,
    pub ground_truth: DecisionLabel,
    pub raw: DecisionLabel,
    pub post_gate: DecisionLabel,
    #[serde(rename = "final")]
    pub final_label: DecisionLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_id: Option<GateId>,
    pub controls: Vec<String>,
    pub regulations: Vec<String>,
    /// Passed functional appropriateness on every seed.
    pub fa: bool,
    /// Passed compliance adherence on every seed.
    pub ca: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stable: Option<bool>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub errored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub cases: usize,
    pub seeds: Vec<u64>,
    pub reasoner: ModelSettings,
    pub raw: ChannelMetrics,
    pub post_gate: ChannelMetrics,
    #[serde(rename = "final")]
    pub final_metrics: ChannelMetrics,
    pub fa: Proportion,
    pub ca: Proportion,
    /// Cases with the same final label on every seed; absent for one seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<Proportion>,
    pub latency: LatencySummary,
    /// Cases whose gate hit changed the raw label.
    pub gate_corrections: Vec<String>,
    pub rows: Vec<CaseRow>,
}

/// Most frequent label; ties go to the more restrictive label.
pub fn modal_label(labels: &[DecisionLabel]) -> DecisionLabel {
    let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l.permissiveness()).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    DecisionLabel::ALL
        .into_iter()
        .filter(|l| counts.get(&l.permissiveness()) == Some(&best))
        .min_by_key(|l| l.permissiveness())
        .unwrap_or(DecisionLabel::Deny)
}

fn channel_metrics(
    channel: Channel,
    suite: &Suite,
    predictions: &[DecisionLabel],
    z: f64,
) -> Result<ChannelMetrics, MetricError> {
    let truths: Vec<DecisionLabel> = suite.cases.iter().map(|c| c.ground_truth).collect();
    let confusion = ConfusionMatrix::from_pairs(predictions, &truths)?;
    let total = confusion.total();
    let classes = DecisionLabel::ALL
        .into_iter()
        .map(|class| {
            let tp = confusion.true_positives(class);
            ClassMetrics {
                class,
                support: confusion.support(class),
                precision: Proportion::new(tp, tp + confusion.false_positives(class), z),
                recall: Proportion::new(tp, tp + confusion.false_negatives(class), z),
            }
        })
        .collect();
    let balanced = match balanced_accuracy(&confusion) {
        Ok(v) => Estimate::Value(v),
        Err(MetricError::ZeroSupport(_)) => Estimate::Undefined,
        Err(e) => return Err(e),
    };
    let subset = |pred: fn(&crate::suite::BenchmarkCase) -> bool| -> Vec<DecisionLabel> {
        suite
            .cases
            .iter()
            .zip(predictions)
            .filter(|(c, _)| pred(c))
            .map(|(_, p)| *p)
            .collect()
    };
    let must_deny = subset(|c| c.must_deny);
    let must_approve = subset(|c| c.must_approve);
    let ratio = |r: Result<(u64, u64), MetricError>| match r {
        Ok((k, n)) => Ok(Proportion::new(k, n, z)),
        Err(MetricError::Empty) => Ok(Proportion::new(0, 0, z)),
        Err(e) => Err(e),
    };
    Ok(ChannelMetrics {
        channel,
        edm: Proportion::new(confusion.correct(), total, z),
        confusion,
        classes,
        balanced_accuracy: balanced,
        far_must_deny: ratio(far_must_deny(&must_deny, FarMode::Table))?,
        far_must_deny_strict: ratio(far_must_deny(&must_deny, FarMode::Strict))?,
        fdr_must_approve: ratio(fdr_must_approve(&must_approve))?,
    })
}

/// Fold a run into a report. Classification metrics use each case's
/// modal label across seeds; FA and CA must hold on every seed.
pub fn build_report(suite: &Suite, run: &RunResult, reasoner: ModelSettings) -> Result<MetricsReport, MetricError> {
    build_report_with_z(suite, run, reasoner, DEFAULT_Z)
}

pub fn build_report_with_z(
    suite: &Suite,
    run: &RunResult,
    reasoner: ModelSettings,
    z: f64,
) -> Result<MetricsReport, MetricError> {
    if run.runs.is_empty() || suite.cases.is_empty() {
        return Err(MetricError::Empty);
    }
    let n = suite.cases.len();
    let modal = |channel: Channel| -> Vec<DecisionLabel> {
        (0..n)
            .map(|i| {
                let labels: Vec<_> = run.case(i).into_iter().map(|r| channel.pick(r)).collect();
                modal_label(&labels)
            })
            .collect()
    };
    let raw_labels = modal(Channel::Raw);
    let post_labels = modal(Channel::PostGate);
    let final_labels = modal(Channel::Final);

    let multi_seed = run.runs.len() >= 2;
    let mut rows = Vec::with_capacity(n);
    for (i, case) in suite.cases.iter().enumerate() {
        let results = run.case(i);
        let fa = results.iter().all(|r| {
            functional_appropriateness(
                case.ground_truth,
                &case.required_controls,
                r.final_label(),
                &r.outcome.control_ids(),
            )
        });
        let ca = results
            .iter()
            .all(|r| compliance_adherence(&case.expected_regulations, &r.outcome.regulations()));
        let shown = results
            .iter()
            .find(|r| r.final_label() == final_labels[i])
            .unwrap_or(&results[0]);
        let stable = multi_seed.then(|| results.windows(2).all(|w| w[0].final_label() == w[1].final_label()));
        rows.push(CaseRow {
            case_id: case.case_id.clone(),
            family: case.family,
            ground_truth: case.ground_truth,
            raw: raw_labels[i],
            post_gate: post_labels[i],
            final_label: final_labels[i],
            gate_id: shown.outcome.gate_hit.as_ref().map(|g| g.gate_id),
            controls: shown.outcome.control_ids().into_iter().map(String::from).collect(),
            regulations: shown.outcome.regulations(),
            fa,
            ca,
            stable,
            errored: results.iter().any(|r| r.error.is_some()),
        });
    }

    let stability = if multi_seed {
        let per_case: Vec<Vec<DecisionLabel>> = (0..n)
            .map(|i| run.case(i).into_iter().map(|r| r.final_label()).collect())
            .collect();
        Some(Proportion::new(stability(&per_case)?, n as u64, z))
    } else {
        None
    };

    let all: Vec<&CaseResult> = run.runs.iter().flat_map(|r| &r.results).collect();
    let latencies: Vec<u64> = all.iter().map(|r| r.outcome.latency_ms).collect();
    let retries = all.iter().map(|r| u64::from(r.outcome.retry_count)).sum();
    let latency = LatencySummary::from_latencies(&latencies, retries).map_err(|_| MetricError::Empty)?;

    let gate_corrections = rows
        .iter()
        .filter(|r| r.raw != r.post_gate)
        .map(|r| r.case_id.clone())
        .collect();
    let count = |f: fn(&CaseRow) -> bool| rows.iter().filter(|r| f(r)).count() as u64;

    Ok(MetricsReport {
        cases: n,
        seeds: run.seeds(),
        reasoner,
        raw: channel_metrics(Channel::Raw, suite, &raw_labels, z)?,
        post_gate: channel_metrics(Channel::PostGate, suite, &post_labels, z)?,
        final_metrics: channel_metrics(Channel::Final, suite, &final_labels, z)?,
        fa: Proportion::new(count(|r| r.fa), n as u64, z),
        ca: Proportion::new(count(|r| r.ca), n as u64, z),
        stability,
        latency,
        gate_corrections,
        rows,
    })
}

impl MetricsReport {
    pub fn channel(&self, channel: Channel) -> &ChannelMetrics {
        match channel {
            Channel::Raw => &self.raw,
            Channel::PostGate => &self.post_gate,
            Channel::Final => &self.final_metrics,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// Summary table, confusion matrices and per-case table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let model = self.reasoner.model.as_deref().unwrap_or("-");
        let _ = writeln!(
            out,
            "Benchmark: {} cases, seeds {}, reasoner {} ({model})",
            self.cases,
            seeds.join(","),
            self.reasoner.reasoner
        );
        let _ = writeln!(out);
        let _ = writeln!(out, "Summary metrics (95% Wilson intervals)");
        let _ = writeln!(
            out,
            "{:<26}{:<30}{:<30}{}",
            "Metric",
            Channel::Raw.title(),
            Channel::PostGate.title(),
            Channel::Final.title()
        );
        let mut line = |name: &str, f: &dyn Fn(&ChannelMetrics) -> String| {
            let _ = writeln!(
                out,
                "{:<26}{:<30}{:<30}{}",
                name,
                f(&self.raw),
                f(&self.post_gate),
                f(&self.final_metrics)
            );
        };
        line("EDM", &|m| m.edm.to_string());
        line("Balanced accuracy", &|m| m.balanced_accuracy.to_string());
        for class in DecisionLabel::ALL {
            line(&format!("Recall {}", class.code()), &|m| m.class(class).recall.to_string());
        }
        for class in DecisionLabel::ALL {
            line(&format!("Precision {}", class.code()), &|m| m.class(class).precision.to_string());
        }
        line("FAR must-deny", &|m| fraction(&m.far_must_deny));
        line("FAR must-deny (strict)", &|m| fraction(&m.far_must_deny_strict));
        line("FDR must-approve", &|m| fraction(&m.fdr_must_approve));
        let _ = writeln!(out, "{:<26}{}", "FA", fraction(&self.fa));
        let _ = writeln!(out, "{:<26}{}", "CA", fraction(&self.ca));
        if let Some(s) = &self.stability {
            let _ = writeln!(out, "{:<26}{}", "Stability", fraction(s));
        }
        let _ = writeln!(
            out,
            "{:<26}p50 {} ms, p95 {} ms, max {} ms, retries {}",
            "Latency", self.latency.p50_ms, self.latency.p95_ms, self.latency.max_ms, self.latency.total_retries
        );

        let _ = writeln!(out);
        let _ = writeln!(out, "Confusion matrices (rows = ground truth, columns = A D C)");
        let _ = writeln!(
            out,
            "{:<10}{:<18}{:<18}{}",
            "",
            Channel::Raw.title(),
            Channel::PostGate.title(),
            Channel::Final.title()
        );
        for class in DecisionLabel::ALL {
            let cells = |m: &ChannelMetrics| {
                let r = m.confusion.row(class);
                format!("{:>3}{:>3}{:>3}", r[0], r[1], r[2])
            };
            let _ = writeln!(
                out,
                "{:<10}{:<18}{:<18}{}",
                format!("{} ({})", class.code(), self.raw.confusion.support(class)),
                cells(&self.raw),
                cells(&self.post_gate),
                cells(&self.final_metrics)
            );
        }

        let _ = writeln!(out);
        let _ = writeln!(out, "Cases");
        let _ = writeln!(
            out,
            "{:<6}{:<21}{:<6}{:<5}{:<6}{:<6}{:<4}{:<4}{:<14}gate / controls",
            "case", "family", "truth", "raw", "gated", "final", "FA", "CA", "regulations"
        );
        for r in &self.rows {
            let detail = match r.gate_id {
                Some(g) => g.to_string(),
                None => r.controls.join(","),
            };
            let yes = |b: bool| if b { "ok" } else { "--" };
            let _ = writeln!(
                out,
                "{:<6}{:<21}{:<6}{:<5}{:<6}{:<6}{:<4}{:<4}{:<14}{}{}",
                r.case_id,
                r.family,
                r.ground_truth.code(),
                r.raw.code(),
                r.post_gate.code(),
                r.final_label.code(),
                yes(r.fa),
                yes(r.ca),
                r.regulations.join(","),
                detail,
                match r.stable {
                    Some(false) => "  (unstable)",
                    _ => "",
                }
            );
        }
        out
    }
}

fn fraction(p: &Proportion) -> String {
    format!("{}/{}", p.k, p.n)
}
