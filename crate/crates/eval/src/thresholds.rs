//! Pass/fail gates applied to a report (CI use).

use serde::{Deserialize, Serialize};

use crate::report::MetricsReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub max_far_post_gate: u64,
    pub max_fdr_post_gate: u64,
    pub require_full_fa: bool,
    pub require_full_ca: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_edm_post_gate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_stability: Option<u64>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            max_far_post_gate: 0,
            max_fdr_post_gate: 0,
            require_full_fa: true,
            require_full_ca: true,
            min_edm_post_gate: None,
            min_stability: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Thresholds {
    pub fn check(&self, report: &MetricsReport) -> Vec<ThresholdCheck> {
        let mut out = Vec::new();
        let mut push = |name: &str, passed: bool, detail: String| {
            out.push(ThresholdCheck {
                name: name.to_string(),
                passed,
                detail,
            })
        };
        let far = &report.post_gate.far_must_deny;
        push(
            "far_post_gate",
            far.k <= self.max_far_post_gate,
            format!("{}/{} (max {})", far.k, far.n, self.max_far_post_gate),
        );
        let fdr = &report.post_gate.fdr_must_approve;
        push(
            "fdr_post_gate",
            fdr.k <= self.max_fdr_post_gate,
            format!("{}/{} (max {})", fdr.k, fdr.n, self.max_fdr_post_gate),
        );
        if self.require_full_fa {
            push("fa", report.fa.k == report.fa.n, format!("{}/{}", report.fa.k, report.fa.n));
        }
        if self.require_full_ca {
            push("ca", report.ca.k == report.ca.n, format!("{}/{}", report.ca.k, report.ca.n));
        }
        if let Some(min) = self.min_edm_post_gate {
            let edm = report.post_gate.edm.value().unwrap_or(0.0);
            push("edm_post_gate", edm + 1e-9 >= min, format!("{edm:.3} (min {min:.3})"));
        }
        if let Some(min) = self.min_stability {
            match &report.stability {
                Some(s) => push("stability", s.k >= min, format!("{}/{} (min {min})", s.k, s.n)),
                None => push("stability", true, "single seed, not assessed".into()),
            }
        }
        out
    }

    pub fn all_pass(&self, report: &MetricsReport) -> bool {
        self.check(report).iter().all(|c| c.passed)
    }
}
