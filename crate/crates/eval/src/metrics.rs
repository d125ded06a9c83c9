//! Classification and safety metrics with Wilson score intervals.

use std::fmt;

use accessgov_core::DecisionLabel;
use serde::{Deserialize, Serialize, Serializer};

/// 95% two-sided normal quantile.
pub const DEFAULT_Z: f64 = 1.959964;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("length mismatch: {predictions} predictions vs {truths} truths")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("no observations")]
    Empty,
    #[error("class {0} has no support")]
    ZeroSupport(DecisionLabel),
    #[error("{k} successes out of {n} trials")]
    Trials { k: u64, n: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilsonInterval {
    pub low: f64,
    pub high: f64,
    pub z: f64,
}

impl fmt::Display for WilsonInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.2}, {:.2}]", self.low, self.high)
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64, z: f64) -> Result<WilsonInterval, MetricError> {
    if n == 0 || k > n {
        return Err(MetricError::Trials { k, n });
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    // Exact endpoints at the degenerate proportions.
    let low = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if k == n { 1.0 } else { (center + half).min(1.0) };
    Ok(WilsonInterval { low, high, z })
}

/// A point estimate that may be undefined (zero denominator).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimate {
    Value(f64),
    Undefined,
}

impl Estimate {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Value(v) => Some(v),
            Self::Undefined => None,
        }
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Value(v) => write!(f, "{v:.3}"),
            Self::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Estimate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Value(v) => s.serialize_f64(*v),
            Self::Undefined => s.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for Estimate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Self::Value(v)),
            Raw::Str(s) if s == "undefined" => Ok(Self::Undefined),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("unexpected estimate `{s}`"))),
        }
    }
}

/// k out of n, with its estimate and (when defined) Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub k: u64,
    pub n: u64,
    pub estimate: Estimate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<WilsonInterval>,
}

impl Proportion {
    pub fn new(k: u64, n: u64, z: f64) -> Self {
        if n == 0 {
            return Self {
                k,
                n,
                estimate: Estimate::Undefined,
                interval: None,
            };
        }
        Self {
            k,
            n,
            estimate: Estimate::Value(k as f64 / n as f64),
            interval: wilson(k, n, z).ok(),
        }
    }

    pub fn value(&self) -> Option<f64> {
        self.estimate.value()
    }
}

impl fmt::Display for Proportion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.estimate, self.interval) {
            (Estimate::Value(v), Some(ci)) => write!(f, "{}/{} = {v:.3} {ci}", self.k, self.n),
            _ => write!(f, "{}/{} = undefined", self.k, self.n),
        }
    }
}

/// Rows are ground truth, columns predictions; class order A, D, C.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn from_pairs(
        predictions: &[DecisionLabel],
        truths: &[DecisionLabel],
    ) -> Result<Self, MetricError> {
        check_lengths(predictions, truths)?;
        let mut m = Self::default();
        for (p, t) in predictions.iter().zip(truths) {
            m.counts[t.index()][p.index()] += 1;
        }
        Ok(m)
    }

    pub fn get(&self, truth: DecisionLabel, predicted: DecisionLabel) -> u64 {
        self.counts[truth.index()][predicted.index()]
    }

    pub fn row(&self, truth: DecisionLabel) -> [u64; 3] {
        self.counts[truth.index()]
    }

    pub fn support(&self, class: DecisionLabel) -> u64 {
        self.row(class).iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn true_positives(&self, class: DecisionLabel) -> u64 {
        self.get(class, class)
    }

    pub fn false_positives(&self, class: DecisionLabel) -> u64 {
        let c = class.index();
        (0..3).filter(|&t| t != c).map(|t| self.counts[t][c]).sum()
    }

    pub fn false_negatives(&self, class: DecisionLabel) -> u64 {
        let c = class.index();
        (0..3).filter(|&p| p != c).map(|p| self.counts[c][p]).sum()
    }

    pub fn correct(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }
}

fn check_lengths(predictions: &[DecisionLabel], truths: &[DecisionLabel]) -> Result<(), MetricError> {
    if predictions.len() != truths.len() {
        return Err(MetricError::LengthMismatch {
            predictions: predictions.len(),
            truths: truths.len(),
        });
    }
    if predictions.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(())
}

/// Exact decision match: share of predictions equal to the truth.
pub fn edm(predictions: &[DecisionLabel], truths: &[DecisionLabel]) -> Result<f64, MetricError> {
    check_lengths(predictions, truths)?;
    let hits = predictions.iter().zip(truths).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// (precision, recall) for one class; a zero denominator is `Undefined`.
pub fn class_precision_recall(m: &ConfusionMatrix, class: DecisionLabel) -> (Estimate, Estimate) {
    let tp = m.true_positives(class);
    let ratio = |den: u64| {
        if den == 0 {
            Estimate::Undefined
        } else {
            Estimate::Value(tp as f64 / den as f64)
        }
    };
    (
        ratio(tp + m.false_positives(class)),
        ratio(tp + m.false_negatives(class)),
    )
}

/// Unweighted mean of the three class recalls.
pub fn balanced_accuracy(m: &ConfusionMatrix) -> Result<f64, MetricError> {
    let mut sum = 0.0;
    for class in DecisionLabel::ALL {
        let support = m.support(class);
        if support == 0 {
            return Err(MetricError::ZeroSupport(class));
        }
        sum += m.true_positives(class) as f64 / support as f64;
    }
    Ok(sum / 3.0)
}

/// How false approvals on must-deny cases are counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FarMode {
    /// Any prediction other than DENY.
    #[default]
    Table,
    /// Only APPROVE predictions.
    Strict,
}

/// False approvals among must-deny predictions: (count, denominator).
pub fn far_must_deny(predictions: &[DecisionLabel], mode: FarMode) -> Result<(u64, u64), MetricError> {
    if predictions.is_empty() {
        return Err(MetricError::Empty);
    }
    let count = predictions
        .iter()
        .filter(|p| match mode {
            FarMode::Table => **p != DecisionLabel::Deny,
            FarMode::Strict => **p == DecisionLabel::Approve,
        })
        .count();
    Ok((count as u64, predictions.len() as u64))
}

/// False denials among must-approve predictions: (count, denominator).
pub fn fdr_must_approve(predictions: &[DecisionLabel]) -> Result<(u64, u64), MetricError> {
    if predictions.is_empty() {
        return Err(MetricError::Empty);
    }
    let count = predictions.iter().filter(|p| **p == DecisionLabel::Deny).count();
    Ok((count as u64, predictions.len() as u64))
}

/// Label correct, and every required control present.
pub fn functional_appropriateness(
    truth: DecisionLabel,
    required_controls: &[String],
    label: DecisionLabel,
    controls: &[&str],
) -> bool {
    label == truth && required_controls.iter().all(|c| controls.contains(&c.as_str()))
}

/// Every expected regulation tag appears in the rationale's tags.
pub fn compliance_adherence(expected: &[String], tagged: &[String]) -> bool {
    expected.iter().all(|e| tagged.contains(e))
}

/// Number of cases whose label is identical across all seeds. Each inner
/// vector holds one case's labels, one per seed.
pub fn stability(per_case: &[Vec<DecisionLabel>]) -> Result<u64, MetricError> {
    if per_case.iter().any(|labels| labels.len() < 2) {
        return Err(MetricError::Empty);
    }
    Ok(per_case
        .iter()
        .filter(|labels| labels.windows(2).all(|w| w[0] == w[1]))
        .count() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use DecisionLabel::{Approve as A, Conditional as C, Deny as D};

    #[test]
    fn wilson_degenerate_bounds() {
        let ci = wilson(0, 1, DEFAULT_Z).unwrap();
        assert_eq!(ci.low, 0.0);
        assert!(ci.high < 1.0);
        let ci = wilson(5, 5, DEFAULT_Z).unwrap();
        assert_eq!(ci.high, 1.0);
        assert!(ci.low > 0.0);
        assert!(wilson(0, 0, DEFAULT_Z).is_err());
        assert!(wilson(3, 2, DEFAULT_Z).is_err());
    }

    #[test]
    fn edm_checks_lengths() {
        assert_eq!(edm(&[A], &[A, D]), Err(MetricError::LengthMismatch { predictions: 1, truths: 2 }));
        assert_eq!(edm(&[], &[]), Err(MetricError::Empty));
        assert_eq!(edm(&[A, D, C], &[A, D, C]).unwrap(), 1.0);
    }

    #[test]
    fn zero_precision_denominator_is_undefined() {
        let m = ConfusionMatrix::from_pairs(&[A, A, D], &[A, C, D]).unwrap();
        let (p, r) = class_precision_recall(&m, C);
        assert_eq!(p, Estimate::Undefined);
        assert_eq!(r, Estimate::Value(0.0));
        assert_eq!(serde_json::to_string(&p).unwrap(), "\"undefined\"");
        assert_eq!(p.to_string(), "undefined");
    }

    #[test]
    fn balanced_accuracy_needs_all_classes() {
        let m = ConfusionMatrix::from_pairs(&[A, D], &[A, D]).unwrap();
        assert_eq!(balanced_accuracy(&m), Err(MetricError::ZeroSupport(C)));
        let m = ConfusionMatrix::from_pairs(&[A, D, C], &[A, D, C]).unwrap();
        assert_eq!(balanced_accuracy(&m).unwrap(), 1.0);
    }

    #[test]
    fn all_deny_predictor_has_full_fdr() {
        assert_eq!(fdr_must_approve(&[D, D, D, D]).unwrap(), (4, 4));
        assert!(fdr_must_approve(&[]).is_err());
        assert!(far_must_deny(&[], FarMode::Table).is_err());
    }

    #[test]
    fn missing_control_fails_fa() {
        let req = vec!["time_boxed_access".to_string(), "enhanced_logging".to_string()];
        assert!(functional_appropriateness(C, &req, C, &["enhanced_logging", "time_boxed_access"]));
        assert!(!functional_appropriateness(C, &req, C, &["enhanced_logging"]));
        assert!(!functional_appropriateness(C, &req, A, &["enhanced_logging", "time_boxed_access"]));
    }

    #[test]
    fn missing_regulation_fails_ca() {
        let hipaa = vec!["HIPAA".to_string()];
        assert!(compliance_adherence(&hipaa, &["HIPAA".into(), "GDPR".into()]));
        assert!(!compliance_adherence(&hipaa, &["GDPR".into()]));
        assert!(compliance_adherence(&[], &[]));
    }

    #[test]
    fn single_label_suite_is_fully_stable() {
        let per_case = vec![vec![D; 5]; 14];
        assert_eq!(stability(&per_case).unwrap(), 14);
        assert!(stability(&[vec![D]]).is_err());
    }
}
