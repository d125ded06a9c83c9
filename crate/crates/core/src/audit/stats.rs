use serde::{Deserialize, Serialize};

use super::AuditRecord;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("no latencies to summarize")]
    Empty,
    #[error("percentile {0} outside (0, 100]")]
    Percentile(String),
}

/// Nearest-rank percentile of an ascending slice: the value at rank
/// ceil(p/100 * n), 1-based.
pub fn nearest_rank(sorted: &[u64], p: f64) -> Result<u64, StatsError> {
    if sorted.is_empty() {
        return Err(StatsError::Empty);
    }
    if !(p > 0.0 && p <= 100.0) {
        return Err(StatsError::Percentile(p.to_string()));
    }
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}

/// `(p, value)` pairs in the order requested.
pub fn latency_percentiles(latencies: &[u64], percentiles: &[f64]) -> Result<Vec<(f64, u64)>, StatsError> {
    let mut sorted = latencies.to_vec();
    sorted.sort_unstable();
    percentiles
        .iter()
        .map(|&p| nearest_rank(&sorted, p).map(|v| (p, v)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub count: usize,
    pub p50_ms: u64,
    pub p95_ms: u64,
    pub max_ms: u64,
    pub total_retries: u64,
}

impl LatencySummary {
    pub fn from_latencies(latencies: &[u64], total_retries: u64) -> Result<Self, StatsError> {
        let ps = latency_percentiles(latencies, &[50.0, 95.0, 100.0])?;
        Ok(Self {
            count: latencies.len(),
            p50_ms: ps[0].1,
            p95_ms: ps[1].1,
            max_ms: ps[2].1,
            total_retries,
        })
    }

    pub fn from_records(records: &[AuditRecord]) -> Result<Self, StatsError> {
        let latencies: Vec<u64> = records.iter().map(|r| r.latency_ms).collect();
        let retries = records.iter().map(|r| u64::from(r.retry_count)).sum();
        Self::from_latencies(&latencies, retries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_and_decile_examples() {
        assert_eq!(latency_percentiles(&[100], &[50.0, 95.0]).unwrap(), [(50.0, 100), (95.0, 100)]);
        let tens: Vec<u64> = (1..=10).rev().map(|i| i * 10).collect();
        assert_eq!(latency_percentiles(&tens, &[50.0, 95.0]).unwrap(), [(50.0, 50), (95.0, 100)]);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(latency_percentiles(&[], &[50.0]), Err(StatsError::Empty));
        assert!(nearest_rank(&[1], 0.0).is_err());
    }
}
