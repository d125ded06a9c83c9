//! Timeouts, jittered exponential backoff, a windowed retry budget and a
//! circuit breaker around remote calls. Clock and rng are injected so the
//! whole thing runs deterministically under test.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use parking_lot::Mutex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{FailureCause, ReasonerFailure};

pub trait Clock: Send + Sync {
    /// Monotonic time since an arbitrary origin.
    fn now(&self) -> Duration;
    fn sleep(&self, duration: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// Manually advanced clock. `sleep` advances time instantly.
#[derive(Debug, Default)]
pub struct FakeClock {
    nanos: AtomicU64,
}

impl FakeClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn advance(&self, by: Duration) {
        self.nanos.fetch_add(by.as_nanos() as u64, Ordering::SeqCst);
    }
}

impl Clock for FakeClock {
    fn now(&self) -> Duration {
        Duration::from_nanos(self.nanos.load(Ordering::SeqCst))
    }

    fn sleep(&self, duration: Duration) {
        self.advance(duration);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResiliencePolicy {
    pub timeout_ms: u64,
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    pub backoff_multiplier: f64,
    /// Fraction in [0, 1].
    pub jitter: f64,
    /// Retries allowed per budget window, shared by all callers.
    pub retry_budget: u32,
    pub budget_window_ms: u64,
    pub circuit_threshold: u32,
    pub circuit_open_ms: u64,
    /// Wall-clock cap for one call including all retries.
    pub latency_budget_ms: u64,
}

impl Default for ResiliencePolicy {
    fn default() -> Self {
        Self {
            timeout_ms: 10_000,
            max_attempts: 3,
            backoff_base_ms: 200,
            backoff_multiplier: 2.0,
            jitter: 0.2,
            retry_budget: 20,
            budget_window_ms: 60_000,
            circuit_threshold: 5,
            circuit_open_ms: 30_000,
            latency_budget_ms: 60_000,
        }
    }
}

impl ResiliencePolicy {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_attempts == 0 {
            return Err("max_attempts must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.jitter) {
            return Err(format!("jitter {} outside [0, 1]", self.jitter));
        }
        if self.backoff_multiplier.is_nan() || self.backoff_multiplier < 1.0 {
            return Err(format!("backoff multiplier {} below 1", self.backoff_multiplier));
        }
        if self.circuit_threshold == 0 {
            return Err("circuit threshold must be at least 1".into());
        }
        Ok(())
    }

    fn nominal_ms(&self, retry: u32) -> f64 {
        self.backoff_base_ms as f64 * self.backoff_multiplier.powi(retry as i32)
    }

    /// Closed envelope for the delay before retry `retry` (0-based).
    pub fn delay_bounds(&self, retry: u32) -> (Duration, Duration) {
        let nominal = self.nominal_ms(retry);
        (
            Duration::from_secs_f64(nominal * (1.0 - self.jitter) / 1000.0),
            Duration::from_secs_f64(nominal * (1.0 + self.jitter) / 1000.0),
        )
    }

    /// Delay for retry `retry` given a uniform draw `u` in [-1, 1].
    pub fn delay(&self, retry: u32, u: f64) -> Duration {
        let u = u.clamp(-1.0, 1.0);
        let (lo, hi) = self.delay_bounds(retry);
        let ms = self.nominal_ms(retry) * (1.0 + self.jitter * u);
        Duration::from_secs_f64(ms / 1000.0).clamp(lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitState {
    Closed,
    Open,
    HalfOpen,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitSnapshot {
    pub state: CircuitState,
    pub consecutive_failures: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opened_at_ms: Option<u64>,
}

#[derive(Debug)]
struct BreakerInner {
    state: CircuitState,
    consecutive_failures: u32,
    opened_at: Option<Duration>,
    probe_in_flight: bool,
}

#[derive(Debug)]
pub struct CircuitBreaker {
    threshold: u32,
    open_for: Duration,
    inner: Mutex<BreakerInner>,
}

impl CircuitBreaker {
    pub fn new(threshold: u32, open_for: Duration) -> Self {
        Self {
            threshold: threshold.max(1),
            open_for,
            inner: Mutex::new(BreakerInner {
                state: CircuitState::Closed,
                consecutive_failures: 0,
                opened_at: None,
                probe_in_flight: false,
            }),
        }
    }

    /// Admission check. Open circuits reject until the open period has
    /// elapsed, then admit exactly one half-open probe.
    pub fn acquire(&self, now: Duration) -> bool {
        let mut inner = self.inner.lock();
        match inner.state {
            CircuitState::Closed => true,
            CircuitState::Open => {
                let opened = inner.opened_at.unwrap_or_default();
                if now.saturating_sub(opened) >= self.open_for {
                    inner.state = CircuitState::HalfOpen;
                    inner.probe_in_flight = true;
                    true
                } else {
                    false
                }
            }
            CircuitState::HalfOpen => {
                if inner.probe_in_flight {
                    false
                } else {
                    inner.probe_in_flight = true;
                    true
                }
            }
        }
    }

    pub fn on_success(&self) {
        let mut inner = self.inner.lock();
        inner.state = CircuitState::Closed;
        inner.consecutive_failures = 0;
        inner.opened_at = None;
        inner.probe_in_flight = false;
    }

    pub fn on_failure(&self, now: Duration) {
        let mut inner = self.inner.lock();
        inner.consecutive_failures += 1;
        inner.probe_in_flight = false;
        if inner.state == CircuitState::HalfOpen || inner.consecutive_failures >= self.threshold {
            inner.state = CircuitState::Open;
            inner.opened_at = Some(now);
        }
    }

    /// An outcome that says nothing about endpoint health (a malformed
    /// response): frees a half-open probe slot without changing state.
    pub fn on_neutral(&self) {
        self.inner.lock().probe_in_flight = false;
    }

    pub fn state(&self) -> CircuitState {
        self.inner.lock().state
    }

    pub fn snapshot(&self) -> CircuitSnapshot {
        let inner = self.inner.lock();
        CircuitSnapshot {
            state: inner.state,
            consecutive_failures: inner.consecutive_failures,
            opened_at_ms: inner.opened_at.map(|d| d.as_millis() as u64),
        }
    }
}

#[derive(Debug)]
struct BudgetInner {
    window_start: Duration,
    used: u32,
}

/// Token bucket refilled at window boundaries.
#[derive(Debug)]
pub struct RetryBudget {
    capacity: u32,
    window: Duration,
    inner: Mutex<BudgetInner>,
}

impl RetryBudget {
    pub fn new(capacity: u32, window: Duration) -> Self {
        Self {
            capacity,
            window,
            inner: Mutex::new(BudgetInner {
                window_start: Duration::ZERO,
                used: 0,
            }),
        }
    }

    pub fn try_take(&self, now: Duration) -> bool {
        let mut inner = self.inner.lock();
        if !self.window.is_zero() && now.saturating_sub(inner.window_start) >= self.window {
            inner.window_start = now;
            inner.used = 0;
        }
        if inner.used < self.capacity {
            inner.used += 1;
            true
        } else {
            false
        }
    }

    pub fn remaining(&self) -> u32 {
        let inner = self.inner.lock();
        self.capacity.saturating_sub(inner.used)
    }
}

/// Shared mutable state for one remote endpoint.
#[derive(Debug)]
pub struct ResilienceState {
    pub breaker: CircuitBreaker,
    pub budget: RetryBudget,
}

impl ResilienceState {
    pub fn new(policy: &ResiliencePolicy) -> Self {
        Self {
            breaker: CircuitBreaker::new(
                policy.circuit_threshold,
                Duration::from_millis(policy.circuit_open_ms),
            ),
            budget: RetryBudget::new(
                policy.retry_budget,
                Duration::from_millis(policy.budget_window_ms),
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CallErrorKind {
    /// Connection reset, 5xx, 429: worth retrying.
    Transient,
    Timeout,
    /// The endpoint answered with something we cannot use.
    Malformed,
}

/// Failure of a single attempt.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message}")]
pub struct CallError {
    pub kind: CallErrorKind,
    pub message: String,
}

impl CallError {
    pub fn transient(message: impl Into<String>) -> Self {
        Self {
            kind: CallErrorKind::Transient,
            message: message.into(),
        }
    }

    pub fn timeout(message: impl Into<String>) -> Self {
        Self {
            kind: CallErrorKind::Timeout,
            message: message.into(),
        }
    }

    pub fn malformed(message: impl Into<String>) -> Self {
        Self {
            kind: CallErrorKind::Malformed,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resilient<T> {
    pub value: T,
    pub retries: u32,
    /// Backoff delays actually slept, in order.
    pub delays: Vec<Duration>,
}

fn fail(cause: FailureCause, attempts: u32, message: impl Into<String>) -> ReasonerFailure {
    ReasonerFailure {
        cause,
        message: message.into(),
        attempts,
    }
}

/// Run `call` (given the per-attempt timeout) under the policy. An attempt
/// that returns after its timeout is treated as a timeout even if it
/// succeeded.
pub fn call_with_resilience<T, R, F>(
    policy: &ResiliencePolicy,
    state: &ResilienceState,
    clock: &dyn Clock,
    rng: &mut R,
    mut call: F,
) -> Result<Resilient<T>, ReasonerFailure>
where
    R: Rng + ?Sized,
    F: FnMut(Duration) -> Result<T, CallError>,
{
    let start = clock.now();
    let per_attempt = Duration::from_millis(policy.timeout_ms);
    let overall = Duration::from_millis(policy.latency_budget_ms);
    let max_attempts = policy.max_attempts.max(1);
    let mut attempts = 0u32;
    let mut delays = Vec::new();

    loop {
        let now = clock.now();
        let spent = now.saturating_sub(start);
        if spent >= overall {
            return Err(fail(FailureCause::Timeout, attempts, "latency budget exhausted"));
        }
        if !state.breaker.acquire(now) {
            return Err(fail(FailureCause::CircuitOpen, attempts, "circuit open"));
        }
        let timeout = per_attempt.min(overall - spent);
        let began = clock.now();
        let result = call(timeout);
        let elapsed = clock.now().saturating_sub(began);
        attempts += 1;
        let result = match result {
            Ok(_) if elapsed > timeout => Err(CallError::timeout(format!(
                "attempt took {} ms, limit {} ms",
                elapsed.as_millis(),
                timeout.as_millis()
            ))),
            other => other,
        };
        let error = match result {
            Ok(value) => {
                state.breaker.on_success();
                return Ok(Resilient {
                    value,
                    retries: attempts - 1,
                    delays,
                });
            }
            Err(e) if e.kind == CallErrorKind::Malformed => {
                state.breaker.on_neutral();
                return Err(fail(FailureCause::NonRetryable, attempts, e.message));
            }
            Err(e) => e,
        };
        state.breaker.on_failure(clock.now());
        tracing::debug!(attempt = attempts, error = %error.message, "reasoner attempt failed");

        if attempts >= max_attempts {
            let cause = match error.kind {
                CallErrorKind::Timeout => FailureCause::Timeout,
                _ => FailureCause::BudgetExhausted,
            };
            return Err(fail(cause, attempts, format!("gave up after {attempts} attempts: {}", error.message)));
        }
        if !state.budget.try_take(clock.now()) {
            return Err(fail(
                FailureCause::BudgetExhausted,
                attempts,
                format!("retry budget exhausted: {}", error.message),
            ));
        }
        let u: f64 = rng.random_range(-1.0..=1.0);
        let delay = policy.delay(attempts - 1, u);
        if clock.now().saturating_sub(start) + delay >= overall {
            return Err(fail(FailureCause::Timeout, attempts, "latency budget exhausted during backoff"));
        }
        clock.sleep(delay);
        delays.push(delay);
    }
}
