//! Remote model client speaking a small JSON protocol over HTTP.
//!
//! Request body: `{model, temperature, deterministic, template, stage, prompt}`.
//! Response body: a [`ReasonerVerdict`] document.

use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use parking_lot::Mutex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::label::Stage;

use super::resilience::{call_with_resilience, CallError, Clock, ResiliencePolicy, ResilienceState, SystemClock};
use super::{CircuitSnapshot, ModelSettings, Reasoner, ReasonerFailure, ReasonerKind, ReasonerQuery, ReasonerVerdict};

/// Upper bound on sampling temperature for any configured model.
pub const MAX_TEMPERATURE: f32 = 0.3;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteModelConfig {
    pub endpoint: String,
    pub model: String,
    temperature: f32,
    pub deterministic: bool,
    pub template: String,
}

impl fmt::Debug for RemoteModelConfig {
    // Endpoints may embed credentials in their query string.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let host = self.endpoint.split('?').next().unwrap_or_default();
        f.debug_struct("RemoteModelConfig")
            .field("endpoint", &host)
            .field("model", &self.model)
            .field("temperature", &self.temperature)
            .field("deterministic", &self.deterministic)
            .field("template", &self.template)
            .finish()
    }
}

impl RemoteModelConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, temperature: f32) -> Result<Self, String> {
        let endpoint = endpoint.into();
        if endpoint.trim().is_empty() {
            return Err("remote model endpoint is empty".into());
        }
        if !(0.0..=MAX_TEMPERATURE).contains(&temperature) {
            return Err(format!(
                "temperature {temperature} outside [0, {MAX_TEMPERATURE}]"
            ));
        }
        Ok(Self {
            endpoint,
            model: model.into(),
            temperature,
            deterministic: true,
            template: super::PROMPT_TEMPLATE_ID.to_string(),
        })
    }

    pub fn temperature(&self) -> f32 {
        self.temperature
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteRequest {
    pub model: String,
    pub temperature: f32,
    pub deterministic: bool,
    pub template: String,
    pub stage: Stage,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("timed out: {0}")]
    Timeout(String),
    #[error("connection failed: {0}")]
    Connect(String),
    #[error("http status {0}")]
    Status(u16),
    #[error("reading body: {0}")]
    Body(String),
}

impl From<TransportError> for CallError {
    fn from(e: TransportError) -> Self {
        match &e {
            TransportError::Timeout(_) => CallError::timeout(e.to_string()),
            TransportError::Connect(_) | TransportError::Body(_) => CallError::transient(e.to_string()),
            TransportError::Status(code) if *code == 429 || *code >= 500 => CallError::transient(e.to_string()),
            TransportError::Status(_) => CallError::malformed(e.to_string()),
        }
    }
}

pub trait Transport: Send + Sync {
    /// POST `body` and return the response text.
    fn post(&self, url: &str, body: &RemoteRequest, timeout: Duration) -> Result<String, TransportError>;
}

#[derive(Debug, Clone)]
pub struct UreqTransport {
    agent: ureq::Agent,
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self {
            agent: ureq::Agent::new_with_defaults(),
        }
    }
}

impl Transport for UreqTransport {
    fn post(&self, url: &str, body: &RemoteRequest, timeout: Duration) -> Result<String, TransportError> {
        let response = self
            .agent
            .post(url)
            .config()
            .timeout_global(Some(timeout))
            .build()
            .send_json(body);
        match response {
            Ok(mut resp) => resp
                .body_mut()
                .read_to_string()
                .map_err(|e| TransportError::Body(e.to_string())),
            Err(ureq::Error::StatusCode(code)) => Err(TransportError::Status(code)),
            Err(ureq::Error::Timeout(t)) => Err(TransportError::Timeout(t.to_string())),
            Err(e) => Err(TransportError::Connect(e.to_string())),
        }
    }
}

pub struct RemoteReasoner {
    config: RemoteModelConfig,
    transport: Arc<dyn Transport>,
    policy: ResiliencePolicy,
    state: Arc<ResilienceState>,
    clock: Arc<dyn Clock>,
    rng: Mutex<ChaCha8Rng>,
}

impl fmt::Debug for RemoteReasoner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RemoteReasoner")
            .field("config", &self.config)
            .field("policy", &self.policy)
            .finish_non_exhaustive()
    }
}

impl RemoteReasoner {
    pub fn new(config: RemoteModelConfig, policy: ResiliencePolicy) -> Self {
        Self::with_parts(config, policy, Arc::new(UreqTransport::default()), Arc::new(SystemClock::new()), 0)
    }

    pub fn with_parts(
        config: RemoteModelConfig,
        policy: ResiliencePolicy,
        transport: Arc<dyn Transport>,
        clock: Arc<dyn Clock>,
        rng_seed: u64,
    ) -> Self {
        let state = Arc::new(ResilienceState::new(&policy));
        Self {
            config,
            transport,
            policy,
            state,
            clock,
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(rng_seed)),
        }
    }

    pub fn state(&self) -> &ResilienceState {
        &self.state
    }
}

impl Reasoner for RemoteReasoner {
    fn settings(&self) -> ModelSettings {
        ModelSettings {
            reasoner: ReasonerKind::Remote,
            model: Some(self.config.model.clone()),
            temperature: Some(self.config.temperature),
        }
    }

    fn interpret(&self, query: &ReasonerQuery<'_>) -> Result<ReasonerVerdict, ReasonerFailure> {
        let body = RemoteRequest {
            model: self.config.model.clone(),
            temperature: self.config.temperature,
            deterministic: self.config.deterministic,
            template: query.prompt.template.clone(),
            stage: query.stage,
            prompt: query.prompt.text.clone(),
        };
        // The rng lock is held only to draw jitter; the call itself runs
        // against a private generator seeded from the shared one.
        let mut rng = {
            let mut shared = self.rng.lock();
            ChaCha8Rng::from_rng(&mut *shared)
        };
        let out = call_with_resilience(&self.policy, &self.state, self.clock.as_ref(), &mut rng, |timeout| {
            let text = self.transport.post(&self.config.endpoint, &body, timeout)?;
            serde_json::from_str::<ReasonerVerdict>(&text)
                .map_err(|e| CallError::malformed(format!("unparseable model response: {e}")))
        })?;
        let mut verdict = out.value;
        verdict.retries = out.retries;
        Ok(verdict)
    }

    fn circuit(&self) -> Option<CircuitSnapshot> {
        Some(self.state.breaker.snapshot())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::StageStatus;
    use crate::reasoner::{FailureCause, FakeClock, Prompt};
    use crate::testutil::request;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Canned {
        replies: Mutex<Vec<Result<String, TransportError>>>,
        calls: AtomicUsize,
    }

    impl Transport for Canned {
        fn post(&self, _: &str, body: &RemoteRequest, _: Duration) -> Result<String, TransportError> {
            assert!(body.temperature <= MAX_TEMPERATURE);
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.replies.lock().remove(0)
        }
    }

    fn reasoner(replies: Vec<Result<String, TransportError>>, policy: ResiliencePolicy) -> (RemoteReasoner, Arc<Canned>) {
        let canned = Arc::new(Canned {
            replies: Mutex::new(replies),
            calls: AtomicUsize::new(0),
        });
        let config = RemoteModelConfig::new("http://model.invalid/v1/assess", "m-small", 0.1).unwrap();
        let r = RemoteReasoner::with_parts(config, policy, canned.clone(), Arc::new(FakeClock::new()), 5);
        (r, canned)
    }

    fn ask(r: &RemoteReasoner) -> Result<ReasonerVerdict, ReasonerFailure> {
        let req = request("product_metrics", "u-analyst-01", "adoption dashboard", Some(30));
        let prompt = Prompt::from_entries(Stage::Context, vec![]).unwrap();
        r.interpret(&ReasonerQuery {
            request: &req,
            stage: Stage::Context,
            prompt: &prompt,
        })
    }

    #[test]
    fn temperature_above_cap_is_rejected() {
        assert!(RemoteModelConfig::new("http://x", "m", 0.31).is_err());
        assert!(RemoteModelConfig::new("http://x", "m", 0.3).is_ok());
        assert!(RemoteModelConfig::new("", "m", 0.0).is_err());
    }

    #[test]
    fn retries_server_errors_then_parses() {
        let (r, canned) = reasoner(
            vec![
                Err(TransportError::Status(503)),
                Ok(r#"{"status":"uncertain","note":"check scope"}"#.into()),
            ],
            ResiliencePolicy::default(),
        );
        let v = ask(&r).unwrap();
        assert_eq!(v.status, StageStatus::Uncertain);
        assert_eq!(v.retries, 1);
        assert_eq!(canned.calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn unparseable_response_is_not_retried() {
        let (r, canned) = reasoner(vec![Ok("<html>".into())], ResiliencePolicy::default());
        assert_eq!(ask(&r).unwrap_err().cause, FailureCause::NonRetryable);
        assert_eq!(canned.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn open_circuit_makes_no_network_call() {
        let policy = ResiliencePolicy {
            max_attempts: 1,
            circuit_threshold: 1,
            ..ResiliencePolicy::default()
        };
        let (r, canned) = reasoner(vec![Err(TransportError::Connect("refused".into()))], policy);
        assert!(ask(&r).is_err());
        assert_eq!(ask(&r).unwrap_err().cause, FailureCause::CircuitOpen);
        assert_eq!(canned.calls.load(Ordering::SeqCst), 1);
        assert_eq!(r.circuit().unwrap().state, super::super::CircuitState::Open);
    }

    #[test]
    fn debug_hides_endpoint_query() {
        let config = RemoteModelConfig::new("https://m.invalid/v1?key=s3cret", "m", 0.0).unwrap();
        assert!(!format!("{config:?}").contains("s3cret"));
    }
}
