//! Service configuration, read from `ACCESSGOV_*` environment variables.

use std::fmt;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::str::FromStr;

use accessgov_core::audit::OnAuditFailure;
use accessgov_core::reasoner::ResiliencePolicy;
use accessgov_core::ReasonerKind;

pub const ENV_BIND: &str = "ACCESSGOV_BIND";
pub const ENV_REASONER: &str = "ACCESSGOV_REASONER";
pub const ENV_SCRIPT: &str = "ACCESSGOV_SCRIPT";
pub const ENV_MODEL_ENDPOINT: &str = "ACCESSGOV_MODEL_ENDPOINT";
pub const ENV_MODEL_NAME: &str = "ACCESSGOV_MODEL_NAME";
pub const ENV_MODEL_TEMPERATURE: &str = "ACCESSGOV_MODEL_TEMPERATURE";
pub const ENV_TIMEOUT_MS: &str = "ACCESSGOV_TIMEOUT_MS";
pub const ENV_MAX_ATTEMPTS: &str = "ACCESSGOV_MAX_ATTEMPTS";
pub const ENV_RETRY_BUDGET: &str = "ACCESSGOV_RETRY_BUDGET";
pub const ENV_CIRCUIT_THRESHOLD: &str = "ACCESSGOV_CIRCUIT_THRESHOLD";
pub const ENV_CIRCUIT_OPEN_MS: &str = "ACCESSGOV_CIRCUIT_OPEN_MS";
pub const ENV_AUDIT_PATH: &str = "ACCESSGOV_AUDIT_PATH";
pub const ENV_AUDIT_MODE: &str = "ACCESSGOV_AUDIT_MODE";
pub const ENV_ADMIN_TOKEN: &str = "ACCESSGOV_ADMIN_TOKEN";
pub const ENV_ORG: &str = "ACCESSGOV_ORG";
pub const ENV_BENCHMARK_DIR: &str = "ACCESSGOV_BENCHMARK_DIR";
pub const ENV_REGISTRY: &str = "ACCESSGOV_REGISTRY";
pub const ENV_STATIC_DIR: &str = "ACCESSGOV_STATIC_DIR";

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_BENCHMARK_DIR: &str = "benchmark";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("{0} is not set; it is required")]
    Missing(&'static str),
    #[error("{var}: {message}")]
    Invalid { var: &'static str, message: String },
}

/// A string that never shows up in logs or debug output.
#[derive(Clone, PartialEq, Eq)]
pub struct Secret(String);

impl Secret {
    pub fn new(value: impl Into<String>) -> Self {
        Self(value.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<redacted>")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteSettings {
    pub endpoint: String,
    pub model: String,
    pub temperature: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub reasoner: ReasonerKind,
    /// Script replayed by the scripted reasoner.
    pub script: PathBuf,
    pub remote: Option<RemoteSettings>,
    pub resilience: ResiliencePolicy,
    /// Append-only JSON-lines audit file; in-memory when unset.
    pub audit_path: Option<PathBuf>,
    pub audit_mode: OnAuditFailure,
    pub admin_token: Secret,
    pub org: PathBuf,
    pub benchmark_dir: PathBuf,
    pub registry: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
}

fn parse<T: FromStr>(var: &'static str, raw: Option<String>) -> Result<Option<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    raw.map(|s| {
        s.trim().parse().map_err(|e: T::Err| ConfigError::Invalid {
            var,
            message: format!("cannot parse `{s}`: {e}"),
        })
    })
    .transpose()
}

/// Resilience settings; unset variables keep the defaults.
pub fn resilience_from_lookup(get: &dyn Fn(&str) -> Option<String>) -> Result<ResiliencePolicy, ConfigError> {
    let mut resilience = ResiliencePolicy::default();
    if let Some(v) = parse(ENV_TIMEOUT_MS, get(ENV_TIMEOUT_MS))? {
        resilience.timeout_ms = v;
    }
    if let Some(v) = parse(ENV_MAX_ATTEMPTS, get(ENV_MAX_ATTEMPTS))? {
        resilience.max_attempts = v;
    }
    if let Some(v) = parse(ENV_RETRY_BUDGET, get(ENV_RETRY_BUDGET))? {
        resilience.retry_budget = v;
    }
    if let Some(v) = parse(ENV_CIRCUIT_THRESHOLD, get(ENV_CIRCUIT_THRESHOLD))? {
        resilience.circuit_threshold = v;
    }
    if let Some(v) = parse(ENV_CIRCUIT_OPEN_MS, get(ENV_CIRCUIT_OPEN_MS))? {
        resilience.circuit_open_ms = v;
    }
    resilience.validate().map_err(|message| ConfigError::Invalid {
        var: ENV_MAX_ATTEMPTS,
        message,
    })?;
    Ok(resilience)
}

/// Endpoint and model are mandatory once a remote reasoner is selected.
pub fn remote_from_lookup(get: &dyn Fn(&str) -> Option<String>) -> Result<RemoteSettings, ConfigError> {
    Ok(RemoteSettings {
        endpoint: get(ENV_MODEL_ENDPOINT).ok_or(ConfigError::Missing(ENV_MODEL_ENDPOINT))?,
        model: get(ENV_MODEL_NAME).ok_or(ConfigError::Missing(ENV_MODEL_NAME))?,
        temperature: parse(ENV_MODEL_TEMPERATURE, get(ENV_MODEL_TEMPERATURE))?.unwrap_or(0.0),
    })
}

/// Reads `ACCESSGOV_*` variables from the process environment; empty counts as unset.
pub fn env_lookup(key: &str) -> Option<String> {
    std::env::var(key).ok().filter(|v| !v.trim().is_empty())
}

impl ServiceConfig {
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(env_lookup)
    }

    /// Reads every setting through `lookup`; empty values count as unset.
    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let get = |k: &str| lookup(k).filter(|v| !v.trim().is_empty());

        let admin_token = get(ENV_ADMIN_TOKEN).ok_or(ConfigError::Missing(ENV_ADMIN_TOKEN))?;
        let bind = parse(ENV_BIND, get(ENV_BIND))?.unwrap_or_else(|| DEFAULT_BIND.parse().expect("valid default"));
        let reasoner = parse(ENV_REASONER, get(ENV_REASONER))?.unwrap_or(ReasonerKind::Rule);
        let benchmark_dir = PathBuf::from(get(ENV_BENCHMARK_DIR).unwrap_or_else(|| DEFAULT_BENCHMARK_DIR.into()));
        let org = get(ENV_ORG).map_or_else(|| benchmark_dir.join("org.json"), PathBuf::from);
        let script = get(ENV_SCRIPT).map_or_else(|| benchmark_dir.join("scripted.json"), PathBuf::from);

        let resilience = resilience_from_lookup(&get)?;
        let remote = if reasoner == ReasonerKind::Remote {
            Some(remote_from_lookup(&get)?)
        } else {
            None
        };

        let audit_mode = match get(ENV_AUDIT_MODE).as_deref().map(str::trim) {
            None | Some("fail_closed") => OnAuditFailure::FailClosed,
            Some("fail_open") => OnAuditFailure::FailOpen,
            Some(other) => {
                return Err(ConfigError::Invalid {
                    var: ENV_AUDIT_MODE,
                    message: format!("`{other}` is not fail_closed or fail_open"),
                })
            }
        };

        Ok(Self {
            bind,
            reasoner,
            script,
            remote,
            resilience,
            audit_path: get(ENV_AUDIT_PATH).map(PathBuf::from),
            audit_mode,
            admin_token: Secret::new(admin_token),
            org,
            benchmark_dir,
            registry: get(ENV_REGISTRY).map(PathBuf::from),
            static_dir: get(ENV_STATIC_DIR).map(PathBuf::from),
        })
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;

    fn from(pairs: &[(&str, &str)]) -> Result<ServiceConfig, ConfigError> {
        let env: HashMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        ServiceConfig::from_lookup(|k| env.get(k).cloned())
    }

    #[test]
    fn admin_token_is_mandatory() {
        assert_eq!(from(&[]).unwrap_err(), ConfigError::Missing(ENV_ADMIN_TOKEN));
        assert_eq!(
            from(&[(ENV_ADMIN_TOKEN, "  ")]).unwrap_err(),
            ConfigError::Missing(ENV_ADMIN_TOKEN)
        );
    }

    #[test]
    fn defaults_apply() {
        let cfg = from(&[(ENV_ADMIN_TOKEN, "t")]).unwrap();
        assert_eq!(cfg.bind.to_string(), DEFAULT_BIND);
        assert_eq!(cfg.reasoner, ReasonerKind::Rule);
        assert_eq!(cfg.org, PathBuf::from("benchmark/org.json"));
        assert_eq!(cfg.audit_mode, OnAuditFailure::FailClosed);
        assert_eq!(cfg.resilience, ResiliencePolicy::default());
        assert!(cfg.remote.is_none());
    }

    #[test]
    fn token_is_redacted_in_debug() {
        let cfg = from(&[(ENV_ADMIN_TOKEN, "hunter2-secret")]).unwrap();
        assert!(!format!("{cfg:?}").contains("hunter2"));
        assert_eq!(cfg.admin_token.expose(), "hunter2-secret");
    }

    #[test]
    fn remote_requires_endpoint_and_model() {
        let err = from(&[(ENV_ADMIN_TOKEN, "t"), (ENV_REASONER, "remote")]).unwrap_err();
        assert_eq!(err, ConfigError::Missing(ENV_MODEL_ENDPOINT));
        let cfg = from(&[
            (ENV_ADMIN_TOKEN, "t"),
            (ENV_REASONER, "remote"),
            (ENV_MODEL_ENDPOINT, "http://localhost:9000/v1"),
            (ENV_MODEL_NAME, "m"),
            (ENV_MODEL_TEMPERATURE, "0.1"),
            (ENV_RETRY_BUDGET, "4"),
        ])
        .unwrap();
        assert_eq!(cfg.remote.unwrap().temperature, 0.1);
        assert_eq!(cfg.resilience.retry_budget, 4);
    }

    #[test]
    fn bad_values_name_the_variable() {
        let err = from(&[(ENV_ADMIN_TOKEN, "t"), (ENV_BIND, "nowhere")]).unwrap_err();
        assert!(err.to_string().starts_with(ENV_BIND), "{err}");
        let err = from(&[(ENV_ADMIN_TOKEN, "t"), (ENV_AUDIT_MODE, "maybe")]).unwrap_err();
        assert!(err.to_string().starts_with(ENV_AUDIT_MODE), "{err}");
        let err = from(&[(ENV_ADMIN_TOKEN, "t"), (ENV_MAX_ATTEMPTS, "0")]).unwrap_err();
        assert!(err.to_string().contains("max_attempts"), "{err}");
    }
}
