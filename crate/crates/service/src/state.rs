use std::path::PathBuf;
use std::sync::Arc;

use accessgov_core::audit::{FileBackend, OnAuditFailure};
use accessgov_core::reasoner::{
    RemoteModelConfig, RemoteReasoner, ResiliencePolicy, RuleReasoner, ScriptFile, ScriptedReasoner,
};
use accessgov_core::{AuditLog, Controller, ControllerOptions, Org, Reasoner, ReasonerKind, Registry};
use parking_lot::{Mutex, RwLock};
use tokio::sync::OwnedMutexGuard;

use crate::config::{RemoteSettings, Secret, ServiceConfig};

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error("reading {path}: {message}")]
    Read { path: String, message: String },
    #[error("org {path}: {message}")]
    Org { path: String, message: String },
    #[error("registry {path}: {message}")]
    Registry { path: String, message: String },
    #[error("script {path}: {message}")]
    Script { path: String, message: String },
    #[error("audit log: {0}")]
    Audit(String),
    #[error("remote model: {0}")]
    Remote(String),
}

/// Everything the handlers need; cheap to clone.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    /// Decisions take one snapshot at entry; updates swap the whole Arc.
    org: RwLock<Arc<Org>>,
    /// Serializes catalog writers so read-modify-swap never loses an update.
    catalog_writer: Mutex<()>,
    template: Controller,
    registry: Registry,
    audit: Arc<AuditLog>,
    eval: Arc<tokio::sync::Mutex<()>>,
    admin_token: Secret,
    benchmark_dir: PathBuf,
}

/// Parts for building a state directly (tests, embedding).
pub struct AppParts {
    pub org: Org,
    pub registry: Registry,
    pub reasoner: Arc<dyn Reasoner>,
    pub options: ControllerOptions,
    pub audit: AuditLog,
    pub admin_token: Secret,
    pub benchmark_dir: PathBuf,
}

fn read(path: &std::path::Path) -> Result<String, StartupError> {
    std::fs::read_to_string(path).map_err(|e| StartupError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// The reasoner selected by `kind`; `script` is read only for scripted replay.
pub fn build_reasoner(
    kind: ReasonerKind,
    script: &std::path::Path,
    remote: Option<&RemoteSettings>,
    resilience: &ResiliencePolicy,
) -> Result<Arc<dyn Reasoner>, StartupError> {
    Ok(match kind {
        ReasonerKind::Rule => Arc::new(RuleReasoner),
        ReasonerKind::Scripted => {
            let file = ScriptFile::load(script).map_err(|e| StartupError::Script {
                path: script.display().to_string(),
                message: e.to_string(),
            })?;
            Arc::new(ScriptedReasoner::new(Arc::new(file)))
        }
        ReasonerKind::Remote => {
            let remote = remote.ok_or_else(|| StartupError::Remote("endpoint and model are not configured".into()))?;
            let model =
                RemoteModelConfig::new(&remote.endpoint, &remote.model, remote.temperature).map_err(StartupError::Remote)?;
            Arc::new(RemoteReasoner::new(model, resilience.clone()))
        }
    })
}

impl AppState {
    pub fn new(parts: AppParts) -> Self {
        let org = Arc::new(parts.org);
        let template = Controller::new(org.clone(), &parts.registry, parts.reasoner).with_options(parts.options);
        Self {
            inner: Arc::new(Inner {
                org: RwLock::new(org),
                catalog_writer: Mutex::new(()),
                template,
                registry: parts.registry,
                audit: Arc::new(parts.audit),
                eval: Arc::new(tokio::sync::Mutex::new(())),
                admin_token: parts.admin_token,
                benchmark_dir: parts.benchmark_dir,
            }),
        }
    }

    pub fn from_config(config: &ServiceConfig) -> Result<Self, StartupError> {
        let org = Org::from_json(&read(&config.org)?).map_err(|e| StartupError::Org {
            path: config.org.display().to_string(),
            message: e.to_string(),
        })?;
        let registry = match &config.registry {
            Some(path) => Registry::from_jsonl(&read(path)?).map_err(|e| StartupError::Registry {
                path: path.display().to_string(),
                message: e.to_string(),
            })?,
            None => Registry::default_registry(),
        };
        let reasoner = build_reasoner(
            config.reasoner,
            &config.script,
            config.remote.as_ref(),
            &config.resilience,
        )?;
        let audit = match &config.audit_path {
            Some(path) => {
                AuditLog::new(Box::new(FileBackend::open(path).map_err(|e| StartupError::Audit(e.to_string()))?))
            }
            None => {
                tracing::warn!("no audit path configured; audit records are kept in memory only");
                AuditLog::in_memory()
            }
        }
        .with_failure_mode(config.audit_mode);
        Ok(Self::new(AppParts {
            org,
            registry,
            reasoner,
            options: ControllerOptions::default(),
            audit,
            admin_token: config.admin_token.clone(),
            benchmark_dir: config.benchmark_dir.clone(),
        }))
    }

    /// Current catalog snapshot.
    pub fn org(&self) -> Arc<Org> {
        self.inner.org.read().clone()
    }

    /// A controller bound to the current snapshot.
    pub fn controller(&self) -> Controller {
        let mut c = self.inner.template.clone();
        c.org = self.org();
        c
    }

    /// Applies `edit` to a copy of the current org, validates, and swaps it in.
    pub fn update_org<E>(&self, edit: impl FnOnce(&mut Org) -> Result<(), E>) -> Result<Arc<Org>, E>
    where
        E: From<accessgov_core::catalog::CatalogError>,
    {
        let _writer = self.inner.catalog_writer.lock();
        let mut next = (*self.org()).clone();
        edit(&mut next)?;
        next.validate()?;
        let next = Arc::new(next);
        *self.inner.org.write() = next.clone();
        tracing::info!(org = %next.name, datasets = next.catalog.datasets.len(), "catalog snapshot swapped");
        Ok(next)
    }

    pub fn registry(&self) -> &Registry {
        &self.inner.registry
    }

    pub fn reasoner(&self) -> Arc<dyn Reasoner> {
        self.inner.template.reasoner.clone()
    }

    pub fn audit(&self) -> Arc<AuditLog> {
        self.inner.audit.clone()
    }

    pub fn audit_mode(&self) -> OnAuditFailure {
        self.inner.audit.failure_mode()
    }

    pub fn benchmark_dir(&self) -> &std::path::Path {
        &self.inner.benchmark_dir
    }

    pub fn is_admin(&self, token: &str) -> bool {
        let expected = self.inner.admin_token.expose().as_bytes();
        let given = token.as_bytes();
        // Length leaks, contents do not.
        expected.len() == given.len() && expected.iter().zip(given).fold(0u8, |acc, (a, b)| acc | (a ^ b)) == 0
    }

    /// Reserves the benchmark slot; `None` while a run is in progress.
    pub fn try_reserve_eval(&self) -> Option<OwnedMutexGuard<()>> {
        self.inner.eval.clone().try_lock_owned().ok()
    }

    pub fn eval_running(&self) -> bool {
        self.inner.eval.try_lock().is_err()
    }
}
