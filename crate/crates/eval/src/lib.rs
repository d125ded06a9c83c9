//! Benchmark harness: a labelled case suite replayed through the decision
//! controller over several seeds, scored with exact-match, per-class,
//! safety and rubric metrics.

pub mod metrics;
pub mod report;
pub mod run;
pub mod suite;
pub mod thresholds;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use accessgov_core::catalog::CatalogError;
use accessgov_core::reasoner::{ScriptError, ScriptFile};
use accessgov_core::{AuditLog, Org, ReasonerKind, Registry};

pub use metrics::{wilson, ConfusionMatrix, Estimate, FarMode, MetricError, Proportion, WilsonInterval, DEFAULT_Z};
pub use report::{build_report, Channel, MetricsReport};
pub use run::{run_benchmark, EvalError, ReasonerSource, RunConfig, RunResult};
pub use suite::{BenchmarkCase, Family, Suite, SuiteError};
pub use thresholds::{ThresholdCheck, Thresholds};

pub const SUITE_FILE: &str = "suite.json";
pub const DEFAULT_SCRIPT: &str = "scripted.json";

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error("reading org {path}: {message}")]
    Org { path: String, message: String },
    #[error("org {path}: {source}")]
    OrgInvalid { path: String, source: CatalogError },
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error("fixture name `{0}` must be a plain file name")]
    Name(String),
    #[error("the {0} reasoner must be supplied by the caller")]
    Reasoner(ReasonerKind),
}

/// A suite with its org, resolved from the suite file's directory.
#[derive(Debug, Clone)]
pub struct Fixtures {
    pub dir: PathBuf,
    pub suite: Suite,
    pub org: Arc<Org>,
}

impl Fixtures {
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, FixtureError> {
        Self::load_suite(dir.as_ref().join(SUITE_FILE))
    }

    pub fn load_suite(path: impl AsRef<Path>) -> Result<Self, FixtureError> {
        let path = path.as_ref();
        let suite = Suite::load(path)?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let org_path = dir.join(&suite.org);
        let text = std::fs::read_to_string(&org_path).map_err(|e| FixtureError::Org {
            path: org_path.display().to_string(),
            message: e.to_string(),
        })?;
        let org = Org::from_json(&text).map_err(|source| FixtureError::OrgInvalid {
            path: org_path.display().to_string(),
            source,
        })?;
        Ok(Self {
            dir,
            suite,
            org: Arc::new(org),
        })
    }

    /// Load a scripted fixture by file name from the fixture directory.
    pub fn script(&self, name: &str) -> Result<ScriptFile, FixtureError> {
        let plain = Path::new(name).file_name().is_some_and(|f| f == name);
        if !plain || name.starts_with('.') {
            return Err(FixtureError::Name(name.to_string()));
        }
        Ok(ScriptFile::load(self.dir.join(name))?)
    }

    /// Reasoner source for a config; remote reasoners come from the caller.
    pub fn source(&self, config: &RunConfig) -> Result<ReasonerSource, FixtureError> {
        match config.reasoner {
            ReasonerKind::Rule => Ok(ReasonerSource::Rule),
            ReasonerKind::Scripted => {
                let name = config.script.as_deref().unwrap_or(DEFAULT_SCRIPT);
                Ok(ReasonerSource::Scripted(Arc::new(self.script(name)?)))
            }
            ReasonerKind::Remote => Err(FixtureError::Reasoner(ReasonerKind::Remote)),
        }
    }

    /// Run and score in one step.
    pub fn evaluate(
        &self,
        registry: &Registry,
        source: &ReasonerSource,
        config: &RunConfig,
        audit: Option<&AuditLog>,
    ) -> Result<(RunResult, MetricsReport), EvalError> {
        let run = run_benchmark(&self.suite, self.org.clone(), registry, source, config, audit)?;
        let settings = source.for_seed(config.seeds[0]).settings();
        let report = build_report(&self.suite, &run, settings)?;
        Ok((run, report))
    }
}
