use std::path::PathBuf;

use accessgov_core::audit::FileBackend;
use accessgov_core::{AuditLog, ReasonerKind, Stage};
use accessgov_eval::report::MetricsReport;
use accessgov_eval::{Fixtures, ReasonerSource, RunConfig, Thresholds};
use accessgov_service::{build_reasoner, env_lookup, remote_from_lookup, resilience_from_lookup};

use crate::decide::parse_kind;
use crate::{emit, write_file, Failure};

pub const REPORT_TEXT: &str = "report.txt";
pub const REPORT_JSON: &str = "report.json";

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long, default_value = "benchmark/suite.json")]
    suite: PathBuf,
    /// Number of seeds; runs seeds 1..=N.
    #[arg(long, default_value_t = 5, conflicts_with = "seed_list")]
    seeds: u64,
    /// Explicit comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seed_list: Vec<u64>,
    #[arg(long, default_value = "scripted", value_parser = parse_kind)]
    reasoner: ReasonerKind,
    /// Script file name inside the suite directory.
    #[arg(long)]
    script: Option<String>,
    /// Decide cases in suite order instead of a per-seed shuffle.
    #[arg(long)]
    no_shuffle: bool,
    /// Replace a stage with a neutral pass (repeatable).
    #[arg(long, value_parser = parse_stage)]
    ablate: Vec<Stage>,
    /// Disable the policy gates.
    #[arg(long)]
    no_gates: bool,
    #[arg(long, default_value = "eval-out")]
    out_dir: PathBuf,
    /// Append every decision to this audit file.
    #[arg(long, conflicts_with = "server")]
    audit: Option<PathBuf>,
    /// Minimum post-gate EDM.
    #[arg(long)]
    min_edm: Option<f64>,
    /// Minimum number of stable cases.
    #[arg(long)]
    min_stability: Option<u64>,
    /// Run on a service instead of in-process.
    #[arg(long, env = "ACCESSGOV_URL")]
    server: Option<String>,
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn config(args: &Args) -> RunConfig {
    let mut cfg = RunConfig {
        seeds: if args.seed_list.is_empty() {
            (1..=args.seeds).collect()
        } else {
            args.seed_list.clone()
        },
        shuffle: !args.no_shuffle,
        reasoner: args.reasoner,
        script: args.script.clone(),
        ..RunConfig::default()
    };
    cfg.options.ablated.extend(args.ablate.iter().copied());
    cfg.options.gates_enabled = !args.no_gates;
    cfg
}

fn local(args: &Args, cfg: &RunConfig) -> Result<String, Failure> {
    let fx = Fixtures::load_suite(&args.suite).map_err(|e| Failure::Invalid(e.to_string()))?;
    let source = match cfg.reasoner {
        ReasonerKind::Remote => {
            let get = |k: &str| env_lookup(k);
            let remote = remote_from_lookup(&get).map_err(|e| Failure::Invalid(e.to_string()))?;
            let resilience = resilience_from_lookup(&get).map_err(|e| Failure::Invalid(e.to_string()))?;
            let reasoner = build_reasoner(ReasonerKind::Remote, std::path::Path::new(""), Some(&remote), &resilience)
                .map_err(|e| Failure::Invalid(e.to_string()))?;
            ReasonerSource::Shared(reasoner)
        }
        _ => fx.source(cfg).map_err(|e| Failure::Invalid(e.to_string()))?,
    };
    let audit = match &args.audit {
        Some(path) => Some(AuditLog::new(Box::new(
            FileBackend::open(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?,
        ))),
        None => None,
    };
    let registry = accessgov_core::Registry::default_registry();
    let (_, report) = fx
        .evaluate(&registry, &source, cfg, audit.as_ref())
        .map_err(|e| match e {
            accessgov_eval::EvalError::Config(_) => Failure::Invalid(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        })?;
    Ok(report.to_json())
}

pub fn run(args: Args) -> Result<u8, Failure> {
    let cfg = config(&args);
    cfg.validate().map_err(|e| Failure::Invalid(e.to_string()))?;
    let json = match &args.server {
        Some(url) => {
            let client = accessgov_client::Client::new(url).map_err(|e| Failure::Invalid(e.to_string()))?;
            crate::runtime()?
                .block_on(client.eval_raw(&cfg))
                .map_err(Failure::from_client)?
        }
        None => local(&args, &cfg)?,
    };
    let report: MetricsReport =
        serde_json::from_str(&json).map_err(|e| Failure::Runtime(format!("decoding report: {e}")))?;
    let text = report.to_text();
    write_file(&args.out_dir.join(REPORT_JSON), &json)?;
    write_file(&args.out_dir.join(REPORT_TEXT), &text)?;

    let thresholds = Thresholds {
        min_edm_post_gate: args.min_edm,
        min_stability: args.min_stability,
        ..Thresholds::default()
    };
    let checks = thresholds.check(&report);
    let mut out = text;
    out.push('\n');
    for c in &checks {
        out.push_str(&format!("{} {:<16} {}\n", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail));
    }
    out.push_str(&format!("reports written to {}\n", args.out_dir.display()));
    emit(&out);
    Ok(if checks.iter().all(|c| c.passed) { 0 } else { 1 })
}
