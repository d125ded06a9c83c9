use std::path::PathBuf;
use std::sync::Arc;

use accessgov_core::audit::FileBackend;
use accessgov_core::{AccessRequest, AuditLog, Controller, DecisionLabel, DecisionOutcome, Org, ReasonerKind, Registry};
use accessgov_service::{build_reasoner, env_lookup, remote_from_lookup, resilience_from_lookup};
use clap::ValueEnum;

use crate::{emit, parse_json, read_file, render, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Json,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Access request document (JSON).
    #[arg(long)]
    request: PathBuf,
    /// Org file (catalog plus policies); not used with --server.
    #[arg(long, required_unless_present = "server", conflicts_with = "server")]
    org: Option<PathBuf>,
    #[arg(long, default_value = "rule", value_parser = parse_kind)]
    reasoner: ReasonerKind,
    /// Script for --reasoner scripted.
    #[arg(long, default_value = "benchmark/scripted.json")]
    script: PathBuf,
    /// Control/gate registry (JSON lines); built-in when omitted.
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Append an audit record to this file.
    #[arg(long, conflicts_with = "server")]
    audit: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
    /// Exit 0/3/4 for APPROVE/CONDITIONAL/DENY.
    #[arg(long)]
    exit_code_by_label: bool,
    /// Send the request to a running service instead of deciding locally.
    #[arg(long, env = "ACCESSGOV_URL")]
    server: Option<String>,
}

pub fn parse_kind(s: &str) -> Result<ReasonerKind, String> {
    s.parse()
}

pub fn label_code(label: DecisionLabel) -> u8 {
    match label {
        DecisionLabel::Approve => 0,
        DecisionLabel::Conditional => 3,
        DecisionLabel::Deny => 4,
    }
}

fn local(args: &Args, request: &AccessRequest) -> Result<DecisionOutcome, Failure> {
    let org_path = args.org.as_ref().expect("clap requires --org without --server");
    let org = Org::from_json(&read_file(org_path)?)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", org_path.display())))?;
    let registry = match &args.registry {
        Some(p) => Registry::from_jsonl(&read_file(p)?).map_err(|e| Failure::Invalid(format!("{}: {e}", p.display())))?,
        None => Registry::default_registry(),
    };
    let get = |k: &str| env_lookup(k);
    let (remote, resilience) = if args.reasoner == ReasonerKind::Remote {
        let remote = remote_from_lookup(&get).map_err(|e| Failure::Invalid(e.to_string()))?;
        (Some(remote), resilience_from_lookup(&get).map_err(|e| Failure::Invalid(e.to_string()))?)
    } else {
        (None, Default::default())
    };
    let reasoner = build_reasoner(args.reasoner, &args.script, remote.as_ref(), &resilience)
        .map_err(|e| Failure::Invalid(e.to_string()))?;
    let controller = Controller::new(Arc::new(org), &registry, reasoner);
    let outcome = controller
        .decide(request)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", args.request.display())))?;
    if let Some(path) = &args.audit {
        let backend = FileBackend::open(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
        AuditLog::new(Box::new(backend))
            .record(&outcome, request, &controller.settings())
            .map_err(|e| Failure::Runtime(format!("audit: {e}")))?;
    }
    Ok(outcome)
}

pub fn run(args: Args) -> Result<u8, Failure> {
    let text = read_file(&args.request)?;
    let request: AccessRequest = parse_json(&args.request, &text)?;
    let outcome = match &args.server {
        Some(url) => {
            if args.reasoner != ReasonerKind::Rule {
                eprintln!("govern: note: --reasoner is ignored with --server; the service uses its own");
            }
            let client = accessgov_client::Client::new(url).map_err(|e| Failure::Invalid(e.to_string()))?;
            crate::runtime()?
                .block_on(client.decide(&request))
                .map_err(Failure::from_client)?
        }
        None => local(&args, &request)?,
    };
    match args.format {
        Format::Json => emit(&(serde_json::to_string_pretty(&outcome).expect("outcome serializes") + "\n")),
        Format::Human => emit(&render::human(&outcome)),
    }
    Ok(if args.exit_code_by_label { label_code(outcome.label) } else { 0 })
}
