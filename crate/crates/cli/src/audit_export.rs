use std::path::PathBuf;

use accessgov_core::audit::FileBackend;
use accessgov_core::{AuditLog, AuditQuery, DecisionLabel, GateId};
use chrono::{DateTime, Utc};

use crate::{emit, write_file, Failure};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Audit log file (JSON lines) to read.
    #[arg(long, required_unless_present = "server", conflicts_with = "server")]
    audit: Option<PathBuf>,
    /// Export from a running service instead.
    #[arg(long, env = "ACCESSGOV_URL")]
    server: Option<String>,
    /// Admin token for --server.
    #[arg(long, env = "ACCESSGOV_ADMIN_TOKEN", hide_env_values = true)]
    token: Option<String>,
    /// APPROVE, DENY or CONDITIONAL (A/D/C accepted).
    #[arg(long, value_parser = parse_label)]
    decision: Option<DecisionLabel>,
    #[arg(long, value_parser = parse_gate)]
    gate: Option<GateId>,
    #[arg(long)]
    requester: Option<String>,
    #[arg(long)]
    dataset: Option<String>,
    /// RFC 3339 lower bound on decision time.
    #[arg(long)]
    from: Option<DateTime<Utc>>,
    #[arg(long)]
    to: Option<DateTime<Utc>>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_label(s: &str) -> Result<DecisionLabel, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_uppercase())).map_err(|e| e.to_string())
}

fn parse_gate(s: &str) -> Result<GateId, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

pub fn run(args: Args) -> Result<u8, Failure> {
    let query = AuditQuery {
        decision: args.decision,
        gate_id: args.gate,
        requester: args.requester,
        dataset: args.dataset,
        from: args.from,
        to: args.to,
        ..Default::default()
    };
    let csv = match (&args.server, &args.audit) {
        (Some(url), _) => {
            let mut client = accessgov_client::Client::new(url).map_err(|e| Failure::Invalid(e.to_string()))?;
            if let Some(t) = &args.token {
                client = client.with_token(t);
            }
            crate::runtime()?
                .block_on(client.export_csv(&query))
                .map_err(Failure::from_client)?
        }
        (None, Some(path)) => {
            if !path.exists() {
                return Err(Failure::Invalid(format!("{}: no such audit log", path.display())));
            }
            let backend = FileBackend::open(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
            AuditLog::new(Box::new(backend))
                .export_csv(&query)
                .map_err(|e| Failure::Invalid(e.to_string()))?
        }
        (None, None) => unreachable!("clap requires --audit or --server"),
    };
    match &args.out {
        Some(path) => write_file(path, &csv)?,
        None => emit(&csv),
    }
    Ok(0)
}
