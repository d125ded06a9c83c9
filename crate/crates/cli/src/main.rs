//! `govern`: operator entry points.
//!
//! Exit codes: 0 success, 1 runtime failure (including failed eval
//! thresholds), 2 invalid input. With `decide --exit-code-by-label`,
//! APPROVE=0, CONDITIONAL=3, DENY=4.

mod audit_export;
mod decide;
mod eval;
mod gen_org;
mod render;

use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "govern", version, about = "Policy-gated data access decisions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide one access request.
    Decide(decide::Args),
    /// Run the benchmark suite and write the report.
    Eval(eval::Args),
    /// Export audit records as CSV.
    AuditExport(audit_export::Args),
    /// Generate a synthetic org file.
    GenOrg(gen_org::Args),
    /// Run the HTTP service (configured through ACCESSGOV_* variables).
    Serve,
}

/// A failed command and the exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Invalid(_) => 2,
            Self::Runtime(_) => 1,
        }
    }

    /// Maps a client error: rejected input is a validation failure.
    pub fn from_client(err: accessgov_client::ClientError) -> Self {
        match err.status() {
            Some(s) if s.as_u16() == 400 || s.as_u16() == 404 => Self::Invalid(err.to_string()),
            _ => Self::Runtime(err.to_string()),
        }
    }
}

pub fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

pub fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

/// Parses JSON, naming the file, the field path, and the line/column.
pub fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T, Failure> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let at = e.path().to_string();
        Failure::Invalid(format!("{}: at `{at}`: {}", path.display(), e.into_inner()))
    })
}

/// Writes to standard output; a closed pipe ends the process quietly.
pub fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("govern: writing output: {e}");
        std::process::exit(1);
    }
}

pub fn runtime() -> Result<tokio::runtime::Runtime, Failure> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::Runtime(format!("starting runtime: {e}")))
}

fn serve() -> Result<u8, Failure> {
    let config = accessgov_service::ServiceConfig::from_env().map_err(|e| Failure::Invalid(e.to_string()))?;
    runtime()?
        .block_on(accessgov_service::run(config))
        .map_err(|e| match e {
            accessgov_service::ServiceError::Config(_) | accessgov_service::ServiceError::Startup(_) => {
                Failure::Invalid(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        })?;
    Ok(0)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn,accessgov_service=info".into()),
        )
        .with_writer(std::io::stderr)
        .init();

    let cli = Cli::parse();
    let result = match cli.command {
        Command::Decide(args) => decide::run(args),
        Command::Eval(args) => eval::run(args),
        Command::AuditExport(args) => audit_export::run(args),
        Command::GenOrg(args) => gen_org::run(args),
        Command::Serve => serve(),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("govern: {f}");
            ExitCode::from(f.code())
        }
    }
}
