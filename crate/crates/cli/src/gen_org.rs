use std::path::PathBuf;

use accessgov_core::catalog::{generate_synthetic_org, Sector};

use crate::{emit, write_file, Failure};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long, value_parser = |s: &str| s.parse::<Sector>())]
    sector: Sector,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<u8, Failure> {
    let text = generate_synthetic_org(args.sector, args.seed).to_json_pretty();
    match &args.out {
        Some(path) => {
            write_file(path, &text)?;
            eprintln!("wrote {}", path.display());
        }
        None => emit(&text),
    }
    Ok(0)
}
