use std::path::PathBuf;
use std::process::ExitCode;

use acmag_cli::{run, RunConfig, StudyCommand};
use clap::Parser;

/// AC-field amplitude/frequency estimation studies.
#[derive(Debug, Parser)]
#[command(name = "acmag", version)]
struct Args {
    #[arg(value_enum)]
    command: StudyCommand,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory. Overrides `out` in the configuration; defaults to
    /// the working directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = RunConfig::load(&args.config).and_then(|mut cfg| {
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        let out = args.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("."));
        run(args.command, &cfg, &out)
    });
    match result {
        Ok((csv, json)) => {
            println!("wrote {} and {}", csv.display(), json.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("acmag: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
