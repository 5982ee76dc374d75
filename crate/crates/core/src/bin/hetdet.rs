use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use hetdet::cli::{dispatch, Command, EXIT_ERROR};
use hetdet::config::parse_config;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scenario {
    Analytic,
    Simulate,
    Table1,
    SqueezedCompare,
}

impl From<Scenario> for Command {
    fn from(s: Scenario) -> Self {
        match s {
            Scenario::Analytic => Command::Analytic,
            Scenario::Simulate => Command::Simulate,
            Scenario::Table1 => Command::Table1,
            Scenario::SqueezedCompare => Command::SqueezedCompare,
        }
    }
}

/// Balanced bichromatic heterodyne detection: analytic spectra, Monte Carlo
/// checks and the noise-figure table.
#[derive(Debug, Parser)]
#[command(name = "hetdet", version)]
struct Args {
    scenario: Scenario,
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HETDET_LOG", "warn")).init();
    let args = Args::parse();
    let run = || -> hetdet::Result<u8> {
        let mut cfg = parse_config(&args.config)?;
        if let Some(seed) = args.seed {
            cfg = cfg.with_seed(seed);
        }
        let out = args.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
        let outcome = dispatch(args.scenario.into(), &cfg, &out)?;
        for f in &outcome.files {
            log::info!("wrote {}", f.display());
        }
        if !outcome.passed {
            eprintln!("tolerance check failed; see {}", out.join("report.json").display());
        }
        Ok(outcome.exit_code())
    };
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
