use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ratiolab_cli::config::RawConfig;
use ratiolab_cli::report::write_records;
use ratiolab_cli::{render_text, run_report, CliError, CliResult, RunConfig};

/// First- and second-order MSE approximations for two-auxiliary ratio-type
/// estimators, checked against exact SRSWOR enumeration or Monte Carlo.
///
/// Exit codes: 0 success, 2 input format error, 3 numerical or singular
/// system, 4 configuration error. Failures print one tab-separated error
/// record on stderr.
#[derive(Parser, Debug)]
#[command(name = "ratiolab", version)]
struct Args {
    /// Flat `key = value` config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Population CSV with header exactly `y,x,z`.
    #[arg(long)]
    data: Option<String>,
    /// `Vpqr = value` fixture instead of raw data.
    #[arg(long)]
    fixture: Option<String>,
    /// Sample size.
    #[arg(long)]
    n: Option<String>,
    /// Comma-separated families (t1..t5) or `all`.
    #[arg(long)]
    estimators: Option<String>,
    /// Parameter policy and values, e.g. `quadratic; t3:alpha=1.5`.
    #[arg(long)]
    params: Option<String>,
    /// as-published | re-derived | both
    #[arg(long)]
    mode: Option<String>,
    /// Monte Carlo replications when enumeration exceeds the budget.
    #[arg(long)]
    reps: Option<String>,
    /// Seed for every random draw.
    #[arg(long)]
    seed: Option<String>,
    /// Largest number of subsets enumerated exhaustively.
    #[arg(long)]
    budget: Option<String>,
    /// Worker threads for Monte Carlo; results do not depend on it.
    #[arg(long)]
    workers: Option<String>,
    /// Values for undefined published symbols, e.g. `A1=0.2,S=0`.
    #[arg(long)]
    symbols: Option<String>,
    /// Write tab-separated records (one per report cell) here.
    #[arg(long)]
    out: Option<String>,
}

impl Args {
    fn raw(&self) -> CliResult<RawConfig> {
        let mut raw = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::config(format!("cannot read {}: {e}", path.display()))
                })?;
                RawConfig::parse(&text)?
            }
            None => RawConfig::default(),
        };
        let mut flags = RawConfig::default();
        for (key, value) in [
            ("data", &self.data),
            ("fixture", &self.fixture),
            ("n", &self.n),
            ("estimators", &self.estimators),
            ("params", &self.params),
            ("mode", &self.mode),
            ("reps", &self.reps),
            ("seed", &self.seed),
            ("budget", &self.budget),
            ("workers", &self.workers),
            ("symbols", &self.symbols),
            ("out", &self.out),
        ] {
            if let Some(v) = value {
                flags.set(key, v.clone());
            }
        }
        // a source given on the command line replaces the file's source
        if flags.get("data").is_some() || flags.get("fixture").is_some() {
            raw = raw.without_source();
        }
        Ok(raw.overlay(flags))
    }
}

fn run(args: &Args) -> CliResult<()> {
    let cfg = RunConfig::from_raw(&args.raw()?)?;
    let report = run_report(&cfg)?;
    print!("{}", render_text(&report));
    if let Some(path) = &cfg.out {
        write_records(&report, path)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::config(
                e.to_string()
                    .lines()
                    .next()
                    .unwrap_or("bad arguments")
                    .to_string(),
            );
            eprintln!("{}", err.record());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.record());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
