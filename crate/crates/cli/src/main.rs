use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qmerge::experiment::{self, ExperimentConfig, RunError};
use qmerge::Error;

/// Run a qmerge experiment described by a JSON config file.
#[derive(Parser, Debug)]
#[command(name = "qmerge", version, about)]
struct Args {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,

    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Monte Carlo sample count; overrides params.samples.
    #[arg(long)]
    samples: Option<usize>,
}

fn fail(e: RunError) -> ExitCode {
    println!("{}", e.to_json());
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            if !e.use_stderr() {
                // --help, --version
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return fail(RunError {
                operation: "usage".into(),
                error: Error::Argument(e.kind().to_string()),
            });
        }
    };
    let mut config = match ExperimentConfig::from_path(&args.config) {
        Ok(c) => c,
        Err(error) => {
            return fail(RunError {
                operation: "config".into(),
                error,
            })
        }
    };
    if let Some(s) = args.seed {
        config.seed = Some(s);
    }
    if let Some(o) = args.out {
        config.output = Some(o);
    }
    if let Some(n) = args.samples {
        config.params.samples = Some(n);
    }
    match experiment::run(&config) {
        Ok(m) => {
            for o in &m.outputs {
                eprintln!("wrote {o} ({} rows, {:.2}s)", m.rows, m.wall_time_seconds);
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}
