use std::fmt::Write as _;
use std::io::{self, Write as _};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rearguard::cli::{cmd_compare, cmd_generate, cmd_run, CliError, Overrides};
use rearguard::eval::SamplerKind;

/// Rear-approach tracking with sparse camera sampling.
///
/// Exit codes: 0 success, 2 config error, 3 i/o error, 4 internal error.
#[derive(Parser)]
#[command(name = "rearguard", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic trace and its ground truth from a scenario config.
    Generate {
        /// Scenario config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for `<name>.trace.jsonl` and `<name>.truth.jsonl`.
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Replay one trace through a sampler; writes report.json, alerts.jsonl
    /// and, for sarsa, qtable.txt.
    Run {
        /// Run config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Sampler seed (required here or in the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (required here or in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sampler: every_frame, interval[:ticks], random[:p],
        /// confidence[:c_min] or sarsa [default from config: sarsa].
        #[arg(long)]
        sampler: Option<String>,
        /// Unscored warm-up at the start of the trace, s [default: 60].
        #[arg(long = "warmup-s")]
        warmup_s: Option<f64>,
    },
    /// Run several samplers over a scenario suite; writes comparison.json and
    /// summary.txt.
    Compare {
        /// Suite config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Use this single seed instead of the config's seed list.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (required here or in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace the config's sampler list; repeatable.
        #[arg(long)]
        sampler: Vec<String>,
        /// Unscored warm-up at the start of each trace, s [default: 60].
        #[arg(long = "warmup-s")]
        warmup_s: Option<f64>,
    },
}

fn parse_samplers(names: &[String]) -> Result<Vec<SamplerKind>, CliError> {
    names.iter().map(|n| n.parse::<SamplerKind>().map_err(|e| CliError::Config(e.to_string()))).collect()
}

/// Runs the command and returns what it prints.
fn run(cli: Cli) -> Result<String, CliError> {
    let mut text = String::new();
    match cli.command {
        Command::Generate { config, out, seed } => {
            let g = cmd_generate(&config, &out, seed)?;
            writeln!(text, "{}\n{}", g.trace.display(), g.truth.display()).unwrap();
        }
        Command::Run { config, seed, out, sampler, warmup_s } => {
            let ov = Overrides { seed, out, samplers: parse_samplers(&Vec::from_iter(sampler))?, warmup_s };
            let a = cmd_run(&config, &ov)?;
            let r = &a.run;
            writeln!(
                text,
                "{} fpr={:.4} fnr={:.4} blink_fraction={:.4} assessments={}",
                r.sampler, r.fpr, r.fnr, r.blink_fraction, r.n_assessments
            )
            .unwrap();
            writeln!(text, "{}\n{}", a.report.display(), a.alerts.display()).unwrap();
            if let Some(q) = &a.q_table {
                writeln!(text, "{}", q.display()).unwrap();
            }
        }
        Command::Compare { config, seed, out, sampler, warmup_s } => {
            let ov = Overrides { seed, out, samplers: parse_samplers(&sampler)?, warmup_s };
            let a = cmd_compare(&config, &ov)?;
            text.push_str(&a.summary);
            writeln!(text, "{}", a.report.display()).unwrap();
        }
    }
    Ok(text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            // a closed pipe (e.g. `| head`) is not a failure
            match io::stdout().write_all(text.as_bytes()) {
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
                    eprintln!("rearguard: {e}");
                    ExitCode::from(3)
                }
                _ => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("rearguard: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
