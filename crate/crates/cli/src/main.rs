use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use toges::config::ExperimentConfig;
use toges::rates::{parse_window, report_rates, Verdict};
use toges::runner::{run_experiment, Failure, RunOptions};
use toges::{exit, presets};

#[derive(Parser)]
#[command(name = "toges", version, about = "Integrate third-order gradient dynamics and report convergence rates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a config file (or a shipped preset).
    Run {
        /// JSON experiment config.
        #[arg(required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Output directory; overrides the config.
        #[arg(long, env = "TOGES_OUT_DIR")]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
        /// Multiplies every run's integrator tolerances.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// Fit log-log slopes to gap columns of emitted CSVs.
    Rates {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(long, default_value_t = 3.0)]
        power: f64,
        /// Fit window as lo:hi.
        #[arg(long, value_parser = parse_window)]
        window: (f64, f64),
        /// Slopes above this fail.
        #[arg(long, allow_hyphen_values = true)]
        threshold: Option<f64>,
        /// Columns to fit (default: gap_u and gap_v).
        #[arg(long = "column")]
        columns: Vec<String>,
        /// One JSON object per series.
        #[arg(long)]
        json: bool,
    },
    /// List or print the shipped presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    Show { name: String },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(match cli.command {
        Command::Run { config, preset, out, workers, tol_scale } => {
            run(config, preset, out, workers, tol_scale)
        }
        Command::Rates { csv, power, window, threshold, columns, json } => {
            match report_rates(&csv, &columns, power, window, threshold) {
                Ok(rows) => {
                    for r in &rows {
                        if json {
                            println!("{}", serde_json::to_string(r).expect("serializable"));
                        } else {
                            println!("{}", r.line());
                        }
                    }
                    let failed = rows.iter().any(|r| r.verdict == Verdict::Fail);
                    if failed && threshold.is_some() || rows.iter().any(|r| r.error.is_some()) {
                        exit::INVARIANT
                    } else {
                        exit::OK
                    }
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    exit::PARSE
                }
            }
        }
        Command::Presets { action: PresetAction::List } => {
            for name in presets::NAMES {
                println!("{name:<10} {}", presets::describe(name).unwrap_or(""));
            }
            exit::OK
        }
        Command::Presets { action: PresetAction::Show { name } } => match presets::preset(&name) {
            Some(cfg) => {
                println!("{}", cfg.to_json());
                exit::OK
            }
            None => {
                eprintln!("error: unknown preset '{name}' (known: {})", presets::NAMES.join(", "));
                exit::PARSE
            }
        },
    })
}

fn run(
    config: Option<PathBuf>,
    preset: Option<String>,
    out: Option<PathBuf>,
    workers: usize,
    tol_scale: f64,
) -> u8 {
    let cfg = match (config, preset) {
        (Some(path), _) => {
            let text = match std::fs::read_to_string(&path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: reading {}: {e}", path.display());
                    return exit::PARSE;
                }
            };
            match ExperimentConfig::parse(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {}: {e}", path.display());
                    return exit::PARSE;
                }
            }
        }
        (None, Some(name)) => match presets::preset(&name) {
            Some(c) => c,
            None => {
                eprintln!("error: unknown preset '{name}' (known: {})", presets::NAMES.join(", "));
                return exit::PARSE;
            }
        },
        (None, None) => unreachable!("clap requires a config or a preset"),
    };
    let out_dir = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let opts = RunOptions { out_dir, workers: workers.max(1), tol_scale };
    match run_experiment(&cfg, &opts) {
        Ok(outcome) => {
            for p in &outcome.written {
                println!("wrote {}", p.display());
            }
            if outcome.violations.is_empty() {
                exit::OK
            } else {
                eprintln!("{} invariant violation(s):", outcome.violations.len());
                for v in &outcome.violations {
                    eprintln!("  {v}");
                }
                exit::INVARIANT
            }
        }
        Err(Failure::Capability(msg)) => {
            eprintln!("error: capability mismatch: {msg}");
            exit::CAPABILITY
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            exit::PARSE
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            exit::INVARIANT
        }
    }
}
