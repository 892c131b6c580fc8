//! Command-line front end: validate scenarios, run experiments, summarize
//! and compare metrics logs, export plot data.
//!
//! Exit codes: 0 success, 2 validation/usage, 3 runtime, 4 io.

use clap::{Parser, Subcommand, ValueEnum};
use gridslice_core::sim::{
    compare_runs, export_log_csv, export_log_json, export_summary_csv, export_summary_json,
    import_log_json, import_summary_json, load_scenario, run_experiment, summarize, SetupTag,
    SimError,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gridslice", version, about = "RAN slicing simulator for IEC 61850 smart-grid services")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SetupArg {
    #[value(name = "beyond5g_plus")]
    Beyond5gPlus,
    #[value(name = "default_5g")]
    Default5g,
    #[value(name = "baseline_rr")]
    BaselineRr,
    #[value(name = "baseline_greedy")]
    BaselineGreedy,
}

impl From<SetupArg> for SetupTag {
    fn from(a: SetupArg) -> Self {
        match a {
            SetupArg::Beyond5gPlus => SetupTag::Beyond5gPlus,
            SetupArg::Default5g => SetupTag::Default5g,
            SetupArg::BaselineRr => SetupTag::BaselineRr,
            SetupArg::BaselineGreedy => SetupTag::BaselineGreedy,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a scenario file and report every constraint violation.
    Validate { scenario: PathBuf },
    /// Run one experiment setup and persist the metrics log.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        setup: SetupArg,
        /// Overrides the scenario's run.seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Windowed percentiles and violation rates from a metrics log.
    Summarize {
        log: PathBuf,
        #[arg(long, default_value_t = 10)]
        windows: u64,
        /// Write the summary JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a flat CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Per-slice final-window deltas between two summaries of the same
    /// scenario.
    Compare {
        summary_a: PathBuf,
        summary_b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-export a metrics log as CSV streams or normalized JSON.
    Export {
        log: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), SimError> {
    match cli.command {
        Command::Validate { scenario } => {
            let cfg = load_scenario(&scenario)?;
            println!("ok: scenario valid, config hash {}", cfg.config_hash);
            Ok(())
        }
        Command::Run {
            scenario,
            setup,
            seed,
            out,
        } => {
            let cfg = load_scenario(&scenario)?;
            let seed = seed.unwrap_or(cfg.seed);
            let tag: SetupTag = setup.into();
            std::fs::create_dir_all(&out).map_err(|e| SimError::io(&out, e))?;
            match run_experiment(&cfg, tag, seed) {
                Ok((log, agents)) => {
                    let log_path = out.join("metrics.json");
                    export_log_json(&log, &log_path)?;
                    if let Some(agents) = agents {
                        for (slice, agent) in &agents {
                            let path = out.join(format!("agent_{slice}.ckpt"));
                            let text = agent.write_checkpoint(
                                &cfg.config_hash,
                                seed,
                                cfg.training.episodes,
                            );
                            std::fs::write(&path, text).map_err(|e| SimError::io(&path, e))?;
                        }
                    }
                    println!(
                        "ok: setup {tag}, seed {seed}, {} step records, log hash {}",
                        log.steps.len(),
                        log.content_hash()
                    );
                    println!("wrote {}", log_path.display());
                    Ok(())
                }
                Err(failure) => {
                    // Persist the partial log, marked incomplete.
                    let log_path = out.join("metrics.json");
                    export_log_json(&failure.partial, &log_path)?;
                    eprintln!("run failed; partial log at {}", log_path.display());
                    Err(failure.error)
                }
            }
        }
        Command::Summarize {
            log,
            windows,
            out,
            csv,
        } => {
            let log = import_log_json(&log)?;
            let summary = summarize(&log, windows)?;
            if let Some(csv_path) = csv {
                export_summary_csv(&summary, &csv_path)?;
            }
            match out {
                Some(path) => {
                    export_summary_json(&summary, &path)?;
                    println!("wrote {}", path.display());
                }
                None => println!(
                    "{}",
                    serde_json::to_string_pretty(&summary)
                        .map_err(|e| SimError::Runtime(e.to_string()))?
                ),
            }
            Ok(())
        }
        Command::Compare {
            summary_a,
            summary_b,
            out,
        } => {
            let a = import_summary_json(&summary_a)?;
            let b = import_summary_json(&summary_b)?;
            let report = compare_runs(&a, &b)?;
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| SimError::Runtime(e.to_string()))?;
            match out {
                Some(path) => {
                    std::fs::write(&path, &json).map_err(|e| SimError::io(&path, e))?;
                    println!("wrote {}", path.display());
                }
                None => println!("{json}"),
            }
            Ok(())
        }
        Command::Export { log, format, out } => {
            let log = import_log_json(&log)?;
            match format {
                Format::Csv => export_log_csv(&log, &out)?,
                Format::Json => export_log_json(&log, &out)?,
            }
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
