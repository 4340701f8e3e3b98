use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use efmarket_cli::config::{parse_config, ConfigError, ExperimentConfig};
use efmarket_cli::presets::{preset_by_name, presets};
use efmarket_cli::runner::{run_equilibria, run_experiment, run_properties, RunError};
use efmarket_cli::run_preset;

/// Deterministic experiment runner for envy-free pricing dynamics in linear
/// multi-unit markets with budgets.
#[derive(Parser)]
#[command(name = "efmarket-cli", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to a TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides every seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides output.format (csv|json|both).
    #[arg(long)]
    format: Option<String>,
    /// Exit with code 3 when a validator reports violations.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run best-response dynamics and emit the trace and summary.
    Dynamics(CommonArgs),
    /// Exhaustively enumerate pure Nash equilibria on a tiny instance.
    Equilibria(CommonArgs),
    /// Run the mechanism property checkers.
    Properties(CommonArgs),
    /// Run a named preset experiment (or list them with --list).
    Experiment {
        /// Preset name.
        name: Option<String>,
        #[arg(long)]
        list: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_VALIDATOR: u8 = 3;

fn load_config(args: &CommonArgs) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| ConfigError::Invalid(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(fmt) = &args.format {
        let mut out = cfg.output();
        out.format = fmt.clone();
        cfg.output = Some(out);
        cfg.validate()?;
    }
    Ok(cfg)
}

fn exit_for(err: &RunError) -> u8 {
    match err {
        RunError::Config(_) => EXIT_CONFIG,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Dynamics(args) => {
            let cfg = match load_config(&args) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            match run_experiment(&cfg, &args.out, args.seed) {
                Ok(results) => {
                    let mut ok = true;
                    for r in &results {
                        println!(
                            "{}: {} in {} steps, final price {}",
                            r.name, r.summary.status, r.summary.steps, r.summary.final_price
                        );
                        if r.summary.trace_valid == Some(false) {
                            ok = false;
                        }
                    }
                    if args.strict && !ok {
                        eprintln!("trace validation failed");
                        return ExitCode::from(EXIT_VALIDATOR);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(exit_for(&e))
                }
            }
        }
        Command::Equilibria(args) => {
            let cfg = match load_config(&args) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            match run_equilibria(&cfg, &args.out, args.seed) {
                Ok(text) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(exit_for(&e))
                }
            }
        }
        Command::Properties(args) => {
            let cfg = match load_config(&args) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            match run_properties(&cfg, &args.out, args.seed) {
                Ok((text, all_hold)) => {
                    print!("{text}");
                    if args.strict && !all_hold {
                        eprintln!("one or more properties violated");
                        return ExitCode::from(EXIT_VALIDATOR);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(exit_for(&e))
                }
            }
        }
        Command::Experiment { name, list, seed, out } => {
            if list || name.is_none() {
                for p in presets(seed.unwrap_or(7)) {
                    println!("{:28} {}", p.name, p.description);
                }
                return ExitCode::SUCCESS;
            }
            let name = name.unwrap();
            let Some(preset) = preset_by_name(&name, seed.unwrap_or(7)) else {
                eprintln!("unknown preset {name:?}; try --list");
                return ExitCode::from(EXIT_CONFIG);
            };
            match run_preset(&preset, &out, seed) {
                Ok(groups) => {
                    for (cfg_name, results) in &groups {
                        let converged =
                            results.iter().filter(|r| r.summary.status == "converged").count();
                        println!("{cfg_name}: {} runs, {} converged", results.len(), converged);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(exit_for(&e))
                }
            }
        }
    }
}
