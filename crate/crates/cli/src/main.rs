use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dissipath_cli::{
    compare_dirs, load_config, presets, run_experiment, with_workers, CliError, MethodKind,
    WORKERS_ENV,
};

#[derive(Parser)]
#[command(
    name = "dissipath",
    version,
    about = "Frequency-resolved dissipation in open quantum systems"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file or a bundled preset.
    Run {
        /// TOML config file.
        #[arg(required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Method for a preset (default mqme_d).
        #[arg(long, value_enum, requires = "preset")]
        method: Option<MethodKind>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the steady-state summaries of two run directories.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Interpolate the second run onto the first run's frequencies.
        #[arg(long)]
        interpolate: bool,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Bundled parameter sets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    /// Print a preset as a config file.
    Show {
        name: String,
        #[arg(long, value_enum, default_value = "mqme_d")]
        method: MethodKind,
    },
}

/// Physics-validation failure.
const EXIT_VALIDATION: u8 = 1;
/// Configuration, I/O or numerical error.
const EXIT_ERROR: u8 = 2;

fn execute(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Run {
            config,
            preset,
            method,
            out,
        } => {
            let cfg = match (config, preset) {
                (Some(path), _) => load_config(&path)?,
                (None, Some(name)) => presets::preset(&name, method.unwrap_or(MethodKind::MqmeD))?,
                (None, None) => unreachable!("clap requires a config or a preset"),
            };
            let dir = out
                .or_else(|| cfg.output.clone())
                .ok_or_else(|| CliError::Validation {
                    field: "output".into(),
                    message: "no output directory in the config or on the command line".into(),
                })?;
            let report = match cli.workers {
                Some(n) => with_workers(n, || run_experiment(&cfg, &dir))??,
                None => run_experiment(&cfg, &dir)?,
            };
            for w in &report.warnings {
                log::warn!("{w}");
            }
            println!("wrote {} files to {}", report.files.len(), dir.display());
            if report.passed() {
                Ok(0)
            } else {
                for f in &report.failures {
                    eprintln!("validation failure: {f}");
                }
                Ok(EXIT_VALIDATION)
            }
        }
        Command::Compare {
            a,
            b,
            interpolate,
            json,
        } => {
            let report = compare_dirs(&a, &b, interpolate)?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("report serializes")
                );
            } else {
                print!("{}", report.table());
            }
            Ok(0)
        }
        Command::Presets { action } => {
            match action {
                PresetAction::List => {
                    let mut stdout = std::io::stdout().lock();
                    for name in presets::names() {
                        let methods: Vec<&str> =
                            presets::methods(&name).iter().map(|m| m.name()).collect();
                        // A closed pipe (`| head`) is not an error worth reporting.
                        if writeln!(stdout, "{name:<26} {}", methods.join(", ")).is_err() {
                            break;
                        }
                    }
                }
                PresetAction::Show { name, method } => {
                    print!("{}", presets::preset(&name, method)?.to_toml())
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
