use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ecoscapes::app::{self, AppError, RunDeps};
use ecoscapes::config::{load_config, BackendKind, Config};
use ecoscapes::evaluation::{Criterion, Recorded, ScoreRecord, ScoreStore, System};
use ecoscapes::pipeline::ModuleStatus;

#[derive(Parser)]
#[command(
    name = "ecoscapes",
    version,
    about = "Satellite imagery to local climate-adaptation reports"
)]
struct Cli {
    /// TOML configuration file; defaults apply when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline for one town
    Run {
        location: String,
        /// Treat manual water.png as a browser ramp (0 = white) and invert it
        #[arg(long)]
        invert_water: bool,
        #[arg(long, value_parser = ["stub", "remote"])]
        backend: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Render rgb/moisture/water images from raw band files
    Indices {
        #[arg(long)]
        bands: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Record and summarize rubric scores
    Score {
        #[command(subcommand)]
        action: ScoreCommand,
    },
    /// Check satellite_data/<LOCATION>/ for a complete manual image set
    ValidateManual {
        location: String,
        #[arg(long)]
        invert_water: bool,
    },
}

#[derive(Subcommand)]
enum ScoreCommand {
    Add(AddArgs),
    Summary(SummaryArgs),
}

#[derive(Args)]
struct AddArgs {
    #[arg(long, default_value = "scores.csv")]
    file: PathBuf,
    #[arg(long)]
    location: String,
    #[arg(long)]
    system: System,
    #[arg(long)]
    criterion: Criterion,
    #[arg(long = "run")]
    run_index: u32,
    #[arg(long, allow_negative_numbers = true)]
    value: i64,
}

#[derive(Args)]
struct SummaryArgs {
    #[arg(long, default_value = "scores.csv", conflicts_with = "published")]
    file: PathBuf,
    /// Use the bundled published scores instead of a file
    #[arg(long)]
    published: bool,
    #[arg(long)]
    location: String,
    #[arg(long)]
    criterion: Option<Criterion>,
    /// Restrict to these systems (repeatable)
    #[arg(long = "system")]
    systems: Vec<System>,
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap reports usage errors with 2, which is reserved for partial runs
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn config(cli_path: Option<&PathBuf>) -> Result<Config, AppError> {
    let env = |k: &str| std::env::var(k).ok();
    Ok(load_config(cli_path.map(PathBuf::as_path), &env)?)
}

fn dispatch(cli: Cli) -> Result<u8, AppError> {
    match cli.command {
        Command::Run {
            location,
            invert_water,
            backend,
            output,
        } => {
            let mut cfg = config(cli.config.as_ref())?;
            cfg.invert_manual_water |= invert_water;
            if let Some(dir) = output {
                cfg.output_dir = dir;
            }
            if let Some(b) = backend {
                cfg.llm.backend = if b == "remote" {
                    BackendKind::Remote
                } else {
                    BackendKind::Stub
                };
                if cfg.llm.backend == BackendKind::Remote && cfg.llm.resolved_token.is_none() {
                    return Err(ecoscapes::config::ConfigError::MissingToken {
                        env: cfg.llm.token_env.clone(),
                    }
                    .into());
                }
            }
            let deps = RunDeps::live(&cfg)?;
            let outcome = app::run_pipeline(&location, &cfg, &deps)?;
            for id in &outcome.report.order {
                match &outcome.report.statuses[id] {
                    ModuleStatus::Failed { reason } => eprintln!("{id}: failed: {reason}"),
                    ModuleStatus::Skipped {
                        dependency,
                        root_cause,
                    } => {
                        eprintln!("{id}: skipped (needs {dependency}; root cause {root_cause})")
                    }
                    _ => {}
                }
            }
            println!("{}", outcome.run_dir.display());
            Ok(outcome.exit_code as u8)
        }
        Command::Indices { bands, out } => {
            let cfg = config(cli.config.as_ref())?;
            for p in app::compute_indices(&bands, &out, &cfg)? {
                println!("{}", p.display());
            }
            Ok(0)
        }
        Command::Score { action } => match action {
            ScoreCommand::Add(a) => {
                let value = u8::try_from(a.value)
                    .ok()
                    .filter(|v| *v <= ecoscapes::evaluation::MAX_SCORE)
                    .ok_or(ecoscapes::evaluation::EvalError::OutOfRange(a.value))?;
                let rec = ScoreRecord {
                    location: a.location,
                    system: a.system,
                    criterion: a.criterion,
                    run_index: a.run_index,
                    value,
                };
                match app::score_add(&a.file, rec)? {
                    Recorded::Inserted => println!("recorded"),
                    Recorded::AlreadyPresent => println!("already recorded"),
                }
                Ok(0)
            }
            ScoreCommand::Summary(s) => {
                let store = if s.published {
                    ScoreStore::published()
                } else {
                    ScoreStore::load(&s.file)?
                };
                print!(
                    "{}",
                    app::score_summary(&store, &s.location, s.criterion, &s.systems, s.json)?
                );
                Ok(0)
            }
        },
        Command::ValidateManual {
            location,
            invert_water,
        } => {
            let mut cfg = config(cli.config.as_ref())?;
            cfg.invert_manual_water |= invert_water;
            match app::validate_manual(&location, &cfg)? {
                Some((dir, set)) => {
                    println!("{}: complete", dir.display());
                    for (name, (w, h)) in [
                        ("rgb.png", set.rgb.dimensions()),
                        ("moisture.png", set.moisture.dimensions()),
                        ("water.png", set.water.dimensions()),
                    ] {
                        println!("  {name} {w}x{h}");
                    }
                    Ok(0)
                }
                None => {
                    eprintln!(
                        "no manual images at {}",
                        ecoscapes::satellite::manual_dir(&cfg.manual_root, &location).display()
                    );
                    Ok(1)
                }
            }
        }
    }
}
