use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nhssh_cli::config::{self, ExperimentConfig, Severity};
use nhssh_cli::{exit, experiments, output, CliError};

#[derive(Parser)]
#[command(name = "nhssh", version, about = "Non-Hermitian SSH chain in a cavity: experiment runner")]
struct Cli {
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides `output_dir` from the config.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Check a config file without running it.
    Validate { config: PathBuf },
}

fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    match threads {
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        #[cfg(feature = "parallel")]
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}"))),
        _ => Ok(()),
    }
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    init_threads(cli.threads)?;
    match &cli.command {
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(config)?;
            let diags = config::validate(&cfg);
            for d in &diags {
                println!("{d}");
            }
            if diags.iter().any(|d| d.severity == Severity::Error) {
                return Ok(exit::CONFIG);
            }
            println!("ok: {} with {} point(s)", cfg.experiment, cfg.points().len());
            Ok(exit::SUCCESS)
        }
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(config)?;
            let diags = config::validate(&cfg);
            for d in &diags {
                eprintln!("{d}");
            }
            if diags.iter().any(|d| d.severity == Severity::Error) {
                return Ok(exit::CONFIG);
            }
            let dir = cli.output_dir.clone().unwrap_or_else(|| cfg.output_dir.clone());
            let manifest = experiments::run(&cfg, &dir)?;
            output::write(&dir, "manifest.txt", &manifest.render(&cfg, cli.threads))?;
            let bad = manifest.points.iter().filter(|p| p.status != experiments::Status::Converged).count();
            println!(
                "{}: {} point(s), {} not converged, output in {}",
                cfg.experiment,
                manifest.points.len(),
                bad,
                dir.display()
            );
            Ok(if bad == 0 { exit::SUCCESS } else { exit::PARTIAL })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = run(&cli).unwrap_or_else(|e| {
        eprintln!("{e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
