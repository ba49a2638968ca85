use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use credit_cli::commands::{self, COHORT_FILE, PARAMS_FILE};
use credit_cli::{PipelineConfig, Result};

#[derive(Parser, Debug)]
#[command(
    name = "credit",
    version,
    about = "Simulate student cohorts, fit the performance model, and compute credit scores"
)]
struct Cli {
    /// key = value configuration file; defaults are used when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir` from the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Simulation seed (overrides `seed` from the config)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Gradient-descent iterations (overrides the config)
    #[arg(long, global = true)]
    iterations: Option<usize>,
    /// Learning rate (overrides the config)
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a cohort CSV
    Simulate,
    /// Fit the model to a cohort CSV
    Train {
        #[arg(long)]
        cohort: Option<PathBuf>,
    },
    /// Compare a params file with the closed-form least-squares fit
    Verify {
        #[arg(long)]
        cohort: Option<PathBuf>,
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Compute credit scores and the feature-importance ranking
    Score {
        #[arg(long)]
        cohort: Option<PathBuf>,
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Run every enabled stage in order
    RunAll,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.simulation.seed = seed;
    }
    if let Some(it) = cli.iterations {
        cfg.training.iterations = it;
    }
    if let Some(alpha) = cli.alpha {
        cfg.training.alpha = alpha;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate(cli.config.as_deref().unwrap_or(Path::new("<command line>")))?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let out = cfg.out_dir.as_path();
    let or_default = |p: &Option<PathBuf>, name: &str| p.clone().unwrap_or_else(|| out.join(name));
    match &cli.command {
        Command::Simulate => {
            let o = commands::cmd_simulate(&cfg, out)?;
            println!("wrote {}", o.cohort_path.display());
            print!("{}", o.summary);
        }
        Command::Train { cohort } => {
            let o = commands::cmd_train(&cfg, &or_default(cohort, COHORT_FILE), out)?;
            println!(
                "wrote {} and {}",
                o.params_path.display(),
                o.cost_path.display()
            );
            print!("{}", o.table.to_text());
            println!("held-out cost: {}", o.test_cost);
        }
        Command::Verify { cohort, params } => {
            let o = commands::cmd_verify(
                &or_default(cohort, COHORT_FILE),
                &or_default(params, PARAMS_FILE),
                out,
            )?;
            print!("{}", o.report);
            o.into_result()?;
        }
        Command::Score { cohort, params } => {
            let o = commands::cmd_score(
                &or_default(cohort, COHORT_FILE),
                &or_default(params, PARAMS_FILE),
                out,
            )?;
            print!("{}", o.summary);
        }
        Command::RunAll => {
            for block in commands::run_all(&cfg, out)? {
                println!("{block}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
