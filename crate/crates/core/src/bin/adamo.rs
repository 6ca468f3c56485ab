use std::path::PathBuf;
use std::process::ExitCode;

use adamo::harness::checkpoint::Checkpoint;
use adamo::harness::landscape::{filter_normalized_direction, landscape_slice};
use adamo::harness::sweep::{parse_grid, sensitivity_sweep_with};
use adamo::harness::{run_to_dir, ExperimentConfig, Trainer};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "adamo",
    version,
    about = "Train and probe models with AdamO and baseline optimizers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration and write metrics.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override a config key, e.g. `--set optimizer.lambda=0.5`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Output directory (defaults to `experiment.output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train every cell of a hyperparameter grid and write sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Axes such as `eta_theta=1e-4,1e-3;eta_rho=1e-3,1e-2`.
        #[arg(long)]
        grid: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// CSV destination (defaults to `<output_dir>/sweep.csv`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the training loss on a 2-D slice around a checkpoint.
    Landscape {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 21)]
        grid_n: usize,
        #[arg(long, default_value_t = 1.0)]
        span: f64,
        /// Seed for the two random directions.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV destination (defaults to `landscape.csv` beside the checkpoint).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn default_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.experiment
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn dispatch(command: Command) -> adamo::Result<ExitCode> {
    match command {
        Command::Run {
            config,
            overrides,
            resume,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            let dir = out.unwrap_or_else(|| default_dir(&cfg));
            let mut trainer = match resume {
                Some(path) => Trainer::from_checkpoint(&Checkpoint::load(&path)?, Some(cfg))?,
                None => Trainer::new(cfg)?,
            };
            let (result, artifacts) = run_to_dir(&mut trainer, &dir)?;
            let s = &result.summary;
            println!(
                "{} {}: epochs {} final test acc {:.4} grokking epoch {} diverged {}",
                s.task_name(),
                s.optimizer,
                s.epochs_completed,
                s.final_test_acc,
                s.grokking_epoch
                    .map_or("none".to_string(), |e| e.to_string()),
                s.diverged
            );
            println!("wrote {}", artifacts.metrics.display());
            if s.diverged {
                eprintln!(
                    "run diverged: {}",
                    s.divergence_reason.as_deref().unwrap_or("unknown")
                );
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            config,
            grid,
            overrides,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            let axes = parse_grid(&grid)?;
            let path = out.unwrap_or_else(|| default_dir(&cfg).join("sweep.csv"));
            let result = sensitivity_sweep_with(&cfg, &axes, |_, cell| {
                println!(
                    "{} -> {:.4}{}",
                    cell.values.join(", "),
                    cell.summary.final_test_acc,
                    if cell.summary.diverged {
                        " (diverged)"
                    } else {
                        ""
                    }
                );
            })?;
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| adamo::Error::io(parent, e))?;
            }
            result.save(&path)?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Landscape {
            checkpoint,
            grid_n,
            span,
            seed,
            out,
        } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let trainer = Trainer::from_checkpoint(&ck, None)?;
            let center: Vec<f64> = trainer
                .blocks()
                .iter()
                .flat_map(|b| b.values.iter().copied())
                .collect();
            let d1 = filter_normalized_direction(trainer.blocks(), seed);
            let d2 = filter_normalized_direction(trainer.blocks(), seed.wrapping_add(1));
            let grid = landscape_slice(&center, &d1, &d2, grid_n, span, |w| trainer.loss_at(w))?;
            let path = out.unwrap_or_else(|| checkpoint.with_file_name("landscape.csv"));
            grid.save(&path)?;
            println!("wrote {} ({grid_n}x{grid_n})", path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
