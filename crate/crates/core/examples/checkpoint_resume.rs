//! Stops a run halfway, saves a checkpoint, resumes it, and checks that the
//! result matches an uninterrupted run bit for bit.
//!
//!     cargo run --release --example checkpoint_resume

use adamo::harness::{Checkpoint, ExperimentConfig, Trainer};
use adamo::optim::OptimizerKind;

fn main() -> adamo::Result<()> {
    let mut cfg = ExperimentConfig::grokking(OptimizerKind::AdamO, 3);
    cfg.task.modulus = 23;
    cfg.experiment.epochs = 200;

    let mut whole = Trainer::new(cfg.clone())?;
    let reference = whole.run()?;

    let mut half = cfg.clone();
    half.experiment.epochs = 100;
    let mut first = Trainer::new(half)?;
    first.run()?;
    let dir = std::env::temp_dir().join("adamo-checkpoint-example");
    std::fs::create_dir_all(&dir).map_err(|e| adamo::Error::io(&dir, e))?;
    let path = dir.join("checkpoint.json");
    first.checkpoint().save(&path)?;
    let size = std::fs::metadata(&path)
        .map_err(|e| adamo::Error::io(&path, e))?
        .len();
    println!(
        "saved epoch {} to {} ({size} bytes)",
        first.epoch(),
        path.display()
    );

    let mut resumed = Trainer::from_checkpoint(&Checkpoint::load(&path)?, Some(cfg))?;
    let rest = resumed.run()?;
    let same_weights = rest.blocks == reference.blocks;
    let same_state = rest.optimizer == reference.optimizer;
    let same_metrics = rest.records[..] == reference.records[100..];
    println!("weights identical: {same_weights}, optimizer state identical: {same_state}, metrics identical: {same_metrics}");
    println!("final test acc {:.4}", rest.summary.final_test_acc);
    Ok(())
}
