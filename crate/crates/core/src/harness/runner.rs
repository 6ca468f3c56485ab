//! The training loop behind `run`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

use super::checkpoint::Checkpoint;
use super::config::{ExperimentConfig, TaskKind};
use super::metrics::{grokking_epoch, BlockMetrics, MetricsRecord, MetricsWriter};
use crate::error::{Error, Result};
use crate::models::{quadratic_objective, Batch, Features, Matrix, MlpModel};
use crate::optim::{Optimizer, ParamBlock, StepOutcome};
use crate::tasks::{gen_modular_addition, gen_two_clusters_2d};
use crate::vecmath::norm;

/// Independent RNG streams derived from the run seed.
const DATA_STREAM: u64 = 0;
const INIT_STREAM: u64 = 1;
const SHUFFLE_STREAM: u64 = 2;

fn derived_seed(seed: u64, stream: u64, index: u64) -> u64 {
    // SplitMix64 finalizer over the packed (seed, stream, index) triple.
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Batch {
    /// Rows `rows` of this batch, in that order.
    pub fn select(&self, rows: &[usize]) -> Batch {
        let features = match &self.features {
            Features::Dense(m) => {
                let mut data = Vec::with_capacity(rows.len() * m.cols);
                for &r in rows {
                    data.extend_from_slice(m.row(r));
                }
                Features::Dense(Matrix {
                    rows: rows.len(),
                    cols: m.cols,
                    data,
                })
            }
            Features::Binary {
                width,
                per_row,
                indices,
            } => Features::Binary {
                width: *width,
                per_row: *per_row,
                indices: rows
                    .iter()
                    .flat_map(|&r| indices[r * per_row..(r + 1) * per_row].iter().copied())
                    .collect(),
            },
        };
        Batch {
            features,
            targets: rows.iter().map(|&r| self.targets[r]).collect(),
        }
    }
}

enum Workload {
    Classifier {
        model: MlpModel,
        train: Batch,
        test: Batch,
    },
    Quadratic {
        blocks: Vec<ParamBlock>,
    },
}

impl Workload {
    fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let seed = cfg.experiment.seed;
        let t = &cfg.task;
        match cfg.experiment.task {
            TaskKind::Grokking => {
                let data = gen_modular_addition(
                    t.modulus,
                    t.split_fraction,
                    derived_seed(seed, DATA_STREAM, 0),
                )?;
                let model = MlpModel::with_init(
                    data.input_width(),
                    t.hidden,
                    t.modulus,
                    derived_seed(seed, INIT_STREAM, 0),
                    t.init,
                )?;
                Ok(Workload::Classifier {
                    model,
                    train: data.train_batch(),
                    test: data.test_batch(),
                })
            }
            TaskKind::Toy2d => {
                let train =
                    gen_two_clusters_2d(t.points, t.noise, derived_seed(seed, DATA_STREAM, 0))?;
                let test =
                    gen_two_clusters_2d(t.points, t.noise, derived_seed(seed, DATA_STREAM, 1))?;
                let model = MlpModel::with_init(
                    2,
                    t.hidden,
                    2,
                    derived_seed(seed, INIT_STREAM, 0),
                    t.init,
                )?;
                Ok(Workload::Classifier {
                    model,
                    train: train.batch(),
                    test: test.batch(),
                })
            }
            TaskKind::Quadratic => {
                let mut rng = Xoshiro256PlusPlus::seed_from_u64(derived_seed(seed, INIT_STREAM, 0));
                let values = (0..t.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                Ok(Workload::Quadratic {
                    blocks: vec![ParamBlock::new("w", values, 2)],
                })
            }
        }
    }

    fn blocks(&self) -> &[ParamBlock] {
        match self {
            Workload::Classifier { model, .. } => model.blocks(),
            Workload::Quadratic { blocks } => blocks,
        }
    }

    fn blocks_mut(&mut self) -> &mut [ParamBlock] {
        match self {
            Workload::Classifier { model, .. } => model.blocks_mut(),
            Workload::Quadratic { blocks } => blocks,
        }
    }

    fn set_blocks(&mut self, src: &[ParamBlock]) -> Result<()> {
        let dst = self.blocks_mut();
        if dst.len() != src.len() {
            return Err(Error::Checkpoint(format!(
                "checkpoint has {} blocks, task expects {}",
                src.len(),
                dst.len()
            )));
        }
        for (d, s) in dst.iter_mut().zip(src) {
            if d.name != s.name || d.numel() != s.numel() || d.logical_dim != s.logical_dim {
                return Err(Error::Checkpoint(format!(
                    "block `{}` does not match the task",
                    s.name
                )));
            }
            d.values.copy_from_slice(&s.values);
            d.scale_invariant = s.scale_invariant;
        }
        Ok(())
    }

    /// `(train_loss, train_acc, test_loss, test_acc)` at the current weights.
    fn evaluate(&self) -> Result<(f64, f64, f64, f64)> {
        match self {
            Workload::Classifier { model, train, test } => {
                let (trl, tra) = model.evaluate(train)?;
                let (tel, tea) = model.evaluate(test)?;
                Ok((trl, tra, tel, tea))
            }
            Workload::Quadratic { blocks } => {
                let loss = quadratic_objective(&blocks[0].values).0;
                Ok((loss, 0.0, loss, 0.0))
            }
        }
    }

    fn test_eval(&self) -> Result<(f64, f64)> {
        match self {
            Workload::Classifier { model, test, .. } => model.evaluate(test),
            Workload::Quadratic { blocks } => Ok((quadratic_objective(&blocks[0].values).0, 0.0)),
        }
    }

    fn train_len(&self) -> usize {
        match self {
            Workload::Classifier { train, .. } => train.len(),
            Workload::Quadratic { .. } => 1,
        }
    }

    /// Training loss of arbitrary flattened parameters, for landscape slices.
    fn loss_at(&self, flat: &[f64]) -> Result<f64> {
        match self {
            Workload::Classifier { model, train, .. } => {
                let mut probe = model.clone();
                probe.set_flat_params(flat)?;
                Ok(probe.evaluate(train)?.0)
            }
            Workload::Quadratic { .. } => Ok(quadratic_objective(flat).0),
        }
    }
}

/// Evaluation before the first step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialEval {
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub task: TaskKind,
    pub optimizer: String,
    pub seed: u64,
    pub epochs_completed: usize,
    pub final_train_loss: f64,
    pub final_train_acc: f64,
    pub final_test_loss: f64,
    pub final_test_acc: f64,
    pub grokking_epoch: Option<usize>,
    pub diverged: bool,
    pub divergence_reason: Option<String>,
    pub final_norms: BTreeMap<String, f64>,
    pub final_total_norm: f64,
    /// Steps on which the radial learning rate ceiling was active.
    pub radial_lr_cap_hits: u64,
    pub initial: InitialEval,
    pub config: ExperimentConfig,
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub records: Vec<MetricsRecord>,
    pub summary: RunSummary,
    pub blocks: Vec<ParamBlock>,
    pub optimizer: Optimizer,
}

impl RunSummary {
    pub fn task_name(&self) -> &'static str {
        self.task.name()
    }
}

impl RunResult {
    pub fn block_names(&self) -> Vec<String> {
        self.blocks.iter().map(|b| b.name.clone()).collect()
    }
}

/// Paths written by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub metrics: PathBuf,
    pub summary: PathBuf,
    pub checkpoint: Option<PathBuf>,
}

/// A resumable training run.
pub struct Trainer {
    cfg: ExperimentConfig,
    workload: Workload,
    optimizer: Optimizer,
    epoch: usize,
    initial: InitialEval,
}

/// Accumulates statistics over one epoch.
#[derive(Default)]
struct EpochStats {
    samples: usize,
    loss_sum: f64,
    acc_sum: f64,
    steps: usize,
    global_grad_sum: f64,
    block_grad_sum: Vec<f64>,
    last: Vec<StepOutcome>,
}

impl Trainer {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let workload = Workload::build(&cfg)?;
        let optimizer = Optimizer::new(
            cfg.experiment.optimizer,
            cfg.optimizer.clone(),
            workload.blocks(),
        )?;
        let (train_loss, train_acc, test_loss, test_acc) = workload.evaluate()?;
        Ok(Self {
            cfg,
            workload,
            optimizer,
            epoch: 0,
            initial: InitialEval {
                train_loss,
                train_acc,
                test_loss,
                test_acc,
            },
        })
    }

    /// Restores a run. `cfg` may differ from the checkpoint's only in
    /// `experiment.epochs` and `experiment.output_dir`.
    pub fn from_checkpoint(ck: &Checkpoint, cfg: Option<ExperimentConfig>) -> Result<Self> {
        let cfg = match cfg {
            None => ck.config.clone(),
            Some(c) => {
                let mut expect = ck.config.clone();
                expect.experiment.epochs = c.experiment.epochs;
                expect.experiment.output_dir = c.experiment.output_dir.clone();
                expect.experiment.checkpoint = c.experiment.checkpoint;
                if expect != c {
                    return Err(Error::Checkpoint(
                        "resume config differs from the checkpoint beyond epochs/output".into(),
                    ));
                }
                c
            }
        };
        let mut trainer = Self::new(cfg)?;
        trainer.workload.set_blocks(&ck.blocks)?;
        if ck.optimizer.states.len() != ck.blocks.len()
            || ck.optimizer.kind != trainer.cfg.experiment.optimizer
        {
            return Err(Error::Checkpoint(
                "optimizer state does not match the blocks".into(),
            ));
        }
        trainer.optimizer = ck.optimizer.clone();
        trainer.epoch = ck.epoch;
        Ok(trainer)
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn blocks(&self) -> &[ParamBlock] {
        self.workload.blocks()
    }

    pub fn optimizer(&self) -> &Optimizer {
        &self.optimizer
    }

    pub fn initial_eval(&self) -> &InitialEval {
        &self.initial
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::new(
            self.epoch,
            self.cfg.clone(),
            self.workload.blocks().to_vec(),
            self.optimizer.clone(),
        )
    }

    /// Training loss at arbitrary flattened parameters (block order).
    pub fn loss_at(&self, flat: &[f64]) -> Result<f64> {
        self.workload.loss_at(flat)
    }

    fn shuffled_rows(&self, epoch: usize) -> Vec<usize> {
        let mut rows: Vec<usize> = (0..self.workload.train_len()).collect();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(derived_seed(
            self.cfg.experiment.seed,
            SHUFFLE_STREAM,
            epoch as u64,
        ));
        rows.shuffle(&mut rng);
        rows
    }

    fn apply_step(
        &mut self,
        grads: &[Vec<f64>],
        stats: &mut EpochStats,
    ) -> Result<std::result::Result<(), String>> {
        let outcomes = match self.optimizer.step(self.workload.blocks_mut(), grads) {
            Ok(o) => o,
            Err(Error::NonFinite(what)) => return Ok(Err(format!("non-finite {what}"))),
            Err(e) => return Err(e),
        };
        if stats.block_grad_sum.is_empty() {
            stats.block_grad_sum = vec![0.0; outcomes.len()];
        }
        let mut global = 0.0;
        for (sum, o) in stats.block_grad_sum.iter_mut().zip(&outcomes) {
            *sum += o.grad_norm;
            global += o.grad_norm * o.grad_norm;
        }
        stats.global_grad_sum += global.sqrt();
        stats.steps += 1;
        stats.last = outcomes;
        Ok(Ok(()))
    }

    /// Runs one epoch. Returns `Err(reason)` inside `Ok` when the run diverged.
    fn train_epoch(&mut self, epoch: usize) -> Result<std::result::Result<EpochStats, String>> {
        let mut stats = EpochStats::default();
        let threshold = self.cfg.experiment.divergence_threshold;
        if let Workload::Quadratic { blocks } = &self.workload {
            let (loss, grad) = quadratic_objective(&blocks[0].values);
            if !loss.is_finite() || loss > threshold {
                return Ok(Err(format!("training loss {loss} at epoch {epoch}")));
            }
            stats.samples = 1;
            stats.loss_sum = loss;
            if let Err(reason) = self.apply_step(&[grad], &mut stats)? {
                return Ok(Err(reason));
            }
            return Ok(Ok(stats));
        }

        let rows = self.shuffled_rows(epoch);
        for chunk in rows.chunks(self.cfg.experiment.batch_size) {
            let (loss, acc, grads) = match &self.workload {
                Workload::Classifier { model, train, .. } => {
                    model.loss_and_grad(&train.select(chunk))?
                }
                Workload::Quadratic { .. } => unreachable!(),
            };
            if !loss.is_finite() || loss > threshold {
                return Ok(Err(format!("training loss {loss} at epoch {epoch}")));
            }
            stats.samples += chunk.len();
            stats.loss_sum += loss * chunk.len() as f64;
            stats.acc_sum += acc * chunk.len() as f64;
            if let Err(reason) = self.apply_step(&grads, &mut stats)? {
                return Ok(Err(reason));
            }
        }
        Ok(Ok(stats))
    }

    fn record(&self, epoch: usize, stats: &EpochStats) -> Result<MetricsRecord> {
        let (test_loss, test_acc) = self.workload.test_eval()?;
        let steps = stats.steps.max(1) as f64;
        let blocks = self
            .workload
            .blocks()
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let last = &stats.last[i];
                BlockMetrics {
                    w_norm: norm(&b.values),
                    g_norm: stats.block_grad_sum[i] / steps,
                    dr_norm: last.radial_norm(),
                    dt_norm: last.tangential_norm(),
                    d_norm: last.update_norm(),
                    eta_rho: last.eta_rho_t,
                    tau: last.tau,
                }
            })
            .collect();
        let samples = stats.samples.max(1) as f64;
        let train_acc = match self.workload {
            Workload::Quadratic { .. } => 0.0,
            _ => stats.acc_sum / samples,
        };
        Ok(MetricsRecord {
            epoch,
            train_loss: stats.loss_sum / samples,
            train_acc,
            test_loss,
            test_acc,
            grad_norm: stats.global_grad_sum / steps,
            blocks,
        })
    }

    /// Trains until `experiment.epochs`, handing each record to `sink`.
    pub fn run_with<F>(&mut self, mut sink: F) -> Result<RunResult>
    where
        F: FnMut(&MetricsRecord) -> Result<()>,
    {
        let total = self.cfg.experiment.epochs;
        let every = self.cfg.experiment.eval_every;
        let mut records = Vec::new();
        let mut divergence = None;
        let mut cap_hits = 0u64;

        while self.epoch < total {
            let epoch = self.epoch + 1;
            let stats = match self.train_epoch(epoch)? {
                Ok(s) => s,
                Err(reason) => {
                    divergence = Some(reason);
                    break;
                }
            };
            cap_hits += stats.last.iter().filter(|o| o.lr_capped).count() as u64;
            self.epoch = epoch;
            if epoch.is_multiple_of(every) || epoch == total {
                let record = self.record(epoch, &stats)?;
                if !record.is_finite() {
                    divergence = Some(format!("non-finite metrics at epoch {epoch}"));
                    break;
                }
                sink(&record)?;
                records.push(record);
            }
        }

        let summary = self.summarize(&records, divergence, cap_hits);
        Ok(RunResult {
            records,
            summary,
            blocks: self.workload.blocks().to_vec(),
            optimizer: self.optimizer.clone(),
        })
    }

    pub fn run(&mut self) -> Result<RunResult> {
        self.run_with(|_| Ok(()))
    }

    fn summarize(
        &self,
        records: &[MetricsRecord],
        divergence: Option<String>,
        cap_hits: u64,
    ) -> RunSummary {
        let series: Vec<(usize, f64)> = records.iter().map(|r| (r.epoch, r.test_acc)).collect();
        let (train_loss, train_acc, test_loss, test_acc) = match records.last() {
            Some(r) => (r.train_loss, r.train_acc, r.test_loss, r.test_acc),
            None => (
                self.initial.train_loss,
                self.initial.train_acc,
                self.initial.test_loss,
                self.initial.test_acc,
            ),
        };
        let final_norms: BTreeMap<String, f64> = self
            .workload
            .blocks()
            .iter()
            .map(|b| (b.name.clone(), norm(&b.values)))
            .collect();
        let final_total_norm = final_norms.values().map(|n| n * n).sum::<f64>().sqrt();
        RunSummary {
            task: self.cfg.experiment.task,
            optimizer: self.cfg.experiment.optimizer.to_string(),
            seed: self.cfg.experiment.seed,
            epochs_completed: self.epoch,
            final_train_loss: train_loss,
            final_train_acc: train_acc,
            final_test_loss: test_loss,
            final_test_acc: test_acc,
            grokking_epoch: grokking_epoch(&series, self.cfg.experiment.grokking_threshold),
            diverged: divergence.is_some(),
            divergence_reason: divergence,
            final_norms,
            final_total_norm,
            radial_lr_cap_hits: cap_hits,
            initial: self.initial.clone(),
            config: self.cfg.clone(),
        }
    }
}

/// Trains in memory without touching the filesystem.
pub fn train(cfg: &ExperimentConfig) -> Result<RunResult> {
    Trainer::new(cfg.clone())?.run()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Runs `trainer` to completion, streaming `metrics.csv` and writing
/// `summary.json` (and `checkpoint.json` when enabled) into `dir`.
pub fn run_to_dir(trainer: &mut Trainer, dir: &Path) -> Result<(RunResult, RunArtifacts)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let metrics = dir.join("metrics.csv");
    let names: Vec<String> = trainer.blocks().iter().map(|b| b.name.clone()).collect();
    let mut writer = MetricsWriter::new(create(&metrics)?, &names)?;
    let result = trainer.run_with(|r| writer.write(r))?;
    writer
        .finish()?
        .flush()
        .map_err(|e| Error::io(&metrics, e))?;

    let summary = dir.join("summary.json");
    let mut out = create(&summary)?;
    serde_json::to_writer_pretty(&mut out, &result.summary)?;
    out.write_all(b"\n").map_err(|e| Error::io(&summary, e))?;
    out.flush().map_err(|e| Error::io(&summary, e))?;

    let checkpoint = if trainer.config().experiment.checkpoint {
        let path = dir.join("checkpoint.json");
        trainer.checkpoint().save(&path)?;
        Some(path)
    } else {
        None
    };
    Ok((
        result,
        RunArtifacts {
            metrics,
            summary,
            checkpoint,
        },
    ))
}

/// Runs `cfg`, writing artifacts to `experiment.output_dir` (or
/// `runs/<task>-<optimizer>-s<seed>` when unset).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(RunResult, RunArtifacts)> {
    let dir = cfg.experiment.output_dir.clone().unwrap_or_else(|| {
        PathBuf::from(format!(
            "runs/{}-{}-s{}",
            cfg.experiment.task.name(),
            cfg.experiment.optimizer,
            cfg.experiment.seed
        ))
    });
    let mut trainer = Trainer::new(cfg.clone())?;
    run_to_dir(&mut trainer, &dir)
}
