//! Experiment configuration.
//!
//! Configs are TOML files with three sections, all optional:
//!
//! ```toml
//! [experiment]
//! task = "grokking"        # grokking | toy2d | quadratic
//! optimizer = "adamo"      # adam | adamw | adamp | adamo
//! epochs = 5000
//! batch_size = 512
//! seed = 0
//! eval_every = 1
//! output_dir = "runs/adamo"
//!
//! [task]
//! modulus = 97
//! split_fraction = 0.3
//! hidden = 128
//!
//! [optimizer]
//! eta_theta = 1e-3
//! eta_rho = 1e-3
//! lambda = 1.0
//! ```
//!
//! Unknown keys are errors. Values resolve as command-line `--set` overrides,
//! then the file, then the defaults below.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::InitScheme;
use crate::optim::{OptimizerConfig, OptimizerKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    /// Modular addition with a 2-layer MLP.
    Grokking,
    /// Two-moons binary classification with a 2-layer MLP.
    Toy2d,
    /// A single block minimizing `½‖w‖²`.
    Quadratic,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Grokking => "grokking",
            TaskKind::Toy2d => "toy2d",
            TaskKind::Quadratic => "quadratic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub task: TaskKind,
    pub optimizer: OptimizerKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub eval_every: usize,
    pub output_dir: Option<PathBuf>,
    /// Test accuracy that must be exceeded to count as grokked.
    pub grokking_threshold: f64,
    /// Training loss above which a run is declared diverged.
    pub divergence_threshold: f64,
    /// Write `checkpoint.json` next to the metrics when the run ends.
    pub checkpoint: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            task: TaskKind::Grokking,
            optimizer: OptimizerKind::AdamO,
            epochs: 5000,
            batch_size: 512,
            seed: 0,
            eval_every: 1,
            output_dir: None,
            grokking_threshold: 0.95,
            divergence_threshold: 1e6,
            checkpoint: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskSettings {
    /// Modulus `p` of the grokking task.
    pub modulus: usize,
    pub split_fraction: f64,
    /// Hidden width of the MLP (grokking and toy2d).
    pub hidden: usize,
    /// Training points for toy2d; the test set has the same size.
    pub points: usize,
    pub noise: f64,
    /// Dimension of the quadratic task's single block.
    pub dim: usize,
    /// MLP weight initialization.
    pub init: InitScheme,
}

impl Default for TaskSettings {
    fn default() -> Self {
        Self {
            modulus: 97,
            split_fraction: 0.3,
            hidden: 128,
            points: 200,
            noise: 0.1,
            dim: 16,
            init: InitScheme::Kaiming,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct ExperimentConfig {
    pub experiment: RunSettings,
    pub task: TaskSettings,
    pub optimizer: OptimizerConfig,
}

impl ExperimentConfig {
    /// The modular-addition protocol: p = 97, 30 % training split, width-128
    /// MLP, 5000 epochs of batch 512, learning rate 1e-3, weight decay 1.0.
    /// For AdamO the radial rate equals the tangential one.
    pub fn grokking(optimizer: OptimizerKind, seed: u64) -> Self {
        let mut cfg = Self::default();
        cfg.experiment.optimizer = optimizer;
        cfg.experiment.seed = seed;
        cfg.optimizer.eta_theta = 1e-3;
        cfg.optimizer.eta_rho = 1e-3;
        cfg.optimizer.lambda = if optimizer == OptimizerKind::Adam {
            0.0
        } else {
            1.0
        };
        cfg
    }

    /// The two-moons comparison: 200 noisy points, a width-4096 MLP (so both
    /// weight matrices exceed the default low-dimension threshold), 1000
    /// full-batch epochs and the default optimizer hyperparameters.
    pub fn toy2d(optimizer: OptimizerKind, seed: u64) -> Self {
        let mut cfg = Self::default();
        cfg.experiment.task = TaskKind::Toy2d;
        cfg.experiment.optimizer = optimizer;
        cfg.experiment.seed = seed;
        cfg.experiment.epochs = 1000;
        cfg.experiment.eval_every = 10;
        cfg.task.hidden = 4096;
        cfg.task.points = 200;
        cfg.task.noise = 0.1;
        cfg
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses `text`, applies `key=value` overrides (dotted keys such as
    /// `optimizer.lambda=0.5`; a bare key is looked up in every section) and
    /// validates the result.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        let e = &self.experiment;
        if e.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if e.eval_every == 0 {
            return Err(Error::Config("eval_every must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&e.grokking_threshold) {
            return Err(Error::Config(
                "grokking_threshold must lie in [0, 1]".into(),
            ));
        }
        if !(e.divergence_threshold > 0.0) {
            return Err(Error::Config(
                "divergence_threshold must be positive".into(),
            ));
        }
        let t = &self.task;
        match e.task {
            TaskKind::Grokking => {
                if t.modulus < 2 {
                    return Err(Error::Config("modulus must be at least 2".into()));
                }
                if !(t.split_fraction > 0.0 && t.split_fraction < 1.0) {
                    return Err(Error::Config("split_fraction must lie in (0, 1)".into()));
                }
            }
            TaskKind::Toy2d => {
                if t.points < 4 {
                    return Err(Error::Config("toy2d needs at least 4 points".into()));
                }
            }
            TaskKind::Quadratic => {
                if t.dim == 0 {
                    return Err(Error::Config("quadratic dim must be at least 1".into()));
                }
            }
        }
        if matches!(e.task, TaskKind::Grokking | TaskKind::Toy2d) && t.hidden == 0 {
            return Err(Error::Config("hidden width must be at least 1".into()));
        }
        Ok(())
    }
}

const SECTIONS: [&str; 3] = ["experiment", "task", "optimizer"];

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not key=value")))?;
    let key = key.trim();
    let (section, field) = match key.split_once('.') {
        Some((s, f)) => (s.to_string(), f.to_string()),
        None => (resolve_section(key)?.to_string(), key.to_string()),
    };
    if !SECTIONS.contains(&section.as_str()) {
        return Err(Error::Config(format!("unknown config section `{section}`")));
    }
    let value = parse_value(raw.trim());
    let entry = table
        .entry(section.clone())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match entry {
        toml::Value::Table(t) => {
            t.insert(field, value);
            Ok(())
        }
        _ => Err(Error::Config(format!("`{section}` is not a section"))),
    }
}

/// Finds the unique section declaring `field`.
fn resolve_section(field: &str) -> Result<&'static str> {
    let defaults = toml::Value::try_from(ExperimentConfig::default())
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut hits = SECTIONS.iter().filter(|s| {
        defaults
            .get(**s)
            .and_then(|t| t.as_table())
            .is_some_and(|t| t.contains_key(field) || is_optional_field(s, field))
    });
    match (hits.next(), hits.next()) {
        (Some(s), None) => Ok(s),
        (Some(_), Some(_)) => Err(Error::Config(format!(
            "`{field}` is ambiguous; qualify it as <section>.{field}"
        ))),
        _ => Err(Error::Config(format!("unknown config key `{field}`"))),
    }
}

/// `Option` fields that serialize to nothing when unset.
fn is_optional_field(section: &str, field: &str) -> bool {
    matches!(
        (section, field),
        ("experiment", "output_dir") | ("optimizer", "radial_lr_cap")
    )
}

fn parse_value(raw: &str) -> toml::Value {
    let probe = format!("v = {raw}");
    match probe.parse::<toml::Table>() {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}
