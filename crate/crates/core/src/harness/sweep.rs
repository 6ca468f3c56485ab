//! Hyperparameter grids over any config keys.
//!
//! A grid spec lists axes separated by `;`, each `key=v1,v2,...`, e.g.
//! `eta_theta=1e-4,1e-3;eta_rho=1e-3,1e-2`. Keys follow the `--set` rules;
//! `lr` sets `eta_theta` and `eta_rho` together.

use std::io::Write;
use std::path::Path;

use super::config::ExperimentConfig;
use super::runner::{train, RunSummary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<String>,
}

pub fn parse_grid(spec: &str) -> Result<Vec<GridAxis>> {
    let mut axes = Vec::new();
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, values) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("grid axis `{part}` is not key=v1,v2,...")))?;
        let key = key.trim().to_string();
        let values: Vec<String> = values
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if key.is_empty() || values.is_empty() {
            return Err(Error::Config(format!(
                "grid axis `{part}` needs a key and at least one value"
            )));
        }
        if axes.iter().any(|a: &GridAxis| a.key == key) {
            return Err(Error::Config(format!("grid key `{key}` repeated")));
        }
        axes.push(GridAxis { key, values });
    }
    if axes.is_empty() {
        return Err(Error::Config("empty grid".into()));
    }
    Ok(axes)
}

fn overrides_for(key: &str, value: &str) -> Vec<String> {
    match key {
        "lr" => vec![format!("eta_theta={value}"), format!("eta_rho={value}")],
        _ => vec![format!("{key}={value}")],
    }
}

/// The config of one cell: `base` with the given axis values applied.
pub fn cell_config(
    base: &ExperimentConfig,
    axes: &[GridAxis],
    values: &[String],
) -> Result<ExperimentConfig> {
    let overrides: Vec<String> = axes
        .iter()
        .zip(values)
        .flat_map(|(a, v)| overrides_for(&a.key, v))
        .collect();
    ExperimentConfig::from_toml_with_overrides(&base.to_toml_string()?, &overrides)
}

/// Cartesian product of the axes, first axis outermost.
pub fn grid_cells(axes: &[GridAxis]) -> Vec<Vec<String>> {
    let mut cells = vec![Vec::new()];
    for axis in axes {
        cells = cells
            .into_iter()
            .flat_map(|prefix: Vec<String>| {
                axis.values.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push(v.clone());
                    c
                })
            })
            .collect();
    }
    cells
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub values: Vec<String>,
    pub summary: RunSummary,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub keys: Vec<String>,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    /// Writes `<key...>,final_test_acc,diverged` rows in cell order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let mut header = self.keys.clone();
        header.extend(["final_test_acc".to_string(), "diverged".to_string()]);
        w.write_record(&header)?;
        for c in &self.cells {
            let mut row = c.values.clone();
            row.push(c.summary.final_test_acc.to_string());
            row.push(c.summary.diverged.to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<sweep csv>", e))?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Number of cells whose accuracy is within `tol` of the best cell.
    pub fn near_best(&self, tol: f64) -> usize {
        let best = self
            .cells
            .iter()
            .map(|c| c.summary.final_test_acc)
            .fold(f64::NEG_INFINITY, f64::max);
        self.cells
            .iter()
            .filter(|c| !c.summary.diverged && c.summary.final_test_acc >= best - tol)
            .count()
    }
}

/// Trains every cell of `axes` with the base seed. Diverging cells are
/// recorded and the sweep moves on; invalid cell configs abort it.
pub fn sensitivity_sweep(base: &ExperimentConfig, axes: &[GridAxis]) -> Result<SweepResult> {
    sensitivity_sweep_with(base, axes, |_, _| {})
}

/// Like [`sensitivity_sweep`], calling `progress` after each cell.
pub fn sensitivity_sweep_with<F>(
    base: &ExperimentConfig,
    axes: &[GridAxis],
    mut progress: F,
) -> Result<SweepResult>
where
    F: FnMut(usize, &SweepCell),
{
    let configs = grid_cells(axes)
        .into_iter()
        .map(|values| cell_config(base, axes, &values).map(|cfg| (values, cfg)))
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::with_capacity(configs.len());
    for (i, (values, cfg)) in configs.into_iter().enumerate() {
        let summary = train(&cfg)?.summary;
        let cell = SweepCell { values, summary };
        progress(i, &cell);
        cells.push(cell);
    }
    Ok(SweepResult {
        keys: axes.iter().map(|a| a.key.clone()).collect(),
        cells,
    })
}
