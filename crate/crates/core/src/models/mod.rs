//! Small differentiable models with hand-written gradients.

mod loss;
mod mlp;
mod objectives;

pub use loss::{accuracy, cross_entropy_with_grad, mean_cross_entropy};
pub use mlp::{ForwardCache, InitScheme, MlpModel};
pub use objectives::{quadratic_objective, scale_invariant_objective};

use crate::error::{check_len, Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len(rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Model inputs. `Binary` stores, for every row, the column indices holding
/// a one (exactly `per_row` of them); all other entries are zero.
#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    Dense(Matrix),
    Binary {
        width: usize,
        per_row: usize,
        indices: Vec<usize>,
    },
}

impl Features {
    pub fn rows(&self) -> usize {
        match self {
            Features::Dense(m) => m.rows,
            Features::Binary {
                per_row, indices, ..
            } => {
                if *per_row == 0 {
                    0
                } else {
                    indices.len() / per_row
                }
            }
        }
    }

    pub fn width(&self) -> usize {
        match self {
            Features::Dense(m) => m.cols,
            Features::Binary { width, .. } => *width,
        }
    }

    /// Dense copy, mostly for tests and finite-difference checks.
    pub fn to_dense(&self) -> Matrix {
        match self {
            Features::Dense(m) => m.clone(),
            Features::Binary {
                width,
                per_row,
                indices,
            } => {
                let n = self.rows();
                let mut m = Matrix::zeros(n, *width);
                for i in 0..n {
                    for &k in &indices[i * per_row..(i + 1) * per_row] {
                        m.data[i * width + k] += 1.0;
                    }
                }
                m
            }
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            Features::Dense(m) => check_len(m.rows * m.cols, m.data.len()),
            Features::Binary {
                width,
                per_row,
                indices,
            } => {
                if *per_row == 0 || indices.len() % per_row != 0 {
                    return Err(Error::Config(
                        "binary features need per_row > 0 dividing the index count".into(),
                    ));
                }
                if let Some(&bad) = indices.iter().find(|&&k| k >= *width) {
                    return Err(Error::Config(format!(
                        "feature index {bad} out of range for width {width}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Inputs plus class targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub features: Features,
    pub targets: Vec<usize>,
}

impl Batch {
    pub fn new(features: Features, targets: Vec<usize>) -> Result<Self> {
        features.validate()?;
        check_len(features.rows(), targets.len())?;
        Ok(Self { features, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}
