//! Radial/tangential decomposition of a vector relative to a reference
//! parameter vector `w`.
//!
//! The radial part is the orthogonal projection onto `span(w)`, the tangential
//! part is the residual. When `‖w‖² < eps_norm` the direction of `w` is
//! undefined; the radial part is then zero and the whole input is tangential.

use crate::error::{check_finite, check_len, Result};
use crate::vecmath::{dot_unchecked, norm2};

/// Default threshold on `‖w‖²` below which `w` is treated as the zero vector.
pub const DEFAULT_EPS_NORM: f64 = 1e-24;

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub radial: Vec<f64>,
    pub tangential: Vec<f64>,
}

/// Coefficient `c` with `radial = c·w`, or `None` in the degenerate case.
#[inline]
pub(crate) fn radial_coefficient(z: &[f64], w: &[f64], eps_norm: f64) -> Option<f64> {
    let ww = norm2(w);
    if ww < eps_norm || ww == 0.0 {
        None
    } else {
        Some(dot_unchecked(z, w) / ww)
    }
}

fn usable(w: &[f64], eps_norm: f64) -> bool {
    let ww = norm2(w);
    ww >= eps_norm && ww > 0.0
}

fn validate(z: &[f64], w: &[f64]) -> Result<()> {
    check_len(w.len(), z.len())?;
    check_finite(z, "projected vector")?;
    check_finite(w, "reference vector")
}

pub fn project_radial(z: &[f64], w: &[f64], eps_norm: f64) -> Result<Vec<f64>> {
    validate(z, w)?;
    let mut out = z.to_vec();
    project_radial_inplace(&mut out, w, eps_norm);
    Ok(out)
}

pub fn project_tangential(z: &[f64], w: &[f64], eps_norm: f64) -> Result<Vec<f64>> {
    Ok(decompose(z, w, eps_norm)?.tangential)
}

pub fn decompose(z: &[f64], w: &[f64], eps_norm: f64) -> Result<Decomposition> {
    validate(z, w)?;
    let mut radial = vec![0.0; z.len()];
    let mut tangential = z.to_vec();
    split_into(z, w, eps_norm, &mut radial, &mut tangential);
    Ok(Decomposition { radial, tangential })
}

/// Writes the radial part of `z` into `radial` and `z - radial` into
/// `tangential`. Lengths must already agree.
pub(crate) fn split_into(
    z: &[f64],
    w: &[f64],
    eps_norm: f64,
    radial: &mut [f64],
    tangential: &mut [f64],
) {
    // A nonzero w spans all of R¹; the division round trip would otherwise
    // leave a rounding residue that is, by construction, parallel to w.
    if z.len() == 1 && usable(w, eps_norm) {
        radial[0] = z[0];
        tangential[0] = 0.0;
        return;
    }
    match radial_coefficient(z, w, eps_norm) {
        Some(c) => {
            for i in 0..z.len() {
                let r = c * w[i];
                radial[i] = r;
                tangential[i] = z[i] - r;
            }
        }
        None => {
            radial.fill(0.0);
            tangential.copy_from_slice(z);
        }
    }
}

/// Replaces `z` with its radial part in place.
pub(crate) fn project_radial_inplace(z: &mut [f64], w: &[f64], eps_norm: f64) {
    if z.len() == 1 && usable(w, eps_norm) {
        return;
    }
    match radial_coefficient(z, w, eps_norm) {
        Some(c) => {
            for (zi, wi) in z.iter_mut().zip(w) {
                *zi = c * wi;
            }
        }
        None => z.fill(0.0),
    }
}

/// Replaces `z` with its tangential part in place.
pub(crate) fn project_tangential_inplace(z: &mut [f64], w: &[f64], eps_norm: f64) {
    if z.len() == 1 && usable(w, eps_norm) {
        z[0] = 0.0;
        return;
    }
    if let Some(c) = radial_coefficient(z, w, eps_norm) {
        for (zi, wi) in z.iter_mut().zip(w) {
            *zi -= c * wi;
        }
    }
}
