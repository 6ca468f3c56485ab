//! Flat `f64` kernels.
//!
//! Every parameter block is handled as a flattened real vector. Reductions
//! sum strictly left to right so results are reproducible bit for bit.

use crate::error::{check_len, Result};

pub fn dot(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a.len(), b.len())?;
    Ok(dot_unchecked(a, b))
}

#[inline]
pub(crate) fn dot_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Squared Euclidean norm. Identical to `dot(a, a)`.
pub fn norm2(a: &[f64]) -> f64 {
    dot_unchecked(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm2(a).sqrt()
}

/// `alpha * x + y`.
pub fn axpy(alpha: f64, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_len(x.len(), y.len())?;
    Ok(x.iter().zip(y).map(|(xi, yi)| alpha * xi + yi).collect())
}

/// In-place `y += alpha * x`.
pub fn axpy_inplace(alpha: f64, x: &[f64], y: &mut [f64]) -> Result<()> {
    check_len(x.len(), y.len())?;
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
    Ok(())
}

pub fn hadamard(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_len(a.len(), b.len())?;
    Ok(a.iter().zip(b).map(|(x, y)| x * y).collect())
}

pub fn scale(alpha: f64, a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| alpha * x).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_len(a.len(), b.len())?;
    Ok(a.iter().zip(b).map(|(x, y)| x - y).collect())
}

pub fn add(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_len(a.len(), b.len())?;
    Ok(a.iter().zip(b).map(|(x, y)| x + y).collect())
}

/// `‖a - b‖²` without allocating.
pub fn dist2(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a.len(), b.len())?;
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    Ok(acc)
}

/// Cosine of the angle between `a` and `b`; zero if either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    let d = dot(a, b)?;
    let n = norm(a) * norm(b);
    Ok(if n > 0.0 { d / n } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use proptest::prelude::*;

    #[test]
    fn dot_examples() {
        assert_eq!(dot(&[3.0, 4.0], &[1.0, 0.0]).unwrap(), 3.0);
        assert_eq!(dot(&[0.0, 0.0], &[5.0, 7.0]).unwrap(), 0.0);
        assert_eq!(dot(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 14.0);
    }

    #[test]
    fn dot_rejects_mismatch() {
        assert!(matches!(
            dot(&[1.0], &[1.0, 2.0]),
            Err(Error::Dimension {
                expected: 1,
                actual: 2
            })
        ));
    }

    #[test]
    fn norm2_examples() {
        assert_eq!(norm2(&[3.0, 4.0]), 25.0);
        assert_eq!(norm2(&[0.0, 0.0, 0.0]), 0.0);
        assert_eq!(norm2(&[1.0]), 1.0);
    }

    #[test]
    fn axpy_examples() {
        assert_eq!(axpy(2.0, &[1.0, 1.0], &[0.0, 1.0]).unwrap(), vec![2.0, 3.0]);
        assert_eq!(axpy(0.0, &[9.0, 9.0], &[4.0, 5.0]).unwrap(), vec![4.0, 5.0]);
        assert_eq!(
            axpy(-1.0, &[1.0, 2.0], &[1.0, 2.0]).unwrap(),
            vec![0.0, 0.0]
        );
        assert!(axpy(1.0, &[1.0], &[]).is_err());
    }

    #[test]
    fn hadamard_examples() {
        assert_eq!(hadamard(&[2.0, 3.0], &[4.0, 5.0]).unwrap(), vec![8.0, 15.0]);
        assert_eq!(
            hadamard(&[1.0, 1.0], &[0.3, -7.5]).unwrap(),
            vec![0.3, -7.5]
        );
        assert_eq!(hadamard(&[0.0, 5.0], &[7.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert!(hadamard(&[1.0, 2.0], &[1.0]).is_err());
    }

    fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..64).prop_flat_map(|n| {
            (
                prop::collection::vec(-1e3f64..1e3, n),
                prop::collection::vec(-1e3f64..1e3, n),
            )
        })
    }

    proptest! {
        #[test]
        fn dot_is_symmetric((a, b) in vec_pair()) {
            prop_assert_eq!(dot(&a, &b).unwrap().to_bits(), dot(&b, &a).unwrap().to_bits());
        }

        #[test]
        fn norm2_is_self_dot((a, _b) in vec_pair()) {
            prop_assert_eq!(norm2(&a).to_bits(), dot(&a, &a).unwrap().to_bits());
        }

        #[test]
        fn hadamard_ones_is_identity((a, _b) in vec_pair()) {
            let ones = vec![1.0; a.len()];
            prop_assert_eq!(hadamard(&a, &ones).unwrap(), a);
        }

        #[test]
        fn kernels_are_deterministic((a, b) in vec_pair()) {
            prop_assert_eq!(dot(&a, &b).unwrap().to_bits(), dot(&a, &b).unwrap().to_bits());
            prop_assert_eq!(axpy(0.7, &a, &b).unwrap(), axpy(0.7, &a, &b).unwrap());
        }
    }
}
