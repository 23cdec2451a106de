use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Complex, ComplexField, DMatrix};

use super::to_complex;
use crate::error::{Error, Result};

/// Eigenvalues together with right eigenvectors (columns of `right`) and
/// left eigenvectors (columns of `left`), binormalized so that
/// `left.column(i)ᵀ · right.column(j) = δᵢⱼ` (plain transpose, no
/// conjugation).
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<Complex<f64>>,
    pub right: DMatrix<Complex<f64>>,
    pub left: DMatrix<Complex<f64>>,
    /// 2-norm condition number of the right eigenvector matrix.
    pub condition: f64,
}

/// Unitary factor and upper-triangular factor of a complex Schur form.
type SchurPair = (DMatrix<Complex<f64>>, DMatrix<Complex<f64>>);

pub(crate) fn complex_schur(m: &DMatrix<f64>) -> Result<SchurPair> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigenproblem needs a square matrix, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("eigenproblem input".into()));
    }
    super::schur::schur(&to_complex(m))
}

/// Eigenvalues of a real square matrix, in Schur order.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let (_, t) = complex_schur(m)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Largest real part over the spectrum of `m`.
pub fn max_real_part(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Full eigendecomposition of a real square matrix.
///
/// Right eigenvectors come from back substitution on the complex Schur
/// form; the left eigenvectors are the rows of the inverse right
/// eigenvector matrix. A defective or nearly defective matrix produces an
/// [`Error::IllConditionedEigenbasis`] when the condition number of the
/// eigenvector matrix exceeds `1e10`.
pub fn eig_full(m: &DMatrix<f64>) -> Result<EigenDecomposition> {
    let n = m.nrows();
    if n == 0 {
        return Ok(EigenDecomposition {
            values: Vec::new(),
            right: DMatrix::zeros(0, 0),
            left: DMatrix::zeros(0, 0),
            condition: 1.0,
        });
    }
    let (q, t) = complex_schur(m)?;
    let values: Vec<Complex<f64>> = (0..n).map(|i| t[(i, i)]).collect();
    let t_norm = t
        .iter()
        .map(|z| z.modulus())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * t_norm;

    let mut x = DMatrix::<Complex<f64>>::zeros(n, n);
    for k in 0..n {
        let lambda = values[k];
        x[(k, k)] = Complex::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = Complex::new(0.0, 0.0);
            for j in i + 1..=k {
                acc += t[(i, j)] * x[(j, k)];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.modulus() < small {
                denom = Complex::new(small, 0.0);
            }
            x[(i, k)] = -acc / denom;
        }
    }
    let mut right = q * x;
    for mut col in right.column_iter_mut() {
        let norm = crate::float::sqrt(col.iter().map(|z| z.modulus_squared()).sum::<f64>());
        col /= Complex::new(norm, 0.0);
    }

    let sv = right.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if !(condition <= 1e10) {
        return Err(Error::IllConditionedEigenbasis { condition });
    }
    let inv = right
        .clone()
        .try_inverse()
        .ok_or(Error::IllConditionedEigenbasis { condition })?;
    Ok(EigenDecomposition {
        values,
        right,
        left: inv.transpose(),
        condition,
    })
}
