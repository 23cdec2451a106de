//! Controllability and observability tests.
//!
//! PBH is the primary test: at every distinct eigenvalue `λ` of `A` the
//! pencil `[A − λI, B]` must have full row rank. Eigenvalues closer than
//! `1e-6·(1 + ‖A‖)` are merged and tested at their mean, which is far more
//! accurate than the individual members of a perturbed Jordan cluster.
//! The Kalman test stacks `[B, AB, …, Aⁿ⁻¹B]`; it is simple but loses
//! accuracy quickly as `n` grows, so it is kept for cross-checks.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Complex, ComplexField, DMatrix};

use super::{eigenvalues, to_complex, RANK_TOL};
use crate::error::{Error, Result};

/// Rank of a real matrix at threshold `RANK_TOL·σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    sv.iter()
        .filter(|&&s| s > RANK_TOL * smax && s > 0.0)
        .count()
}

fn complex_rank(m: &DMatrix<Complex<f64>>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    sv.iter()
        .filter(|&&s| s > RANK_TOL * smax && s > 0.0)
        .count()
}

fn clustered_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let eig = eigenvalues(a)?;
    let delta = 1e-6 * (1.0 + a.norm());
    let mut clusters: Vec<(Complex<f64>, Complex<f64>, usize)> = Vec::new();
    for l in eig {
        match clusters
            .iter_mut()
            .find(|(seed, _, _)| (*seed - l).modulus() <= delta)
        {
            Some((_, sum, count)) => {
                *sum += l;
                *count += 1;
            }
            None => clusters.push((l, l, 1)),
        }
    }
    Ok(clusters
        .into_iter()
        .map(|(_, sum, count)| sum / Complex::new(count as f64, 0.0))
        .collect())
}

fn check_pair(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() || b.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "pair (A {}×{}, B {}×{})",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}

/// PBH controllability of `(A, B)`.
pub fn controllable_pbh(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<bool> {
    check_pair(a, b)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(true);
    }
    let m = b.ncols();
    let ac = to_complex(a);
    let bc = to_complex(b);
    for lambda in clustered_eigenvalues(a)? {
        let mut pencil = DMatrix::<Complex<f64>>::zeros(n, n + m);
        let shifted = &ac - DMatrix::<Complex<f64>>::identity(n, n) * lambda;
        pencil.view_mut((0, 0), (n, n)).copy_from(&shifted);
        pencil.view_mut((0, n), (n, m)).copy_from(&bc);
        if complex_rank(&pencil) < n {
            return Ok(false);
        }
    }
    Ok(true)
}

/// PBH observability of `(A, C)`.
pub fn observable_pbh(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<bool> {
    controllable_pbh(&a.transpose(), &c.transpose())
}

/// Kalman-rank controllability of `(A, B)`.
pub fn controllable_kalman(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<bool> {
    check_pair(a, b)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(true);
    }
    let m = b.ncols();
    let mut k = DMatrix::zeros(n, n * m);
    let mut block = b.clone();
    for p in 0..n {
        k.view_mut((0, p * m), (n, m)).copy_from(&block);
        block = a * block;
    }
    Ok(numerical_rank(&k) == n)
}

pub fn observable_kalman(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<bool> {
    controllable_kalman(&a.transpose(), &c.transpose())
}
