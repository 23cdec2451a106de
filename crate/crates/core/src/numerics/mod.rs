//! Dense matrix-equation kernels: Riccati (minimal PSD and stabilizing),
//! Lyapunov, full eigendecomposition, rank tests and the matrix
//! exponential.
//!
//! Default tolerances are relative to the scale of the data they check.

mod care;
mod eig;
mod expm;
mod lyapunov;
mod rank;
mod schur;

pub use care::{
    care_residual, solve_care_minimal, solve_care_stabilizing, solve_filter_are,
    unobservable_subspace, CareSolution,
};
pub use eig::{eig_full, eigenvalues, max_real_part, EigenDecomposition};
pub use expm::{expm, expm_minus_identity};
pub use lyapunov::{lyapunov_residual, solve_lyapunov};
pub use rank::{
    controllable_kalman, controllable_pbh, numerical_rank, observable_kalman, observable_pbh,
};

use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

/// Relative CARE residual tolerance.
pub const CARE_TOL: f64 = 1e-8;
/// Relative Lyapunov residual tolerance.
pub const LYAPUNOV_TOL: f64 = 1e-10;
/// Eigenvalues with `|λ| ≤ ZERO_EIG_TOL·‖M‖` count as zero.
pub const ZERO_EIG_TOL: f64 = 1e-8;
/// Required distance of a stable spectrum from the imaginary axis.
pub const HURWITZ_MARGIN: f64 = 1e-6;
/// Singular values below `RANK_TOL·σ_max` count as zero.
pub const RANK_TOL: f64 = 1e-8;

pub(crate) fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex<f64>> {
    m.map(|x| Complex::new(x, 0.0))
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Largest eigenvalue of the symmetric part of `m`.
pub fn max_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s != 0.0 {
                out.view_mut((i * br, j * bc), (br, bc)).copy_from(&(b * s));
            }
        }
    }
    out
}

/// Block-diagonal matrix from square or rectangular blocks.
pub fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Orthonormal basis of the null space of `m`: right singular vectors whose
/// singular value is `≤ tol`. Columns beyond the row count are always null.
pub fn null_space(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    // pad to at least square so the SVD returns a full V
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol)
        .map(|(k, _)| k)
        .collect();
    DMatrix::from_fn(cols, keep.len(), |i, k| v_t[(keep[k], i)])
}

/// Orthonormal basis of the orthogonal complement of the column span of `z`
/// (columns of `z` assumed orthonormal).
pub fn orthogonal_complement(z: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    if z.ncols() == 0 {
        return DMatrix::identity(dim, dim);
    }
    null_space(&z.transpose(), 1e-10)
}

/// Orthonormalizes the columns of `m` by modified Gram–Schmidt with one
/// reorthogonalization pass, dropping columns that fall below `drop_tol`
/// after projection.
pub fn orthonormalize(m: &DMatrix<f64>, drop_tol: f64) -> DMatrix<f64> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for col in m.column_iter() {
        let mut v: DVector<f64> = col.into_owned();
        let scale = v.norm();
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&v);
                v -= q * proj;
            }
        }
        let norm = v.norm();
        if norm > drop_tol * scale.max(1.0) {
            basis.push(v / norm);
        }
    }
    if basis.is_empty() {
        DMatrix::zeros(m.nrows(), 0)
    } else {
        DMatrix::from_columns(&basis)
    }
}

/// Largest singular value (spectral norm).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_small() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        let k = kron(&a, &b);
        assert_eq!(
            k,
            DMatrix::from_row_slice(2, 4, &[0.0, 1.0, 0.0, 2.0, 0.0, 3.0, 0.0, 4.0])
        );
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let ns = null_space(&m, 1e-12);
        assert_eq!(ns.ncols(), 2);
        assert!((&m * &ns).norm() < 1e-12);
        assert!((ns.transpose() * &ns - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn complement_and_orthonormalize() {
        let z = orthonormalize(
            &DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 0.0, 0.0]),
            1e-10,
        );
        assert_eq!(z.ncols(), 1);
        let v = orthogonal_complement(&z, 3);
        assert_eq!(v.ncols(), 2);
        assert!((z.transpose() * &v).norm() < 1e-12);
        assert_eq!(
            orthogonal_complement(&DMatrix::zeros(3, 0), 3),
            DMatrix::identity(3, 3)
        );
    }

    #[test]
    fn block_diag_shapes() {
        let d = block_diag(&[DMatrix::identity(2, 2), DMatrix::from_element(1, 1, 5.0)]);
        assert_eq!(d.shape(), (3, 3));
        assert_eq!(d[(2, 2)], 5.0);
        assert_eq!(d[(0, 2)], 0.0);
    }
}
