use alloc::format;

use nalgebra::{Complex, ComplexField, DMatrix};

use super::eig::complex_schur;
use super::{HURWITZ_MARGIN, LYAPUNOV_TOL};
use crate::error::{Error, Result};

/// `MᵀT + TM − RHS`.
pub fn lyapunov_residual(m: &DMatrix<f64>, t: &DMatrix<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    m.transpose() * t + t * m - rhs
}

/// Solves `MᵀT + TM = RHS` for Hurwitz `M` (Bartels–Stewart on the complex
/// Schur form).
///
/// The result is symmetrized; it is positive definite whenever `RHS` is
/// negative definite.
pub fn solve_lyapunov(m: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_shapes(m, rhs)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let (q, t) = complex_schur(m)?;
    let max_re = (0..n)
        .map(|i| t[(i, i)].re)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_re >= -HURWITZ_MARGIN * 1e-3 {
        return Err(Error::NotHurwitz {
            max_real_part: max_re,
        });
    }
    let x = solve_triangular_lyapunov(&q, &t, rhs)?;
    let resid = lyapunov_residual(m, &x, rhs).norm();
    let scale = 1.0 + rhs.norm() + 2.0 * m.norm() * x.norm();
    if resid > LYAPUNOV_TOL * scale {
        return Err(Error::NoConvergence(format!(
            "Lyapunov residual {resid:e} above tolerance"
        )));
    }
    Ok(x)
}

/// Same equation without the Hurwitz or residual checks; the caller
/// guarantees `λᵢ + λⱼ ≠ 0` over the spectrum.
pub(crate) fn solve_lyapunov_unchecked(
    m: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    check_shapes(m, rhs)?;
    if m.nrows() == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let (q, t) = complex_schur(m)?;
    solve_triangular_lyapunov(&q, &t, rhs)
}

fn check_shapes(m: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() || rhs.shape() != m.shape() {
        return Err(Error::DimensionMismatch(format!(
            "Lyapunov equation with M {}×{} and RHS {}×{}",
            m.nrows(),
            m.ncols(),
            rhs.nrows(),
            rhs.ncols()
        )));
    }
    Ok(())
}

// With M = Q T Qᴴ (real M, so Mᵀ = Q Tᴴ Qᴴ) the equation becomes
// Tᴴ Y + Y T = Qᴴ RHS Q, solved entry by entry in row-major order.
fn solve_triangular_lyapunov(
    q: &DMatrix<Complex<f64>>,
    t: &DMatrix<Complex<f64>>,
    rhs: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = t.nrows();
    let c = q.adjoint() * super::to_complex(rhs) * q;
    let mut y = DMatrix::<Complex<f64>>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = c[(i, j)];
            for k in 0..i {
                acc -= t[(k, i)].conjugate() * y[(k, j)];
            }
            for k in 0..j {
                acc -= y[(i, k)] * t[(k, j)];
            }
            let denom = t[(i, i)].conjugate() + t[(j, j)];
            if denom.modulus() == 0.0 {
                return Err(Error::InvalidArgument(
                    "Lyapunov operator is singular (λᵢ + λⱼ = 0)".into(),
                ));
            }
            y[(i, j)] = acc / denom;
        }
    }
    let x = (q * y * q.adjoint()).map(|z| z.re);
    Ok(super::symmetrize(&x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use nalgebra::DVector;

    #[test]
    fn scalar() {
        let t = solve_lyapunov(
            &DMatrix::from_element(1, 1, -1.0),
            &DMatrix::from_element(1, 1, -1.0),
        )
        .unwrap();
        assert!((t[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn decoupled_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]));
        let t = solve_lyapunov(&m, &(-DMatrix::identity(2, 2))).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.25]));
        assert!((t - expected).norm() < 1e-14);
    }

    #[test]
    fn rejects_unstable() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            solve_lyapunov(&m, &(-DMatrix::identity(2, 2))),
            Err(Error::NotHurwitz { .. })
        ));
        let marginal = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(solve_lyapunov(&marginal, &(-DMatrix::identity(2, 2))).is_err());
    }

    #[test]
    fn rejects_shape_mismatch() {
        assert!(solve_lyapunov(&DMatrix::identity(2, 2), &DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn oscillatory_stable_matrix() {
        let m = DMatrix::from_row_slice(3, 3, &[-0.1, 5.0, 0.0, -5.0, -0.1, 1.0, 0.0, 0.0, -2.0]);
        let rhs = -DMatrix::identity(3, 3);
        let t = solve_lyapunov(&m, &rhs).unwrap();
        assert!(lyapunov_residual(&m, &t, &rhs).norm() < 1e-12 * (1.0 + t.norm()));
        assert!(t.clone().cholesky().is_some());
    }
}
