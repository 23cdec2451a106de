//! Continuous algebraic Riccati equations `AᵀP + PA − PBBᵀP + Q = 0`.
//!
//! [`solve_care_stabilizing`] returns the classical stabilizing solution
//! (sign-function iteration on the Hamiltonian, then Newton refinement).
//! It needs `(A, B)` stabilizable and no unobservable modes of `(A, Q)` on
//! the imaginary axis.
//!
//! [`solve_care_minimal`] returns the smallest positive semi-definite
//! solution when `(A, Q)` is not detectable. Every PSD solution vanishes
//! on any `A`-invariant subspace inside `ker Q` that is spanned by
//! closed-loop zero modes, and the minimal one vanishes on the whole
//! unobservable subspace `N` of `(A, Q)`. With an orthonormal basis `V` of
//! `N⊥`, `UᵀAU` is block upper triangular for `U = [N, V]`, so `P = VPᵣVᵀ`
//! solves the full equation exactly when `Pᵣ` solves the reduced equation
//! with data `(VᵀAV, VᵀB, VᵀQV)`. The reduced pair is observable, so its
//! stabilizing solution is its only PSD solution.

use alloc::format;

use nalgebra::{DMatrix, DVector};

use super::lyapunov::solve_lyapunov_unchecked;
use super::{
    max_real_part, min_symmetric_eigenvalue, null_space, observable_pbh, orthogonal_complement,
    orthonormalize, spectral_norm, symmetrize, CARE_TOL, HURWITZ_MARGIN, RANK_TOL,
};
use crate::error::{Error, Result};
use crate::float;

const SIGN_MAX_ITER: usize = 100;
const NEWTON_MAX_ITER: usize = 50;
const LINE_SEARCH_HALVINGS: usize = 12;

/// Result of [`solve_care_minimal`].
#[derive(Debug, Clone)]
pub struct CareSolution {
    pub p: DMatrix<f64>,
    /// Frobenius norm of the full Riccati residual.
    pub residual_norm: f64,
    /// `‖Pψ‖` for the supplied kernel vector, if any.
    pub kernel_check: Option<f64>,
    /// Dimension of the deflated subspace.
    pub deflated_dim: usize,
    /// Newton steps taken on the full residual.
    pub newton_steps: usize,
}

/// `AᵀP + PA − PBBᵀP + Q`.
pub fn care_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> DMatrix<f64> {
    let pb = p * b;
    a.transpose() * p + p * a - &pb * pb.transpose() + q
}

fn check_data(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<()> {
    let n = a.nrows();
    if !a.is_square() || b.nrows() != n || q.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "Riccati data A {}×{}, B {}×{}, Q {}×{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    if a.iter()
        .chain(b.iter())
        .chain(q.iter())
        .any(|x| !x.is_finite())
    {
        return Err(Error::NonFinite("Riccati data".into()));
    }
    Ok(())
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| float::abs(*x)).sum::<f64>())
        .fold(0.0, f64::max)
}

// Newton-Schulz style sign iteration with determinant scaling.
fn matrix_sign(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dim = h.nrows() as f64;
    let mut z = h.clone();
    let mut scaling = true;
    let mut prev = f64::INFINITY;
    for _ in 0..SIGN_MAX_ITER {
        let lu = z.clone().lu();
        let log_det: f64 = lu
            .u()
            .diagonal()
            .iter()
            .map(|d| float::ln(float::abs(*d)))
            .sum();
        let inv = lu.try_inverse().ok_or_else(|| {
            Error::NoStabilizingSolution("Hamiltonian has an eigenvalue at zero".into())
        })?;
        let c = if scaling && log_det.is_finite() {
            float::exp(log_det / dim)
        } else {
            1.0
        };
        let next = (&z / c + inv * c) * 0.5;
        let rel = norm1(&(&next - &z)) / norm1(&next);
        z = next;
        if !rel.is_finite() {
            break;
        }
        if rel < 1e-2 {
            scaling = false;
        }
        if rel < 1e-13 || (rel < 1e-9 && rel > 0.5 * prev) {
            return Ok(z);
        }
        prev = rel;
    }
    Err(Error::NoStabilizingSolution(
        "sign iteration did not converge (Hamiltonian eigenvalues near the imaginary axis)".into(),
    ))
}

// Newton steps on the residual `res(x)`, each solving
// (A − GX)ᵀΔ + Δ(A − GX) = −res(x) in the coordinates of `a`.
fn newton_refine<F>(
    a: &DMatrix<f64>,
    g: &DMatrix<f64>,
    mut x: DMatrix<f64>,
    residual: F,
) -> Result<(DMatrix<f64>, usize)>
where
    F: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    let mut r = residual(&x);
    let mut res = r.norm();
    let mut steps = 0;
    for _ in 0..NEWTON_MAX_ITER {
        if res <= 1e-15 * (1.0 + x.norm()) * (1.0 + a.norm()) {
            break;
        }
        let closed = a - g * &x;
        let delta = solve_lyapunov_unchecked(&closed, &(-&r))?;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..LINE_SEARCH_HALVINGS {
            let trial = symmetrize(&(&x + &delta * step));
            let tr = residual(&trial);
            let tres = tr.norm();
            if tres < res {
                x = trial;
                r = tr;
                res = tres;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        steps += 1;
    }
    Ok((x, steps))
}

/// Stabilizing solution of the CARE: `A − BBᵀP` Hurwitz.
pub fn solve_care_stabilizing(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    check_data(a, b, q)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let g = b * b.transpose();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&g));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    let w = matrix_sign(&h)?;
    // the stable invariant subspace [I; X] is the kernel of sign(H) + I
    let mut lhs = DMatrix::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n))
        .copy_from(&w.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n))
        .copy_from(&(w.view((n, n), (n, n)) + DMatrix::identity(n, n)));
    let mut rhs = DMatrix::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n))
        .copy_from(&(-(w.view((0, 0), (n, n)) + DMatrix::identity(n, n))));
    rhs.view_mut((n, 0), (n, n))
        .copy_from(&(-w.view((n, 0), (n, n))));
    let x = lhs
        .svd(true, true)
        .solve(&rhs, f64::EPSILON)
        .map_err(|e| Error::NoStabilizingSolution(e.into()))?;
    let x = symmetrize(&x);

    let (x, _) = newton_refine(a, &g, x, |p| care_residual(a, b, q, p))?;

    let res = care_residual(a, b, q, &x).norm();
    if !(res <= CARE_TOL * (1.0 + x.norm())) {
        return Err(Error::NoConvergence(format!(
            "Riccati residual {res:e} above tolerance"
        )));
    }
    let closed_max = max_real_part(&(a - &g * &x))?;
    if !(closed_max < 0.0) {
        return Err(Error::NoStabilizingSolution(format!(
            "closed loop has max real part {closed_max:e}"
        )));
    }
    Ok(x)
}

/// Orthonormal basis of the unobservable subspace of `(A, Q)`: the largest
/// `A`-invariant subspace contained in `ker Q`.
pub fn unobservable_subspace(a: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut z = null_space(q, RANK_TOL * spectral_norm(q));
    let tol = RANK_TOL * spectral_norm(a).max(1.0);
    while z.ncols() > 0 {
        let k = z.ncols();
        let leak = (DMatrix::identity(n, n) - &z * z.transpose()) * a * &z;
        let keep = null_space(&leak, tol);
        if keep.ncols() == k {
            break;
        }
        z = orthonormalize(&(&z * keep), 1e-8);
    }
    z
}

/// Smallest positive semi-definite CARE solution `P⁻`.
///
/// `kernel`, when given, must satisfy `Aψ = 0` and `Qψ = 0`; it is placed
/// first in the deflation basis so that `Pψ = 0` holds to rounding. Without
/// it the unobservable subspace is computed numerically. When `(A, Q)` is
/// detectable and nothing is deflated, the result is the stabilizing
/// solution.
pub fn solve_care_minimal(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    kernel: Option<&DVector<f64>>,
) -> Result<CareSolution> {
    check_data(a, b, q)?;
    let n = a.nrows();
    let q_scale = 1.0 + q.norm();
    if (q - q.transpose()).norm() > 1e-12 * q_scale {
        return Err(Error::InvalidArgument("Q is not symmetric".into()));
    }
    if min_symmetric_eigenvalue(q) < -1e-10 * q_scale {
        return Err(Error::InvalidArgument(
            "Q is not positive semi-definite".into(),
        ));
    }

    let unobservable = unobservable_subspace(a, q);
    let basis = match kernel {
        Some(psi) => {
            let norm = psi.norm();
            if psi.len() != n || !(norm > 0.0) {
                return Err(Error::InvalidArgument(
                    "kernel vector must be nonzero with matching length".into(),
                ));
            }
            let a_leak = (a * psi).norm() / norm;
            let q_leak = (q * psi).norm() / norm;
            if a_leak > 1e-8 * (1.0 + a.norm()) || q_leak > 1e-8 * q_scale {
                return Err(Error::InvalidArgument(format!(
                    "kernel vector is not annihilated by A and Q (‖Aψ‖/‖ψ‖ = {a_leak:e}, ‖Qψ‖/‖ψ‖ = {q_leak:e})"
                )));
            }
            let mut stacked = DMatrix::zeros(n, 1 + unobservable.ncols());
            stacked.set_column(0, &(psi / norm));
            stacked
                .view_mut((0, 1), (n, unobservable.ncols()))
                .copy_from(&unobservable);
            orthonormalize(&stacked, 1e-6)
        }
        None => unobservable,
    };

    let v = orthogonal_complement(&basis, n);
    let a_r = v.transpose() * a * &v;
    let b_r = v.transpose() * b;
    let q_r = symmetrize(&(v.transpose() * q * &v));
    let p_r = solve_care_stabilizing(&a_r, &b_r, &q_r).map_err(|e| match e {
        Error::NoStabilizingSolution(msg) => {
            Error::NoStabilizingSolution(format!("reduced equation: {msg}"))
        }
        other => other,
    })?;

    let embed = |p_r: &DMatrix<f64>| symmetrize(&(&v * p_r * v.transpose()));
    let g_r = &b_r * b_r.transpose();
    let (p_r, newton_steps) = newton_refine(&a_r, &g_r, p_r, |p_r| {
        v.transpose() * care_residual(a, b, q, &embed(p_r)) * &v
    })?;
    let p = embed(&p_r);

    let residual_norm = care_residual(a, b, q, &p).norm();
    if !(residual_norm <= CARE_TOL * (1.0 + p.norm())) {
        return Err(Error::NoConvergence(format!(
            "Riccati residual {residual_norm:e} above tolerance"
        )));
    }
    Ok(CareSolution {
        kernel_check: kernel.map(|psi| (&p * psi).norm()),
        p,
        residual_norm,
        deflated_dim: basis.ncols(),
        newton_steps,
    })
}

/// Filter Riccati equation `mĀP̂ + mP̂Āᵀ − P̂CᵀCP̂ + I = 0`, positive
/// definite solution. `mĀ − P̂CᵀC` is Hurwitz on success.
pub fn solve_filter_are(abar: &DMatrix<f64>, c: &DMatrix<f64>, m: usize) -> Result<DMatrix<f64>> {
    if c.ncols() != abar.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "measurement matrix has {} columns, state dimension is {}",
            c.ncols(),
            abar.nrows()
        )));
    }
    if m == 0 {
        return Err(Error::InvalidArgument(
            "leader count must be positive".into(),
        ));
    }
    if !observable_pbh(abar, c)? {
        return Err(Error::NotObservable("(Ā, C)".into()));
    }
    let n = abar.nrows();
    let scaled = abar * m as f64;
    let p_hat = solve_care_stabilizing(
        &scaled.transpose(),
        &c.transpose(),
        &DMatrix::identity(n, n),
    )?;
    if p_hat.clone().cholesky().is_none() {
        return Err(Error::NoStabilizingSolution(
            "filter Riccati solution is not positive definite".into(),
        ));
    }
    let filter = &scaled - &p_hat * c.transpose() * c;
    let max_re = max_real_part(&filter)?;
    if !(max_re < -HURWITZ_MARGIN) {
        return Err(Error::NotHurwitz {
            max_real_part: max_re,
        });
    }
    Ok(p_hat)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    #[test]
    fn scalar_integrator() {
        let sol = solve_care_minimal(&scalar(0.0), &scalar(1.0), &scalar(1.0), None).unwrap();
        assert!((sol.p[(0, 0)] - 1.0).abs() < 1e-12);
        let p = solve_care_stabilizing(&scalar(0.0), &scalar(1.0), &scalar(1.0)).unwrap();
        assert!((p[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_unstable_unobserved_picks_zero() {
        // solutions 0 and 2; the minimal PSD one is 0
        let sol = solve_care_minimal(&scalar(1.0), &scalar(1.0), &scalar(0.0), None).unwrap();
        assert!(sol.p[(0, 0)].abs() < 1e-14);
        assert_eq!(sol.deflated_dim, 1);
        let stab = solve_care_stabilizing(&scalar(1.0), &scalar(1.0), &scalar(0.0)).unwrap();
        assert!((stab[(0, 0)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn double_integrator_closed_form() {
        // A = [[0,1],[0,0]], B = e2, Q = I ⇒ P = [[√3, 1], [1, √3]]
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let q = DMatrix::identity(2, 2);
        let p = solve_care_stabilizing(&a, &b, &q).unwrap();
        let s3 = 3f64.sqrt();
        let expected = DMatrix::from_row_slice(2, 2, &[s3, 1.0, 1.0, s3]);
        assert!((p - expected).norm() < 1e-12);
    }

    #[test]
    fn kernel_vector_is_validated() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let q = DMatrix::zeros(2, 2);
        let good = DVector::from_vec(alloc::vec![1.0, 1.0]);
        let sol = solve_care_minimal(&a, &b, &q, Some(&good)).unwrap();
        assert!(sol.p.norm() < 1e-14);
        assert!(sol.kernel_check.unwrap() < 1e-14);
        let bad = DVector::from_vec(alloc::vec![1.0, 0.0]);
        assert!(solve_care_minimal(&a, &b, &q, Some(&bad)).is_err());
    }

    #[test]
    fn rejects_indefinite_q() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(
            solve_care_minimal(&DMatrix::zeros(2, 2), &DMatrix::identity(2, 2), &q, None).is_err()
        );
    }

    #[test]
    fn uncontrollable_imaginary_mode_fails_loudly() {
        // oscillator with no input and no state weight
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, -1.0]);
        let b = DMatrix::from_row_slice(3, 1, &[0.0, 0.0, 1.0]);
        let q = DMatrix::identity(3, 3);
        assert!(solve_care_stabilizing(&a, &b, &q).is_err());
    }

    #[test]
    fn scalar_filter() {
        let p = solve_filter_are(&scalar(0.0), &scalar(1.0), 1).unwrap();
        assert!((p[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(solve_filter_are(
            &DMatrix::identity(2, 2),
            &DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            1
        )
        .is_err());
    }

    #[test]
    fn unobservable_subspace_of_chain() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0]);
        // Q sees only x1: x2 feeds x1, x3 is isolated ⇒ N = span(e3)
        let q = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![1.0, 0.0, 0.0]));
        let n = unobservable_subspace(&a, &q);
        assert_eq!(n.ncols(), 1);
        assert!((n[(2, 0)].abs() - 1.0).abs() < 1e-12);
    }
}
