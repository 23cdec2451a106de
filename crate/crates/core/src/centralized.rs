//! Centralized synthesis: minimal Riccati feedback `v = −B̄ᵀPx̄`, the
//! closed loop `Ã = Ā − B̄B̄ᵀP`, its zero eigenpair, the spectral
//! certificate, the basin test and the limit predictor.
//!
//! Limits use only the simple zero eigenpair: the spectral projector onto
//! the zero mode is `ψ₁ψ̂₁ᵀ` whatever the Jordan structure of the stable
//! part, so no eigenbasis of `Ã` is ever inverted.

use alloc::format;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::float;
use crate::numerics::{
    eigenvalues, solve_care_minimal, spectral_norm, CareSolution, HURWITZ_MARGIN, ZERO_EIG_TOL,
};
use crate::patterns::PatternSpec;
use crate::plant::{AugmentedSystem, Equilibrium};

/// Bound on `‖Pψ₁‖` for the certificate.
pub const KERNEL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct CentralizedDesign {
    pub system: AugmentedSystem,
    pub equilibrium: Equilibrium,
    pub care: CareSolution,
    /// `B̄ᵀP`, so that `v = −gain·x̄`.
    pub gain: DMatrix<f64>,
    /// `Ā − B̄B̄ᵀP`.
    pub atilde: DMatrix<f64>,
    /// Right zero eigenvector `[x*; u*]`.
    pub psi1: DVector<f64>,
    /// Left zero eigenvector with `ψ̂₁ᵀψ₁ = 1`.
    pub psi1_hat: DVector<f64>,
}

impl CentralizedDesign {
    pub fn p(&self) -> &DMatrix<f64> {
        &self.care.p
    }

    /// `ψ̂₁ᵀx̄`, the weight of the zero mode in `x̄`.
    pub fn zero_mode_weight(&self, xbar: &DVector<f64>) -> Result<f64> {
        check_len(xbar, self.psi1.len(), "initial augmented state")?;
        Ok(self.psi1_hat.dot(xbar))
    }
}

pub(crate) fn check_len(v: &DVector<f64>, expected: usize, what: &str) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "{what} has length {}, expected {expected}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(what.into()));
    }
    Ok(())
}

/// Left null vector of `m` from the smallest singular triplet of `mᵀ`.
pub(crate) fn left_null_vector(m: &DMatrix<f64>) -> DVector<f64> {
    let svd = m.transpose().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let k = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    v_t.row(k).transpose()
}

/// Normalizes a left zero vector against the right one.
pub(crate) fn binormalize(left: DVector<f64>, right: &DVector<f64>) -> Result<DVector<f64>> {
    let overlap = left.dot(right);
    if !(overlap.abs() >= 1e-10 * right.norm()) {
        return Err(Error::DefectiveZeroMode(format!(
            "left and right zero vectors are orthogonal (overlap {overlap:e})"
        )));
    }
    Ok(left / overlap)
}

pub fn synthesize_centralized(
    sys: &AugmentedSystem,
    eq: &Equilibrium,
) -> Result<CentralizedDesign> {
    if eq.x_star.len() != sys.n || eq.u_star.len() != sys.m {
        return Err(Error::DimensionMismatch(format!(
            "equilibrium is ({}, {}), system is ({}, {})",
            eq.x_star.len(),
            eq.u_star.len(),
            sys.n,
            sys.m
        )));
    }
    if sys.m == 0 {
        return Err(Error::NotControllable("no leaders".into()));
    }
    let psi1 = eq.psi1();
    let care = solve_care_minimal(&sys.abar, &sys.bbar, &sys.qbar, Some(&psi1))?;
    let gain = sys.bbar.transpose() * &care.p;
    let atilde = &sys.abar - &sys.bbar * &gain;
    let psi1_hat = binormalize(left_null_vector(&atilde), &psi1)?;
    Ok(CentralizedDesign {
        system: sys.clone(),
        equilibrium: eq.clone(),
        care,
        gain,
        atilde,
        psi1,
        psi1_hat,
    })
}

/// Spectral evidence that the closed loop settles on the zero mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralCertificate {
    /// Eigenvalues with `|λ| ≤ ZERO_EIG_TOL·‖M‖`.
    pub zero_count: usize,
    /// Largest real part among the remaining eigenvalues.
    pub max_other_real_part: f64,
    pub p_kernel_norm: f64,
    pub passed: bool,
}

impl SpectralCertificate {
    /// Certificate for an arbitrary closed-loop matrix, Riccati solution and
    /// zero vector.
    pub fn evaluate(
        closed_loop: &DMatrix<f64>,
        p: &DMatrix<f64>,
        psi1: &DVector<f64>,
    ) -> Result<Self> {
        let threshold = ZERO_EIG_TOL * spectral_norm(closed_loop);
        let mut zero_count = 0;
        let mut max_other = f64::NEG_INFINITY;
        for lambda in eigenvalues(closed_loop)? {
            if float::sqrt(lambda.re * lambda.re + lambda.im * lambda.im) <= threshold {
                zero_count += 1;
            } else {
                max_other = max_other.max(lambda.re);
            }
        }
        let p_kernel_norm = (p * psi1).norm();
        let passed = zero_count == 1 && max_other < -HURWITZ_MARGIN && p_kernel_norm <= KERNEL_TOL;
        Ok(Self {
            zero_count,
            max_other_real_part: max_other,
            p_kernel_norm,
            passed,
        })
    }
}

pub fn certify_spectrum(d: &CentralizedDesign) -> Result<SpectralCertificate> {
    SpectralCertificate::evaluate(&d.atilde, d.p(), &d.psi1)
}

/// Membership in a pattern basin, with the signed distance to its edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinVerdict {
    pub member: bool,
    /// `|zero-mode weight| − threshold`.
    pub margin: f64,
    pub threshold: f64,
}

pub(crate) fn basin_verdict(
    weight: f64,
    d: &CentralizedDesign,
    spec: &PatternSpec,
) -> Result<BasinVerdict> {
    let n = d.system.n;
    if spec.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "sign vector has length {}, plant has {n} agents",
            spec.len()
        )));
    }
    let threshold = spec.p0() * float::sqrt(n as f64) / d.equilibrium.x_star.norm();
    let margin = weight.abs() - threshold;
    Ok(BasinVerdict {
        member: margin > 0.0,
        margin,
        threshold,
    })
}

/// Whether `x̄(0)` leads to a limit at least `p0·√n` away from the origin.
pub fn in_basin_u1(
    d: &CentralizedDesign,
    xbar0: &DVector<f64>,
    spec: &PatternSpec,
) -> Result<BasinVerdict> {
    basin_verdict(d.zero_mode_weight(xbar0)?, d, spec)
}

/// `(ψ̂₁ᵀx̄(0))·ψ₁`.
pub fn predict_limit(d: &CentralizedDesign, xbar0: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(&d.psi1 * d.zero_mode_weight(xbar0)?)
}
