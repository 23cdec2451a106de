//! Distributed observers: each leader estimates the full augmented state
//! from its own two measurements and the estimates of its neighbours in
//! the leader graph, and applies its column of the centralized feedback to
//! that estimate.
//!
//! With `e_j` the estimation error of leader `j`, the errors obey
//! `ė = Ŵe` and the plant obeys `x̄' = Ãx̄ − K̂e`, so the joint system is
//! block upper-triangular and its limit is fixed by the zero mode of `Ã`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::centralized::{basin_verdict, check_len, BasinVerdict, CentralizedDesign};
use crate::error::{Error, Result};
use crate::graphs::Graph;
use crate::numerics::{
    block_diag, kron, max_real_part, max_symmetric_eigenvalue, min_symmetric_eigenvalue,
    solve_filter_are, solve_lyapunov, symmetrize,
};
use crate::patterns::PatternSpec;
use crate::plant::{AugmentedSystem, PlantModel};

/// Default multiplier applied to the coupling-gain lower bound.
pub const DEFAULT_SAFETY_FACTOR: f64 = 1.05;
/// `Ŵ` must have every eigenvalue real part below `−ERROR_HURWITZ_MARGIN`.
pub const ERROR_HURWITZ_MARGIN: f64 = 1e-9;

/// Local measurements: leader `j` sees its own state `x_{i_j}` and its
/// integrator `z_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMap {
    /// `C_j`, each 2×(n+m).
    pub blocks: Vec<DMatrix<f64>>,
    /// `C = [C₁; …; C_m]`.
    pub stacked: DMatrix<f64>,
}

pub fn build_measurements(plant: &PlantModel) -> MeasurementMap {
    let (n, m) = (plant.n(), plant.m());
    let blocks: Vec<DMatrix<f64>> = plant
        .leaders()
        .iter()
        .enumerate()
        .map(|(j, &i)| {
            let mut c = DMatrix::zeros(2, n + m);
            c[(0, i)] = 1.0;
            c[(1, n + j)] = 1.0;
            c
        })
        .collect();
    let mut stacked = DMatrix::zeros(2 * m, n + m);
    for (j, c) in blocks.iter().enumerate() {
        stacked.view_mut((2 * j, 0), (2, n + m)).copy_from(c);
    }
    MeasurementMap { blocks, stacked }
}

#[derive(Debug, Clone)]
pub struct ObserverOptions {
    /// `χ = safety_factor × bound`; must exceed 1.
    pub safety_factor: f64,
    /// Weight on the consensus component in the gain bound. Identity when
    /// `None`.
    pub weight: Option<DMatrix<f64>>,
}

impl Default for ObserverOptions {
    fn default() -> Self {
        Self {
            safety_factor: DEFAULT_SAFETY_FACTOR,
            weight: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ObserverDesign {
    pub m: usize,
    /// Filter Riccati solution `P̂`.
    pub p_hat: DMatrix<f64>,
    /// `F = P̂Cᵀ`, (n+m)×2m.
    pub f: DMatrix<f64>,
    /// `F_j`, columns `2j, 2j+1` of `F`.
    pub f_blocks: Vec<DMatrix<f64>>,
    pub c_blocks: Vec<DMatrix<f64>>,
    /// Observer state matrices `N_j = Ā − B̄B̄ᵀP − F_jC_j`.
    pub n_blocks: Vec<DMatrix<f64>>,
    /// Solution of `(mĀ − FC)ᵀT + T(mĀ − FC) = −I`.
    pub t: DMatrix<f64>,
    pub t_inv: DMatrix<f64>,
    /// `Λ_j = (Ā − F_jC_j)ᵀT + T(Ā − F_jC_j)`.
    pub lambdas: Vec<DMatrix<f64>>,
    /// Error coupling through the feedback, block `(j, k)` equal to
    /// `−δ_jk·B̄B̄ᵀP + B̄_kB̄_kᵀP`.
    pub k: DMatrix<f64>,
    pub weight: DMatrix<f64>,
    pub leader_graph: Graph,
    /// `λ₂` of the leader-graph Laplacian; `None` for a single leader.
    pub leader_connectivity: Option<f64>,
    /// Lower bound on `χ`; `None` for a single leader.
    pub chi_bound: Option<f64>,
    /// Consensus gain. Zero (and unused) for a single leader.
    pub chi: f64,
    pub warnings: Vec<String>,
}

impl ObserverDesign {
    /// `V = Σ_j e_jᵀTe_j`.
    pub fn lyapunov_value(&self, e: &DVector<f64>) -> f64 {
        let d = self.t.nrows();
        (0..self.m)
            .map(|j| {
                let ej = e.rows(j * d, d);
                (ej.transpose() * &self.t * ej)[(0, 0)]
            })
            .sum()
    }

    /// `2χλ₂I − Φ − GᵀW⁻¹G` with `Φ = T̄K + KᵀT̄ + Λ` and `G = Λ̃ + T̃K`.
    /// Positive definiteness makes `V` strictly decreasing.
    pub fn gain_condition_matrix(&self, chi: f64) -> Result<DMatrix<f64>> {
        let lambda2 = self.leader_connectivity.ok_or_else(|| {
            Error::InvalidArgument("gain condition needs at least two leaders".into())
        })?;
        let (phi, gram) = bound_terms(&self.lambdas, &self.t, &self.k, &self.weight)?;
        let dim = phi.nrows();
        Ok(DMatrix::identity(dim, dim) * (2.0 * chi * lambda2) - phi - gram)
    }
}

/// `(Φ, GᵀW⁻¹G)` of the gain bound.
fn bound_terms(
    lambdas: &[DMatrix<f64>],
    t: &DMatrix<f64>,
    k: &DMatrix<f64>,
    weight: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let m = lambdas.len();
    let d = t.nrows();
    let t_bar = kron(&DMatrix::identity(m, m), t);
    let t_tilde = kron(&DMatrix::from_element(1, m, 1.0), t);
    let mut lambda_tilde = DMatrix::zeros(d, m * d);
    for (j, l) in lambdas.iter().enumerate() {
        lambda_tilde.view_mut((0, j * d), (d, d)).copy_from(l);
    }
    let tk = &t_bar * k;
    let phi = symmetrize(&(&tk + tk.transpose() + block_diag(lambdas)));
    let g = lambda_tilde + t_tilde * k;
    let w_inv_g = weight
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("observer weight is not positive definite".into()))?
        .solve(&g);
    let gram = symmetrize(&(g.transpose() * w_inv_g));
    Ok((phi, gram))
}

/// Designs the observers from the filter Riccati equation, the Lyapunov
/// certificate `T`, and the coupling-gain lower bound.
///
/// A single leader has nobody to talk to: the consensus term vanishes,
/// `K = 0`, and the design reduces to an ordinary full-state observer.
pub fn design_observer(
    sys: &AugmentedSystem,
    cd: &CentralizedDesign,
    mm: &MeasurementMap,
    leader_graph: &Graph,
    options: &ObserverOptions,
) -> Result<ObserverDesign> {
    let (n, m) = (sys.n, sys.m);
    let d = n + m;
    if m == 0 {
        return Err(Error::InvalidArgument(
            "observer design needs at least one leader".into(),
        ));
    }
    if mm.blocks.len() != m || mm.stacked.shape() != (2 * m, d) {
        return Err(Error::DimensionMismatch(format!(
            "measurement map has {} blocks of width {}, expected {m} of width {d}",
            mm.blocks.len(),
            mm.stacked.ncols()
        )));
    }
    if leader_graph.vertex_count() != m {
        return Err(Error::DimensionMismatch(format!(
            "leader graph has {} vertices, there are {m} leaders",
            leader_graph.vertex_count()
        )));
    }
    if !leader_graph.is_connected() {
        return Err(Error::LeaderGraphDisconnected);
    }
    if !(options.safety_factor > 1.0 && options.safety_factor.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "safety factor must exceed 1, got {}",
            options.safety_factor
        )));
    }
    let weight = match &options.weight {
        Some(w) if w.shape() != (d, d) => {
            return Err(Error::DimensionMismatch(format!(
                "observer weight is {}×{}, expected {d}×{d}",
                w.nrows(),
                w.ncols()
            )))
        }
        Some(w) => w.clone(),
        None => DMatrix::identity(d, d),
    };

    let c = &mm.stacked;
    let p_hat = solve_filter_are(&sys.abar, c, m)?;
    let f = &p_hat * c.transpose();
    let f_blocks: Vec<DMatrix<f64>> = (0..m).map(|j| f.columns(2 * j, 2).into_owned()).collect();
    let filter = &sys.abar * m as f64 - &f * c;
    let t = symmetrize(&solve_lyapunov(&filter, &-DMatrix::identity(d, d))?);
    let t_inv = t
        .clone()
        .cholesky()
        .ok_or_else(|| {
            Error::NoConvergence("observer Lyapunov solution is not positive definite".into())
        })?
        .inverse();

    let local: Vec<DMatrix<f64>> = (0..m)
        .map(|j| &sys.abar - &f_blocks[j] * &mm.blocks[j])
        .collect();
    let lambdas: Vec<DMatrix<f64>> = local
        .iter()
        .map(|a| symmetrize(&(a.transpose() * &t + &t * a)))
        .collect();
    let n_blocks: Vec<DMatrix<f64>> = (0..m)
        .map(|j| &cd.atilde - &f_blocks[j] * &mm.blocks[j])
        .collect();
    let k = feedback_coupling(sys, cd.p());

    let mut warnings = Vec::new();
    let (leader_connectivity, chi_bound, chi) = if m == 1 {
        warnings.push(String::from(
            "single leader: consensus coupling is absent and the gain is unused",
        ));
        (None, None, 0.0)
    } else {
        let lambda2 = leader_graph.algebraic_connectivity()?;
        let (phi, gram) = bound_terms(&lambdas, &t, &k, &weight)?;
        let bound = max_symmetric_eigenvalue(&(phi + gram)) / (2.0 * lambda2);
        let chi = if bound > 0.0 {
            options.safety_factor * bound
        } else {
            warnings.push(format!(
                "gain bound {bound:e} is not positive; any positive gain works, using {}",
                options.safety_factor
            ));
            options.safety_factor
        };
        (Some(lambda2), Some(bound), chi)
    };

    Ok(ObserverDesign {
        m,
        p_hat,
        f,
        f_blocks,
        c_blocks: mm.blocks.clone(),
        n_blocks,
        t,
        t_inv,
        lambdas,
        k,
        weight,
        leader_graph: leader_graph.clone(),
        leader_connectivity,
        chi_bound,
        chi,
        warnings,
    })
}

/// `B̄_jB̄_jᵀP` for each leader.
fn leader_feedback_blocks(sys: &AugmentedSystem, p: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    (0..sys.m)
        .map(|j| {
            let b = sys.bbar_column(j);
            &b * (b.transpose() * p)
        })
        .collect()
}

fn feedback_coupling(sys: &AugmentedSystem, p: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, d) = (sys.m, sys.dim());
    let blocks = leader_feedback_blocks(sys, p);
    let full = &sys.bbar * (sys.bbar.transpose() * p);
    let mut k = DMatrix::zeros(m * d, m * d);
    for j in 0..m {
        for (c, block) in blocks.iter().enumerate() {
            let mut entry = block.clone();
            if c == j {
                entry -= &full;
            }
            k.view_mut((j * d, c * d), (d, d)).copy_from(&entry);
        }
    }
    k
}

/// Assembled error and joint dynamics.
#[derive(Debug, Clone)]
pub struct ErrorSystem {
    /// `Ŵ`, with `ė = Ŵe`.
    pub what: DMatrix<f64>,
    /// `K̂ = [B̄₁B̄₁ᵀP, …, B̄_mB̄_mᵀP]`.
    pub khat: DMatrix<f64>,
    /// `M̂ = [[Ã, −K̂], [0, Ŵ]]`.
    pub mhat: DMatrix<f64>,
    /// Orthogonal `V = U ⊗ I` with `U` an eigenbasis of the leader
    /// Laplacian. In these coordinates the stiff coupling term is block
    /// diagonal and vanishes on the consensus block.
    pub consensus_basis: DMatrix<f64>,
    /// `VᵀŴV`, assembled blockwise so the consensus block never carries
    /// rounding from the `χ`-sized entries.
    pub what_consensus: DMatrix<f64>,
    /// `Ŵ⁻ᵀK̂ᵀψ̂₁`, the error part of the joint left zero vector.
    pub error_weight: DVector<f64>,
    pub max_error_real_part: f64,
}

pub fn build_error_system(od: &ObserverDesign, cd: &CentralizedDesign) -> Result<ErrorSystem> {
    let sys = &cd.system;
    let (m, d) = (sys.m, sys.dim());
    if od.m != m || od.t.nrows() != d {
        return Err(Error::DimensionMismatch(
            "observer and centralized designs disagree on dimensions".into(),
        ));
    }
    let local: Vec<DMatrix<f64>> = (0..m)
        .map(|j| &sys.abar - &od.f_blocks[j] * &od.c_blocks[j])
        .collect();
    let coupled = block_diag(&local) + &od.k;
    let (consensus_basis, what_consensus) = consensus_form(od, &coupled);
    let mut what = coupled;
    if m > 1 {
        what -= kron(&od.leader_graph.laplacian(), &od.t_inv) * od.chi;
    }
    let max_error_real_part = max_real_part(&what)?;
    if !(max_error_real_part < -ERROR_HURWITZ_MARGIN) {
        return Err(Error::NotHurwitz {
            max_real_part: max_error_real_part,
        });
    }

    let blocks = leader_feedback_blocks(sys, cd.p());
    let mut khat = DMatrix::zeros(d, m * d);
    for (j, b) in blocks.iter().enumerate() {
        khat.view_mut((0, j * d), (d, d)).copy_from(b);
    }
    let mut mhat = DMatrix::zeros(d * (m + 1), d * (m + 1));
    mhat.view_mut((0, 0), (d, d)).copy_from(&cd.atilde);
    mhat.view_mut((0, d), (d, m * d)).copy_from(&-&khat);
    mhat.view_mut((d, d), (m * d, m * d)).copy_from(&what);

    // Solved in consensus coordinates: a normwise-stable solve on Ŵ itself
    // perturbs the slow modes by about ε‖Ŵ‖, which is large once χ is.
    let rhs = consensus_basis.transpose() * (khat.transpose() * &cd.psi1_hat);
    let wt = what_consensus.transpose();
    let lu = wt.clone().lu();
    let singular = || Error::NoConvergence("error system matrix is singular".into());
    let mut y = lu.solve(&rhs).ok_or_else(singular)?;
    let correction = lu.solve(&(&rhs - &wt * &y)).ok_or_else(singular)?;
    y += correction;
    let error_weight = &consensus_basis * y;
    Ok(ErrorSystem {
        what,
        khat,
        mhat,
        consensus_basis,
        what_consensus,
        error_weight,
        max_error_real_part,
    })
}

fn consensus_form(od: &ObserverDesign, coupled: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = od.t.nrows();
    if od.m == 1 {
        return (DMatrix::identity(d, d), coupled.clone());
    }
    let eig = SymmetricEigen::new(od.leader_graph.laplacian());
    let mut mu = eig.eigenvalues;
    // The leader graph is connected, so exactly one eigenvalue is zero.
    let zero = mu.iamin();
    mu[zero] = 0.0;
    let basis = kron(&eig.eigenvectors, &DMatrix::identity(d, d));
    let mut w = basis.transpose() * coupled * &basis;
    for (i, &mu_i) in mu.iter().enumerate() {
        let mut block = w.view_mut((i * d, i * d), (d, d));
        block -= &od.t_inv * (od.chi * mu_i);
    }
    (basis, w)
}

impl ErrorSystem {
    /// `ψ̂₁ᵀ(x̄(0) + K̂Ŵ⁻¹e(0))`.
    pub fn zero_mode_weight(
        &self,
        cd: &CentralizedDesign,
        xbar0: &DVector<f64>,
        e0: &DVector<f64>,
    ) -> Result<f64> {
        check_len(e0, self.what.nrows(), "initial estimation error")?;
        Ok(cd.zero_mode_weight(xbar0)? + self.error_weight.dot(e0))
    }
}

pub fn in_basin_u2(
    es: &ErrorSystem,
    cd: &CentralizedDesign,
    xbar0: &DVector<f64>,
    e0: &DVector<f64>,
    spec: &PatternSpec,
) -> Result<BasinVerdict> {
    basin_verdict(es.zero_mode_weight(cd, xbar0, e0)?, cd, spec)
}

/// `(ψ̂₁ᵀx̄(0) + ψ̂₁ᵀK̂Ŵ⁻¹e(0))·ψ₁`.
pub fn predict_limit_distributed(
    es: &ErrorSystem,
    cd: &CentralizedDesign,
    xbar0: &DVector<f64>,
    e0: &DVector<f64>,
) -> Result<DVector<f64>> {
    Ok(&cd.psi1 * es.zero_mode_weight(cd, xbar0, e0)?)
}

/// Smallest eigenvalue of the gain-condition matrix at the design gain.
pub fn gain_condition_margin(od: &ObserverDesign) -> Result<f64> {
    Ok(min_symmetric_eigenvalue(&od.gain_condition_matrix(od.chi)?))
}
