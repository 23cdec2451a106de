//! Trajectories of the closed loops.
//!
//! Every system simulated here is LTI, so the primary integrator
//! propagates exactly with `E = exp(M·dt)` computed once. This is immune to
//! the stiffness of the observer coupling. An adaptive Dormand–Prince
//! integrator is kept as an independent cross-check.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::centralized::{check_len, CentralizedDesign};
use crate::error::{Error, Result};
use crate::float;
use crate::numerics::expm_minus_identity;
use crate::observer::ErrorSystem;

/// States beyond this norm are reported as overflow.
pub const OVERFLOW_NORM: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Relative tolerance of the convergence detector.
    pub tol: f64,
    /// Keep every `downsample`-th step.
    pub downsample: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 20.0,
            tol: 1e-8,
            downsample: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    /// Final full-precision state.
    pub limit_estimate: DVector<f64>,
    /// The last two stored samples differ by at most `tol·(1 + ‖state‖)`.
    pub converged: bool,
    /// `‖e_j‖` per stored sample and leader; empty for centralized runs.
    pub error_norms: Vec<Vec<f64>>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn check_options(opts: &SimOptions) -> Result<()> {
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive, got {}",
            opts.dt
        )));
    }
    if !(opts.t_end >= opts.dt && opts.t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "horizon {} must be at least one step {}",
            opts.t_end, opts.dt
        )));
    }
    if !(opts.tol > 0.0) || opts.downsample == 0 {
        return Err(Error::InvalidArgument(
            "tolerance and downsampling must be positive".into(),
        ));
    }
    Ok(())
}

/// `w' = Mw` from `w0`, sampled on the `dt` grid (the final step is
/// shortened to land on `t_end`).
pub fn simulate_lti_with(
    m: &DMatrix<f64>,
    w0: &DVector<f64>,
    opts: &SimOptions,
) -> Result<TrajectoryRecord> {
    propagate(m, w0, opts)
}

/// Steps with the exact increment `w ← w + (e^{Mh} − I)w`, which keeps slow
/// modes accurate next to stiff ones.
fn propagate(m: &DMatrix<f64>, w0: &DVector<f64>, opts: &SimOptions) -> Result<TrajectoryRecord> {
    check_options(opts)?;
    if !m.is_square() || m.nrows() != w0.len() {
        return Err(Error::DimensionMismatch(format!(
            "system is {}×{}, initial state has length {}",
            m.nrows(),
            m.ncols(),
            w0.len()
        )));
    }
    if m.iter().chain(w0.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("simulation input".into()));
    }
    let full_steps = float::ceil(opts.t_end / opts.dt - 1e-9) as usize;
    let step = expm_minus_identity(&(m * opts.dt))?;
    let last_dt = opts.t_end - (full_steps - 1) as f64 * opts.dt;
    let last = if (last_dt - opts.dt).abs() <= 1e-12 * opts.dt {
        None
    } else {
        Some(expm_minus_identity(&(m * last_dt))?)
    };

    let mut times = Vec::with_capacity(full_steps / opts.downsample + 2);
    let mut states = Vec::with_capacity(full_steps / opts.downsample + 2);
    times.push(0.0);
    states.push(w0.clone());
    let mut w = w0.clone();
    let mut next = DVector::zeros(w.len());
    for k in 1..=full_steps {
        let e = match (&last, k == full_steps) {
            (Some(e), true) => e,
            _ => &step,
        };
        e.mul_to(&w, &mut next);
        w += &next;
        let t = if k == full_steps {
            opts.t_end
        } else {
            k as f64 * opts.dt
        };
        let norm = w.norm();
        if !norm.is_finite() {
            return Err(Error::NonFinite(format!("state at t = {t}")));
        }
        if norm > OVERFLOW_NORM {
            return Err(Error::Overflow { norm, time: t });
        }
        if k % opts.downsample == 0 || k == full_steps {
            times.push(t);
            states.push(w.clone());
        }
    }
    let converged = match states.len() {
        0 | 1 => false,
        len => (&states[len - 1] - &states[len - 2]).norm() <= opts.tol * (1.0 + w.norm()),
    };
    Ok(TrajectoryRecord {
        times,
        states,
        limit_estimate: w,
        converged,
        error_norms: Vec::new(),
    })
}

/// [`simulate_lti_with`] with default tolerance and downsampling.
pub fn simulate_lti(
    m: &DMatrix<f64>,
    w0: &DVector<f64>,
    t_end: f64,
    dt: f64,
) -> Result<TrajectoryRecord> {
    simulate_lti_with(
        m,
        w0,
        &SimOptions {
            dt,
            t_end,
            ..SimOptions::default()
        },
    )
}

/// Closed loop `x̄' = Ãx̄`.
pub fn simulate_centralized(
    cd: &CentralizedDesign,
    xbar0: &DVector<f64>,
    opts: &SimOptions,
) -> Result<TrajectoryRecord> {
    check_len(xbar0, cd.psi1.len(), "initial augmented state")?;
    simulate_lti_with(&cd.atilde, xbar0, opts)
}

/// Joint plant and observers, state `[x̄; e₁; …; e_m]`.
pub fn simulate_distributed(
    es: &ErrorSystem,
    cd: &CentralizedDesign,
    xbar0: &DVector<f64>,
    e0: &DVector<f64>,
    opts: &SimOptions,
) -> Result<TrajectoryRecord> {
    let d = cd.psi1.len();
    check_len(xbar0, d, "initial augmented state")?;
    check_len(e0, es.what.nrows(), "initial estimation error")?;
    // Integrate in consensus coordinates `[x̄; Vᵀe]`, where the stiff
    // coupling is block diagonal and stays out of the slow consensus block.
    let basis = &es.consensus_basis;
    let me = e0.len();
    let mut joint = DMatrix::zeros(d + me, d + me);
    joint.view_mut((0, 0), (d, d)).copy_from(&cd.atilde);
    joint
        .view_mut((0, d), (d, me))
        .copy_from(&(-(&es.khat * basis)));
    joint.view_mut((d, d), (me, me)).copy_from(&es.what_consensus);
    let mut w0 = DVector::zeros(d + me);
    w0.rows_mut(0, d).copy_from(xbar0);
    w0.rows_mut(d, me).copy_from(&(basis.transpose() * e0));
    let mut rec = propagate(&joint, &w0, opts)?;
    let to_original = |w: &mut DVector<f64>| {
        let e = basis * w.rows(d, me);
        w.rows_mut(d, me).copy_from(&e);
    };
    rec.states.iter_mut().for_each(to_original);
    to_original(&mut rec.limit_estimate);
    let m = e0.len() / d;
    rec.error_norms = rec
        .states
        .iter()
        .map(|w| (0..m).map(|j| w.rows(d * (j + 1), d).norm()).collect())
        .collect();
    Ok(rec)
}

/// Horizon after which the slowest stable mode has decayed past the
/// convergence detector's reach.
pub fn recommended_horizon(max_other_real_part: f64) -> f64 {
    3.0 / max_other_real_part.abs()
}

/// Dormand–Prince 5(4) tableau. The system is autonomous, so the nodes
/// are not needed.
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const RK_MAX_STEPS: usize = 10_000_000;

/// Adaptive Dormand–Prince integration of `w' = Mw`, returning the state at
/// each requested time (non-decreasing, starting at or after 0).
pub fn rk45_lti(
    m: &DMatrix<f64>,
    w0: &DVector<f64>,
    sample_times: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<Vec<DVector<f64>>> {
    if m.nrows() != w0.len() || !m.is_square() {
        return Err(Error::DimensionMismatch(
            "RK system and state disagree".into(),
        ));
    }
    if !(rtol > 0.0 && atol > 0.0) {
        return Err(Error::InvalidArgument(
            "RK tolerances must be positive".into(),
        ));
    }
    if sample_times.windows(2).any(|w| w[1] < w[0])
        || sample_times.first().is_some_and(|&t| t < 0.0)
    {
        return Err(Error::InvalidArgument(
            "sample times must be non-decreasing from 0".into(),
        ));
    }
    let n = w0.len();
    let mut t = 0.0;
    let mut w = w0.clone();
    let mut h = 1e-3 / (1.0 + m.norm());
    let mut out = Vec::with_capacity(sample_times.len());
    let mut k: Vec<DVector<f64>> = (0..7).map(|_| DVector::zeros(n)).collect();
    let mut steps = 0;
    for &target in sample_times {
        while t < target {
            steps += 1;
            if steps > RK_MAX_STEPS {
                return Err(Error::NoConvergence("RK step budget exhausted".into()));
            }
            let h_try = h.min(target - t);
            let last_stage = h_try == target - t;
            k[0] = m * &w;
            for s in 1..7 {
                let mut y = w.clone();
                for (j, &a) in DP_A[s].iter().enumerate().take(s) {
                    if a != 0.0 {
                        y.axpy(h_try * a, &k[j], 1.0);
                    }
                }
                k[s] = m * y;
            }
            let mut y5 = w.clone();
            let mut err = DVector::zeros(n);
            for s in 0..7 {
                y5.axpy(h_try * DP_B5[s], &k[s], 1.0);
                err.axpy(h_try * (DP_B5[s] - DP_B4[s]), &k[s], 1.0);
            }
            let mut ratio: f64 = 0.0;
            for i in 0..n {
                let scale = atol + rtol * w[i].abs().max(y5[i].abs());
                ratio = ratio.max((err[i] / scale).abs());
            }
            if !ratio.is_finite() {
                return Err(Error::NonFinite("RK state".into()));
            }
            if ratio <= 1.0 {
                t = if last_stage { target } else { t + h_try };
                w = y5;
            }
            let factor = if ratio == 0.0 {
                5.0
            } else {
                (0.9 * float::powf(ratio, -0.2)).clamp(0.2, 5.0)
            };
            h = h_try * factor;
        }
        out.push(w.clone());
    }
    Ok(out)
}
