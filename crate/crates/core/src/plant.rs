//! The controlled Laplacian plant `ẋ = (−L + aI)x + Bu`, its integrator
//! augmentation `u = z, ż = v`, the equilibrium condition, and the
//! controllability/observability checks the synthesis relies on.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graphs::Graph;
use crate::numerics::{controllable_pbh, observable_pbh};
use crate::patterns::PatternSpec;

/// Graph, self-feedback constant `a`, and the ordered leader list.
///
/// Leader order matters: it fixes the columns of `B`, the integrator
/// indices `z_j`, and the per-leader measurement blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    graph: Graph,
    a: f64,
    leaders: Vec<usize>,
}

impl PlantModel {
    /// `leaders` are 1-based vertex labels. An empty list is accepted so
    /// that the assumption report can say why nothing is controllable.
    pub fn new(graph: Graph, a: f64, leaders: &[usize]) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::NonFinite("self-feedback constant a".into()));
        }
        let n = graph.vertex_count();
        let mut seen = vec![false; n];
        let mut zero_based = Vec::with_capacity(leaders.len());
        for &l in leaders {
            if l == 0 || l > n {
                return Err(Error::InvalidArgument(format!(
                    "leader {l} outside 1..={n}"
                )));
            }
            if seen[l - 1] {
                return Err(Error::InvalidArgument(format!("leader {l} listed twice")));
            }
            seen[l - 1] = true;
            zero_based.push(l - 1);
        }
        Ok(Self {
            graph,
            a,
            leaders: zero_based,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn n(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn m(&self) -> usize {
        self.leaders.len()
    }

    /// 0-based leader vertices in leader order.
    pub fn leaders(&self) -> &[usize] {
        &self.leaders
    }

    /// 1-based leader vertices in leader order.
    pub fn leader_labels(&self) -> Vec<usize> {
        self.leaders.iter().map(|l| l + 1).collect()
    }

    /// 0-based follower vertices in increasing order.
    pub fn followers(&self) -> Vec<usize> {
        (0..self.n())
            .filter(|v| !self.leaders.contains(v))
            .collect()
    }

    /// `−L + aI`.
    pub fn system_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::identity(n, n) * self.a - self.graph.laplacian()
    }

    /// Selector `B = [e_{i₁}, …, e_{i_m}]`.
    pub fn input_matrix(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.n(), self.m());
        for (j, &i) in self.leaders.iter().enumerate() {
            b[(i, j)] = 1.0;
        }
        b
    }

    /// Subgraph induced by the leaders, relabelled in leader order.
    pub fn leader_subgraph(&self) -> Result<Graph> {
        self.graph.induced_subgraph(&self.leader_labels())
    }
}

/// `(Ā, B̄, Q̄)` of the integrator-augmented LQ problem, state `[x; z]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSystem {
    pub abar: DMatrix<f64>,
    pub bbar: DMatrix<f64>,
    pub qbar: DMatrix<f64>,
    pub n: usize,
    pub m: usize,
}

impl AugmentedSystem {
    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    /// `B̄_j`: the column of `B̄` that drives integrator `j` (0-based).
    pub fn bbar_column(&self, j: usize) -> DVector<f64> {
        self.bbar.column(j).into_owned()
    }
}

/// `Ā = [[−L + aI, B], [0, 0]]`, `B̄ = [0; I_m]`, `Q̄ = diag(Q, 0)`.
pub fn build_augmented(plant: &PlantModel, q: &DMatrix<f64>) -> Result<AugmentedSystem> {
    let (n, m) = (plant.n(), plant.m());
    if q.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "pattern matrix is {}×{}, plant has {n} agents",
            q.nrows(),
            q.ncols()
        )));
    }
    let dim = n + m;
    let mut abar = DMatrix::zeros(dim, dim);
    abar.view_mut((0, 0), (n, n))
        .copy_from(&plant.system_matrix());
    abar.view_mut((0, n), (n, m))
        .copy_from(&plant.input_matrix());
    let mut bbar = DMatrix::zeros(dim, m);
    bbar.view_mut((n, 0), (m, m)).fill_with_identity();
    let mut qbar = DMatrix::zeros(dim, dim);
    qbar.view_mut((0, 0), (n, n)).copy_from(q);
    Ok(AugmentedSystem {
        abar,
        bbar,
        qbar,
        n,
        m,
    })
}

/// Equilibrium `(x*, u*)` with `(−L + aI)x* + Bu* = 0` and `x* = α`.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub x_star: DVector<f64>,
    pub u_star: DVector<f64>,
}

impl Equilibrium {
    /// `ψ₁ = [x*; u*]`.
    pub fn psi1(&self) -> DVector<f64> {
        let n = self.x_star.len();
        let m = self.u_star.len();
        DVector::from_fn(n + m, |i, _| {
            if i < n {
                self.x_star[i]
            } else {
                self.u_star[i - n]
            }
        })
    }
}

/// A follower whose row of `(L − aI)α` is nonzero, so no leader input can
/// hold `α` at rest.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowerViolation {
    /// 1-based vertex label.
    pub vertex: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityOutcome {
    Feasible(Equilibrium),
    Infeasible(Vec<FollowerViolation>),
}

impl FeasibilityOutcome {
    pub fn equilibrium(&self) -> Option<&Equilibrium> {
        match self {
            FeasibilityOutcome::Feasible(eq) => Some(eq),
            FeasibilityOutcome::Infeasible(_) => None,
        }
    }
}

/// Checks whether `α` can be held at rest: `Bu* = (L − aI)α` is solvable
/// iff every follower row of `(L − aI)α` vanishes, and then
/// `u*_j = ((L − aI)α)_{i_j}`.
pub fn solve_equilibrium(plant: &PlantModel, spec: &PatternSpec) -> Result<FeasibilityOutcome> {
    let n = plant.n();
    if spec.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "sign vector has length {}, plant has {n} agents",
            spec.len()
        )));
    }
    let alpha = spec.alpha_vector();
    let required = -(plant.system_matrix() * &alpha);
    let tol = 1e-10 * (1.0 + alpha.norm());
    let violations: Vec<FollowerViolation> = plant
        .followers()
        .into_iter()
        .filter(|&i| required[i].abs() > tol)
        .map(|i| FollowerViolation {
            vertex: i + 1,
            residual: required[i],
        })
        .collect();
    if !violations.is_empty() {
        return Ok(FeasibilityOutcome::Infeasible(violations));
    }
    let u_star = DVector::from_iterator(plant.m(), plant.leaders().iter().map(|&i| required[i]));
    Ok(FeasibilityOutcome::Feasible(Equilibrium {
        x_star: alpha,
        u_star,
    }))
}

/// Pass/fail per standing assumption.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssumptionReport {
    /// The interaction graph is connected.
    pub graph_connected: bool,
    /// `(−L + aI, B)` is controllable.
    pub plant_controllable: bool,
    /// `(−L + aI, Q)` is observable.
    pub plant_observable: bool,
    /// `(Ā, B̄)` is controllable.
    pub augmented_controllable: bool,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.graph_connected
            && self.plant_controllable
            && self.plant_observable
            && self.augmented_controllable
    }
}

pub fn check_assumptions(plant: &PlantModel, q: &DMatrix<f64>) -> Result<AssumptionReport> {
    let sys = build_augmented(plant, q)?;
    let a = plant.system_matrix();
    Ok(AssumptionReport {
        graph_connected: plant.graph().is_connected(),
        plant_controllable: controllable_pbh(&a, &plant.input_matrix())?,
        plant_observable: observable_pbh(&a, q)?,
        augmented_controllable: controllable_pbh(&sys.abar, &sys.bbar)?,
    })
}
