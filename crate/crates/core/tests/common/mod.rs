//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{Complex, DMatrix, DVector};
use patternlq::numerics::eig_full;
use patternlq::patterns::build_pattern_matrix;
use patternlq::plant::{build_augmented, check_assumptions, solve_equilibrium};
use patternlq::{AugmentedSystem, Equilibrium, Graph, PatternSpec, PlantModel};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

pub const STRIPE: [i8; 9] = [1, 1, 1, -1, -1, -1, 1, 1, 1];
pub const LEADERS: [usize; 7] = [3, 2, 1, 4, 7, 8, 9];
pub const X0: [f64; 9] = [3.9, 2.0, 0.6, -3.2, -2.9, -4.2, 4.1, 2.1, 0.6];
pub const Z0: [f64; 7] = [-1.9, -3.3, 1.2, 4.9, -3.3, -2.4, -1.0];

pub struct Instance {
    pub plant: PlantModel,
    pub spec: PatternSpec,
    pub system: AugmentedSystem,
    pub equilibrium: Equilibrium,
}

/// The 3×3 stripe experiment with `a = 4`.
pub fn stripe_grid() -> Instance {
    let plant = PlantModel::new(Graph::grid(3, 3).unwrap(), 4.0, &LEADERS).unwrap();
    let spec = PatternSpec::new(STRIPE.to_vec(), 1.0).unwrap();
    instance(plant, spec).expect("stripe grid is feasible")
}

pub fn stripe_initial_state() -> DVector<f64> {
    DVector::from_iterator(16, X0.iter().chain(Z0.iter()).copied())
}

fn instance(plant: PlantModel, spec: PatternSpec) -> Option<Instance> {
    let q = build_pattern_matrix(plant.graph(), &spec).ok()?;
    let system = build_augmented(&plant, &q).ok()?;
    let equilibrium = solve_equilibrium(&plant, &spec).ok()?.equilibrium()?.clone();
    Some(Instance {
        plant,
        spec,
        system,
        equilibrium,
    })
}

/// 1-based edge list of a random connected graph: a random spanning tree
/// plus each remaining pair with probability `extra`.
pub fn random_connected_edges(rng: &mut StdRng, n: usize, extra: f64) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for k in 1..n {
        let parent = order[rng.gen_range(0..k)];
        edges.push((parent, order[k]));
    }
    for i in 1..=n {
        for j in i + 1..=n {
            if rng.gen_bool(extra) {
                edges.push((i, j));
            }
        }
    }
    edges
}

pub fn random_connected_graph(rng: &mut StdRng, n: usize) -> Graph {
    let extra = rng.gen_range(0.0..0.5);
    Graph::from_edges(n, &random_connected_edges(rng, n, extra)).unwrap()
}

/// Two connected pieces with no edge between them.
pub fn random_disconnected_graph(rng: &mut StdRng, n: usize) -> Graph {
    let split = rng.gen_range(1..n);
    let mut edges = random_connected_edges(rng, split, 0.3);
    let rest = random_connected_edges(rng, n - split, 0.3);
    edges.extend(rest.into_iter().map(|(i, j)| (i + split, j + split)));
    Graph::from_edges(n, &edges).unwrap()
}

pub fn random_signs(rng: &mut StdRng, n: usize) -> Vec<i8> {
    (0..n).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect()
}

/// A random instance that is feasible and passes every assumption.
///
/// `a` is set to `(Lα)_k/α_k` for a random vertex `k`; the vertices that
/// share that ratio may be followers and every other vertex leads.
pub fn random_feasible_instance(rng: &mut StdRng, max_n: usize) -> Instance {
    loop {
        let n = rng.gen_range(3..=max_n);
        let graph = random_connected_graph(rng, n);
        let alpha = random_signs(rng, n);
        let alpha_v = DVector::from_iterator(n, alpha.iter().map(|&s| f64::from(s)));
        let l_alpha = graph.laplacian() * &alpha_v;
        let ratio = |i: usize| l_alpha[i] / alpha_v[i];
        let a = ratio(rng.gen_range(0..n));
        let mut leaders: Vec<usize> = (0..n)
            .filter(|&i| (ratio(i) - a).abs() > 1e-12 || rng.gen_bool(0.4))
            .map(|i| i + 1)
            .collect();
        if leaders.len() < 2 {
            continue;
        }
        leaders.shuffle(rng);
        let Ok(plant) = PlantModel::new(graph, a, &leaders) else {
            continue;
        };
        let spec = PatternSpec::new(alpha, 1.0).unwrap();
        let Some(inst) = instance(plant, spec) else {
            continue;
        };
        let q = build_pattern_matrix(inst.plant.graph(), &inst.spec).unwrap();
        if matches!(check_assumptions(&inst.plant, &q), Ok(r) if r.all_pass()) {
            return inst;
        }
    }
}

/// Every real symmetric PSD solution of `AᵀP + PA − PBBᵀP + Q = 0` that
/// comes from an `n`-dimensional conjugation-closed invariant subspace of
/// the Hamiltonian `[[A, −BBᵀ], [−Q, −Aᵀ]]`.
///
/// Requires a diagonalizable Hamiltonian with distinct eigenvalues.
pub fn enumerate_psd_care_solutions(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
) -> Vec<DMatrix<f64>> {
    let n = a.nrows();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-(b * b.transpose())));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    let eig = eig_full(&h).expect("Hamiltonian eigendecomposition");
    let mut out = Vec::new();
    for mask in 0u32..(1 << (2 * n)) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let chosen: Vec<usize> = (0..2 * n).filter(|i| mask & (1 << i) != 0).collect();
        let closed = chosen.iter().all(|&i| {
            let conj = eig.values[i].conj();
            chosen
                .iter()
                .any(|&j| (eig.values[j] - conj).norm() <= 1e-9 * (1.0 + conj.norm()))
        });
        if !closed {
            continue;
        }
        let x = DMatrix::from_fn(2 * n, n, |r, c| eig.right[(r, chosen[c])]);
        let top = x.rows(0, n).into_owned();
        let bottom = x.rows(n, n).into_owned();
        let Some(top_inv) = top.try_inverse() else {
            continue;
        };
        let p: DMatrix<Complex<f64>> = bottom * top_inv;
        let scale = 1.0 + p.norm();
        if p.iter().any(|z| z.im.abs() > 1e-8 * scale) {
            continue;
        }
        let p = p.map(|z| z.re);
        if (&p - p.transpose()).norm() > 1e-8 * scale {
            continue;
        }
        let p = (&p + p.transpose()) * 0.5;
        let min_eig = p.clone().symmetric_eigen().eigenvalues.min();
        if min_eig >= -1e-9 * scale {
            out.push(p);
        }
    }
    out
}

/// A random `n`-state controllable single-input instance whose state
/// weight hides the real modes listed in `hidden` (as indices into a random
/// real spectrum), so `(A, Q)` is not detectable whenever a hidden mode is
/// unstable.
pub fn random_undetectable_care(
    rng: &mut StdRng,
    n: usize,
    hidden: &[usize],
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    loop {
        let mut spectrum: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        spectrum.sort_by(f64::total_cmp);
        let gaps_ok = spectrum.windows(2).all(|w| w[1] - w[0] > 0.2)
            && spectrum.iter().all(|l| l.abs() > 0.2);
        if !gaps_ok {
            continue;
        }
        let s = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let Some(s_inv) = s.clone().try_inverse() else {
            continue;
        };
        if s.norm() * s_inv.norm() > 50.0 {
            continue;
        }
        let a = &s * DMatrix::from_diagonal(&DVector::from_vec(spectrum)) * &s_inv;
        let b = DMatrix::from_fn(n, 1, |_, _| rng.gen_range(-1.0..1.0));
        // rows of S⁻¹ are left eigenvectors; Q built from the visible ones
        // annihilates the hidden right eigenvectors
        let mut q = DMatrix::zeros(n, n);
        for i in (0..n).filter(|i| !hidden.contains(i)) {
            let row = s_inv.row(i) * rng.gen_range(0.5..2.0);
            q += row.transpose() * row;
        }
        if matches!(patternlq::numerics::controllable_pbh(&a, &b), Ok(true)) {
            return (a, b, q);
        }
    }
}
