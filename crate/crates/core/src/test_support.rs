//! Shared fixtures for unit tests.

use alloc::vec;

use crate::graphs::Graph;
use crate::patterns::{build_pattern_matrix, PatternSpec};
use crate::plant::{build_augmented, solve_equilibrium, AugmentedSystem, Equilibrium, PlantModel};

/// 3×3 grid, stripe pattern, `a = 4`, leaders on the outer columns plus
/// the top-middle vertex, ordered so the leaders induce a path.
pub fn stripe_grid() -> (PlantModel, PatternSpec, AugmentedSystem, Equilibrium) {
    let g = Graph::grid(3, 3).unwrap();
    let plant = PlantModel::new(g, 4.0, &[3, 2, 1, 4, 7, 8, 9]).unwrap();
    let spec = PatternSpec::new(vec![1, 1, 1, -1, -1, -1, 1, 1, 1], 1.0).unwrap();
    let q = build_pattern_matrix(plant.graph(), &spec).unwrap();
    let sys = build_augmented(&plant, &q).unwrap();
    let eq = solve_equilibrium(&plant, &spec)
        .unwrap()
        .equilibrium()
        .unwrap()
        .clone();
    (plant, spec, sys, eq)
}
