mod common;

use common::{enumerate_psd_care_solutions, random_undetectable_care};
use nalgebra::{DMatrix, DVector};
use patternlq::numerics::{
    care_residual, controllable_kalman, controllable_pbh, expm, max_real_part, observable_kalman,
    observable_pbh, solve_care_minimal, solve_care_stabilizing, solve_lyapunov,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn min_eig(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

#[test]
fn minimal_solution_lies_below_every_psd_solution() {
    let mut rng = StdRng::seed_from_u64(11);
    let mut probes = 0;
    for n in [2usize, 3] {
        for trial in 0..15 {
            let hidden: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            let (a, b, q) = random_undetectable_care(&mut rng, n, &hidden);
            let minimal = solve_care_minimal(&a, &b, &q, None).unwrap().p;
            let all = enumerate_psd_care_solutions(&a, &b, &q);
            assert!(
                all.iter().any(|p| (p - &minimal).norm() < 1e-6 * (1.0 + p.norm())),
                "n = {n}, trial {trial}: solver result is not a Hamiltonian solution"
            );
            for p in &all {
                assert!(min_eig(&(p - &minimal)) >= -1e-8, "n = {n}, trial {trial}");
            }
            probes += all.len();
        }
    }
    // hidden unstable modes must have produced genuine alternatives
    assert!(probes > 30, "only {probes} PSD solutions enumerated");
}

#[test]
fn stabilizing_solution_is_the_unique_psd_solution_when_observable() {
    let mut rng = StdRng::seed_from_u64(5);
    for n in [2usize, 3] {
        for _ in 0..10 {
            let (a, b, q) = random_undetectable_care(&mut rng, n, &[]);
            let p = solve_care_stabilizing(&a, &b, &q).unwrap();
            let all = enumerate_psd_care_solutions(&a, &b, &q);
            assert_eq!(all.len(), 1);
            assert!((&all[0] - &p).norm() < 1e-7 * (1.0 + p.norm()));
            assert!(care_residual(&a, &b, &q, &p).norm() < 1e-9 * (1.0 + p.norm()));
            assert!(max_real_part(&(&a - &b * b.transpose() * &p)).unwrap() < 0.0);
            // minimal and stabilizing agree when nothing is hidden
            let minimal = solve_care_minimal(&a, &b, &q, None).unwrap();
            assert_eq!(minimal.deflated_dim, 0);
            assert!((&minimal.p - &p).norm() < 1e-8 * (1.0 + p.norm()));
        }
    }
}

/// `∫₀^∞ e^{Mᵀt} Q e^{Mt} dt` by composite Simpson on exact exponentials.
fn gramian_by_quadrature(m: &DMatrix<f64>, q: &DMatrix<f64>, horizon: f64, steps: usize) -> DMatrix<f64> {
    let h = horizon / steps as f64;
    let step = expm(&(m * h)).unwrap();
    let mut e = DMatrix::identity(m.nrows(), m.nrows());
    let mut sum = DMatrix::zeros(m.nrows(), m.nrows());
    for k in 0..=steps {
        let w = if k == 0 || k == steps {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += e.transpose() * q * &e * w;
        e = &e * &step;
    }
    sum * (h / 3.0)
}

#[test]
fn lyapunov_solution_matches_gramian_quadrature() {
    let mut rng = StdRng::seed_from_u64(3);
    for n in 1..=5 {
        let raw = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let shift = max_real_part(&raw).unwrap() + 0.5;
        let m = raw - DMatrix::identity(n, n) * shift;
        let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let q = &g * g.transpose() + DMatrix::identity(n, n);
        let t = solve_lyapunov(&m, &(-&q)).unwrap();
        let oracle = gramian_by_quadrature(&m, &q, 80.0, 8000);
        assert!((&t - &oracle).norm() < 1e-7 * oracle.norm(), "n = {n}");
        assert!(min_eig(&t) > 0.0);
    }
}

#[test]
fn pbh_and_kalman_tests_agree() {
    let mut rng = StdRng::seed_from_u64(8);
    let mut seen = [0usize; 2];
    for trial in 0..200 {
        let n = rng.gen_range(1..=5);
        let k = rng.gen_range(1..=2);
        // sparse integer data hits uncontrollable cases often
        let a = DMatrix::from_fn(n, n, |_, _| f64::from(rng.gen_range(-1..=1) * rng.gen_range(0..=1)));
        let b = DMatrix::from_fn(n, k, |_, _| f64::from(rng.gen_range(0..=1) * rng.gen_range(0..=1)));
        let pbh = controllable_pbh(&a, &b).unwrap();
        assert_eq!(pbh, controllable_kalman(&a, &b).unwrap(), "trial {trial}: {a} {b}");
        let c = b.transpose();
        assert_eq!(observable_pbh(&a, &c).unwrap(), observable_kalman(&a, &c).unwrap());
        seen[usize::from(pbh)] += 1;
    }
    assert!(seen[0] > 10 && seen[1] > 10, "{seen:?}");
}

#[test]
fn exponential_of_symmetric_matches_spectral_formula() {
    let mut rng = StdRng::seed_from_u64(2);
    for &scale in &[1e-3, 0.3, 2.0, 30.0] {
        let g = DMatrix::from_fn(6, 6, |_, _| rng.gen_range(-1.0..1.0));
        let s = (&g + g.transpose()) * scale;
        let eig = s.clone().symmetric_eigen();
        let expected = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::exp))
            * eig.eigenvectors.transpose();
        let got = expm(&s).unwrap();
        assert!((&got - &expected).norm() < 1e-11 * expected.norm(), "scale {scale}");
    }
    let x = DVector::from_vec(vec![1.0, -2.0]);
    let nilpotent = &x * DVector::from_vec(vec![2.0, 1.0]).transpose();
    // x·yᵀ with yᵀx = 0 squares to zero
    let expected = DMatrix::identity(2, 2) + &nilpotent;
    assert!((expm(&nilpotent).unwrap() - expected).norm() < 1e-14);
}
