//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants of degree 7, 9 or 13 (Higham 2005 thresholds).
//!
//! The kernel works with the increment `X = e^M − I` throughout and squares
//! it as `2X + X²`. Squaring `I + X` directly would round away the small
//! increments of slow modes once per level, an error that doubles with
//! every squaring and ruins stiff matrices with slow modes.

use alloc::format;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::float;

const THETA: [(usize, f64); 2] = [
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152e0;

const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| float::abs(*x)).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^M` for a real square matrix.
pub fn expm(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut e = expm_minus_identity(m)?;
    for i in 0..e.nrows() {
        e[(i, i)] += 1.0;
    }
    Ok(e)
}

/// `e^M − I`, accurate to relative rounding even where `e^M` is close to `I`.
pub fn expm_minus_identity(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "matrix exponential of a {}×{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix exponential input".into()));
    }
    let n = m.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let norm = norm1(m);
    for &(degree, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match degree {
                7 => &B7,
                _ => &B9,
            };
            let (u, v) = pade_low(m, coeffs, &ident);
            return solve_pade(u, v);
        }
    }

    let s = if norm > THETA_13 {
        float::ceil(float::ln(norm / THETA_13) / core::f64::consts::LN_2) as i32
    } else {
        0
    };
    let scaled = m * float::powf(2.0, -f64::from(s));
    let (u, v) = pade13(&scaled, &ident);
    let mut x = solve_pade(u, v)?;
    for _ in 0..s {
        x = &x * &x + &x * 2.0;
    }
    Ok(x)
}

/// `r − I = (V − U)⁻¹ 2U` for the Padé approximant `r = (V − U)⁻¹(V + U)`.
fn solve_pade(u: DMatrix<f64>, v: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let lu = (&v - &u).lu();
    lu.solve(&(&u * 2.0))
        .ok_or_else(|| Error::NoConvergence("singular Padé denominator".into()))
}

fn pade_low(a: &DMatrix<f64>, b: &[f64], ident: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let a2 = a * a;
    let mut even = ident * b[0];
    let mut odd = ident * b[1];
    let mut power = ident.clone();
    let mut k = 2;
    while k < b.len() {
        power = &power * &a2;
        even += &power * b[k];
        if k + 1 < b.len() {
            odd += &power * b[k + 1];
        }
        k += 2;
    }
    (a * odd, even)
}

fn pade13(a: &DMatrix<f64>, ident: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let b = &B13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + ident * b[1];
    let u = a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + ident * b[0];
    (u, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_and_scalar() {
        assert_eq!(
            expm(&DMatrix::zeros(3, 3)).unwrap(),
            DMatrix::identity(3, 3)
        );
        let e = expm(&DMatrix::from_element(1, 1, -1.0)).unwrap();
        assert!((e[(0, 0)] - (-1.0f64).exp()).abs() < 1e-15);
        let big = expm(&DMatrix::from_element(1, 1, 10.0)).unwrap();
        assert!((big[(0, 0)] / 10.0f64.exp() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn rotation_generator_at_every_padé_degree() {
        for &t in &[1e-3, 0.1, 0.5, 1.5, 3.0, 40.0] {
            let m = DMatrix::from_row_slice(2, 2, &[0.0, t, -t, 0.0]);
            let e = expm(&m).unwrap();
            let expected = DMatrix::from_row_slice(2, 2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
            assert!((e - expected).norm() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn nilpotent_is_exact_polynomial() {
        let n = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 1.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0]);
        let expected = DMatrix::identity(3, 3) + &n + &n * &n * 0.5;
        assert!((expm(&n).unwrap() - expected).norm() < 1e-13);
    }

    #[test]
    fn increment_keeps_slow_modes_beside_stiff_ones() {
        // A slow mode coupled to a very fast one: squaring I + X would lose
        // about 2^s ulps of the slow increment.
        let m = DMatrix::from_row_slice(2, 2, &[-1e-4, 1e-2, 0.0, -2e6]);
        let x = expm_minus_identity(&m).unwrap();
        let slow = (-1e-4f64).exp_m1();
        assert!((x[(0, 0)] / slow - 1.0).abs() < 1e-13);
        let coupling = 1e-2 * ((-1e-4f64).exp() - (-2e6f64).exp()) / (2e6 - 1e-4);
        assert!((x[(0, 1)] / coupling - 1.0).abs() < 1e-10);
        assert!((x[(1, 1)] + 1.0).abs() < 1e-15);
        let tiny = expm_minus_identity(&DMatrix::from_element(1, 1, 1e-12)).unwrap();
        assert!((tiny[(0, 0)] / 1e-12f64.exp_m1() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(expm(&DMatrix::from_element(1, 1, f64::NAN)).is_err());
    }
}
