//! Two-level sign patterns, the induced edge partition, and the pattern
//! matrix `Q = D + A⁽¹⁾ − A⁽²⁾` whose kernel (on a connected graph) is
//! exactly the line through the sign vector.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::float;
use crate::graphs::Graph;

/// Default relative tolerance for [`is_in_pattern`].
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-6;

/// Sign vector `alpha` (entries ±1) and magnitude threshold `p0 > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternSpec {
    alpha: Vec<i8>,
    p0: f64,
}

impl PatternSpec {
    pub fn new(alpha: Vec<i8>, p0: f64) -> Result<Self> {
        check_signs(&alpha)?;
        if !(p0 > 0.0) || !p0.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "pattern threshold p0 must be positive, got {p0}"
            )));
        }
        Ok(Self { alpha, p0 })
    }

    pub fn alpha(&self) -> &[i8] {
        &self.alpha
    }

    pub fn alpha_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.alpha.len(), self.alpha.iter().map(|&s| f64::from(s)))
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    fn check_len(&self, g: &Graph) -> Result<()> {
        if self.alpha.len() != g.vertex_count() {
            return Err(Error::DimensionMismatch(format!(
                "sign vector has length {}, graph has {} vertices",
                self.alpha.len(),
                g.vertex_count()
            )));
        }
        Ok(())
    }
}

fn check_signs(signs: &[i8]) -> Result<()> {
    if let Some((k, &s)) = signs.iter().enumerate().find(|(_, &s)| s != 1 && s != -1) {
        return Err(Error::InvalidArgument(format!(
            "sign vector entry {} is {s}, expected +1 or -1",
            k + 1
        )));
    }
    Ok(())
}

/// Kronecker product of two sign vectors, `a ⊗ b`.
///
/// On a grid with column-major labels, `a` indexes columns and `b` rows:
/// `β₁ ⊗ 1` gives vertical stripes, `β₁ ⊗ β₁` a checkerboard.
pub fn pattern_from_kron(a: &[i8], b: &[i8]) -> Result<Vec<i8>> {
    check_signs(a)?;
    check_signs(b)?;
    Ok(a.iter()
        .flat_map(|&x| b.iter().map(move |&y| x * y))
        .collect())
}

/// Edges split by whether their endpoint signs differ (`e1`) or agree
/// (`e2`). Pairs are 0-based, `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgePartition {
    pub e1: Vec<(usize, usize)>,
    pub e2: Vec<(usize, usize)>,
}

pub fn partition_edges(g: &Graph, spec: &PatternSpec) -> Result<EdgePartition> {
    spec.check_len(g)?;
    let (e1, e2) = g
        .edges()
        .iter()
        .partition(|&&(i, j)| spec.alpha[i] == -spec.alpha[j]);
    Ok(EdgePartition { e1, e2 })
}

/// `Q = D + A⁽¹⁾(α) − A⁽²⁾(α)`.
pub fn build_pattern_matrix(g: &Graph, spec: &PatternSpec) -> Result<DMatrix<f64>> {
    let part = partition_edges(g, spec)?;
    let mut q = g.degree_matrix();
    for &(i, j) in &part.e1 {
        q[(i, j)] += 1.0;
        q[(j, i)] += 1.0;
    }
    for &(i, j) in &part.e2 {
        q[(i, j)] -= 1.0;
        q[(j, i)] -= 1.0;
    }
    Ok(q)
}

/// Membership in `S(α)`: `‖Qx‖ ≤ tol·‖x‖` and `‖x‖ ≥ p0·√n`.
///
/// On a connected graph this is the same set as `{pα : |p| ≥ p0}`; the
/// caller is responsible for having checked connectivity.
pub fn is_in_pattern(x: &DVector<f64>, g: &Graph, spec: &PatternSpec, tol: f64) -> Result<bool> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "membership tolerance must be positive, got {tol}"
        )));
    }
    if x.len() != g.vertex_count() {
        return Err(Error::DimensionMismatch(format!(
            "state has length {}, graph has {} vertices",
            x.len(),
            g.vertex_count()
        )));
    }
    let q = build_pattern_matrix(g, spec)?;
    let norm = x.norm();
    let threshold = spec.p0 * float::sqrt(g.vertex_count() as f64);
    Ok((&q * x).norm() <= tol * norm && norm >= threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    const BETA1: [i8; 7] = [1, -1, 1, -1, 1, -1, 1];
    const BETA2: [i8; 7] = [1; 7];

    fn stripe_3x3() -> PatternSpec {
        PatternSpec::new(vec![1, 1, 1, -1, -1, -1, 1, 1, 1], 1.0).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(PatternSpec::new(vec![1, 0, -1], 1.0).is_err());
        assert!(PatternSpec::new(vec![1, 2], 1.0).is_err());
        assert!(PatternSpec::new(vec![1, -1], 0.0).is_err());
        assert!(PatternSpec::new(vec![1, -1], f64::NAN).is_err());
    }

    #[test]
    fn kron_patterns() {
        let ones = pattern_from_kron(&BETA2, &BETA2).unwrap();
        assert_eq!(ones, vec![1; 49]);

        let stripes = pattern_from_kron(&BETA1, &BETA2).unwrap();
        for (k, &s) in stripes.iter().enumerate() {
            // column k / 7 carries sign β₁[col]
            assert_eq!(s, BETA1[k / 7]);
        }

        let checker = pattern_from_kron(&BETA1, &BETA1).unwrap();
        for (k, &s) in checker.iter().enumerate() {
            let (col, row) = (k / 7, k % 7);
            assert_eq!(s, if (col + row) % 2 == 0 { 1 } else { -1 });
        }

        assert!(pattern_from_kron(&[1, 3], &[1]).is_err());
    }

    #[test]
    fn partition_all_ones_is_trivial() {
        let g = Graph::grid(3, 4).unwrap();
        let spec = PatternSpec::new(vec![1; 12], 1.0).unwrap();
        let p = partition_edges(&g, &spec).unwrap();
        assert!(p.e1.is_empty());
        assert_eq!(p.e2, g.edges());
    }

    #[test]
    fn partition_stripe_3x3() {
        let g = Graph::grid(3, 3).unwrap();
        let p = partition_edges(&g, &stripe_3x3()).unwrap();
        assert_eq!(p.e1.len(), 6);
        assert_eq!(p.e2.len(), 6);
        // e1 crosses columns (labels differ by the row count), e2 stays within one
        assert!(p.e1.iter().all(|&(i, j)| j - i == 3));
        assert!(p.e2.iter().all(|&(i, j)| j - i == 1 && i / 3 == j / 3));
    }

    #[test]
    fn partition_single_edge_and_length_mismatch() {
        let g = Graph::path(2);
        let p = partition_edges(&g, &PatternSpec::new(vec![1, -1], 1.0).unwrap()).unwrap();
        assert_eq!(p.e1, vec![(0, 1)]);
        assert!(p.e2.is_empty());
        assert!(partition_edges(&g, &PatternSpec::new(vec![1], 1.0).unwrap()).is_err());
    }

    #[test]
    fn pattern_matrix_examples() {
        let g = Graph::grid(3, 3).unwrap();
        let spec = stripe_3x3();
        let q = build_pattern_matrix(&g, &spec).unwrap();
        assert!((&q * spec.alpha_vector()).norm() <= 1e-12);
        assert_eq!(q, q.transpose());

        let edge = Graph::path(2);
        let q = build_pattern_matrix(&edge, &PatternSpec::new(vec![1, -1], 1.0).unwrap()).unwrap();
        assert_eq!(q, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]));
        let q = build_pattern_matrix(&edge, &PatternSpec::new(vec![1, 1], 1.0).unwrap()).unwrap();
        assert_eq!(q, edge.laplacian());
    }

    #[test]
    fn membership_examples() {
        let g = Graph::grid(3, 3).unwrap();
        let spec = stripe_3x3();
        let alpha = spec.alpha_vector();
        assert!(is_in_pattern(&(&alpha * 2.0), &g, &spec, 1e-6).unwrap());
        assert!(!is_in_pattern(&(&alpha * 0.5), &g, &spec, 1e-6).unwrap());
        assert!(is_in_pattern(&(&alpha * -3.0), &g, &spec, 1e-6).unwrap());

        let loose = PatternSpec::new(spec.alpha().to_vec(), 0.1).unwrap();
        let mut x = alpha.clone();
        x[4] += 0.3;
        assert!(!is_in_pattern(&x, &g, &loose, 1e-6).unwrap());

        assert!(!is_in_pattern(&DVector::zeros(9), &g, &spec, 1e-6).unwrap());
        assert!(is_in_pattern(&alpha, &g, &spec, 0.0).is_err());
        assert!(is_in_pattern(&DVector::zeros(4), &g, &spec, 1e-6).is_err());
    }

    #[test]
    fn membership_threshold_is_at_p0_sqrt_n() {
        let g = Graph::path(4);
        let spec = PatternSpec::new(vec![1, -1, -1, 1], 2.0).unwrap();
        let alpha = spec.alpha_vector();
        // ‖pα‖ = |p|·√n, so the boundary sits at |p| = p0
        assert!(is_in_pattern(&(&alpha * 2.0), &g, &spec, 1e-9).unwrap());
        assert!(!is_in_pattern(&(&alpha * 1.999), &g, &spec, 1e-9).unwrap());
        assert_abs_diff_eq!((&alpha * 2.0).norm(), 2.0 * 2.0, epsilon = 1e-12);
    }
}
