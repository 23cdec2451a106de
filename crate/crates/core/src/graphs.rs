//! Undirected, unweighted interaction graphs and their Laplacian algebra.
//!
//! Grid graphs use **column-major** vertex labels: vertices are numbered
//! top to bottom within a column, then columns left to right. On a 3×3
//! grid this makes 1, 2, 3 the left column and 5 the centre, so the leader
//! list `3, 2, 1, 4, 7, 8, 9` walks the boundary as a path.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// An undirected simple graph on `n` vertices.
///
/// Edges are stored 0-based as `(i, j)` with `i < j`, sorted and
/// deduplicated, so two graphs with the same edge set compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from 1-based edge pairs. Duplicate pairs (in either
    /// orientation) collapse to one edge; self-loops are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut zero_based = Vec::with_capacity(edges.len());
        for &(i, j) in edges {
            if i == 0 || j == 0 || i > n || j > n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({i}, {j}) references a vertex outside 1..={n}"
                )));
            }
            zero_based.push((i - 1, j - 1));
        }
        Self::from_zero_based(n, zero_based)
    }

    pub(crate) fn from_zero_based(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::InvalidArgument(format!(
                    "self-loop at vertex {}",
                    i + 1
                )));
            }
            if i >= n || j >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({}, {}) references a vertex outside 1..={n}",
                    i + 1,
                    j + 1
                )));
            }
            set.insert((i.min(j), i.max(j)));
        }
        Ok(Self {
            n,
            edges: set.into_iter().collect(),
        })
    }

    /// The `rows × cols` grid with column-major labels (see module docs).
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "grid dimensions must be positive, got {rows}×{cols}"
            )));
        }
        let id = |r: usize, c: usize| c * rows + r;
        let mut edges = Vec::with_capacity(rows * (cols - 1) + cols * (rows - 1));
        for c in 0..cols {
            for r in 0..rows {
                if r + 1 < rows {
                    edges.push((id(r, c), id(r + 1, c)));
                }
                if c + 1 < cols {
                    edges.push((id(r, c), id(r, c + 1)));
                }
            }
        }
        Self::from_zero_based(rows * cols, edges)
    }

    /// Path `1 – 2 – … – n`.
    pub fn path(n: usize) -> Self {
        Self {
            n,
            edges: (1..n).map(|i| (i - 1, i)).collect(),
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Self { n, edges }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// 0-based edge list, each pair ordered `i < j`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&(i.min(j), i.max(j))).is_ok()
    }

    /// 0-based neighbours of 0-based vertex `v`.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter_map(move |&(i, j)| {
            if i == v {
                Some(j)
            } else if j == v {
                Some(i)
            } else {
                None
            }
        })
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        a
    }

    pub fn degree_matrix(&self) -> DMatrix<f64> {
        let deg = self.degrees();
        DMatrix::from_fn(
            self.n,
            self.n,
            |i, j| if i == j { deg[i] as f64 } else { 0.0 },
        )
    }

    /// `L = D − A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        self.degree_matrix() - self.adjacency()
    }

    /// Subgraph induced by the 1-based `vertices`, relabelled `1..=k` in
    /// list order.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Result<Self> {
        let mut position = vec![None; self.n];
        for (k, &v) in vertices.iter().enumerate() {
            if v == 0 || v > self.n {
                return Err(Error::InvalidArgument(format!(
                    "vertex {v} outside 1..={}",
                    self.n
                )));
            }
            if position[v - 1].is_some() {
                return Err(Error::InvalidArgument(format!("vertex {v} listed twice")));
            }
            position[v - 1] = Some(k);
        }
        let edges = self
            .edges
            .iter()
            .filter_map(|&(i, j)| Some((position[i]?, position[j]?)));
        Self::from_zero_based(vertices.len(), edges)
    }

    /// Connected components as a 0-based label per vertex, plus the count.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut label = vec![usize::MAX; self.n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if label[w] == usize::MAX {
                        label[w] = count;
                        stack.push(w);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    /// A single vertex counts as connected; the empty graph does not.
    pub fn is_connected(&self) -> bool {
        self.n > 0 && self.components().1 == 1
    }

    /// Second-smallest Laplacian eigenvalue (Fiedler value).
    pub fn algebraic_connectivity(&self) -> Result<f64> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!(
                "algebraic connectivity needs at least 2 vertices, got {}",
                self.n
            )));
        }
        let mut eig: Vec<f64> = SymmetricEigen::new(self.laplacian())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eig.sort_by(|a, b| a.total_cmp(b));
        Ok(eig[1])
    }
}
