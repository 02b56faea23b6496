//! Graph construction and Laplacian algebra.
//!
//! Graphs are undirected with strictly positive edge weights. A
//! [`WeightMatrix`] stores each unordered pair once, so symmetry holds by
//! construction and a zero weight is simply an absent entry.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("node {0} is isolated (zero degree)")]
    IsolatedNode(usize),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("neighbor count k={k} must satisfy 1 <= k < n={n}")]
    InvalidNeighborCount { k: usize, n: usize },
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("kernel width must be positive, got {0}")]
    InvalidKernelWidth(f64),
}

/// Gaussian kernel width for k-NN graph construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelWidth {
    Fixed(f64),
    /// Mean distance over all (node, selected neighbor) pairs.
    Auto,
}

/// Symmetric nonnegative edge weights over `n` nodes, no self-loops.
///
/// Entries are keyed by `(i, j)` with `i < j` and iterate in ascending pair
/// order, which keeps every downstream computation deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl WeightMatrix {
    pub fn new(n: usize) -> Self {
        Self { n, entries: BTreeMap::new() }
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut w = Self::new(n);
        for (i, j, weight) in edges {
            w.set(i, j, weight);
        }
        w
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.entries.len()
    }

    /// Sets the weight of the unordered pair `(i, j)`. Weights must be
    /// strictly positive; self-loops are rejected.
    pub fn set(&mut self, i: usize, j: usize, weight: f64) {
        assert!(i != j, "self-loop at node {i}");
        assert!(i < self.n && j < self.n, "node index out of range");
        assert!(weight > 0.0, "edge weight must be positive, got {weight}");
        self.entries.insert(Self::key(i, j), weight);
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        *self.entries.get(&Self::key(i, j)).unwrap_or(&0.0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.entries.contains_key(&Self::key(i, j))
    }

    /// Edges in ascending `(i, j)` order with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(i, j), &w)| (i, j, w))
    }

    /// Neighbor lists sorted by neighbor index.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (&(i, j), &w) in &self.entries {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        for list in &mut adj {
            list.sort_by_key(|&(j, _)| j);
        }
        adj
    }

    /// Node degrees `d_i = sum_j W_ij`, summed in ascending neighbor order.
    pub fn degree_vector(&self) -> DegreeVector {
        let adj = self.adjacency();
        let d = adj
            .iter()
            .map(|list| list.iter().map(|&(_, w)| w).sum())
            .collect();
        DegreeVector(d)
    }

    /// Removes every edge with weight strictly below `w_min`. Both
    /// orientations go together since the pair is stored once.
    pub fn pruned(&self, w_min: f64) -> WeightMatrix {
        assert!(w_min >= 0.0, "prune threshold must be nonnegative");
        let entries = self
            .entries
            .iter()
            .filter(|(_, &w)| w >= w_min)
            .map(|(&k, &w)| (k, w))
            .collect();
        WeightMatrix { n: self.n, entries }
    }

    /// Component label per node. The component containing the lowest-index
    /// node gets label 0, the next unseen lowest-index node label 1, etc.
    pub fn connected_components(&self) -> Vec<usize> {
        let adj = self.adjacency();
        let mut label = vec![usize::MAX; self.n];
        let mut next = 0;
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            label[start] = next;
            while let Some(i) = stack.pop() {
                for &(j, _) in &adj[i] {
                    if label[j] == usize::MAX {
                        label[j] = next;
                        stack.push(j);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (&(i, j), &w) in &self.entries {
            m[(i, j)] = w;
            m[(j, i)] = w;
        }
        m
    }

    fn key(i: usize, j: usize) -> (usize, usize) {
        if i < j {
            (i, j)
        } else {
            (j, i)
        }
    }
}

/// Node degrees of a [`WeightMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVector(Vec<f64>);

impl DegreeVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.0.is_empty() {
            0.0
        } else {
            self.0.iter().sum::<f64>() / self.0.len() as f64
        }
    }

    /// Index of the first isolated node, if any.
    pub fn first_isolated(&self) -> Option<usize> {
        self.0.iter().position(|&d| d == 0.0)
    }
}

/// Which Laplacian of the weight matrix was formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplacianKind {
    Unnormalized,
    Normalized,
}

/// Dense symmetric graph Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    matrix: DMatrix<f64>,
    kind: LaplacianKind,
}

impl LaplacianMatrix {
    /// `L = D - W`.
    pub fn unnormalized(w: &WeightMatrix) -> Self {
        let d = w.degree_vector();
        let mut m = -w.dense();
        for i in 0..w.n() {
            m[(i, i)] = d.get(i);
        }
        Self { matrix: m, kind: LaplacianKind::Unnormalized }
    }

    /// `L = D^{-1/2} (D - W) D^{-1/2}`. Every node must have positive degree.
    pub fn normalized(w: &WeightMatrix) -> Result<Self, GraphError> {
        let d = w.degree_vector();
        if let Some(i) = d.first_isolated() {
            return Err(GraphError::IsolatedNode(i));
        }
        let inv_sqrt: Vec<f64> = d.as_slice().iter().map(|&x| 1.0 / x.sqrt()).collect();
        let n = w.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        for (i, j, weight) in w.edges() {
            let v = -weight * inv_sqrt[i] * inv_sqrt[j];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        Ok(Self { matrix: m, kind: LaplacianKind::Normalized })
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn kind(&self) -> LaplacianKind {
        self.kind
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Quadratic form `f^T L f`, the rate of variation of the signal on the
    /// graph. For the unnormalized Laplacian this equals the edge sum
    /// `1/2 sum_ij W_ij (f_i - f_j)^2`.
    pub fn dirichlet_energy(&self, f: &DVector<f64>) -> Result<f64, GraphError> {
        if f.len() != self.n() {
            return Err(GraphError::DimensionMismatch { expected: self.n(), actual: f.len() });
        }
        Ok((f.transpose() * &self.matrix * f)[(0, 0)])
    }
}

/// Euclidean distance between two points of equal dimension.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// The `k` nearest neighbors of each point by Euclidean distance, ties broken
/// by lower index. Returns per-node selections sorted by (distance, index).
fn knn_selections(points: &[Vec<f64>], k: usize) -> Vec<Vec<(usize, f64)>> {
    let n = points.len();
    let mut selections = Vec::with_capacity(n);
    for i in 0..n {
        let mut cand: Vec<(usize, f64)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (j, euclidean(&points[i], &points[j])))
            .collect();
        cand.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        cand.truncate(k);
        selections.push(cand);
    }
    selections
}

/// Mean distance over all (node, selected neighbor) pairs of the k-NN
/// selection; this is the `Auto` kernel width. Falls back to 1.0 when every
/// selected pair coincides (the kernel then evaluates to 1 regardless).
pub fn knn_auto_sigma(points: &[Vec<f64>], k: usize) -> Result<f64, GraphError> {
    validate_knn_args(points, k)?;
    let selections = knn_selections(points, k);
    let total: f64 = selections.iter().flatten().map(|&(_, d)| d).sum();
    let count = (points.len() * k) as f64;
    let mean = total / count;
    Ok(if mean > 0.0 { mean } else { 1.0 })
}

fn validate_knn_args(points: &[Vec<f64>], k: usize) -> Result<(), GraphError> {
    let n = points.len();
    if n < 2 {
        return Err(GraphError::TooFewPoints(n));
    }
    if k == 0 || k >= n {
        return Err(GraphError::InvalidNeighborCount { k, n });
    }
    Ok(())
}

/// Builds a k-NN graph with Gaussian weights `exp(-||x_i - x_j||^2 / sigma^2)`.
///
/// Symmetrization is by union: the edge `(i, j)` exists when either endpoint
/// selects the other. Distance ties are broken by lower node index, and
/// coincident points get weight 1.
pub fn build_knn_graph(
    points: &[Vec<f64>],
    k: usize,
    sigma: KernelWidth,
) -> Result<WeightMatrix, GraphError> {
    validate_knn_args(points, k)?;
    let sigma = match sigma {
        KernelWidth::Fixed(s) if s > 0.0 => s,
        KernelWidth::Fixed(s) => return Err(GraphError::InvalidKernelWidth(s)),
        KernelWidth::Auto => knn_auto_sigma(points, k)?,
    };
    let selections = knn_selections(points, k);
    let mut w = WeightMatrix::new(points.len());
    for (i, neighbors) in selections.iter().enumerate() {
        for &(j, dist) in neighbors {
            if !w.has_edge(i, j) {
                w.set(i, j, (-dist * dist / (sigma * sigma)).exp());
            }
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knn_collinear_points() {
        let points = vec![vec![0.0], vec![1.0], vec![2.0]];
        let w = build_knn_graph(&points, 1, KernelWidth::Fixed(1.0)).unwrap();
        let e = (-1.0_f64).exp();
        assert_eq!(w.edge_count(), 2);
        assert!((w.weight(0, 1) - e).abs() < 1e-15);
        assert!((w.weight(1, 2) - e).abs() < 1e-15);
        assert_eq!(w.weight(0, 2), 0.0);
    }

    #[test]
    fn knn_identical_points() {
        let points = vec![vec![3.0, 4.0], vec![3.0, 4.0]];
        let w = build_knn_graph(&points, 1, KernelWidth::Fixed(1.0)).unwrap();
        assert_eq!(w.edge_count(), 1);
        assert_eq!(w.weight(0, 1), 1.0);
    }

    #[test]
    fn knn_rejects_bad_k() {
        let points = vec![vec![0.0], vec![1.0]];
        assert_eq!(
            build_knn_graph(&points, 2, KernelWidth::Auto).unwrap_err(),
            GraphError::InvalidNeighborCount { k: 2, n: 2 }
        );
    }

    #[test]
    fn degrees_two_node() {
        let w = WeightMatrix::from_edges(2, [(0, 1, 1.0)]);
        assert_eq!(w.degree_vector().as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn degrees_empty_graph() {
        let w = WeightMatrix::new(3);
        assert_eq!(w.degree_vector().as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn degrees_triangle() {
        let w = WeightMatrix::from_edges(3, [(0, 1, 0.5), (1, 2, 0.5), (0, 2, 1.0)]);
        assert_eq!(w.degree_vector().as_slice(), &[1.5, 1.0, 1.5]);
    }

    #[test]
    fn normalized_two_node() {
        let w = WeightMatrix::from_edges(2, [(0, 1, 1.0)]);
        let l = LaplacianMatrix::normalized(&w).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert!((l.as_matrix() - expected).abs().max() < 1e-15);
    }

    #[test]
    fn normalized_path_graph() {
        let w = WeightMatrix::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]);
        let l = LaplacianMatrix::normalized(&w).unwrap();
        let m = l.as_matrix();
        for i in 0..3 {
            assert!((m[(i, i)] - 1.0).abs() < 1e-15);
        }
        let off = -1.0 / 2.0_f64.sqrt();
        assert!((m[(0, 1)] - off).abs() < 1e-15);
        assert!((m[(1, 2)] - off).abs() < 1e-15);
        assert_eq!(m[(0, 2)], 0.0);
    }

    #[test]
    fn normalized_rejects_isolated() {
        let w = WeightMatrix::from_edges(3, [(0, 1, 1.0)]);
        assert_eq!(LaplacianMatrix::normalized(&w).unwrap_err(), GraphError::IsolatedNode(2));
    }

    #[test]
    fn dirichlet_constant_signal_is_zero() {
        let w = WeightMatrix::from_edges(3, [(0, 1, 1.0), (1, 2, 2.0)]);
        let l = LaplacianMatrix::unnormalized(&w);
        let f = DVector::from_element(3, 5.0);
        assert!(l.dirichlet_energy(&f).unwrap().abs() < 1e-12);
    }

    #[test]
    fn dirichlet_dimension_mismatch() {
        let w = WeightMatrix::from_edges(2, [(0, 1, 1.0)]);
        let l = LaplacianMatrix::unnormalized(&w);
        let f = DVector::from_element(3, 1.0);
        assert!(matches!(
            l.dirichlet_energy(&f),
            Err(GraphError::DimensionMismatch { expected: 2, actual: 3 })
        ));
    }

    #[test]
    fn prune_thresholds() {
        let w = WeightMatrix::from_edges(3, [(0, 1, 0.05), (1, 2, 0.3), (0, 2, 0.9)]);
        let p = w.pruned(0.1);
        assert_eq!(p.edge_count(), 2);
        assert_eq!(p.weight(0, 1), 0.0);
        assert_eq!(p.weight(1, 2), 0.3);

        assert_eq!(w.pruned(0.0), w);
        assert_eq!(w.pruned(1.0).edge_count(), 0);
    }

    #[test]
    fn components_path() {
        let w = WeightMatrix::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]);
        assert_eq!(w.connected_components(), vec![0, 0, 0]);
    }

    #[test]
    fn components_two_pairs() {
        let w = WeightMatrix::from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)]);
        assert_eq!(w.connected_components(), vec![0, 0, 1, 1]);
    }

    #[test]
    fn components_edgeless() {
        let w = WeightMatrix::new(3);
        assert_eq!(w.connected_components(), vec![0, 1, 2]);
    }
}
