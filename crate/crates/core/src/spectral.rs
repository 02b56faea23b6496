//! Graph Fourier bases: the smallest eigenpairs of a symmetric Laplacian,
//! plus the forward and inverse transforms they induce.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::graph::LaplacianMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("basis size r={r} out of range for n={n}")]
    BasisSizeOutOfRange { r: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

/// Width below which adjacent eigenvalues count as one cluster for the
/// deterministic ordering convention.
const CLUSTER_WIDTH: f64 = 1e-10;
/// Entries at or below this magnitude are ignored by the sign convention.
const SIGN_EPS: f64 = 1e-12;

/// The `r` smallest eigenpairs of a symmetric matrix, eigenvalues ascending,
/// eigenvectors column-orthonormal.
///
/// Two conventions make the basis a deterministic function of the input:
/// the first component of each eigenvector with magnitude above 1e-12 is
/// positive, and eigenvalues closer than 1e-10 are ordered by sign-fixed
/// lexicographic comparison of their eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SpectralBasis {
    /// Full decomposition of a symmetric matrix truncated to the `r`
    /// smallest pairs.
    pub fn compute(matrix: &DMatrix<f64>, r: usize) -> Result<Self, SpectralError> {
        let n = matrix.nrows();
        if r < 1 || r > n {
            return Err(SpectralError::BasisSizeOutOfRange { r, n });
        }
        let scale = matrix.abs().max().max(1.0);
        let asym = (matrix - matrix.transpose()).abs().max();
        if asym > 1e-12 * scale {
            return Err(SpectralError::NotSymmetric(asym));
        }

        let eig = SymmetricEigen::new(matrix.clone());
        let mut order: Vec<usize> = (0..n).collect();
        let mut vectors: Vec<DVector<f64>> =
            (0..n).map(|k| fix_sign(eig.eigenvectors.column(k).into_owned())).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

        // Reorder inside near-degenerate clusters so multiplicity cannot
        // make the truncation depend on solver internals.
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n
                && eig.eigenvalues[order[end]] - eig.eigenvalues[order[end - 1]] <= CLUSTER_WIDTH
            {
                end += 1;
            }
            if end - start > 1 {
                order[start..end].sort_by(|&a, &b| lex_cmp(&vectors[a], &vectors[b]));
            }
            start = end;
        }

        let eigenvalues: Vec<f64> = order[..r].iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut eigenvectors = DMatrix::zeros(n, r);
        for (col, &k) in order[..r].iter().enumerate() {
            eigenvectors.set_column(col, &std::mem::take(&mut vectors[k]));
        }
        Ok(Self { eigenvalues, eigenvectors })
    }

    /// The `r` smallest eigenpairs of a graph Laplacian.
    pub fn smallest_eigenpairs(lap: &LaplacianMatrix, r: usize) -> Result<Self, SpectralError> {
        Self::compute(lap.as_matrix(), r)
    }

    pub fn n(&self) -> usize {
        self.eigenvectors.nrows()
    }

    pub fn r(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Largest retained frequency, `lambda_R`.
    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// Column-orthonormal `n x r` eigenvector matrix.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Rows of the eigenvector matrix at the given node indices.
    pub fn rows_at(&self, indices: &[usize]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(indices.len(), self.r());
        for (row, &i) in indices.iter().enumerate() {
            m.set_row(row, &self.eigenvectors.row(i));
        }
        m
    }

    /// Forward transform: coefficients `alpha_k = u_k^T f`.
    pub fn gft(&self, f: &DVector<f64>) -> Result<DVector<f64>, SpectralError> {
        if f.len() != self.n() {
            return Err(SpectralError::DimensionMismatch { expected: self.n(), actual: f.len() });
        }
        Ok(self.eigenvectors.transpose() * f)
    }

    /// Inverse transform: `f = U alpha`. With `r < n` this is the
    /// band-limited reconstruction.
    pub fn igft(&self, alpha: &DVector<f64>) -> Result<DVector<f64>, SpectralError> {
        if alpha.len() != self.r() {
            return Err(SpectralError::DimensionMismatch {
                expected: self.r(),
                actual: alpha.len(),
            });
        }
        Ok(&self.eigenvectors * alpha)
    }

    /// Inverse transform applied column-wise to an `r x c` coefficient matrix.
    pub fn igft_matrix(&self, alpha: &DMatrix<f64>) -> Result<DMatrix<f64>, SpectralError> {
        if alpha.nrows() != self.r() {
            return Err(SpectralError::DimensionMismatch {
                expected: self.r(),
                actual: alpha.nrows(),
            });
        }
        Ok(&self.eigenvectors * alpha)
    }
}

fn fix_sign(mut v: DVector<f64>) -> DVector<f64> {
    if let Some(first) = v.iter().find(|x| x.abs() > SIGN_EPS) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
    v
}

fn lex_cmp(a: &DVector<f64>, b: &DVector<f64>) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.partial_cmp(y).unwrap() {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightMatrix;

    #[test]
    fn two_node_normalized_eigenpairs() {
        let w = WeightMatrix::from_edges(2, [(0, 1, 1.0)]);
        let lap = LaplacianMatrix::normalized(&w).unwrap();
        let basis = SpectralBasis::smallest_eigenpairs(&lap, 2).unwrap();
        assert!((basis.eigenvalues()[0] - 0.0).abs() < 1e-12);
        assert!((basis.eigenvalues()[1] - 2.0).abs() < 1e-12);
        let s = 1.0 / 2.0_f64.sqrt();
        let u = basis.eigenvectors();
        assert!((u[(0, 0)] - s).abs() < 1e-12 && (u[(1, 0)] - s).abs() < 1e-12);
        assert!((u[(0, 1)] - s).abs() < 1e-12 && (u[(1, 1)] + s).abs() < 1e-12);
    }

    #[test]
    fn connected_graph_null_space() {
        // For the normalized Laplacian of a connected graph the null space
        // is spanned by D^{1/2} 1.
        let w = WeightMatrix::from_edges(4, [(0, 1, 1.0), (1, 2, 0.5), (2, 3, 2.0), (0, 3, 1.0)]);
        let lap = LaplacianMatrix::normalized(&w).unwrap();
        let basis = SpectralBasis::smallest_eigenpairs(&lap, 1).unwrap();
        assert!(basis.eigenvalues()[0].abs() < 1e-10);
        let d = w.degree_vector();
        let mut expected = DVector::from_iterator(4, d.as_slice().iter().map(|&x| x.sqrt()));
        expected /= expected.norm();
        let got = basis.eigenvectors().column(0).into_owned();
        assert!((got - expected).abs().max() < 1e-8);
    }

    #[test]
    fn gft_of_basis_vector_is_unit() {
        let w = WeightMatrix::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]);
        let lap = LaplacianMatrix::normalized(&w).unwrap();
        let basis = SpectralBasis::smallest_eigenpairs(&lap, 3).unwrap();
        let u2 = basis.eigenvectors().column(1).into_owned();
        let alpha = basis.gft(&u2).unwrap();
        assert!(alpha[0].abs() < 1e-12);
        assert!((alpha[1] - 1.0).abs() < 1e-12);
        assert!(alpha[2].abs() < 1e-12);
    }

    #[test]
    fn gft_zero_signal() {
        let w = WeightMatrix::from_edges(2, [(0, 1, 1.0)]);
        let lap = LaplacianMatrix::normalized(&w).unwrap();
        let basis = SpectralBasis::smallest_eigenpairs(&lap, 2).unwrap();
        let alpha = basis.gft(&DVector::zeros(2)).unwrap();
        assert_eq!(alpha, DVector::zeros(2));
    }

    #[test]
    fn igft_unit_coefficient_gives_scaled_degrees() {
        let w = WeightMatrix::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]);
        let lap = LaplacianMatrix::normalized(&w).unwrap();
        let basis = SpectralBasis::smallest_eigenpairs(&lap, 2).unwrap();
        let mut alpha = DVector::zeros(2);
        alpha[0] = 1.0;
        let f = basis.igft(&alpha).unwrap();
        // Constant sign, proportional to D^{1/2} 1.
        assert!(f.iter().all(|&x| x > 0.0));
        let d = w.degree_vector();
        let ratio = f[0] / d.get(0).sqrt();
        for i in 0..3 {
            assert!((f[i] - ratio * d.get(i).sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn igft_zero_gives_zero() {
        let w = WeightMatrix::from_edges(2, [(0, 1, 1.0)]);
        let lap = LaplacianMatrix::normalized(&w).unwrap();
        let basis = SpectralBasis::smallest_eigenpairs(&lap, 2).unwrap();
        assert_eq!(basis.igft(&DVector::zeros(2)).unwrap(), DVector::zeros(2));
    }

    #[test]
    fn rejects_unsymmetric_input() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(SpectralBasis::compute(&m, 1), Err(SpectralError::NotSymmetric(_))));
    }

    #[test]
    fn rejects_bad_basis_size() {
        let m = DMatrix::identity(3, 3);
        assert!(SpectralBasis::compute(&m, 0).is_err());
        assert!(SpectralBasis::compute(&m, 4).is_err());
    }

    #[test]
    fn deterministic_under_multiplicity() {
        // Identity has a fully degenerate spectrum; the convention must still
        // produce a stable basis.
        let m = DMatrix::identity(5, 5);
        let a = SpectralBasis::compute(&m, 3).unwrap();
        let b = SpectralBasis::compute(&m, 3).unwrap();
        assert_eq!(a, b);
    }
}
