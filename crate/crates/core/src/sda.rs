//! Closed-form solution of the fixed-graph spectral coefficient problem and
//! label prediction.
//!
//! For fixed Fourier bases the joint objective
//!
//! ```text
//! || S^s U^s a^s - y^s ||^2 + || S^t U^t a^t - y^t ||^2 + mu || a^s - a^t ||^2
//! ```
//!
//! is quadratic in the coefficient pair `(a^s, a^t)` and its minimizer is
//! obtained by a single linear solve. Multi-class problems use one-vs-rest
//! one-hot label columns sharing the same bases, so the solve is applied
//! column-wise with one factorization.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::spectral::SpectralBasis;

#[derive(Debug, Error, PartialEq)]
pub enum SdaError {
    #[error("coefficient system is numerically singular (condition estimate {0:.3e}); reduce the basis size or add labels")]
    SingularSystem(f64),
    #[error("coupling weight mu must be positive, got {0}")]
    InvalidCoupling(f64),
    #[error("bases have different sizes: source r={source}, target r={target}")]
    BasisSizeMismatch { source: usize, target: usize },
    #[error("label matrix has {rows} rows but {labeled} labeled indices")]
    LabelShapeMismatch { rows: usize, labeled: usize },
    #[error("labeled index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("labeled index list must be sorted, unique and nonempty")]
    BadIndexSet,
    #[error("label row {0} is not one-hot")]
    NotOneHot(usize),
    #[error("need at least 2 classes")]
    TooFewClasses,
}

const CONDITION_LIMIT: f64 = 1e12;

/// Source/target sample coordinates plus the known one-hot labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelProblem {
    source_points: Vec<Vec<f64>>,
    target_points: Vec<Vec<f64>>,
    n_classes: usize,
    labeled_source: Vec<usize>,
    labeled_target: Vec<usize>,
    source_labels: DMatrix<f64>,
    target_labels: DMatrix<f64>,
}

impl LabelProblem {
    /// Builds a problem from `(index, class)` label lists. Indices must be
    /// sorted, unique and in range; every class is in `0..n_classes`.
    pub fn new(
        source_points: Vec<Vec<f64>>,
        target_points: Vec<Vec<f64>>,
        n_classes: usize,
        source_labeled: &[(usize, usize)],
        target_labeled: &[(usize, usize)],
    ) -> Result<Self, SdaError> {
        if n_classes < 2 {
            return Err(SdaError::TooFewClasses);
        }
        let (labeled_source, source_labels) =
            one_hot(source_labeled, source_points.len(), n_classes)?;
        let (labeled_target, target_labels) =
            one_hot(target_labeled, target_points.len(), n_classes)?;
        Ok(Self {
            source_points,
            target_points,
            n_classes,
            labeled_source,
            labeled_target,
            source_labels,
            target_labels,
        })
    }

    pub fn n_source(&self) -> usize {
        self.source_points.len()
    }

    pub fn n_target(&self) -> usize {
        self.target_points.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn source_points(&self) -> &[Vec<f64>] {
        &self.source_points
    }

    pub fn target_points(&self) -> &[Vec<f64>] {
        &self.target_points
    }

    pub fn labeled_source(&self) -> &[usize] {
        &self.labeled_source
    }

    pub fn labeled_target(&self) -> &[usize] {
        &self.labeled_target
    }

    /// One-hot rows for the labeled source indices, in index order.
    pub fn source_labels(&self) -> &DMatrix<f64> {
        &self.source_labels
    }

    pub fn target_labels(&self) -> &DMatrix<f64> {
        &self.target_labels
    }

    /// Target node indices that carry no label, ascending.
    pub fn unlabeled_target(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n_target() - self.labeled_target.len());
        let mut labeled = self.labeled_target.iter().peekable();
        for i in 0..self.n_target() {
            if labeled.peek() == Some(&&i) {
                labeled.next();
            } else {
                out.push(i);
            }
        }
        out
    }
}

fn one_hot(
    labeled: &[(usize, usize)],
    n: usize,
    n_classes: usize,
) -> Result<(Vec<usize>, DMatrix<f64>), SdaError> {
    if labeled.is_empty() {
        return Err(SdaError::BadIndexSet);
    }
    let mut indices = Vec::with_capacity(labeled.len());
    let mut y = DMatrix::zeros(labeled.len(), n_classes);
    for (row, &(index, class)) in labeled.iter().enumerate() {
        if index >= n {
            return Err(SdaError::IndexOutOfRange { index, n });
        }
        if row > 0 && indices[row - 1] >= index {
            return Err(SdaError::BadIndexSet);
        }
        if class >= n_classes {
            return Err(SdaError::NotOneHot(row));
        }
        indices.push(index);
        y[(row, class)] = 1.0;
    }
    Ok((indices, y))
}

/// Reduced Fourier coefficients of the source and target estimates,
/// one column per class.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPair {
    pub source: DMatrix<f64>,
    pub target: DMatrix<f64>,
}

impl CoefficientPair {
    /// `max(||a^s||, ||a^t||)`, the coefficient norm bound C.
    pub fn norm_bound(&self) -> f64 {
        self.source.norm().max(self.target.norm())
    }

    /// `||a^s - a^t||`, the coefficient deviation.
    pub fn deviation(&self) -> f64 {
        (&self.source - &self.target).norm()
    }
}

struct NormalBlocks {
    a_s: DMatrix<f64>,
    a_t: DMatrix<f64>,
    bs_ys: DMatrix<f64>,
    bt_yt: DMatrix<f64>,
}

fn normal_blocks(
    basis_source: &SpectralBasis,
    basis_target: &SpectralBasis,
    labeled_source: &[usize],
    labeled_target: &[usize],
    y_source: &DMatrix<f64>,
    y_target: &DMatrix<f64>,
) -> Result<NormalBlocks, SdaError> {
    if basis_source.r() != basis_target.r() {
        return Err(SdaError::BasisSizeMismatch {
            source: basis_source.r(),
            target: basis_target.r(),
        });
    }
    if y_source.nrows() != labeled_source.len() {
        return Err(SdaError::LabelShapeMismatch {
            rows: y_source.nrows(),
            labeled: labeled_source.len(),
        });
    }
    if y_target.nrows() != labeled_target.len() {
        return Err(SdaError::LabelShapeMismatch {
            rows: y_target.nrows(),
            labeled: labeled_target.len(),
        });
    }
    // The selection matrices act by row restriction: S U = rows of U at the
    // labeled indices, so A = U^T S^T S U and B y = U^T S^T y.
    let u_s = basis_source.rows_at(labeled_source);
    let u_t = basis_target.rows_at(labeled_target);
    Ok(NormalBlocks {
        a_s: u_s.transpose() * &u_s,
        a_t: u_t.transpose() * &u_t,
        bs_ys: u_s.transpose() * y_source,
        bt_yt: u_t.transpose() * y_target,
    })
}

/// Solves the coefficient problem in closed form:
///
/// ```text
/// a^s = (mu^-1 A^t A^s + A^t + A^s)^-1 (mu^-1 A^t B^s y^s + B^s y^s + B^t y^t)
/// a^t = mu^-1 A^s a^s + a^s - mu^-1 B^s y^s
/// ```
///
/// with `A^x = (U^x)^T (S^x)^T S^x U^x` and `B^x = (U^x)^T (S^x)^T`. The inner
/// system goes through an LU solve guarded by an SVD condition estimate; a
/// condition number above 1e12 signals that the basis is too large for the
/// available labels.
pub fn solve_coefficients(
    basis_source: &SpectralBasis,
    basis_target: &SpectralBasis,
    labeled_source: &[usize],
    labeled_target: &[usize],
    y_source: &DMatrix<f64>,
    y_target: &DMatrix<f64>,
    mu: f64,
) -> Result<CoefficientPair, SdaError> {
    if !(mu > 0.0) {
        return Err(SdaError::InvalidCoupling(mu));
    }
    let blocks = normal_blocks(
        basis_source,
        basis_target,
        labeled_source,
        labeled_target,
        y_source,
        y_target,
    )?;
    let NormalBlocks { a_s, a_t, bs_ys, bt_yt } = blocks;

    let mu_inv = 1.0 / mu;
    let system = &a_t * &a_s * mu_inv + &a_t + &a_s;
    let rhs = &a_t * &bs_ys * mu_inv + &bs_ys + &bt_yt;

    let svd = system.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(SdaError::SingularSystem(condition));
    }

    let lu = system.lu();
    let source = lu.solve(&rhs).ok_or(SdaError::SingularSystem(condition))?;
    let target = &a_s * &source * mu_inv + &source - &bs_ys * mu_inv;
    Ok(CoefficientPair { source, target })
}

/// Value of the coefficient objective at the given pair, summed over class
/// columns.
pub fn objective(
    basis_source: &SpectralBasis,
    basis_target: &SpectralBasis,
    labeled_source: &[usize],
    labeled_target: &[usize],
    y_source: &DMatrix<f64>,
    y_target: &DMatrix<f64>,
    mu: f64,
    pair: &CoefficientPair,
) -> f64 {
    let fit_s = basis_source.rows_at(labeled_source) * &pair.source - y_source;
    let fit_t = basis_target.rows_at(labeled_target) * &pair.target - y_target;
    let gap = &pair.source - &pair.target;
    fit_s.norm_squared() + fit_t.norm_squared() + mu * gap.norm_squared()
}

/// Largest absolute entry of the objective gradient at the given pair; the
/// returned solution of [`solve_coefficients`] drives this to roundoff.
pub fn gradient_residual(
    basis_source: &SpectralBasis,
    basis_target: &SpectralBasis,
    labeled_source: &[usize],
    labeled_target: &[usize],
    y_source: &DMatrix<f64>,
    y_target: &DMatrix<f64>,
    mu: f64,
    pair: &CoefficientPair,
) -> f64 {
    let blocks = normal_blocks(
        basis_source,
        basis_target,
        labeled_source,
        labeled_target,
        y_source,
        y_target,
    )
    .expect("pair was produced for these inputs");
    let gap = &pair.source - &pair.target;
    let grad_s = (&blocks.a_s * &pair.source - &blocks.bs_ys + &gap * mu) * 2.0;
    let grad_t = (&blocks.a_t * &pair.target - &blocks.bt_yt - &gap * mu) * 2.0;
    grad_s.abs().max().max(grad_t.abs().max())
}

/// Band-limited estimate `f = U a`, one column per class.
pub fn estimate(basis: &SpectralBasis, alpha: &DMatrix<f64>) -> DMatrix<f64> {
    basis.igft_matrix(alpha).expect("coefficient rows match basis size")
}

/// Argmax class per node, ties broken by lower class index.
pub fn predict_labels(basis: &SpectralBasis, alpha: &DMatrix<f64>) -> Vec<usize> {
    let f = estimate(basis, alpha);
    argmax_rows(&f)
}

/// Row-wise argmax with ties to the lower index.
pub fn argmax_rows(scores: &DMatrix<f64>) -> Vec<usize> {
    (0..scores.nrows())
        .map(|i| {
            let mut best = 0;
            for c in 1..scores.ncols() {
                if scores[(i, c)] > scores[(i, best)] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// One-hot rows decoded back to class indices.
pub fn decode_one_hot(y: &DMatrix<f64>) -> Vec<usize> {
    argmax_rows(y)
}
