//! Dense numerical kernels shared by every solver: symmetric
//! eigendecomposition with a deterministic sign convention, SVD-based
//! orthogonal rounding, Kabsch alignment, and numerical rank.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::RigidTransform;

/// Default relative tolerance for [`numeric_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Full spectrum of a symmetric matrix, eigenvalues ascending, eigenvectors
/// as orthonormal columns aligned with the eigenvalues. Each eigenvector is
/// signed so its largest-magnitude entry is positive.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    /// Spectral norm of the decomposed matrix: the largest `|eigenvalue|`.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(0.0, |acc, &l| acc.max(l.abs()))
    }
}

fn fix_column_sign(m: &mut DMatrix<f64>, col: usize) {
    let column = m.column(col);
    let mut best = 0usize;
    let mut best_abs = -1.0;
    for (idx, &v) in column.iter().enumerate() {
        if v.abs() > best_abs {
            best_abs = v.abs();
            best = idx;
        }
    }
    if column[best] < 0.0 {
        m.column_mut(col).neg_mut();
    }
}

/// Dense symmetric eigendecomposition. The input is symmetrized as
/// `(S + S^T)/2` before decomposition; eigenvalues come back ascending and
/// eigenvector signs follow the largest-entry-positive convention, so the
/// output is deterministic for identical inputs.
pub fn symmetric_eig(s: &DMatrix<f64>) -> Result<Spectrum> {
    if s.nrows() != s.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    if !s.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let sym = (s + s.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, 0).ok_or(Error::EigenFailure)?;

    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues = DVector::from_fn(n, |j, _| eig.eigenvalues[order[j]]);
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (j, &src) in order.iter().enumerate() {
        eigenvectors.set_column(j, &eig.eigenvectors.column(src));
        fix_column_sign(&mut eigenvectors, j);
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// SVD with singular values descending and the left singular vectors signed
/// largest-entry-positive (right vectors adjusted to match), so repeated
/// runs are bit-identical.
pub(crate) fn svd_ordered(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let svd = a.clone().svd(true, true);
    let mut u = svd.u.expect("u requested");
    let mut vt = svd.v_t.expect("v_t requested");
    let sv = svd.singular_values;

    let r = sv.len();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&x, &y| sv[y].total_cmp(&sv[x]));
    let sorted_sv = DVector::from_fn(r, |j, _| sv[order[j]]);
    let mut su = DMatrix::zeros(u.nrows(), r);
    let mut svt = DMatrix::zeros(r, vt.ncols());
    for (j, &src) in order.iter().enumerate() {
        su.set_column(j, &u.column(src));
        svt.set_row(j, &vt.row(src));
    }
    u = su;
    vt = svt;

    for j in 0..r {
        let col = u.column(j);
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for (idx, &v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = idx;
            }
        }
        if col[best] < 0.0 {
            u.column_mut(j).neg_mut();
            vt.row_mut(j).neg_mut();
        }
    }
    (u, sorted_sv, vt)
}

/// Nearest orthogonal matrix in Frobenius norm: `U V^T` from the SVD of `A`.
pub fn polar_round(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), a.ncols(), "polar rounding needs a square matrix");
    let (u, _, vt) = svd_ordered(a);
    u * vt
}

/// Output of [`kabsch_align`]. `unique` is false when the minimizer is not
/// unique (fewer than `d + 1` points, or a rank-deficient cross-covariance).
#[derive(Debug, Clone)]
pub struct KabschResult {
    pub transform: RigidTransform,
    pub residual: f64,
    pub unique: bool,
}

/// Least-squares alignment of `x` onto `y` over all of `O(d)` (reflections
/// included) and translations: minimizes `sum_k ||y_k - O x_k - t||^2`.
///
/// The minimizer is `O = V U^T` with `U S V^T` the SVD of the centered
/// cross-covariance `sum_k (x_k - x_c)(y_k - y_c)^T`, and `t = y_c - O x_c`.
pub fn kabsch_align(x: &DMatrix<f64>, y: &DMatrix<f64>) -> KabschResult {
    assert_eq!(x.nrows(), y.nrows(), "point dimensions disagree");
    assert_eq!(x.ncols(), y.ncols(), "point counts disagree");
    let d = x.nrows();
    let n = x.ncols();
    assert!(n >= 1, "alignment needs at least one point");

    let xc = x.column_mean();
    let yc = y.column_mean();
    let mut cross = DMatrix::zeros(d, d);
    for k in 0..n {
        cross += (x.column(k) - &xc) * (y.column(k) - &yc).transpose();
    }
    let (u, sv, vt) = svd_ordered(&cross);
    let omega = vt.transpose() * u.transpose();
    let t = &yc - &omega * &xc;

    let mut residual = 0.0;
    for k in 0..n {
        residual += (y.column(k) - &omega * x.column(k) - &t).norm_squared();
    }
    let largest = sv.iter().cloned().fold(0.0, f64::max);
    let smallest = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let unique = n > d && largest > 0.0 && smallest > 1e-12 * largest;

    KabschResult {
        transform: RigidTransform {
            orthogonal: omega,
            translation: t,
        },
        residual: residual.max(0.0),
        unique,
    }
}

/// Number of eigenvalues with `|lambda| > max(rel_tol * max|lambda|, 1e-12)`.
pub fn numeric_rank(spectrum: &Spectrum, rel_tol: f64) -> usize {
    let largest = spectrum.spectral_norm();
    let threshold = (rel_tol * largest).max(1e-12);
    spectrum
        .eigenvalues
        .iter()
        .filter(|l| l.abs() > threshold)
        .count()
}
