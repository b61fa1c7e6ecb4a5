//! Small dense helpers on top of nalgebra that the std-free build lacks.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

/// Determinant via partial-pivot LU.
pub fn det(m: &DMatrix<f64>) -> f64 {
    m.clone().lu().determinant()
}

pub fn inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.clone().try_inverse()
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.iter().fold(0.0f64, |acc, x| acc.max(libm::fabs(*x))) * n as f64;
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let a = m * scale;
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=18 {
        term = &term * &a / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Orthonormal basis (columns) of the null space of `m`: right singular
/// vectors whose singular value is below `rel_tol * sigma_max`.
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    if rows == 0 {
        return DMatrix::identity(cols, cols);
    }
    // pad to a square system so that V is complete
    let mut sq = DMatrix::<f64>::zeros(rows.max(cols), cols);
    sq.view_mut((0, 0), (rows, cols)).copy_from(m);
    let svd = sq.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let threshold = rel_tol * sigma_max;
    let cols_kept: Vec<usize> = (0..cols)
        .filter(|&i| sigma_max == 0.0 || svd.singular_values[i] <= threshold)
        .collect();
    let mut out = DMatrix::<f64>::zeros(cols, cols_kept.len());
    for (j, &i) in cols_kept.iter().enumerate() {
        out.set_column(j, &v_t.row(i).transpose());
    }
    out
}

/// Numerical rank with threshold `rel_tol * sigma_max`.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * sigma_max).count()
}

/// Minimum-norm least-squares solution of `m x = b`.
pub fn lstsq_min_norm(m: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DVector::zeros(m.ncols());
    }
    let svd = m.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = (rel_tol * sigma_max).max(f64::MIN_POSITIVE);
    svd.solve(b, eps).expect("SVD with U and V")
}

/// Orthonormalize the columns of `m`, dropping numerically dependent ones.
pub fn orthonormal_columns(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if cols == 0 || rows == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| sigma_max > 0.0 && svd.singular_values[i] > rel_tol * sigma_max)
        .collect();
    let mut out = DMatrix::<f64>::zeros(rows, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        out.set_column(j, &u.column(i));
    }
    out
}

pub fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(libm::fabs(*x)))
}
