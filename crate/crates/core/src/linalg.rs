//! Small dense helpers on top of nalgebra. Dimensions here are tiny (≤ ~30).

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted ascending.
pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Orthonormal basis (columns) of the kernel of `m`. Singular values below
/// `rel_tol * max(1, σ_max)` count as zero.
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return DMatrix::identity(cols, cols);
    }
    let gram = m.transpose() * m;
    let (values, vectors) = sym_eigen(&gram);
    let smax = values.last().copied().unwrap_or(0.0).max(0.0).sqrt();
    let cut = rel_tol * smax.max(1.0);
    let keep: Vec<usize> = (0..cols)
        .filter(|&i| values[i].max(0.0).sqrt() <= cut)
        .collect();
    let mut out = DMatrix::zeros(cols, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        out.set_column(c, &vectors.column(i));
    }
    out
}

/// Classical Gram–Schmidt with one reorthogonalization pass, with respect to
/// the inner product `q`. Vectors are orthogonalized against `against` first;
/// vectors whose residual norm falls below `tol` are dropped.
pub fn gram_schmidt(
    candidates: &[DVector<f64>],
    against: &[DVector<f64>],
    q: &DMatrix<f64>,
    tol: f64,
) -> Vec<DVector<f64>> {
    let ip = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * q * b)[(0, 0)];
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for v in candidates {
        let norm0 = ip(v, v).max(0.0).sqrt();
        let mut w = v.clone();
        for _pass in 0..2 {
            let coeffs: Vec<f64> = against.iter().chain(basis.iter()).map(|b| ip(b, &w)).collect();
            for (b, c) in against.iter().chain(basis.iter()).zip(coeffs) {
                w.axpy(-c, b, 1.0);
            }
        }
        let norm = ip(&w, &w).max(0.0).sqrt();
        if norm > tol * norm0.max(1.0) {
            basis.push(w / norm);
        }
    }
    basis
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}
