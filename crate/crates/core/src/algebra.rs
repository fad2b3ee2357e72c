//! Lie algebras by structure constants, Killing form, Cartan splits and the
//! background metric.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::linalg::{gram_schmidt, max_abs, sym_eigen};

/// Default relative tolerance of the algebraic checks.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Tolerance on Killing-form definiteness and degeneracy.
pub const DEFINITENESS_TOL: f64 = 1e-9;

/// A real Lie algebra given by structure constants `[e_i, e_j] = Σ_k c(i,j,k) e_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct LieAlgebra {
    dim: usize,
    basis_names: Vec<String>,
    // c[(i * dim + j) * dim + k]
    dense: Vec<f64>,
}

impl LieAlgebra {
    /// Builds an algebra from sparse entries `(i, j, k, value)`. An entry for
    /// `(i, j, k)` implies `c(j, i, k) = -value` unless `(j, i, k)` is given too.
    pub fn new(basis_names: Vec<String>, entries: &[(usize, usize, usize, f64)]) -> Result<Self> {
        let dim = basis_names.len();
        if dim == 0 {
            return Err(Error::Input("algebra dimension must be at least 1".into()));
        }
        let mut seen = HashSet::new();
        for &(i, j, k, v) in entries {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::Input(format!(
                    "bracket entry ({i}, {j}, {k}) out of range for dim {dim}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::Input(format!("bracket entry ({i}, {j}, {k}) is not finite")));
            }
            if !seen.insert((i, j, k)) {
                return Err(Error::Input(format!("duplicate bracket entry ({i}, {j}, {k})")));
            }
        }
        let mut dense = vec![0.0; dim * dim * dim];
        for &(i, j, k, v) in entries {
            dense[(i * dim + j) * dim + k] = v;
            if i != j && !seen.contains(&(j, i, k)) {
                dense[(j * dim + i) * dim + k] = -v;
            }
        }
        Ok(Self {
            dim,
            basis_names,
            dense,
        })
    }

    /// Builds an algebra from a full coefficient tensor, antisymmetrizing nothing.
    pub fn from_dense(basis_names: Vec<String>, dense: Vec<f64>) -> Result<Self> {
        let dim = basis_names.len();
        if dim == 0 || dense.len() != dim * dim * dim {
            return Err(Error::Input("dense structure tensor has the wrong size".into()));
        }
        Ok(Self {
            dim,
            basis_names,
            dense,
        })
    }

    /// The abelian algebra of the given dimension.
    pub fn abelian(dim: usize) -> Result<Self> {
        let names = (0..dim).map(|i| format!("e{i}")).collect();
        Self::new(names, &[])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis_names(&self) -> &[String] {
        &self.basis_names
    }

    #[inline]
    pub fn coeff(&self, i: usize, j: usize, k: usize) -> f64 {
        self.dense[(i * self.dim + j) * self.dim + k]
    }

    /// Canonical sparse entries: `i < j`, nonzero values only.
    pub fn entries(&self) -> Vec<(usize, usize, usize, f64)> {
        let n = self.dim;
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    let v = self.coeff(i, j, k);
                    if v != 0.0 {
                        out.push((i, j, k, v));
                    }
                }
            }
        }
        out
    }

    pub fn max_coeff(&self) -> f64 {
        self.dense.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    /// Bracket of two coordinate vectors.
    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n];
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let w = x[i] * y[j];
                if w == 0.0 {
                    continue;
                }
                let row = &self.dense[(i * n + j) * n..(i * n + j + 1) * n];
                for (o, c) in out.iter_mut().zip(row) {
                    *o += w * c;
                }
            }
        }
        out
    }

    /// Matrix of `ad(e_i)`: column `l` holds the coordinates of `[e_i, e_l]`.
    pub fn ad(&self, i: usize) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |k, l| self.coeff(i, l, k))
    }

    /// Matrix of `ad(x)` for a coordinate vector `x`.
    pub fn ad_of(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                m += self.ad(i) * xi;
            }
        }
        m
    }

    /// Rewrites the algebra in a new basis whose vectors are the columns of
    /// `change` (coordinates in the current basis).
    pub fn change_basis(&self, change: &DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        let n = self.dim;
        if change.nrows() != n || change.ncols() != n || names.len() != n {
            return Err(Error::Input("change of basis has the wrong shape".into()));
        }
        let inv = change
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Input("change of basis is singular".into()))?;
        let cols: Vec<Vec<f64>> = (0..n).map(|a| change.column(a).iter().copied().collect()).collect();
        let mut dense = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                let br = DVector::from_vec(self.bracket(&cols[a], &cols[b]));
                let coords = &inv * br;
                for c in 0..n {
                    dense[(a * n + b) * n + c] = coords[c];
                }
            }
        }
        Self::from_dense(names, dense)
    }

    /// Subalgebra spanned by a subset of basis vectors; components of brackets
    /// leaving the subset are dropped.
    pub fn subalgebra(&self, indices: &[usize]) -> Result<Self> {
        let names = indices.iter().map(|&i| self.basis_names[i].clone()).collect();
        let m = indices.len();
        let mut dense = vec![0.0; m * m * m];
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                for (c, &k) in indices.iter().enumerate() {
                    dense[(a * m + b) * m + c] = self.coeff(i, j, k);
                }
            }
        }
        Self::from_dense(names, dense)
    }
}

/// Residuals of the Lie algebra axioms.
#[derive(Clone, Debug, Serialize)]
pub struct AlgebraReport {
    pub antisymmetry: f64,
    pub jacobi: f64,
    pub scale: f64,
    pub tol: f64,
    pub pass: bool,
}

pub fn validate_algebra(alg: &LieAlgebra) -> AlgebraReport {
    validate_algebra_with(alg, DEFAULT_TOL)
}

pub fn validate_algebra_with(alg: &LieAlgebra, tol: f64) -> AlgebraReport {
    let n = alg.dim();
    let mut antisym = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                antisym = antisym.max((alg.coeff(i, j, k) + alg.coeff(j, i, k)).abs());
            }
        }
    }
    let mut jacobi = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut s = 0.0;
                    for m in 0..n {
                        s += alg.coeff(j, k, m) * alg.coeff(i, m, l)
                            + alg.coeff(k, i, m) * alg.coeff(j, m, l)
                            + alg.coeff(i, j, m) * alg.coeff(k, m, l);
                    }
                    jacobi = jacobi.max(s.abs());
                }
            }
        }
    }
    let scale = alg.max_coeff();
    let pass = antisym <= tol * scale.max(1.0) && jacobi <= tol * (scale * scale).max(1.0);
    AlgebraReport {
        antisymmetry: antisym,
        jacobi,
        scale,
        tol,
        pass,
    }
}

/// Counts of positive, zero and negative eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub positive: usize,
    pub zero: usize,
    pub negative: usize,
}

/// A symmetric bilinear form on the algebra, in the algebra's basis.
#[derive(Clone, Debug)]
pub struct BilinearForm {
    pub matrix: DMatrix<f64>,
    pub signature: Signature,
}

impl BilinearForm {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        let (values, _) = sym_eigen(&matrix);
        let scale = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let cut = DEFINITENESS_TOL * scale;
        let mut signature = Signature {
            positive: 0,
            zero: 0,
            negative: 0,
        };
        for v in values {
            if scale == 0.0 || v.abs() <= cut {
                signature.zero += 1;
            } else if v > 0.0 {
                signature.positive += 1;
            } else {
                signature.negative += 1;
            }
        }
        Self { matrix, signature }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.matrix.nrows();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += x[i] * self.matrix[(i, j)] * y[j];
            }
        }
        s
    }

    pub fn is_positive_definite(&self) -> bool {
        self.signature.positive == self.matrix.nrows()
    }
}

/// Killing form `B(X, Y) = tr(ad X ∘ ad Y)`.
pub fn killing_form(alg: &LieAlgebra) -> BilinearForm {
    let n = alg.dim();
    let ads: Vec<DMatrix<f64>> = (0..n).map(|i| alg.ad(i)).collect();
    let m = DMatrix::from_fn(n, n, |i, j| (&ads[i] * &ads[j]).trace());
    BilinearForm::new(m)
}

/// Largest `|B([Z,X],Y) + B(X,[Z,Y])|` over basis triples.
pub fn ad_invariance_residual(alg: &LieAlgebra, b: &BilinearForm) -> f64 {
    let n = alg.dim();
    let mut worst = 0.0_f64;
    for z in 0..n {
        // ad(z)^T B + B ad(z) must vanish
        let ad = alg.ad(z);
        let r = ad.transpose() * &b.matrix + &b.matrix * &ad;
        worst = worst.max(max_abs(&r));
    }
    worst
}

/// A Cartan decomposition `g = k ⊕ p` given by basis index sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CartanSplit {
    pub k_indices: Vec<usize>,
    pub p_indices: Vec<usize>,
}

impl CartanSplit {
    pub fn new(k_indices: Vec<usize>, p_indices: Vec<usize>, dim: usize) -> Result<Self> {
        let mut seen = vec![false; dim];
        for &i in k_indices.iter().chain(p_indices.iter()) {
            if i >= dim {
                return Err(Error::Input(format!("split index {i} out of range for dim {dim}")));
            }
            if seen[i] {
                return Err(Error::Input(format!("split index {i} listed twice")));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Input("k and p indices must partition the basis".into()));
        }
        Ok(Self {
            k_indices,
            p_indices,
        })
    }
}

/// Residuals of every Cartan-split and semisimplicity condition.
#[derive(Clone, Debug, Serialize)]
pub struct CartanReport {
    /// `min |eig B| / max |eig B|`; zero iff B is degenerate.
    pub nondegeneracy: f64,
    /// Largest `|tr ad e_i|`.
    pub unimodularity: f64,
    /// Largest `|B(k, p)|`.
    pub mixed_block: f64,
    /// Largest eigenvalue of `B|k×k` (must be negative).
    pub k_max_eigenvalue: f64,
    /// Smallest eigenvalue of `B|p×p` (must be positive).
    pub p_min_eigenvalue: f64,
    /// Components of `[k,k]` along p.
    pub kk_leak: f64,
    /// Components of `[k,p]` along k.
    pub kp_leak: f64,
    /// Components of `[p,p]` along p.
    pub pp_leak: f64,
    pub ad_invariance: f64,
}

pub fn cartan_report(alg: &LieAlgebra, b: &BilinearForm, split: &CartanSplit) -> CartanReport {
    let (values, _) = sym_eigen(&b.matrix);
    let bmax = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let bmin = values.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    let nondegeneracy = if bmax == 0.0 { 0.0 } else { bmin / bmax };
    let n = alg.dim();
    let unimodularity = (0..n).map(|i| alg.ad(i).trace().abs()).fold(0.0, f64::max);

    let block = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |a, c| b.matrix[(rows[a], cols[c])])
    };
    let (k, p) = (&split.k_indices, &split.p_indices);
    let mixed_block = max_abs(&block(k, p));
    let k_max_eigenvalue = sym_eigen(&block(k, k)).0.last().copied().unwrap_or(f64::NEG_INFINITY);
    let p_min_eigenvalue = sym_eigen(&block(p, p)).0.first().copied().unwrap_or(f64::INFINITY);

    let leak = |xs: &[usize], ys: &[usize], into: &[usize]| {
        let mut worst = 0.0_f64;
        for &x in xs {
            for &y in ys {
                for &z in into {
                    worst = worst.max(alg.coeff(x, y, z).abs());
                }
            }
        }
        worst
    };
    CartanReport {
        nondegeneracy,
        unimodularity,
        mixed_block,
        k_max_eigenvalue,
        p_min_eigenvalue,
        kk_leak: leak(k, k, p),
        kp_leak: leak(k, p, k),
        pp_leak: leak(p, p, p),
        ad_invariance: ad_invariance_residual(alg, b),
    }
}

/// Checks semisimplicity, unimodularity and every Cartan-split condition for
/// a split of non-compact type (`p ≠ 0`).
pub fn cartan_validate(
    alg: &LieAlgebra,
    b: &BilinearForm,
    split: &CartanSplit,
) -> Result<CartanReport> {
    let report = cartan_report(alg, b, split);
    let bscale = max_abs(&b.matrix);
    let cscale = alg.max_coeff().max(1.0);
    if report.nondegeneracy <= DEFINITENESS_TOL {
        return Err(Error::NotSemisimple(format!(
            "Killing form is degenerate (min/max |eigenvalue| = {:e})",
            report.nondegeneracy
        )));
    }
    if report.unimodularity > DEFAULT_TOL * cscale {
        return Err(Error::NotSemisimple(format!(
            "tr ad X = {:e} for some basis vector",
            report.unimodularity
        )));
    }
    if split.p_indices.is_empty() {
        return Err(Error::InvalidCartanSplit(
            "p is empty: the algebra is of compact type and has no non-compact split".into(),
        ));
    }
    if report.k_max_eigenvalue >= -DEFINITENESS_TOL * bscale {
        return Err(Error::InvalidCartanSplit(format!(
            "Killing form is not negative definite on k (max eigenvalue {:e})",
            report.k_max_eigenvalue
        )));
    }
    if report.p_min_eigenvalue <= DEFINITENESS_TOL * bscale {
        return Err(Error::InvalidCartanSplit(format!(
            "Killing form is not positive definite on p (min eigenvalue {:e})",
            report.p_min_eigenvalue
        )));
    }
    if report.mixed_block > DEFINITENESS_TOL * bscale {
        return Err(Error::InvalidCartanSplit(format!(
            "B(k, p) = {:e} is nonzero",
            report.mixed_block
        )));
    }
    for (name, v) in [
        ("[k,k] ⊂ k", report.kk_leak),
        ("[k,p] ⊂ p", report.kp_leak),
        ("[p,p] ⊂ k", report.pp_leak),
    ] {
        if v > DEFAULT_TOL * cscale {
            return Err(Error::InvalidCartanSplit(format!("{name} fails with residual {v:e}")));
        }
    }
    Ok(report)
}

/// `Q = -B` on k, `+B` on p, zero across.
pub fn background_metric(b: &BilinearForm, split: &CartanSplit) -> BilinearForm {
    let n = b.matrix.nrows();
    let mut side = vec![0i8; n];
    for &i in &split.k_indices {
        side[i] = -1;
    }
    for &i in &split.p_indices {
        side[i] = 1;
    }
    let q = DMatrix::from_fn(n, n, |i, j| {
        if side[i] != side[j] {
            0.0
        } else {
            f64::from(side[i]) * b.matrix[(i, j)]
        }
    });
    BilinearForm::new(q)
}

/// The algebra rewritten in a Q-orthonormal basis ordered `h, l, p`.
#[derive(Clone, Debug)]
pub struct AdaptedBasis {
    pub algebra: LieAlgebra,
    /// Columns are the new basis vectors in the original coordinates.
    pub change: DMatrix<f64>,
    pub h_dim: usize,
    pub l_dim: usize,
    pub p_dim: usize,
}

impl AdaptedBasis {
    pub fn split(&self) -> CartanSplit {
        let kd = self.h_dim + self.l_dim;
        CartanSplit {
            k_indices: (0..kd).collect(),
            p_indices: (kd..kd + self.p_dim).collect(),
        }
    }
}

/// Q-orthonormal Gram–Schmidt separately inside h, `l = h^⊥ ∩ k` and p.
pub fn orthonormalize_adapted_basis(
    alg: &LieAlgebra,
    q: &BilinearForm,
    split: &CartanSplit,
    h_indices: &[usize],
) -> Result<AdaptedBasis> {
    let n = alg.dim();
    let kset: HashSet<usize> = split.k_indices.iter().copied().collect();
    let hset: HashSet<usize> = h_indices.iter().copied().collect();
    if hset.len() != h_indices.len() {
        return Err(Error::InvalidIsotropy("h indices contain duplicates".into()));
    }
    if let Some(bad) = h_indices.iter().find(|i| !kset.contains(i)) {
        return Err(Error::InvalidIsotropy(format!(
            "h is not contained in k (basis vector {bad})"
        )));
    }
    let cscale = alg.max_coeff().max(1.0);
    for &a in h_indices {
        for &b in h_indices {
            for c in (0..n).filter(|c| !hset.contains(c)) {
                if alg.coeff(a, b, c).abs() > DEFAULT_TOL * cscale {
                    return Err(Error::InvalidIsotropy(format!(
                        "h is not a subalgebra: [{a}, {b}] has a component along {c}"
                    )));
                }
            }
        }
    }
    if !q.is_positive_definite() {
        return Err(Error::InvalidCartanSplit("background metric is not positive definite".into()));
    }
    let unit = |i: usize| {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v
    };
    let hvecs: Vec<_> = h_indices.iter().map(|&i| unit(i)).collect();
    let lvecs: Vec<_> = split
        .k_indices
        .iter()
        .filter(|i| !hset.contains(i))
        .map(|&i| unit(i))
        .collect();
    let pvecs: Vec<_> = split.p_indices.iter().map(|&i| unit(i)).collect();
    let gs_tol = 1e-8;
    let hb = gram_schmidt(&hvecs, &[], &q.matrix, gs_tol);
    let lb = gram_schmidt(&lvecs, &hb, &q.matrix, gs_tol);
    let pb = gram_schmidt(&pvecs, &[], &q.matrix, gs_tol);
    if hb.len() + lb.len() + pb.len() != n {
        return Err(Error::Input("adapted basis does not span the algebra".into()));
    }
    let mut change = DMatrix::zeros(n, n);
    let mut names = Vec::with_capacity(n);
    for (c, v) in hb.iter().chain(lb.iter()).chain(pb.iter()).enumerate() {
        change.set_column(c, v);
    }
    names.extend((0..hb.len()).map(|i| format!("h{}", i + 1)));
    names.extend((0..lb.len()).map(|i| format!("l{}", i + 1)));
    names.extend((0..pb.len()).map(|i| format!("p{}", i + 1)));
    let algebra = alg.change_basis(&change, names)?;
    Ok(AdaptedBasis {
        algebra,
        change,
        h_dim: hb.len(),
        l_dim: lb.len(),
        p_dim: pb.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    pub(crate) fn sl2() -> LieAlgebra {
        // H, E, F
        LieAlgebra::new(
            names(&["H", "E", "F"]),
            &[(0, 1, 1, 2.0), (0, 2, 2, -2.0), (1, 2, 0, 1.0)],
        )
        .unwrap()
    }

    fn so3() -> LieAlgebra {
        LieAlgebra::new(
            names(&["L1", "L2", "L3"]),
            &[(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0)],
        )
        .unwrap()
    }

    // Jacobi expansion over explicit vectors, independent of the tensor loop.
    fn jacobi_via_brackets(alg: &LieAlgebra) -> f64 {
        let n = alg.dim();
        let e = |i: usize| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            v
        };
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let a = alg.bracket(&e(i), &alg.bracket(&e(j), &e(k)));
                    let b = alg.bracket(&e(j), &alg.bracket(&e(k), &e(i)));
                    let c = alg.bracket(&e(k), &alg.bracket(&e(i), &e(j)));
                    for m in 0..n {
                        worst = worst.max((a[m] + b[m] + c[m]).abs());
                    }
                }
            }
        }
        worst
    }

    #[test]
    fn abelian_passes_with_zero_residuals() {
        let r = validate_algebra(&LieAlgebra::abelian(3).unwrap());
        assert!(r.pass);
        assert_eq!(r.antisymmetry, 0.0);
        assert_eq!(r.jacobi, 0.0);
    }

    #[test]
    fn sl2_passes_and_corruption_fails() {
        let alg = sl2();
        assert_eq!(jacobi_via_brackets(&alg), 0.0);
        assert!(validate_algebra(&alg).pass);
        let bad = LieAlgebra::new(
            names(&["H", "E", "F"]),
            &[(0, 1, 1, 2.0), (0, 2, 2, -3.0), (1, 2, 0, 1.0)],
        )
        .unwrap();
        let oracle = jacobi_via_brackets(&bad);
        let r = validate_algebra(&bad);
        assert!(!r.pass);
        assert!(oracle >= 1.0);
        assert_eq!(r.jacobi, oracle);
    }

    #[test]
    fn out_of_range_and_duplicate_entries_rejected() {
        assert!(matches!(
            LieAlgebra::new(names(&["a", "b"]), &[(0, 1, 2, 1.0)]),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            LieAlgebra::new(names(&["a", "b"]), &[(0, 1, 1, 1.0), (0, 1, 1, 1.0)]),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn inconsistent_reverse_entry_is_an_antisymmetry_violation() {
        let alg = LieAlgebra::new(names(&["a", "b"]), &[(0, 1, 1, 1.0), (1, 0, 1, 1.0)]).unwrap();
        let r = validate_algebra(&alg);
        assert_eq!(r.antisymmetry, 2.0);
        assert!(!r.pass);
    }

    #[test]
    fn killing_forms() {
        let zero = killing_form(&LieAlgebra::abelian(3).unwrap());
        assert_eq!(max_abs(&zero.matrix), 0.0);
        assert_eq!(zero.signature.zero, 3);

        let b = killing_form(&sl2());
        let expect = DMatrix::from_row_slice(3, 3, &[8.0, 0.0, 0.0, 0.0, 0.0, 4.0, 0.0, 4.0, 0.0]);
        assert!(max_abs(&(&b.matrix - expect)) < 1e-14);
        assert!(ad_invariance_residual(&sl2(), &b) < 1e-12);

        let b3 = killing_form(&so3());
        assert!(max_abs(&(&b3.matrix + DMatrix::identity(3, 3) * 2.0)) < 1e-14);
    }

    fn sl2_split_basis() -> (LieAlgebra, CartanSplit) {
        // E−F, H, E+F in coordinates (H, E, F)
        let change = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, -1.0, 0.0, 1.0]);
        let alg = sl2().change_basis(&change, names(&["E-F", "H", "E+F"])).unwrap();
        (alg, CartanSplit::new(vec![0], vec![1, 2], 3).unwrap())
    }

    #[test]
    fn sl2_cartan_split_is_valid() {
        let (alg, split) = sl2_split_basis();
        let b = killing_form(&alg);
        let rep = cartan_validate(&alg, &b, &split).unwrap();
        assert!((rep.k_max_eigenvalue + 8.0).abs() < 1e-12);
        assert!((rep.p_min_eigenvalue - 8.0).abs() < 1e-12);
        let q = background_metric(&b, &split);
        assert!(max_abs(&(&q.matrix - DMatrix::identity(3, 3) * 8.0)) < 1e-12);
    }

    #[test]
    fn so3_and_abelian_splits_fail() {
        let alg = so3();
        let b = killing_form(&alg);
        let split = CartanSplit::new(vec![0, 1], vec![2], 3).unwrap();
        assert!(matches!(cartan_validate(&alg, &b, &split), Err(Error::InvalidCartanSplit(_))));
        let compact = CartanSplit::new(vec![0, 1, 2], vec![], 3).unwrap();
        assert!(matches!(cartan_validate(&alg, &b, &compact), Err(Error::InvalidCartanSplit(_))));
        let q = background_metric(&b, &compact);
        assert!(max_abs(&(&q.matrix - DMatrix::identity(3, 3) * 2.0)) < 1e-14);

        let ab = LieAlgebra::abelian(3).unwrap();
        let bb = killing_form(&ab);
        let s = CartanSplit::new(vec![0], vec![1, 2], 3).unwrap();
        assert!(matches!(cartan_validate(&ab, &bb, &s), Err(Error::NotSemisimple(_))));
    }

    #[test]
    fn orthonormalize_sl2() {
        let (alg, split) = sl2_split_basis();
        let b = killing_form(&alg);
        let q = background_metric(&b, &split);
        let ad = orthonormalize_adapted_basis(&alg, &q, &split, &[]).unwrap();
        assert_eq!((ad.h_dim, ad.l_dim, ad.p_dim), (0, 1, 2));
        let s8 = 1.0 / 8f64.sqrt();
        assert!(max_abs(&(&ad.change - DMatrix::identity(3, 3) * s8)) < 1e-15);
        let qn = ad.change.transpose() * &q.matrix * &ad.change;
        assert!(max_abs(&(qn - DMatrix::identity(3, 3))) < 1e-14);

        let hyp = orthonormalize_adapted_basis(&alg, &q, &split, &[0]).unwrap();
        assert_eq!((hyp.h_dim, hyp.l_dim, hyp.p_dim), (1, 0, 2));

        assert!(matches!(
            orthonormalize_adapted_basis(&alg, &q, &split, &[1]),
            Err(Error::InvalidIsotropy(_))
        ));
    }
}
