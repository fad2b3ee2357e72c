//! Irreducible isotropy modules, Casimir constants, bracket coefficients and
//! the topology regime of `K/H`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{
    background_metric, cartan_validate, killing_form, orthonormalize_adapted_basis, AdaptedBasis,
    BilinearForm, CartanSplit, LieAlgebra, DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{max_abs, null_space, sym_eigen};

/// Off-scalar tolerance for Schur certificates.
pub const SCHUR_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    L,
    P,
}

/// A module occupies a contiguous range of the space's basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Module {
    pub side: Side,
    pub start: usize,
    pub dim: usize,
}

impl Module {
    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.dim
    }
}

/// `G/H` with a Q-orthonormal basis ordered `h | l-modules | p-modules`.
#[derive(Clone, Debug)]
pub struct ReductiveSpace {
    pub alg: LieAlgebra,
    pub h_dim: usize,
    pub modules: Vec<Module>,
    pub n_l: usize,
    pub casimir: Vec<f64>,
    pub seed: u64,
    /// Columns are the final basis vectors in the input coordinates.
    pub change: DMatrix<f64>,
}

impl ReductiveSpace {
    /// Validates the Cartan split, orthonormalizes, decomposes and computes
    /// Casimir constants.
    pub fn build(alg: &LieAlgebra, split: &CartanSplit, h_indices: &[usize], seed: u64) -> Result<Self> {
        let b = killing_form(alg);
        cartan_validate(alg, &b, split)?;
        Self::assemble(alg, &b, split, h_indices, seed)
    }

    /// For a compact semisimple algebra viewed as `K/H` with `p = 0`. Skips the
    /// non-compact split check; `Q = -B`.
    pub fn compact(alg: &LieAlgebra, h_indices: &[usize], seed: u64) -> Result<Self> {
        let b = killing_form(alg);
        if !BilinearForm::new(-&b.matrix).is_positive_definite() {
            return Err(Error::InvalidCartanSplit("Killing form is not negative definite".into()));
        }
        let split = CartanSplit::new((0..alg.dim()).collect(), vec![], alg.dim())?;
        Self::assemble(alg, &b, &split, h_indices, seed)
    }

    fn assemble(
        alg: &LieAlgebra,
        b: &BilinearForm,
        split: &CartanSplit,
        h_indices: &[usize],
        seed: u64,
    ) -> Result<Self> {
        let q = background_metric(b, split);
        let adapted = orthonormalize_adapted_basis(alg, &q, split, h_indices)?;
        let mut space = decompose_modules(&adapted, seed)?;
        space.change = &adapted.change * &space.change;
        space.alg = rename_from_source(&space.alg, &space.change, alg);
        space.casimir = casimir_constants(&space)?;
        Ok(space)
    }

    pub fn n_modules(&self) -> usize {
        self.modules.len()
    }

    pub fn n_p(&self) -> usize {
        self.modules.len() - self.n_l
    }

    pub fn dims(&self) -> Vec<usize> {
        self.modules.iter().map(|m| m.dim).collect()
    }

    /// `b_i = +1` on l-modules and `-1` on p-modules.
    pub fn b_flags(&self) -> Vec<f64> {
        self.modules
            .iter()
            .map(|m| if m.side == Side::L { 1.0 } else { -1.0 })
            .collect()
    }

    pub fn l_dim(&self) -> usize {
        self.modules[..self.n_l].iter().map(|m| m.dim).sum()
    }

    pub fn p_dim(&self) -> usize {
        self.modules[self.n_l..].iter().map(|m| m.dim).sum()
    }

    /// Dimension of `m = l ⊕ p`.
    pub fn m_dim(&self) -> usize {
        self.alg.dim() - self.h_dim
    }

    /// Module index of every basis vector of m.
    pub fn module_of(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.m_dim());
        for (i, m) in self.modules.iter().enumerate() {
            out.extend(std::iter::repeat_n(i, m.dim));
        }
        out
    }
}

fn rename_from_source(alg: &LieAlgebra, change: &DMatrix<f64>, source: &LieAlgebra) -> LieAlgebra {
    let n = alg.dim();
    let names: Vec<String> = (0..n)
        .map(|c| {
            let col = change.column(c);
            let nz: Vec<usize> = (0..n).filter(|&r| col[r].abs() > 1e-12).collect();
            if nz.len() == 1 && col[nz[0]] > 0.0 {
                source.basis_names()[nz[0]].clone()
            } else {
                alg.basis_names()[c].clone()
            }
        })
        .collect();
    let mut dense = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                dense.push(alg.coeff(i, j, k));
            }
        }
    }
    LieAlgebra::from_dense(names, dense).expect("same dimension")
}

/// Restriction of `ad(h_α)` to the block `[lo, hi)`.
fn restricted_generators(alg: &LieAlgebra, h_dim: usize, lo: usize, hi: usize) -> Vec<DMatrix<f64>> {
    (0..h_dim)
        .map(|a| DMatrix::from_fn(hi - lo, hi - lo, |r, c| alg.coeff(a, lo + c, lo + r)))
        .collect()
}

/// Basis of symmetric `S` with `[A, S] = 0` for every generator, as matrices.
fn symmetric_commutant(gens: &[DMatrix<f64>], k: usize) -> Vec<DMatrix<f64>> {
    let mut sym_basis = Vec::new();
    for i in 0..k {
        for j in i..k {
            let mut s = DMatrix::zeros(k, k);
            s[(i, j)] = 1.0;
            s[(j, i)] = 1.0;
            if i != j {
                s /= 2f64.sqrt();
            }
            sym_basis.push(s);
        }
    }
    let rows = gens.len() * k * k;
    let mut m = DMatrix::zeros(rows, sym_basis.len());
    for (c, s) in sym_basis.iter().enumerate() {
        for (g, a) in gens.iter().enumerate() {
            let comm = a * s - s * a;
            for (r, v) in comm.iter().enumerate() {
                m[(g * k * k + r, c)] = *v;
            }
        }
    }
    let ns = null_space(&m, 1e-9);
    (0..ns.ncols())
        .map(|c| {
            let mut s = DMatrix::zeros(k, k);
            for (b, basis) in sym_basis.iter().enumerate() {
                s += basis * ns[(b, c)];
            }
            s
        })
        .collect()
}

/// Splits an invariant subspace (orthonormal columns `v`) into irreducibles.
fn refine(
    gens: &[DMatrix<f64>],
    v: DMatrix<f64>,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<DMatrix<f64>>,
) -> Result<()> {
    let k = v.ncols();
    let local: Vec<DMatrix<f64>> = gens.iter().map(|a| v.transpose() * a * &v).collect();
    let comm = symmetric_commutant(&local, k);
    if comm.len() <= 1 {
        out.push(v);
        return Ok(());
    }
    for _attempt in 0..8 {
        let mut s = DMatrix::zeros(k, k);
        for c in &comm {
            s += c * rng.gen_range(-1.0..1.0);
        }
        let (values, vectors) = sym_eigen(&s);
        let spread = values[k - 1] - values[0];
        if spread < 1e-6 * max_abs(&s).max(1e-300) {
            continue;
        }
        let gap = 1e-6 * spread;
        let mut start = 0;
        for i in 1..=k {
            if i == k || values[i] - values[i - 1] > gap {
                let w = vectors.columns(start, i - start).into_owned();
                refine(gens, &v * w, rng, out)?;
                start = i;
            }
        }
        return Ok(());
    }
    Err(Error::NotIrreducible(format!(
        "commutant of dimension {} produced no splitting element",
        comm.len()
    )))
}

/// Connected components of the coordinate graph linking `a` and `b` when
/// some `ad(h_α)` has a nonzero `(a, b)` entry.
fn coordinate_components(gens: &[DMatrix<f64>], k: usize, tol: f64) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for a in gens {
        for r in 0..k {
            for c in 0..k {
                if a[(r, c)].abs() > tol {
                    let (x, y) = (find(&mut parent, r), find(&mut parent, c));
                    if x != y {
                        parent[x.max(y)] = x.min(y);
                    }
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of = vec![usize::MAX; k];
    for i in 0..k {
        let r = find(&mut parent, i);
        if root_of[r] == usize::MAX {
            root_of[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_of[r]].push(i);
    }
    groups
}

/// Decomposes `l` and `p` into Q-orthogonal irreducible `ad(h)`-modules and
/// rotates the basis so that each module is a contiguous block, `l` first.
pub fn decompose_modules(adapted: &AdaptedBasis, seed: u64) -> Result<ReductiveSpace> {
    let alg = &adapted.algebra;
    let (hd, ld) = (adapted.h_dim, adapted.l_dim);
    let n = alg.dim();
    let scale = alg.max_coeff().max(1.0);

    // h must preserve l and p.
    let mut leak = 0.0_f64;
    for a in 0..hd {
        for (lo, hi) in [(hd, hd + ld), (hd + ld, n)] {
            for b in lo..hi {
                for c in (0..n).filter(|c| !(lo..hi).contains(c)) {
                    leak = leak.max(alg.coeff(a, b, c).abs());
                }
            }
        }
    }
    if leak > DEFAULT_TOL * scale {
        return Err(Error::InvalidIsotropy(format!(
            "ad(h) does not preserve l and p (leak {leak:e})"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut change = DMatrix::zeros(n, n);
    for i in 0..hd {
        change[(i, i)] = 1.0;
    }
    let mut modules = Vec::new();
    let mut col = hd;
    let mut n_l = 0;
    for (side, lo, hi) in [(Side::L, hd, hd + ld), (Side::P, hd + ld, n)] {
        let k = hi - lo;
        if k == 0 {
            continue;
        }
        let gens = restricted_generators(alg, hd, lo, hi);
        let mut pieces = Vec::new();
        for comp in coordinate_components(&gens, k, DEFAULT_TOL * scale) {
            let mut v = DMatrix::zeros(k, comp.len());
            for (c, &i) in comp.iter().enumerate() {
                v[(i, c)] = 1.0;
            }
            refine(&gens, v, &mut rng, &mut pieces)?;
        }
        for piece in pieces {
            let piece = canonical_signs(piece);
            for c in 0..piece.ncols() {
                for r in 0..k {
                    change[(lo + r, col + c)] = piece[(r, c)];
                }
            }
            modules.push(Module {
                side,
                start: col,
                dim: piece.ncols(),
            });
            if side == Side::L {
                n_l += 1;
            }
            col += piece.ncols();
        }
    }
    let names = (0..n)
        .map(|i| {
            if i < hd {
                alg.basis_names()[i].clone()
            } else {
                let m = modules.iter().position(|m| m.indices().contains(&i)).unwrap();
                format!("m{}.{}", m + 1, i - modules[m].start + 1)
            }
        })
        .collect();
    let rotated = alg.change_basis(&change, names)?;
    Ok(ReductiveSpace {
        alg: rotated,
        h_dim: hd,
        modules,
        n_l,
        casimir: Vec::new(),
        seed,
        change,
    })
}

// Flip column signs so the largest-magnitude entry of each column is positive.
fn canonical_signs(mut v: DMatrix<f64>) -> DMatrix<f64> {
    for c in 0..v.ncols() {
        let mut best = 0;
        for r in 0..v.nrows() {
            if v[(r, c)].abs() > v[(best, c)].abs() + 1e-12 {
                best = r;
            }
        }
        if v[(best, c)] < 0.0 {
            v.column_mut(c).neg_mut();
        }
    }
    v
}

/// Casimir constants `c_i` with `c_i·Id = -Σ_α ad(E⁰_α)²` on module i.
pub fn casimir_constants(space: &ReductiveSpace) -> Result<Vec<f64>> {
    let n = space.alg.dim();
    let mut cas = DMatrix::zeros(n, n);
    for a in 0..space.h_dim {
        let ad = space.alg.ad(a);
        cas -= &ad * &ad;
    }
    let mut out = Vec::with_capacity(space.modules.len());
    for (i, m) in space.modules.iter().enumerate() {
        let block = cas.view((m.start, m.start), (m.dim, m.dim)).into_owned();
        let c = block.trace() / m.dim as f64;
        let resid = max_abs(&(&block - DMatrix::identity(m.dim, m.dim) * c));
        if resid > SCHUR_TOL * c.abs().max(1.0) {
            return Err(Error::NotIrreducible(format!(
                "Casimir on module {i} is not scalar (residual {resid:e})"
            )));
        }
        out.push(c);
    }
    Ok(out)
}

/// Fully symmetric coefficients `[ijk]` over module indices.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketTensor {
    n: usize,
    data: Vec<f64>,
}

impl BracketTensor {
    pub fn new(space: &ReductiveSpace) -> Self {
        let n = space.modules.len();
        let mut data = vec![0.0; n * n * n];
        for (i, mi) in space.modules.iter().enumerate() {
            for (j, mj) in space.modules.iter().enumerate() {
                for (k, mk) in space.modules.iter().enumerate() {
                    let mut s = 0.0;
                    for a in mi.indices() {
                        for b in mj.indices() {
                            for c in mk.indices() {
                                let v = space.alg.coeff(a, b, c);
                                s += v * v;
                            }
                        }
                    }
                    data[(i * n + j) * n + k] = s;
                }
            }
        }
        Self { n, data }
    }

    /// Builds a tensor from explicit values, for tests and synthetic models.
    pub fn from_dense(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n * n {
            return Err(Error::Input("bracket tensor has the wrong size".into()));
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    /// `Σ_{j,k} [ijk]`.
    pub fn row_sum(&self, i: usize) -> f64 {
        self.data[i * self.n * self.n..(i + 1) * self.n * self.n].iter().sum()
    }

    /// Largest deviation under any permutation of the three indices.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = self.get(i, j, k);
                    for w in [self.get(j, i, k), self.get(i, k, j), self.get(k, j, i), self.get(j, k, i), self.get(k, i, j)] {
                        worst = worst.max((v - w).abs());
                    }
                }
            }
        }
        worst
    }

    /// Largest entry with an odd number of p-indices.
    pub fn odd_p_residual(&self, n_l: usize) -> f64 {
        let n = self.n;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let np = [i, j, k].iter().filter(|&&x| x >= n_l).count();
                    if np % 2 == 1 {
                        worst = worst.max(self.get(i, j, k).abs());
                    }
                }
            }
        }
        worst
    }

    /// Canonical sparse triples `i ≤ j ≤ k` with nonzero value.
    pub fn sparse(&self) -> Vec<(usize, usize, usize, f64)> {
        let n = self.n;
        let mut out = Vec::new();
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    let v = self.get(i, j, k);
                    if v != 0.0 {
                        out.push((i, j, k, v));
                    }
                }
            }
        }
        out
    }
}

/// `|Σ_{j,k}[ijk] − d_i(1−2c_i)|` per module.
pub fn sum_identity_check(space: &ReductiveSpace, tensor: &BracketTensor) -> Vec<f64> {
    space
        .modules
        .iter()
        .enumerate()
        .map(|(i, m)| (tensor.row_sum(i) - m.dim as f64 * (1.0 - 2.0 * space.casimir[i])).abs())
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct TopologyRegime {
    /// `[k,k] ⊂ h`, i.e. `K/H` is a torus and `G/H` is contractible.
    pub contractible: bool,
    pub kk_residual: f64,
    /// l-module indices `i` with `[l_i, k] ⊄ h`.
    pub eligible_indices: Vec<usize>,
    /// `W = {X ∈ l : [h, X] = 0}`, columns in l coordinates.
    pub w_basis: Vec<Vec<f64>>,
    /// `V = {X ∈ W^⊥ : [l, X] ⊂ h}`, columns in l coordinates.
    pub v_basis: Vec<Vec<f64>>,
}

pub fn classify_topology(space: &ReductiveSpace) -> TopologyRegime {
    let alg = &space.alg;
    let hd = space.h_dim;
    let ld = space.l_dim();
    let kd = hd + ld;
    let tol = DEFAULT_TOL * alg.max_coeff().max(1.0);

    let mut kk_residual = 0.0_f64;
    for a in 0..kd {
        for b in 0..kd {
            for c in hd..kd {
                kk_residual = kk_residual.max(alg.coeff(a, b, c).abs());
            }
        }
    }
    let eligible_indices = space.modules[..space.n_l]
        .iter()
        .enumerate()
        .filter(|(_, m)| {
            m.indices()
                .any(|a| (0..kd).any(|b| (hd..kd).any(|c| alg.coeff(a, b, c).abs() > tol)))
        })
        .map(|(i, _)| i)
        .collect();

    let to_cols = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..m.ncols()).map(|c| m.column(c).iter().copied().collect()).collect()
    };
    // [h, X] = 0 on l
    let mut hx = DMatrix::zeros(hd * ld, ld);
    for a in 0..hd {
        for x in 0..ld {
            for c in 0..ld {
                hx[(a * ld + c, x)] = alg.coeff(a, hd + x, hd + c);
            }
        }
    }
    let w = null_space(&hx, 1e-9);
    // W^⊥ inside l
    let w_perp = if w.ncols() == 0 {
        DMatrix::identity(ld, ld)
    } else {
        null_space(&w.transpose(), 1e-9)
    };
    // [e_b, X]_l = 0 for every b ∈ l, X ∈ W^⊥
    let mut lx = DMatrix::zeros(ld * ld, w_perp.ncols());
    for y in 0..w_perp.ncols() {
        for b in 0..ld {
            for c in 0..ld {
                let mut s = 0.0;
                for x in 0..ld {
                    s += w_perp[(x, y)] * alg.coeff(hd + b, hd + x, hd + c);
                }
                lx[(b * ld + c, y)] = s;
            }
        }
    }
    let v = &w_perp * null_space(&lx, 1e-9);
    TopologyRegime {
        contractible: kk_residual <= tol,
        kk_residual,
        eligible_indices,
        w_basis: if ld == 0 { vec![] } else { to_cols(&w) },
        v_basis: if ld == 0 { vec![] } else { to_cols(&v) },
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ModuleReport {
    pub index: usize,
    pub side: Side,
    pub basis_indices: Vec<usize>,
    pub basis_names: Vec<String>,
    pub dim: usize,
    pub casimir: f64,
    pub b: f64,
}

/// Decomposition report document.
#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    pub seed: u64,
    pub generator: &'static str,
    pub h_dim: usize,
    pub modules: Vec<ModuleReport>,
    pub topology: TopologyRegime,
    pub sum_identity_residuals: Vec<f64>,
    pub bracket_coefficients: Vec<(usize, usize, usize, f64)>,
}

pub fn decomposition_report(space: &ReductiveSpace, tensor: &BracketTensor) -> DecompositionReport {
    let b = space.b_flags();
    DecompositionReport {
        seed: space.seed,
        generator: "ChaCha8Rng::seed_from_u64",
        h_dim: space.h_dim,
        modules: space
            .modules
            .iter()
            .enumerate()
            .map(|(i, m)| ModuleReport {
                index: i,
                side: m.side,
                basis_indices: m.indices().collect(),
                basis_names: m.indices().map(|a| space.alg.basis_names()[a].clone()).collect(),
                dim: m.dim,
                casimir: space.casimir[i],
                b: b[i],
            })
            .collect(),
        topology: classify_topology(space),
        sum_identity_residuals: sum_identity_check(space, tensor),
        bracket_coefficients: tensor.sparse(),
    }
}

/// Projection of `[h, module]` onto other basis directions; zero for a valid
/// decomposition.
pub fn invariance_residual(space: &ReductiveSpace) -> f64 {
    let alg = &space.alg;
    let n = alg.dim();
    let mut worst = 0.0_f64;
    for a in 0..space.h_dim {
        for m in &space.modules {
            for b in m.indices() {
                for c in (space.h_dim..n).filter(|c| !m.indices().contains(c)) {
                    worst = worst.max(alg.coeff(a, b, c).abs());
                }
            }
        }
    }
    worst
}

/// Unit vector helper used by tests and the curvature oracles.
pub fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}
