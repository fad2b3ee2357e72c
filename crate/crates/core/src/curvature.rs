//! Ricci curvature of awesome metrics: the module eigenvalue formula, the
//! general frame formula, scalar curvature, the fiber split and the
//! estimate suite.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::algebra::{killing_form, LieAlgebra};
use crate::error::{Error, Result};
use crate::isotropy::{BracketTensor, ReductiveSpace, Side};

/// Positive metric eigenvalues relative to Q, one per module, `l` first.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricState {
    pub x: Vec<f64>,
}

impl MetricState {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        check_positive(&x)?;
        Ok(Self { x })
    }

    pub fn isotropic(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.x.iter().map(|v| v * s).collect())
    }

    /// Eigenvalue of every basis vector of m.
    pub fn per_basis(&self, space: &ReductiveSpace) -> Vec<f64> {
        space.module_of().iter().map(|&i| self.x[i]).collect()
    }
}

fn check_positive(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        Some(i) => Err(Error::DegenerateMetric(format!("x[{i}] = {} is not positive", x[i]))),
        None => Ok(()),
    }
}

/// Order statistics of the metric with stable tie-breaking by module index.
#[derive(Clone, Debug, PartialEq)]
pub struct SortedViews {
    /// Module indices of l sorted by value.
    pub l: Vec<usize>,
    /// Module indices of p sorted by value.
    pub p: Vec<usize>,
}

impl SortedViews {
    pub fn new(x: &[f64], n_l: usize) -> Self {
        let sort = |mut v: Vec<usize>| {
            v.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
            v
        };
        Self {
            l: sort((0..n_l).collect()),
            p: sort((n_l..x.len()).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RicciData {
    pub r: Vec<f64>,
    pub scalar: f64,
    #[serde(skip)]
    pub full: Option<DMatrix<f64>>,
}

impl RicciData {
    pub fn compute(state: &MetricState, space: &ReductiveSpace, tensor: &BracketTensor) -> Result<Self> {
        Ok(Self {
            r: ricci_eigen(state, space, tensor)?,
            scalar: scalar_curvature(state, space, tensor)?,
            full: None,
        })
    }

    pub fn with_full(mut self, state: &MetricState, space: &ReductiveSpace) -> Result<Self> {
        self.full = Some(ricci_full(state, space)?);
        Ok(self)
    }
}

/// Module Ricci eigenvalues from the bracket coefficients.
pub fn ricci_eigen(state: &MetricState, space: &ReductiveSpace, tensor: &BracketTensor) -> Result<Vec<f64>> {
    let x = &state.x;
    check_positive(x)?;
    let n = tensor.n();
    if x.len() != n {
        return Err(Error::Input(format!("state has {} entries, space has {n} modules", x.len())));
    }
    Ok(ricci_eigen_raw(x, &space.dims(), &space.b_flags(), tensor))
}

/// Formula evaluation without validation; the flow right-hand side.
pub fn ricci_eigen_raw(x: &[f64], dims: &[usize], b: &[f64], tensor: &BracketTensor) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let mut s = 0.0;
            for j in 0..n {
                for k in 0..n {
                    let c = tensor.get(i, j, k);
                    if c != 0.0 {
                        s += c * (x[i] / (x[k] * x[j]) - x[k] / (x[i] * x[j]) - x[j] / (x[k] * x[i]));
                    }
                }
            }
            b[i] / (2.0 * x[i]) + s / (4.0 * dims[i] as f64)
        })
        .collect()
}

/// `ric(e_a, e_b)` on m for a diagonal metric `g(e_a, e_a) = xs[a]` in the
/// basis of `alg` after the first `h_dim` vectors. Unimodularity is assumed.
pub fn ricci_frame(alg: &LieAlgebra, h_dim: usize, xs: &[f64]) -> DMatrix<f64> {
    let n = alg.dim();
    let md = n - h_dim;
    let b = killing_form(alg);
    let c = |i: usize, j: usize, k: usize| alg.coeff(h_dim + i, h_dim + j, h_dim + k);
    let mut ric = DMatrix::zeros(md, md);
    for a in 0..md {
        for bb in a..md {
            let mut t1 = 0.0;
            for i in 0..md {
                let mut s = 0.0;
                for k in 0..md {
                    s += xs[k] * c(a, i, k) * c(bb, i, k);
                }
                t1 += s / xs[i];
            }
            let mut t3 = 0.0;
            for i in 0..md {
                for j in 0..md {
                    let (u, v) = (c(i, j, a), c(i, j, bb));
                    if u != 0.0 && v != 0.0 {
                        t3 += u * v / (xs[i] * xs[j]);
                    }
                }
            }
            t3 *= xs[a] * xs[bb];
            let v = 0.5 * (-b.matrix[(h_dim + a, h_dim + bb)] - t1 + 0.5 * t3);
            ric[(a, bb)] = v;
            ric[(bb, a)] = v;
        }
    }
    ric
}

/// Full Ricci tensor on the Q-orthonormal basis of m.
pub fn ricci_full(state: &MetricState, space: &ReductiveSpace) -> Result<DMatrix<f64>> {
    check_positive(&state.x)?;
    Ok(ricci_frame(&space.alg, space.h_dim, &state.per_basis(space)))
}

/// Ricci tensor in the g-orthonormal frame `e_a / √x_a`.
pub fn normalized(full: &DMatrix<f64>, xs: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(full.nrows(), full.ncols(), |a, b| full[(a, b)] / (xs[a] * xs[b]).sqrt())
}

/// Consistency of a full tensor with the diagonal eigenvalue ansatz.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DiagonalCheck {
    /// Largest off-diagonal entry over the Frobenius norm, g-orthonormal frame.
    pub off_diagonal: f64,
    /// Largest entry of the `l × p` block over the Frobenius norm.
    pub mixed_block: f64,
    /// `max |ric(e_a,e_a)/x_a − r_i|` over the Frobenius norm.
    pub diagonal_mismatch: f64,
}

pub fn diagonal_check(full: &DMatrix<f64>, state: &MetricState, r: &[f64], space: &ReductiveSpace) -> DiagonalCheck {
    let xs = state.per_basis(space);
    let of = space.module_of();
    let nm = normalized(full, &xs);
    let norm = nm.norm().max(f64::MIN_POSITIVE);
    let ld = space.l_dim();
    let mut out = DiagonalCheck::default();
    for a in 0..nm.nrows() {
        out.diagonal_mismatch = out.diagonal_mismatch.max((nm[(a, a)] - r[of[a]]).abs() / norm);
        for b in 0..nm.ncols() {
            if a != b {
                let v = nm[(a, b)].abs() / norm;
                out.off_diagonal = out.off_diagonal.max(v);
                if (a < ld) != (b < ld) {
                    out.mixed_block = out.mixed_block.max(v);
                }
            }
        }
    }
    out
}

/// Scalar curvature `Σ_l d/(2l) − Σ_p d/(2p) − ¼ Σ [ijk] x_i/(x_j x_k)`.
pub fn scalar_curvature(state: &MetricState, space: &ReductiveSpace, tensor: &BracketTensor) -> Result<f64> {
    check_positive(&state.x)?;
    Ok(scalar_curvature_raw(&state.x, &space.dims(), &space.b_flags(), tensor))
}

pub fn scalar_curvature_raw(x: &[f64], dims: &[usize], b: &[f64], tensor: &BracketTensor) -> f64 {
    let n = x.len();
    let mut r = 0.0;
    for i in 0..n {
        r += b[i] * dims[i] as f64 / (2.0 * x[i]);
    }
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let c = tensor.get(i, j, k);
                if c != 0.0 {
                    s += c * x[i] / (x[j] * x[k]);
                }
            }
        }
    }
    r - 0.25 * s
}

/// Split of `ric_g(X, X)` for a basis direction `X` of l.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberSplit {
    pub basis_index: usize,
    /// `ric_{K/H}(X, X)` for the induced metric on the fiber.
    pub fiber_term: f64,
    /// `−½ tr(ad X ∘ ad X |_p)`.
    pub trace_term: f64,
    /// `−½ Σ_i |[X, X_i^p]_m|²_g`.
    pub p_bracket_term: f64,
    /// `¼ Σ_{i,j} g([X_i^p, X_j^p]_m, X)²`.
    pub pp_term: f64,
    /// `ric_g(X, X)` from the full tensor.
    pub total: f64,
}

impl FiberSplit {
    pub fn residual(&self) -> f64 {
        (self.fiber_term + self.trace_term + self.p_bracket_term + self.pp_term - self.total).abs()
    }
}

pub fn fiber_split_ricci(state: &MetricState, space: &ReductiveSpace) -> Result<Vec<FiberSplit>> {
    check_positive(&state.x)?;
    let ld = space.l_dim();
    if ld == 0 {
        return Err(Error::EmptyFiber);
    }
    let hd = space.h_dim;
    let kd = hd + ld;
    let alg = &space.alg;
    let xs = state.per_basis(space);
    let full = ricci_frame(alg, hd, &xs);
    let k_alg = alg.subalgebra(&(0..kd).collect::<Vec<_>>())?;
    let fiber = ricci_frame(&k_alg, hd, &xs[..ld]);
    let md = xs.len();
    let c = |i: usize, j: usize, k: usize| alg.coeff(hd + i, hd + j, hd + k);
    let out = (0..ld)
        .map(|a| {
            let ad = alg.ad(hd + a);
            let ad2 = &ad * &ad;
            let trace_term = -0.5 * (kd..alg.dim()).map(|p| ad2[(p, p)]).sum::<f64>();
            let mut p_bracket = 0.0;
            for i in ld..md {
                for k in 0..md {
                    p_bracket += xs[k] * c(a, i, k).powi(2) / xs[i];
                }
            }
            let mut pp = 0.0;
            for i in ld..md {
                for j in ld..md {
                    pp += (xs[a] * c(i, j, a)).powi(2) / (xs[i] * xs[j]);
                }
            }
            FiberSplit {
                basis_index: a,
                fiber_term: fiber[(a, a)],
                trace_term,
                p_bracket_term: -0.5 * p_bracket,
                pp_term: 0.25 * pp,
                total: full[(a, a)],
            }
        })
        .collect();
    Ok(out)
}

/// Signed slack of each estimate; negative means violated.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BoundReport {
    pub r1: Option<f64>,
    pub rm: Option<f64>,
    pub rn: Option<f64>,
    /// `true` when `p_m − p_1 ≥ l_n`.
    pub first_branch: Option<bool>,
    pub dichotomy_p: Option<f64>,
    pub dichotomy_l: Option<f64>,
    pub scale_invariant: Option<f64>,
}

impl BoundReport {
    pub fn slacks(&self) -> Vec<(&'static str, f64)> {
        [
            ("r1", self.r1),
            ("rm", self.rm),
            ("rn", self.rn),
            ("dichotomy_p", self.dichotomy_p),
            ("dichotomy_l", self.dichotomy_l),
            ("scale_invariant", self.scale_invariant),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }

    pub fn min_slack(&self) -> f64 {
        self.slacks().iter().map(|s| s.1).fold(f64::INFINITY, f64::min)
    }
}

pub fn bound_suite(state: &MetricState, space: &ReductiveSpace, tensor: &BracketTensor) -> Result<BoundReport> {
    let r = ricci_eigen(state, space, tensor)?;
    Ok(bound_suite_with(&state.x, &r, space, tensor))
}

pub fn bound_suite_with(x: &[f64], r: &[f64], space: &ReductiveSpace, tensor: &BracketTensor) -> BoundReport {
    let views = SortedViews::new(x, space.n_l);
    let mut out = BoundReport::default();
    let (Some(&i1), Some(&im)) = (views.p.first(), views.p.last()) else {
        return out;
    };
    let (p1, pm) = (x[i1], x[im]);
    let ln = views.l.last().map_or(0.0, |&n| x[n]);
    out.r1 = Some(-1.0 / (2.0 * p1) - r[i1]);
    let rm_rhs = -1.0 / (2.0 * pm) - ln / (4.0 * p1 * pm);
    out.rm = Some(r[im] - rm_rhs);
    let Some(&nn) = views.l.last() else {
        return out;
    };
    let dn = space.modules[nn].dim as f64;
    let mut pp = 0.0;
    let mut ll = 0.0;
    for (j, mj) in space.modules.iter().enumerate() {
        for (k, mk) in space.modules.iter().enumerate() {
            let c = tensor.get(nn, j, k);
            match (mj.side, mk.side) {
                (Side::P, Side::P) => {
                    let (pj, pk) = (x[j], x[k]);
                    pp += c * (2.0 / ln + ln / (pj * pk) - pj / (ln * pk) - pk / (pj * ln));
                }
                (Side::L, Side::L) => ll += c,
                _ => {}
            }
        }
    }
    let rn_rhs = pp / (4.0 * dn) + ll / (4.0 * dn * ln);
    out.rn = Some(r[nn] - rn_rhs);
    let first = pm - p1 >= ln;
    out.first_branch = Some(first);
    if first {
        out.dichotomy_p = Some(r[im] - (-1.0 / (4.0 * pm) - 1.0 / (4.0 * p1)));
        out.dichotomy_l = Some(r[nn] - (2.0 - pm / p1 - p1 / pm) / (4.0 * ln));
    } else {
        out.dichotomy_p = Some(r[im] - rm_rhs);
        out.dichotomy_l = Some(r[nn]);
    }
    out.scale_invariant = Some(2.0 * (pm * r[im] + ln * r[nn]) + (pm + ln) / p1);
    out
}

/// Column names of a curvature report row.
pub fn csv_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    h.extend((1..=n).map(|i| format!("r{i}")));
    h.push("R".into());
    h.extend(
        ["r1", "rm", "rn", "dichotomy_p", "dichotomy_l", "scale_invariant"]
            .iter()
            .map(|s| format!("slack_{s}")),
    );
    h
}

pub fn csv_row(x: &[f64], data: &RicciData, bounds: &BoundReport) -> Vec<String> {
    let f = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:e}"));
    let mut row: Vec<String> = x.iter().chain(data.r.iter()).map(|v| format!("{v:e}")).collect();
    row.push(format!("{:e}", data.scalar));
    row.extend(
        [
            bounds.r1,
            bounds.rm,
            bounds.rn,
            bounds.dichotomy_p,
            bounds.dichotomy_l,
            bounds.scale_invariant,
        ]
        .map(f),
    );
    row
}
