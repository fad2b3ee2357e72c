//! Catalog algebras built from explicit matrix bases, and named presets.
//!
//! Fixed bases:
//! - `sl(n,R)`: `A_ij = E_ij − E_ji` (i<j, spans k), then `S_ij = E_ij + E_ji`
//!   (i<j) and `H_i = E_ii − E_{i+1,i+1}` (spans p).
//! - `so(p,q)`: `A_ij = E_ij − E_ji` inside the `p×p` block, then inside the
//!   `q×q` block (spans k), then `S_ia = E_ia + E_ai` with `i ≤ p < a` (spans p).
//! - direct sums concatenate bases and splits; names get a `k:` prefix.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebra::{CartanSplit, LieAlgebra};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CatalogAlgebra {
    Sl(usize),
    So(usize, usize),
    DirectSum(Vec<CatalogAlgebra>),
}

impl CatalogAlgebra {
    /// Parses `sl(n,R)`, `so(p,q)` and `+`-separated direct sums.
    pub fn parse(key: &str) -> Result<Self> {
        let key = key.trim();
        if key.contains('+') {
            let parts = key
                .split('+')
                .map(Self::parse)
                .collect::<Result<Vec<_>>>()?;
            return Ok(CatalogAlgebra::DirectSum(parts));
        }
        let inner = |prefix: &str| {
            key.strip_prefix(prefix)
                .and_then(|r| r.strip_suffix(')'))
                .map(|r| r.split(',').map(str::trim).collect::<Vec<_>>())
        };
        if let Some(args) = inner("sl(") {
            if args.len() == 2 && (args[1] == "R" || args[1] == "r") {
                let n = args[0]
                    .parse()
                    .map_err(|_| Error::Input(format!("bad sl parameter in {key}")))?;
                return Ok(CatalogAlgebra::Sl(n));
            }
        }
        if let Some(args) = inner("so(") {
            if args.len() == 2 {
                let p = args[0].parse().map_err(|_| Error::Input(format!("bad so parameter in {key}")))?;
                let q = args[1].parse().map_err(|_| Error::Input(format!("bad so parameter in {key}")))?;
                return Ok(CatalogAlgebra::So(p, q));
            }
        }
        Err(Error::Input(format!("unknown catalog algebra {key}")))
    }

    pub fn build(&self) -> Result<(LieAlgebra, CartanSplit)> {
        match *self {
            CatalogAlgebra::Sl(n) => sl_n(n),
            CatalogAlgebra::So(p, q) => so_pq(p, q),
            CatalogAlgebra::DirectSum(ref parts) => {
                let built = parts.iter().map(|p| p.build()).collect::<Result<Vec<_>>>()?;
                let refs: Vec<_> = built.iter().map(|(a, s)| (a, s)).collect();
                direct_sum(&refs)
            }
        }
    }
}

/// Structure constants of the span of `mats` under the commutator.
pub fn algebra_from_matrices(names: Vec<String>, mats: &[DMatrix<f64>]) -> Result<LieAlgebra> {
    let d = mats.len();
    if d == 0 || names.len() != d {
        return Err(Error::Input("matrix basis is empty or misnamed".into()));
    }
    let flat = |m: &DMatrix<f64>| DVector::from_iterator(m.len(), m.iter().copied());
    let mut basis = DMatrix::zeros(mats[0].len(), d);
    for (c, m) in mats.iter().enumerate() {
        basis.set_column(c, &flat(m));
    }
    let gram = basis.transpose() * &basis;
    let gram_inv = gram
        .try_inverse()
        .ok_or_else(|| Error::Input("matrix basis is linearly dependent".into()))?;
    let mut dense = vec![0.0; d * d * d];
    for i in 0..d {
        for j in 0..d {
            let comm = &mats[i] * &mats[j] - &mats[j] * &mats[i];
            let v = flat(&comm);
            let coords = &gram_inv * (basis.transpose() * &v);
            let resid = (&basis * &coords - &v).amax();
            if resid > 1e-12 {
                return Err(Error::Input("matrix span is not closed under the commutator".into()));
            }
            for k in 0..d {
                // coefficients are small integers in the catalog bases
                let c = coords[k];
                let r = c.round();
                dense[(i * d + j) * d + k] = if (c - r).abs() < 1e-12 { r } else { c };
            }
        }
    }
    LieAlgebra::from_dense(names, dense)
}

fn unit(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = 1.0;
    m
}

pub fn sl_n(n: usize) -> Result<(LieAlgebra, CartanSplit)> {
    if n < 2 {
        return Err(Error::Input(format!("sl(n,R) needs n >= 2, got {n}")));
    }
    let mut names = Vec::new();
    let mut mats = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            names.push(format!("A{}{}", i + 1, j + 1));
            mats.push(unit(n, i, j) - unit(n, j, i));
        }
    }
    let kd = mats.len();
    for i in 0..n {
        for j in (i + 1)..n {
            names.push(format!("S{}{}", i + 1, j + 1));
            mats.push(unit(n, i, j) + unit(n, j, i));
        }
    }
    for i in 0..(n - 1) {
        names.push(format!("H{}", i + 1));
        mats.push(unit(n, i, i) - unit(n, i + 1, i + 1));
    }
    let d = mats.len();
    let alg = algebra_from_matrices(names, &mats)?;
    let split = CartanSplit::new((0..kd).collect(), (kd..d).collect(), d)?;
    Ok((alg, split))
}

pub fn so_pq(p: usize, q: usize) -> Result<(LieAlgebra, CartanSplit)> {
    if q < 1 || p < q || p + q < 3 {
        return Err(Error::Input(format!("so(p,q) needs p >= q >= 1 and p+q >= 3, got ({p},{q})")));
    }
    let n = p + q;
    let mut names = Vec::new();
    let mut mats = Vec::new();
    for (lo, hi) in [(0, p), (p, n)] {
        for i in lo..hi {
            for j in (i + 1)..hi {
                names.push(format!("A{}{}", i + 1, j + 1));
                mats.push(unit(n, i, j) - unit(n, j, i));
            }
        }
    }
    let kd = mats.len();
    for i in 0..p {
        for a in p..n {
            names.push(format!("S{}{}", i + 1, a + 1));
            mats.push(unit(n, i, a) + unit(n, a, i));
        }
    }
    let d = mats.len();
    let alg = algebra_from_matrices(names, &mats)?;
    let split = CartanSplit::new((0..kd).collect(), (kd..d).collect(), d)?;
    Ok((alg, split))
}

pub fn direct_sum(parts: &[(&LieAlgebra, &CartanSplit)]) -> Result<(LieAlgebra, CartanSplit)> {
    let dim: usize = parts.iter().map(|(a, _)| a.dim()).sum();
    let mut names = Vec::with_capacity(dim);
    let mut dense = vec![0.0; dim * dim * dim];
    let mut k = Vec::new();
    let mut p = Vec::new();
    let mut off = 0;
    for (idx, (alg, split)) in parts.iter().enumerate() {
        let d = alg.dim();
        names.extend(alg.basis_names().iter().map(|s| format!("{}:{}", idx + 1, s)));
        for i in 0..d {
            for j in 0..d {
                for l in 0..d {
                    dense[((off + i) * dim + off + j) * dim + off + l] = alg.coeff(i, j, l);
                }
            }
        }
        k.extend(split.k_indices.iter().map(|i| i + off));
        p.extend(split.p_indices.iter().map(|i| i + off));
        off += d;
    }
    let alg = LieAlgebra::from_dense(names, dense)?;
    let split = CartanSplit::new(k, p, dim)?;
    Ok((alg, split))
}

/// A named homogeneous space `G/H` from the catalog.
#[derive(Clone, Debug)]
pub struct CatalogSpace {
    pub key: String,
    pub description: String,
    pub algebra: LieAlgebra,
    pub split: CartanSplit,
    /// Basis indices spanning the isotropy algebra h.
    pub h_indices: Vec<usize>,
    /// Groups of module indices that random initial states keep equal. Used
    /// where the module decomposition is not unique and a generic diagonal
    /// metric would leave the diagonal family.
    pub ties: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub key: &'static str,
    pub description: &'static str,
}

pub const PRESETS: &[CatalogEntry] = &[
    CatalogEntry { key: "sl2r_trivial", description: "SL(2,R) with trivial isotropy" },
    CatalogEntry { key: "sl3r_trivial", description: "SL(3,R) with trivial isotropy (K = SO(3))" },
    CatalogEntry { key: "sl2r_x_sl2r_trivial", description: "SL(2,R) x SL(2,R) with trivial isotropy" },
    CatalogEntry { key: "hyperbolic_plane", description: "SL(2,R)/SO(2)" },
    CatalogEntry { key: "sl3r_mod_so3", description: "SL(3,R)/SO(3), symmetric" },
    CatalogEntry { key: "so_3_2_mod_so_3", description: "SO(3,2)/SO(3), line bundle over a Hermitian symmetric space" },
    CatalogEntry { key: "so_4_2_mod_so_4", description: "SO(4,2)/SO(4), line bundle over a Hermitian symmetric space" },
];

pub fn preset(key: &str) -> Result<CatalogSpace> {
    let mk = |alg: (LieAlgebra, CartanSplit), h: Vec<usize>, ties: Vec<Vec<usize>>, desc: &str| {
        CatalogSpace {
            key: key.to_string(),
            description: desc.to_string(),
            algebra: alg.0,
            split: alg.1,
            h_indices: h,
            ties,
        }
    };
    let desc = PRESETS
        .iter()
        .find(|e| e.key == key)
        .map(|e| e.description)
        .unwrap_or("");
    match key {
        "sl2r_trivial" => Ok(mk(sl_n(2)?, vec![], vec![], desc)),
        // Modules are the coordinate lines A12, A13, A23 | S12, S13, S23, u1, u2.
        // The reflection swapping the first two coordinates preserves metrics
        // with l(A13) = l(A23) and p(S13) = p(S23), which keeps Ricci diagonal
        // on the Cartan block.
        "sl3r_trivial" => Ok(mk(sl_n(3)?, vec![], vec![vec![1, 2], vec![4, 5]], desc)),
        "sl2r_x_sl2r_trivial" => {
            let a = sl_n(2)?;
            Ok(mk(direct_sum(&[(&a.0, &a.1), (&a.0, &a.1)])?, vec![], vec![], desc))
        }
        "hyperbolic_plane" => Ok(mk(sl_n(2)?, vec![0], vec![], desc)),
        "sl3r_mod_so3" => Ok(mk(sl_n(3)?, vec![0, 1, 2], vec![], desc)),
        _ => {
            if let Some(n) = parse_so_n_2(key) {
                let n: usize = n;
                let alg = so_pq(n, 2)?;
                let h = (0..n * (n - 1) / 2).collect();
                Ok(mk(alg, h, vec![], if desc.is_empty() { "SO(n,2)/SO(n)" } else { desc }))
            } else {
                Err(Error::Input(format!("unknown catalog key {key}")))
            }
        }
    }
}

fn parse_so_n_2(key: &str) -> Option<usize> {
    let rest = key.strip_prefix("so_")?;
    let (n, rest) = rest.split_once("_2_mod_so_")?;
    let n: usize = n.parse().ok()?;
    (rest.parse::<usize>().ok()? == n && n >= 2).then_some(n)
}
