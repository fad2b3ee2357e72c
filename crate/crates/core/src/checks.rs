//! Invariant suites over the catalog, each reporting residuals per check.

use std::fmt;

use serde::Serialize;

use crate::algebra::{ad_invariance_residual, cartan_report, killing_form, validate_algebra};
use crate::asymptotics::{blowdown_profile, blowup_profile, einstein_residual, ProfileOptions};
use crate::catalog::{preset, PRESETS};
use crate::curvature::{bound_suite_with, diagonal_check, ricci_eigen, ricci_full, scalar_curvature, MetricState};
use crate::error::{Error, Result};
use crate::flow::{detect_extinction, integrate_flow, monitor_suite, FlowConfig};
use crate::isotropy::{invariance_residual, sum_identity_check, BracketTensor, ReductiveSpace};
use crate::sampling::{random_state, rng};

pub const SUITES: [&str; 5] = ["algebra", "isotropy", "curvature", "flow", "asymptotics"];

/// Random states per space for the curvature suites.
pub const STATES: usize = 1000;
/// Random states per space for the two-route Ricci comparison.
pub const CROSS_STATES: usize = 100;
/// Eigenvalue range of random curvature states.
pub const STATE_RANGE: (f64, f64) = (1e-2, 1e2);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Bound {
    /// Passes when `value <= limit`.
    Upper,
    /// Passes when `value >= limit`.
    Lower,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckLine {
    pub suite: &'static str,
    pub space: String,
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub limit: f64,
    pub pass: bool,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.bound {
            Bound::Upper => "<=",
            Bound::Lower => ">=",
        };
        write!(
            f,
            "{} {:<10} {:<22} {:<34} {:>12.4e} {op} {:.1e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.suite,
            self.space,
            self.name,
            self.value,
            self.limit
        )
    }
}

struct Lines {
    suite: &'static str,
    out: Vec<CheckLine>,
}

impl Lines {
    fn push(&mut self, space: &str, name: impl Into<String>, value: f64, bound: Bound, limit: f64) {
        let pass = match bound {
            Bound::Upper => value <= limit,
            Bound::Lower => value >= limit,
        };
        self.out.push(CheckLine {
            suite: self.suite,
            space: space.to_string(),
            name: name.into(),
            value,
            bound,
            limit,
            pass,
        });
    }

    fn upper(&mut self, space: &str, name: impl Into<String>, value: f64, limit: f64) {
        self.push(space, name, value, Bound::Upper, limit);
    }

    fn lower(&mut self, space: &str, name: impl Into<String>, value: f64, limit: f64) {
        self.push(space, name, value, Bound::Lower, limit);
    }

    fn error(&mut self, space: &str, name: &str, e: &Error) {
        self.out.push(CheckLine {
            suite: self.suite,
            space: space.to_string(),
            name: format!("{name}: {}", e.kind()),
            value: f64::NAN,
            bound: Bound::Upper,
            limit: 0.0,
            pass: false,
        });
    }
}

/// A catalog space with its decomposition, ready for checks.
pub struct CheckSpace {
    pub key: &'static str,
    pub space: ReductiveSpace,
    pub tensor: BracketTensor,
    pub ties: Vec<Vec<usize>>,
}

pub fn catalog_spaces(seed: u64) -> Result<Vec<CheckSpace>> {
    PRESETS
        .iter()
        .map(|e| {
            let c = preset(e.key)?;
            let space = ReductiveSpace::build(&c.algebra, &c.split, &c.h_indices, seed)?;
            let tensor = BracketTensor::new(&space);
            Ok(CheckSpace {
                key: e.key,
                space,
                tensor,
                ties: c.ties,
            })
        })
        .collect()
}

/// Runs one suite (or `all`) with every random draw derived from `seed`.
pub fn run_suite(name: &str, seed: u64) -> Result<Vec<CheckLine>> {
    let suites: Vec<&'static str> = match name {
        "all" => SUITES.to_vec(),
        s => match SUITES.iter().find(|&&x| x == s) {
            Some(&x) => vec![x],
            None => return Err(Error::Input(format!("unknown suite {s}; expected one of {SUITES:?} or all"))),
        },
    };
    let mut out = Vec::new();
    for s in suites {
        let mut lines = Lines { suite: s, out: Vec::new() };
        match s {
            "algebra" => algebra_suite(&mut lines)?,
            "isotropy" => isotropy_suite(&mut lines, seed)?,
            "curvature" => curvature_suite(&mut lines, seed)?,
            "flow" => flow_suite(&mut lines, seed)?,
            _ => asymptotics_suite(&mut lines, seed)?,
        }
        out.extend(lines.out);
    }
    Ok(out)
}

fn algebra_suite(lines: &mut Lines) -> Result<()> {
    for e in PRESETS {
        let c = preset(e.key)?;
        let alg = &c.algebra;
        let scale = alg.max_coeff().max(1.0);
        let v = validate_algebra(alg);
        lines.upper(e.key, "antisymmetry", v.antisymmetry, v.tol);
        lines.upper(e.key, "jacobi", v.jacobi, v.tol);
        let b = killing_form(alg);
        lines.upper(e.key, "killing ad-invariance", ad_invariance_residual(alg, &b), 1e-10 * scale);
        let r = cartan_report(alg, &b, &c.split);
        let bscale = r.k_max_eigenvalue.abs().max(r.p_min_eigenvalue.abs()).max(1.0);
        lines.lower(e.key, "killing nondegeneracy", r.nondegeneracy, 1e-9);
        lines.upper(e.key, "unimodularity", r.unimodularity, 1e-10 * scale);
        lines.upper(e.key, "B(k,p)", r.mixed_block, 1e-9 * bscale);
        lines.upper(e.key, "max eig B|k", r.k_max_eigenvalue, -1e-9);
        lines.lower(e.key, "min eig B|p", r.p_min_eigenvalue, 1e-9);
        lines.upper(e.key, "[k,k] along p", r.kk_leak, 1e-10 * scale);
        lines.upper(e.key, "[k,p] along k", r.kp_leak, 1e-10 * scale);
        lines.upper(e.key, "[p,p] along p", r.pp_leak, 1e-10 * scale);
    }
    Ok(())
}

fn isotropy_suite(lines: &mut Lines, seed: u64) -> Result<()> {
    for cs in catalog_spaces(seed)? {
        let k = cs.key;
        lines.upper(k, "h-invariance of modules", invariance_residual(&cs.space), 1e-10);
        lines.upper(k, "[ijk] permutation symmetry", cs.tensor.symmetry_residual(), 1e-10);
        let sums = sum_identity_check(&cs.space, &cs.tensor);
        lines.upper(k, "bracket sum identity", sums.iter().copied().fold(0.0, f64::max), 1e-9);
        lines.upper(k, "odd p-index vanishing", cs.tensor.odd_p_residual(cs.space.n_l), 1e-12);
        let neg = cs.space.casimir.iter().copied().fold(0.0_f64, |a, c| a.max(-c));
        lines.upper(k, "casimir nonnegativity", neg, 1e-12);
    }
    Ok(())
}

fn curvature_suite(lines: &mut Lines, seed: u64) -> Result<()> {
    let (lo, hi) = STATE_RANGE;
    for (idx, cs) in catalog_spaces(seed)?.into_iter().enumerate() {
        let k = cs.key;
        let n = cs.space.n_modules();
        let dims = cs.space.dims();
        let mut g = rng(seed.wrapping_add(idx as u64));
        let (mut mixed, mut mismatch, mut trace, mut bounds) = (0.0_f64, 0.0_f64, 0.0_f64, f64::INFINITY);
        for s in 0..STATES {
            // untied draws: awesome invariance holds for every diagonal metric
            let free = random_state(n, &[], lo, hi, &mut g)?;
            let full = ricci_full(&free, &cs.space)?;
            let r = ricci_eigen(&free, &cs.space, &cs.tensor)?;
            mixed = mixed.max(diagonal_check(&full, &free, &r, &cs.space).mixed_block);

            let tied = random_state(n, &cs.ties, lo, hi, &mut g)?;
            let r = ricci_eigen(&tied, &cs.space, &cs.tensor)?;
            if s < CROSS_STATES {
                let full = ricci_full(&tied, &cs.space)?;
                mismatch = mismatch.max(diagonal_check(&full, &tied, &r, &cs.space).diagonal_mismatch);
            }
            let sc = scalar_curvature(&tied, &cs.space, &cs.tensor)?;
            let tr: f64 = r.iter().zip(&dims).map(|(r, d)| r * *d as f64).sum();
            let scale = r.iter().zip(&dims).map(|(r, d)| (r * *d as f64).abs()).sum::<f64>().max(1.0);
            trace = trace.max((sc - tr).abs() / scale);
            bounds = bounds.min(bound_suite_with(&tied.x, &r, &cs.space, &cs.tensor).min_slack());
        }
        lines.upper(k, "ric(l,p) / |ric|", mixed, 1e-10);
        lines.upper(k, "eigen vs frame Ricci", mismatch, 1e-10);
        lines.upper(k, "R = sum d_i r_i", trace, 1e-9);
        if bounds.is_finite() {
            lines.lower(k, "estimate suite min slack", bounds, -1e-9);
        }
    }
    Ok(())
}

fn flow_suite(lines: &mut Lines, seed: u64) -> Result<()> {
    let spaces = catalog_spaces(seed)?;
    let get = |key: &str| spaces.iter().find(|c| c.key == key).expect("preset exists");

    let hyp = get("hyperbolic_plane");
    let cfg = FlowConfig {
        t_end: 100.0,
        rel_tol: 1e-10,
        abs_tol: 1e-10,
        ..FlowConfig::default()
    };
    let x0 = 1.7;
    match integrate_flow(&MetricState::new(vec![x0])?, &hyp.space, &hyp.tensor, &cfg) {
        Ok(tr) => {
            let err = tr
                .samples
                .iter()
                .map(|s| (s.x[0] - (x0 + s.t)).abs() / (x0 + s.t))
                .fold(0.0, f64::max);
            lines.upper(hyp.key, "x(t) = x0 + t relative error", err, 1e-8);
        }
        Err(e) => lines.error(hyp.key, "exact solution", &e),
    }

    let sl3 = get("sl3r_trivial");
    let state = MetricState::isotropic(sl3.space.n_modules(), 1.0)?;
    let mut ts = Vec::new();
    for rel in [1e-8, 1e-10] {
        let cfg = FlowConfig {
            rel_tol: rel,
            abs_tol: rel,
            ..FlowConfig::default()
        };
        let tr = integrate_flow(&state, &sl3.space, &sl3.tensor, &cfg)?;
        lines.lower(sl3.key, format!("extinct at rel_tol {rel:.0e}"), tr.is_extinct() as u8 as f64, 1.0);
        if let Ok(ex) = detect_extinction(&tr, &sl3.space, &cfg) {
            ts.push(ex.t_estimate);
            let lead = ex.scalar_positive_at.map_or(f64::NEG_INFINITY, |t| ex.t_estimate - t);
            lines.lower(sl3.key, format!("T - t(R > 0) at rel_tol {rel:.0e}"), lead, 0.0);
        }
        let m = monitor_suite(&tr, &sl3.space);
        lines.lower(sl3.key, format!("monitors pass at rel_tol {rel:.0e}"), m.pass() as u8 as f64, 1.0);
    }
    if let [a, b] = ts[..] {
        lines.upper(sl3.key, "two-tolerance T relative gap", (a - b).abs() / b, 5e-5);
    }

    let sl2 = get("sl2r_trivial");
    let cfg = FlowConfig {
        t_end: 1e3,
        ..FlowConfig::default()
    };
    let state = random_state(sl2.space.n_modules(), &sl2.ties, 0.1, 10.0, &mut rng(seed))?;
    let a = integrate_flow(&state, &sl2.space, &sl2.tensor, &cfg)?;
    let b = integrate_flow(&state, &sl2.space, &sl2.tensor, &cfg)?;
    let same = a.samples.len() == b.samples.len() && a.samples.iter().zip(&b.samples).all(|(p, q)| p.x == q.x);
    lines.lower(sl2.key, "bitwise determinism", same as u8 as f64, 1.0);
    lines.lower(sl2.key, "immortal to t = 1e3", (!a.is_extinct()) as u8 as f64, 1.0);
    for e in &monitor_suite(&a, &sl2.space).entries {
        if let Some(w) = e.worst_slack {
            lines.lower(sl2.key, format!("monitor {}", e.name), w, -e.tolerance);
        }
    }
    Ok(())
}

fn asymptotics_suite(lines: &mut Lines, seed: u64) -> Result<()> {
    let spaces = catalog_spaces(seed)?;
    let opts = ProfileOptions::default();
    for (idx, cs) in spaces.iter().enumerate() {
        let k = cs.key;
        let n = cs.space.n_modules();
        match k {
            "sl3r_trivial" => {
                let cfg = FlowConfig::default();
                let tr = integrate_flow(&MetricState::isotropic(n, 1.0)?, &cs.space, &cs.tensor, &cfg)?;
                let ex = detect_extinction(&tr, &cs.space, &cfg)?;
                match blowup_profile(&tr, &cs.space, ex.t_estimate, &opts) {
                    Ok(p) => {
                        if let Some((lo, hi)) = p.type_i_band {
                            lines.upper(k, "(T-t)R band ratio", hi / lo, opts.type_i_band);
                        }
                        for d in &p.diagnostics {
                            lines.lower(k, format!("blowup {}", d.name), d.pass as u8 as f64, 1.0);
                        }
                    }
                    Err(e) => lines.error(k, "blowup profile", &e),
                }
            }
            "sl2r_trivial" | "so_3_2_mod_so_3" => {
                let cfg = FlowConfig::default();
                let state = random_state(n, &cs.ties, 0.1, 10.0, &mut rng(seed.wrapping_add(idx as u64)))?;
                let tr = integrate_flow(&state, &cs.space, &cs.tensor, &cfg)?;
                match blowdown_profile(&tr, &cs.space, &opts) {
                    Ok(p) => {
                        for d in &p.diagnostics {
                            lines.upper(k, format!("blowdown {} final", d.name), d.final_value.abs(), d.threshold);
                            lines.lower(k, format!("blowdown {} monotone", d.name), d.monotone as u8 as f64, 1.0);
                        }
                    }
                    Err(e) => lines.error(k, "blowdown profile", &e),
                }
                let mut g = rng(seed.wrapping_add(1000 + idx as u64));
                let (lo, hi) = STATE_RANGE;
                let mut best = f64::INFINITY;
                for _ in 0..STATES {
                    let s = random_state(n, &cs.ties, lo, hi, &mut g)?;
                    best = best.min(einstein_residual(&s, &cs.space, &cs.tensor)?);
                }
                lines.lower(k, "min Einstein residual", best, 1e-3);
            }
            _ => {}
        }
    }
    Ok(())
}
