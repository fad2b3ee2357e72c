//! Rescaled profiles of immortal and extinct trajectories.

use serde::Serialize;

use crate::curvature::{ricci_eigen, MetricState, SortedViews};
use crate::error::{Error, Result};
use crate::flow::{FlowSample, FlowTrajectory};
use crate::isotropy::{BracketTensor, ReductiveSpace};

/// Default convergence threshold for profile diagnostics.
pub const PROFILE_THRESHOLD: f64 = 0.05;
/// Allowed increase between consecutive checkpoints of a "decreasing" series.
pub const MONOTONE_TOL: f64 = 1e-9;
/// Checkpoints per decade for the monotonicity test.
pub const CHECKPOINTS: usize = 11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileMode {
    Blowdown,
    Blowup,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub r: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub name: &'static str,
    pub final_value: f64,
    pub threshold: f64,
    pub monotone: bool,
    /// Least-squares slope of `log value` against `log t` (blowdown) or
    /// `log (T − t)` (blowup) over the window.
    pub exponent: Option<f64>,
    pub pass: bool,
    #[serde(skip)]
    pub series: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RescaledProfile {
    pub mode: ProfileMode,
    pub window: (f64, f64),
    pub diagnostics: Vec<Diagnostic>,
    pub verdict: &'static str,
    #[serde(skip)]
    pub series: Vec<ProfilePoint>,
    /// Blowdown only: `l_n/√t` at the window start and its sup over the window.
    pub ln_sqrt: Option<(f64, f64)>,
    /// Blowup only: `(T − t)·R` extremes over the window.
    pub type_i_band: Option<(f64, f64)>,
    /// Blowup only: total dimension of modules with `|r_i/R| < threshold`.
    pub near_zero_dims: Option<usize>,
}

impl RescaledProfile {
    pub fn diagnostic(&self, name: &str) -> Option<&Diagnostic> {
        self.diagnostics.iter().find(|d| d.name == name)
    }

    pub fn consistent(&self) -> bool {
        self.verdict == "consistent"
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfileOptions {
    pub threshold: f64,
    pub monotone_tol: f64,
    /// Blowup only: allowed ratio `max/min` of `(T − t)·R`.
    pub type_i_band: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            threshold: PROFILE_THRESHOLD,
            monotone_tol: MONOTONE_TOL,
            type_i_band: 2.0,
        }
    }
}

fn log_fit(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(a, v)| *a > 0.0 && *v > 1e-14)
        .map(|(a, v)| (a.ln(), v.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Values at log-spaced checkpoints of the abscissa, nearest sample at or
/// after each checkpoint.
fn checkpoints(series: &[(f64, f64)], lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let mut out = Vec::new();
    let mut idx = 0;
    for k in 0..CHECKPOINTS {
        let c = (a + (b - a) * k as f64 / (CHECKPOINTS - 1) as f64).exp() * (1.0 - 1e-12);
        while idx < series.len() && series[idx].0 < c {
            idx += 1;
        }
        if idx < series.len() {
            out.push(series[idx].1);
        }
    }
    out.dedup_by(|a, b| a == b);
    out
}

fn decreasing(values: &[f64], tol: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + tol)
}

fn diagnostic(
    name: &'static str,
    series: Vec<(f64, f64)>,
    lo: f64,
    hi: f64,
    opts: &ProfileOptions,
    fit_abscissa: impl Fn(f64) -> f64,
) -> Diagnostic {
    let final_value = series.last().map_or(f64::NAN, |p| p.1);
    let monotone = decreasing(&checkpoints(&series, lo, hi), opts.monotone_tol);
    let exponent = log_fit(&series.iter().map(|&(t, v)| (fit_abscissa(t), v)).collect::<Vec<_>>());
    Diagnostic {
        name,
        final_value,
        threshold: opts.threshold,
        monotone,
        exponent,
        pass: final_value.abs() < opts.threshold && monotone,
        series,
    }
}

/// Blow-down `x_i / t` of an immortal run, checked over its last decade.
pub fn blowdown_profile(traj: &FlowTrajectory, space: &ReductiveSpace, opts: &ProfileOptions) -> Result<RescaledProfile> {
    if traj.is_extinct() {
        return Err(Error::WrongRegime("blowdown needs an immortal run, this one is extinct".into()));
    }
    let first = &traj.samples[0];
    let last = traj.last();
    let x0max = first.x.iter().copied().fold(0.0, f64::max);
    if !(last.t > 0.0) || last.t - first.t < 100.0 * x0max.max(first.t) {
        return Err(Error::WrongRegime(format!(
            "run to t = {:e} is too short for a blowdown from scale {:e}",
            last.t, x0max
        )));
    }
    if space.n_p() == 0 {
        return Err(Error::WrongRegime("blowdown needs p ≠ 0".into()));
    }
    let hi = last.t;
    let lo = hi / 10.0;
    let window: Vec<&FlowSample> = traj.samples.iter().filter(|s| s.t >= lo * (1.0 - 1e-12)).collect();
    let n_l = space.n_l;
    let mut pinch = Vec::new();
    let mut p_over_t = Vec::new();
    let mut l_over_t = Vec::new();
    let mut ln_sqrt = Vec::new();
    for s in &window {
        let v = SortedViews::new(&s.x, n_l);
        let (p1, pm) = (s.x[v.p[0]], s.x[*v.p.last().unwrap()]);
        pinch.push((s.t, (pm / p1 - 1.0).abs()));
        let dev = v.p.iter().map(|&i| (s.x[i] / s.t - 1.0).abs()).fold(0.0, f64::max);
        p_over_t.push((s.t, dev));
        if let Some(&n) = v.l.last() {
            l_over_t.push((s.t, s.x[n] / s.t));
            ln_sqrt.push(s.x[n] / s.t.sqrt());
        }
    }
    let mut diagnostics = vec![
        diagnostic("pinching", pinch, lo, hi, opts, |t| t),
        diagnostic("p_over_t", p_over_t, lo, hi, opts, |t| t),
    ];
    if n_l > 0 {
        diagnostics.push(diagnostic("l_over_t", l_over_t, lo, hi, opts, |t| t));
    }
    let verdict = if diagnostics.iter().all(|d| d.pass) { "consistent" } else { "inconsistent" };
    let series = traj
        .samples
        .iter()
        .filter(|s| s.t > 0.0)
        .map(|s| ProfilePoint {
            t: s.t,
            x: s.x.iter().map(|v| v / s.t).collect(),
            r: s.r.iter().map(|v| v * s.t).collect(),
        })
        .collect();
    Ok(RescaledProfile {
        mode: ProfileMode::Blowdown,
        window: (lo, hi),
        diagnostics,
        verdict,
        series,
        ln_sqrt: ln_sqrt.first().map(|&a| (a, ln_sqrt.iter().copied().fold(a, f64::max))),
        type_i_band: None,
        near_zero_dims: None,
    })
}

/// Scalar-normalized blow-up `R(t)·x_i` of an extinct run, checked over the
/// window `T − t ≤ (T − t0)/10`.
pub fn blowup_profile(
    traj: &FlowTrajectory,
    space: &ReductiveSpace,
    t_ext: f64,
    opts: &ProfileOptions,
) -> Result<RescaledProfile> {
    if !traj.is_extinct() {
        return Err(Error::WrongRegime("blowup needs an extinct run".into()));
    }
    let t0 = traj.samples[0].t;
    let t_last = traj.tail.last().map_or(traj.last().t, |s| s.t);
    // distance to T below which the estimate of T itself dominates
    let guard = 10.0 * (t_ext - t_last).max(0.0);
    let span = (t_ext - t0) / 10.0;
    let mut window: Vec<&FlowSample> = traj
        .samples
        .iter()
        .chain(traj.tail.iter())
        .filter(|s| t_ext - s.t <= span && t_ext - s.t > guard)
        .collect();
    window.sort_by(|a, b| a.t.total_cmp(&b.t));
    window.dedup_by(|a, b| a.t == b.t);
    if window.len() < 3 {
        return Err(Error::WrongRegime(format!(
            "only {} samples in the last decade before T",
            window.len()
        )));
    }
    let n_l = space.n_l;
    let dims = space.dims();
    let p_dim = space.p_dim();
    let mut type_i = Vec::new();
    let mut p_norm = Vec::new();
    let mut fiber = Vec::new();
    for s in &window {
        type_i.push((s.t, (t_ext - s.t) * s.scalar));
        let pn: f64 = (n_l..s.r.len()).map(|i| (s.r[i] / s.scalar).abs()).sum();
        p_norm.push((s.t, pn));
        if n_l > 0 {
            fiber.push((s.t, spread(&s.r[..n_l].iter().map(|v| v / s.scalar).collect::<Vec<_>>())));
        }
    }
    let lo_band = type_i.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi_band = type_i.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let last = window.last().unwrap();
    let near_zero_dims: usize = (0..dims.len())
        .filter(|&i| (last.r[i] / last.scalar).abs() < opts.threshold)
        .map(|i| dims[i])
        .sum();

    let (wlo, whi) = (window[0].t, last.t);
    let to_gap = |t: f64| t_ext - t;
    let type_i_pass = lo_band > 0.0 && hi_band / lo_band <= opts.type_i_band;
    let mut diagnostics = vec![Diagnostic {
        name: "type_i",
        final_value: hi_band / lo_band,
        threshold: opts.type_i_band,
        monotone: true,
        exponent: log_fit(&type_i.iter().map(|&(t, v)| (to_gap(t), v)).collect::<Vec<_>>()),
        pass: type_i_pass,
        series: type_i,
    }];
    // decrease toward T, i.e. along increasing t
    let mut d = diagnostic("p_ricci_normalized", p_norm, wlo.max(f64::MIN_POSITIVE), whi, opts, to_gap);
    d.monotone = decreasing(&d.series.iter().map(|p| p.1).collect::<Vec<_>>(), 1e-6);
    d.pass = d.final_value < opts.threshold;
    diagnostics.push(d);
    diagnostics.push(Diagnostic {
        name: "near_zero_dims",
        final_value: near_zero_dims as f64,
        threshold: p_dim as f64,
        monotone: true,
        exponent: None,
        pass: near_zero_dims >= p_dim,
        series: Vec::new(),
    });
    if n_l > 0 {
        let series = fiber;
        let final_value = series.last().unwrap().1;
        diagnostics.push(Diagnostic {
            name: "fiber_einstein",
            final_value,
            threshold: opts.threshold,
            monotone: true,
            exponent: log_fit(&series.iter().map(|&(t, v)| (to_gap(t), v)).collect::<Vec<_>>()),
            pass: final_value < opts.threshold,
            series,
        });
    }
    let verdict = if diagnostics.iter().all(|d| d.pass) { "consistent" } else { "inconsistent" };
    let series = window
        .iter()
        .map(|s| ProfilePoint {
            t: s.t,
            x: s.x.iter().map(|v| v * s.scalar).collect(),
            r: s.r.iter().map(|v| v / s.scalar).collect(),
        })
        .collect();
    Ok(RescaledProfile {
        mode: ProfileMode::Blowup,
        window: (wlo, whi),
        diagnostics,
        verdict,
        series,
        ln_sqrt: None,
        type_i_band: Some((lo_band, hi_band)),
        near_zero_dims: Some(near_zero_dims),
    })
}

// (max − min) / (2 max |v|)
fn spread(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let norm = v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    if norm == 0.0 {
        0.0
    } else {
        (max - min) / (2.0 * norm)
    }
}

/// Distance of the Ricci endomorphism from a multiple of the identity,
/// `min_c max_i |r_i − c| / max_i |r_i|`. Zero iff the metric is Einstein.
pub fn einstein_residual(state: &MetricState, space: &ReductiveSpace, tensor: &BracketTensor) -> Result<f64> {
    Ok(spread(&ricci_eigen(state, space, tensor)?))
}

/// Gnuplot script plotting each diagnostic against time on log axes.
pub fn plot_script(profile: &RescaledProfile, data_file: &str) -> String {
    let mut s = String::new();
    s.push_str("set logscale xy\nset xlabel 't'\nset key left bottom\n");
    s.push_str(&format!("set title '{:?} profile'\n", profile.mode));
    let plots: Vec<String> = profile
        .diagnostics
        .iter()
        .filter(|d| !d.series.is_empty())
        .enumerate()
        .map(|(i, d)| format!("'{data_file}' index {i} using 1:2 with lines title '{}'", d.name))
        .collect();
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    s
}

/// Whitespace-separated blocks, one per diagnostic, for `plot_script`.
pub fn plot_data(profile: &RescaledProfile) -> String {
    let mut s = String::new();
    for d in profile.diagnostics.iter().filter(|d| !d.series.is_empty()) {
        s.push_str(&format!("# {}\n", d.name));
        for (t, v) in &d.series {
            s.push_str(&format!("{t:e} {v:e}\n"));
        }
        s.push_str("\n\n");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::preset;
    use crate::flow::{detect_extinction, integrate_flow, FlowConfig};

    fn space(key: &str) -> (ReductiveSpace, BracketTensor) {
        let c = preset(key).unwrap();
        let s = ReductiveSpace::build(&c.algebra, &c.split, &c.h_indices, 0).unwrap();
        let t = BracketTensor::new(&s);
        (s, t)
    }

    #[test]
    fn symmetric_space_blowdown_is_exact() {
        let (s, t) = space("hyperbolic_plane");
        let tr = integrate_flow(&MetricState::isotropic(1, 1.0).unwrap(), &s, &t, &FlowConfig::default()).unwrap();
        let p = blowdown_profile(&tr, &s, &ProfileOptions::default()).unwrap();
        let d = p.diagnostic("p_over_t").unwrap();
        assert!((d.final_value - 1e-4).abs() < 1e-9, "{}", d.final_value);
        assert!(p.consistent());
        assert!(matches!(blowup_profile(&tr, &s, 1.0, &ProfileOptions::default()), Err(Error::WrongRegime(_))));
    }

    #[test]
    fn sl3_blowup_and_wrong_regime() {
        let (s, t) = space("sl3r_trivial");
        let cfg = FlowConfig::default();
        let tr = integrate_flow(&MetricState::isotropic(8, 1.0).unwrap(), &s, &t, &cfg).unwrap();
        let ex = detect_extinction(&tr, &s, &cfg).unwrap();
        let p = blowup_profile(&tr, &s, ex.t_estimate, &ProfileOptions::default()).unwrap();
        assert!(p.consistent(), "{:?}", p.diagnostics);
        assert!(matches!(blowdown_profile(&tr, &s, &ProfileOptions::default()), Err(Error::WrongRegime(_))));
    }

    #[test]
    fn einstein_residuals() {
        let (s, t) = space("sl3r_mod_so3");
        assert_eq!(einstein_residual(&MetricState::isotropic(1, 1.0).unwrap(), &s, &t).unwrap(), 0.0);
        let (s, t) = space("sl2r_trivial");
        let st = MetricState::new(vec![0.5, 1.0, 2.0]).unwrap();
        let e = einstein_residual(&st, &s, &t).unwrap();
        assert!(e > 1e-3);
        let e2 = einstein_residual(&st.scaled(7.5).unwrap(), &s, &t).unwrap();
        assert!((e - e2).abs() < 1e-12);
    }

    #[test]
    fn checkpoints_pick_samples_in_order() {
        let series: Vec<(f64, f64)> = (1..=100).map(|i| (i as f64, 1.0 / i as f64)).collect();
        let c = checkpoints(&series, 10.0, 100.0);
        assert_eq!(c.first(), Some(&0.1));
        assert!(decreasing(&c, 0.0));
        assert!(!decreasing(&[1.0, 2.0], 0.5));
    }
}
