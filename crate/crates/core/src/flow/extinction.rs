//! Extinction time estimation from the tail of a trajectory.

use serde::Serialize;

use super::{FlowConfig, FlowSample, FlowTrajectory};
use crate::error::{Error, Result};
use crate::isotropy::{classify_topology, ReductiveSpace};

/// Samples used for the zero-crossing fit.
pub const FIT_POINTS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtinctionReport {
    pub t_estimate: f64,
    /// `[last accepted t, extrapolated crossing]`.
    pub interval: (f64, f64),
    pub trigger: String,
    /// Modules whose eigenvalue at the last sample is below `1e-3` of the largest.
    pub vanishing_modules: Vec<usize>,
    pub scalar_positive_at: Option<f64>,
    pub scalar_positive_before_t: bool,
    /// Eligible l-module with the largest initial eigenvalue.
    pub eligible_module: Option<usize>,
    /// Least-squares slope of `l_{n'}(t)`, the empirical `−λ/d`.
    pub eligible_slope: Option<f64>,
    pub log: Vec<String>,
}

fn min_x(s: &FlowSample) -> f64 {
    s.x.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Least-squares line `y = a + b t`; returns `(a, b)` with `t` centered at `tc`.
fn linear_fit(ts: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = ts.len() as f64;
    let tc = ts.iter().sum::<f64>() / n;
    let yc = ys.iter().sum::<f64>() / n;
    let sxx: f64 = ts.iter().map(|t| (t - tc).powi(2)).sum();
    let sxy: f64 = ts.iter().zip(ys).map(|(t, y)| (t - tc) * (y - yc)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (yc, b, tc)
}

pub fn detect_extinction(
    traj: &FlowTrajectory,
    space: &ReductiveSpace,
    config: &FlowConfig,
) -> Result<ExtinctionReport> {
    if !traj.is_extinct() {
        return Err(Error::NotExtinct);
    }
    let terminal = traj.terminal().expect("extinct trajectory has a terminal event");
    let trigger = terminal.payload["reason"].as_str().unwrap_or("threshold").to_string();
    let mut log = vec![format!(
        "terminated at t = {:e} by {trigger} (extinction_eps = {:e})",
        terminal.t, config.extinction_eps
    )];

    let tail = &traj.tail[traj.tail.len().saturating_sub(FIT_POINTS)..];
    let t_last = tail.last().map_or(terminal.t, |s| s.t);
    let ts: Vec<f64> = tail.iter().map(|s| s.t).collect();
    let ys: Vec<f64> = tail.iter().map(min_x).collect();
    let (yc, slope, tc) = linear_fit(&ts, &ys);
    let t_estimate = if slope < 0.0 { (tc - yc / slope).max(t_last) } else { t_last };
    log.push(format!(
        "linear fit of min x over {} samples: slope {slope:e}, crossing {t_estimate:e}",
        tail.len()
    ));

    let last = traj.last();
    let xmax = last.x.iter().copied().fold(0.0, f64::max);
    let vanishing_modules = (0..last.x.len()).filter(|&i| last.x[i] < 1e-3 * xmax).collect();

    let scalar_positive_at = traj
        .samples
        .iter()
        .chain(traj.tail.iter())
        .filter(|s| s.scalar > 0.0)
        .map(|s| s.t)
        .fold(None, |a: Option<f64>, t| Some(a.map_or(t, |a| a.min(t))));
    let scalar_positive_before_t = scalar_positive_at.is_some_and(|t| t < t_estimate);
    log.push(match scalar_positive_at {
        Some(t) => format!("scalar curvature positive from t = {t:e}"),
        None => "scalar curvature never positive".into(),
    });

    let regime = classify_topology(space);
    let x0 = &traj.samples[0].x;
    let eligible_module = regime
        .eligible_indices
        .iter()
        .copied()
        .max_by(|&a, &b| x0[a].total_cmp(&x0[b]).then(b.cmp(&a)));
    let eligible_slope = eligible_module.map(|i| {
        let ts: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
        let ys: Vec<f64> = traj.samples.iter().map(|s| s.x[i]).collect();
        linear_fit(&ts, &ys).1
    });
    if let (Some(i), Some(s)) = (eligible_module, eligible_slope) {
        log.push(format!("eligible module {i}: fitted slope {s:e}"));
    }

    Ok(ExtinctionReport {
        t_estimate,
        interval: (t_last, t_estimate),
        trigger,
        vanishing_modules,
        scalar_positive_at,
        scalar_positive_before_t,
        eligible_module,
        eligible_slope,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_line() {
        let ts = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = ts.iter().map(|t| 5.0 - 1.25 * t).collect();
        let (yc, b, tc) = linear_fit(&ts, &ys);
        assert!((b + 1.25).abs() < 1e-14);
        assert!((tc - yc / b - 4.0).abs() < 1e-12);
    }
}
