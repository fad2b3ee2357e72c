//! Trajectory monitors: growth bounds, pinching, scalar monotonicity and
//! diagonality.

use serde::Serialize;

use super::{FlowSample, FlowTrajectory, DIAGONALITY_TOL};
use crate::curvature::SortedViews;
use crate::isotropy::ReductiveSpace;

pub const GROWTH_TOL: f64 = 1e-6;
pub const SCALAR_TOL: f64 = 1e-8;

pub const MONITOR_NAMES: [&str; 6] = [
    "scalar_monotone",
    "p1_lower",
    "sum_upper",
    "pinching_pm",
    "pinching_ln",
    "diagonality",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonitorEntry {
    pub name: &'static str,
    pub applicable: bool,
    pub tolerance: f64,
    /// Smallest normalized slack over the samples; `None` if never evaluated.
    pub worst_slack: Option<f64>,
    pub first_violation: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonitorReport {
    /// Index of the sample where the monitors start.
    pub start: usize,
    pub t0: f64,
    /// `1 / p_1(t0)`, the rescaling that makes `p_1(t0) = 1`.
    pub lambda: Option<f64>,
    /// `λ (p_m + l_n)(t0) − 1`.
    pub c0: Option<f64>,
    pub entries: Vec<MonitorEntry>,
    /// Normalized slacks per sample from `start`, in `MONITOR_NAMES` order.
    #[serde(skip)]
    pub series: Vec<[Option<f64>; 6]>,
}

impl MonitorReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn entry(&self, name: &str) -> Option<&MonitorEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn violations(&self) -> Vec<&MonitorEntry> {
        self.entries.iter().filter(|e| !e.pass).collect()
    }
}

struct Extremes {
    p1: f64,
    pm: f64,
    ln: Option<f64>,
}

fn extremes(x: &[f64], n_l: usize) -> Option<Extremes> {
    let v = SortedViews::new(x, n_l);
    Some(Extremes {
        p1: x[*v.p.first()?],
        pm: x[*v.p.last()?],
        ln: v.l.last().map(|&i| x[i]),
    })
}

pub fn monitor_suite(traj: &FlowTrajectory, space: &ReductiveSpace) -> MonitorReport {
    monitor_suite_from(traj, space, 0)
}

/// Monitors re-based at sample `start`: the growth bounds and `c₀` use the
/// state there as initial data.
pub fn monitor_suite_from(traj: &FlowTrajectory, space: &ReductiveSpace, start: usize) -> MonitorReport {
    let samples: &[FlowSample] = &traj.samples[start.min(traj.samples.len().saturating_sub(1))..];
    let n_l = space.n_l;
    let has_p = space.n_p() > 0;
    let has_l = n_l > 0;
    let s0 = &samples[0];
    let t0 = s0.t;
    let e0 = extremes(&s0.x, n_l);
    let lambda = e0.as_ref().map(|e| 1.0 / e.p1);
    let c0 = e0.as_ref().map(|e| (e.pm + e.ln.unwrap_or(0.0)) / e.p1 - 1.0);

    let mut series = Vec::with_capacity(samples.len());
    for (k, s) in samples.iter().enumerate() {
        let mut row = [None; 6];
        if k > 0 {
            let prev = samples[k - 1].scalar;
            row[0] = Some((s.scalar - prev) / prev.abs().max(1.0));
        }
        if let (Some(e0), Some(e)) = (&e0, extremes(&s.x, n_l)) {
            let dt = s.t - t0;
            let lam = 1.0 / e0.p1;
            let c0 = c0.unwrap_or(0.0);
            row[1] = Some((e.p1 - (dt + e0.p1)) / (1.0 + dt));
            let bound = (dt + e0.p1) * (e0.pm + e0.ln.unwrap_or(0.0)) / e0.p1;
            row[2] = Some((bound - (e.pm + e.ln.unwrap_or(0.0))) / bound);
            let (p1, pm) = (lam * e.p1, lam * e.pm);
            row[3] = Some((p1 + c0 * p1.sqrt() - pm) / pm.max(1.0));
            if let Some(ln) = e.ln {
                let cap = c0 * (lam * dt + 1.0).sqrt();
                row[4] = Some((cap - lam * ln) / cap.max(1.0));
            }
        }
        if let Some(d) = s.diag {
            row[5] = Some(DIAGONALITY_TOL - d.off_diagonal.max(d.diagonal_mismatch));
        }
        series.push(row);
    }

    let applicable = [true, has_p, has_p, has_p, has_p && has_l, true];
    let tolerance = [SCALAR_TOL, GROWTH_TOL, GROWTH_TOL, GROWTH_TOL, GROWTH_TOL, 0.0];
    let entries = (0..6)
        .map(|m| {
            let mut worst: Option<f64> = None;
            let mut first_violation = None;
            for (s, row) in samples.iter().zip(&series) {
                if let Some(v) = row[m] {
                    worst = Some(worst.map_or(v, |w: f64| w.min(v)));
                    let violated = if m == 5 { v <= 0.0 } else { v < -tolerance[m] };
                    if violated && first_violation.is_none() {
                        first_violation = Some(s.t);
                    }
                }
            }
            MonitorEntry {
                name: MONITOR_NAMES[m],
                applicable: applicable[m],
                tolerance: tolerance[m],
                worst_slack: worst,
                first_violation,
                pass: !applicable[m] || first_violation.is_none(),
            }
        })
        .collect();
    MonitorReport {
        start,
        t0,
        lambda,
        c0,
        entries,
        series,
    }
}
