//! Homogeneous Ricci flow `dx_i/dt = -2 r_i x_i`, integrated in `u = log x`.

pub mod extinction;
pub mod integrator;
pub mod monitors;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::curvature::{
    diagonal_check, ricci_eigen_raw, ricci_frame, scalar_curvature_raw, DiagonalCheck, MetricState,
};
use crate::error::{Error, Result};
use crate::isotropy::{BracketTensor, ReductiveSpace};
use integrator::{Dopri5, StepOutcome};

pub use extinction::{detect_extinction, ExtinctionReport};
pub use monitors::{monitor_suite, monitor_suite_from, MonitorEntry, MonitorReport};

/// Ratio of off-diagonal Ricci to its norm beyond which the diagonal ansatz
/// is abandoned.
pub const DIAGONALITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SampleSchedule {
    /// Every accepted step.
    Steps,
    /// Dense output at the given increasing times.
    Times { times: Vec<f64> },
    /// `count` log-spaced times between `t0 + first` and `t_end`.
    Log { first: f64, count: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub t0: f64,
    pub t_end: f64,
    pub rel_tol: f64,
    /// In log coordinates this bounds the relative error of `x` near `x = 1`.
    pub abs_tol: f64,
    pub extinction_eps: f64,
    pub monitor_stride: usize,
    pub max_steps: usize,
    pub h0: Option<f64>,
    pub schedule: SampleSchedule,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            t0: 0.0,
            t_end: 1e4,
            rel_tol: 1e-10,
            abs_tol: 1e-10,
            extinction_eps: 1e-8,
            monitor_stride: 10,
            max_steps: 1_000_000,
            h0: None,
            schedule: SampleSchedule::Steps,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Input(format!("flow config: {m}")));
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.t_end > self.t0) || !self.t0.is_finite() || !self.t_end.is_finite() {
            return bad("t_end must exceed t0");
        }
        if !(self.extinction_eps > 0.0) {
            return bad("extinction_eps must be positive");
        }
        if self.monitor_stride == 0 || self.max_steps == 0 {
            return bad("monitor_stride and max_steps must be positive");
        }
        if let SampleSchedule::Times { times } = &self.schedule {
            if times.windows(2).any(|w| !(w[1] > w[0])) {
                return bad("sample times must be strictly increasing");
            }
        }
        Ok(())
    }

    fn sample_times(&self) -> Option<Vec<f64>> {
        match &self.schedule {
            SampleSchedule::Steps => None,
            SampleSchedule::Times { times } => Some(
                times.iter().copied().filter(|&t| t > self.t0 && t <= self.t_end).collect(),
            ),
            SampleSchedule::Log { first, count } => {
                let (a, b) = (first.max(f64::MIN_POSITIVE).ln(), (self.t_end - self.t0).ln());
                let n = (*count).max(2);
                Some(
                    (0..n)
                        .map(|i| self.t0 + (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                        .filter(|&t| t > self.t0 && t <= self.t_end)
                        .collect(),
                )
            }
        }
    }
}

/// Source of Ricci data for the flow; swapped out for fault injection.
pub trait RicciModel {
    fn n(&self) -> usize;
    /// Module Ricci eigenvalues and scalar curvature.
    fn eval(&self, x: &[f64]) -> (Vec<f64>, f64);
    /// Full-tensor consistency check; `None` when unavailable.
    fn full_check(&self, x: &[f64], r: &[f64]) -> Option<DiagonalCheck>;
}

/// The eigenvalue formula, with the frame formula as the diagonality check.
pub struct EigenModel<'a> {
    pub space: &'a ReductiveSpace,
    pub tensor: &'a BracketTensor,
    dims: Vec<usize>,
    b: Vec<f64>,
}

impl<'a> EigenModel<'a> {
    pub fn new(space: &'a ReductiveSpace, tensor: &'a BracketTensor) -> Self {
        Self {
            space,
            tensor,
            dims: space.dims(),
            b: space.b_flags(),
        }
    }
}

impl RicciModel for EigenModel<'_> {
    fn n(&self) -> usize {
        self.dims.len()
    }

    fn eval(&self, x: &[f64]) -> (Vec<f64>, f64) {
        (
            ricci_eigen_raw(x, &self.dims, &self.b, self.tensor),
            scalar_curvature_raw(x, &self.dims, &self.b, self.tensor),
        )
    }

    fn full_check(&self, x: &[f64], r: &[f64]) -> Option<DiagonalCheck> {
        let state = MetricState { x: x.to_vec() };
        let full = ricci_frame(&self.space.alg, self.space.h_dim, &state.per_basis(self.space));
        Some(diagonal_check(&full, &state, r, self.space))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub scalar: f64,
    pub diag: Option<DiagonalCheck>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EventKind {
    Extinction,
    MonitorViolation,
    DiagonalityBroken,
    Completed,
    MaxStepsReached,
}

impl EventKind {
    pub fn is_terminal(self) -> bool {
        !matches!(self, EventKind::MonitorViolation)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub payload: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryMeta {
    pub space_hash: String,
    pub config: FlowConfig,
    pub seed: u64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowTrajectory {
    pub samples: Vec<FlowSample>,
    /// The most recent accepted steps, for extinction analysis.
    pub tail: Vec<FlowSample>,
    pub events: Vec<Event>,
    pub meta: TrajectoryMeta,
}

impl FlowTrajectory {
    pub fn terminal(&self) -> Option<&Event> {
        self.events.iter().rev().find(|e| e.kind.is_terminal())
    }

    pub fn is_extinct(&self) -> bool {
        self.terminal().is_some_and(|e| e.kind == EventKind::Extinction)
    }

    pub fn last(&self) -> &FlowSample {
        self.samples.last().expect("trajectory has an initial sample")
    }

    /// The failure carried by a terminal event, if any.
    pub fn terminal_error(&self) -> Option<Error> {
        let e = self.terminal()?;
        match e.kind {
            EventKind::DiagonalityBroken => Some(Error::DiagonalityBroken {
                t: e.t,
                ratio: e.payload["ratio"].as_f64().unwrap_or(f64::NAN),
            }),
            _ => None,
        }
    }
}

const TAIL_LEN: usize = 32;

/// Stable fingerprint of a space's structure constants and modules.
pub fn space_hash(space: &ReductiveSpace) -> String {
    let mut h = DefaultHasher::new();
    let n = space.alg.dim();
    n.hash(&mut h);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                space.alg.coeff(i, j, k).to_bits().hash(&mut h);
            }
        }
    }
    for m in &space.modules {
        (m.start, m.dim, m.side == crate::isotropy::Side::L).hash(&mut h);
    }
    format!("{:016x}", h.finish())
}

pub fn integrate_flow(
    state0: &MetricState,
    space: &ReductiveSpace,
    tensor: &BracketTensor,
    config: &FlowConfig,
) -> Result<FlowTrajectory> {
    let model = EigenModel::new(space, tensor);
    let mut traj = integrate_with(&model, state0, config)?;
    traj.meta.space_hash = space_hash(space);
    traj.meta.seed = space.seed;
    Ok(traj)
}

/// Integrates with an arbitrary Ricci model.
pub fn integrate_with(model: &dyn RicciModel, state0: &MetricState, config: &FlowConfig) -> Result<FlowTrajectory> {
    config.validate()?;
    let n = model.n();
    if state0.x.len() != n {
        return Err(Error::Input(format!("initial state has {} entries, expected {n}", state0.x.len())));
    }
    MetricState::new(state0.x.clone())?;
    let mut f = |u: &[f64]| -> Vec<f64> {
        let x: Vec<f64> = u.iter().map(|v| v.exp()).collect();
        model.eval(&x).0.iter().map(|r| -2.0 * r).collect()
    };
    let sample_at = |t: f64, x: Vec<f64>, with_full: bool| -> FlowSample {
        let (r, scalar) = model.eval(&x);
        let diag = if with_full { model.full_check(&x, &r) } else { None };
        FlowSample { t, x, r, scalar, diag }
    };

    let u0: Vec<f64> = state0.x.iter().map(|v| v.ln()).collect();
    let mut solver = Dopri5::new(config.t0, u0, config.rel_tol, config.abs_tol, config.h0, &mut f);
    let grid = config.sample_times();
    let mut next_grid = 0;

    let first = sample_at(config.t0, state0.x.clone(), true);
    let mut samples = vec![first.clone()];
    let mut tail = vec![first];
    let mut events = Vec::new();
    let mut terminal: Option<Event> = None;
    if let Some(e) = diagonality_event(samples[0].diag, config.t0) {
        terminal = Some(e);
    }

    let mut steps = 0usize;
    while terminal.is_none() {
        if steps >= config.max_steps {
            terminal = Some(Event {
                t: solver.t,
                kind: EventKind::MaxStepsReached,
                payload: json!({ "steps": steps }),
            });
            break;
        }
        let t_prev = solver.t;
        let u_prev = solver.y.clone();
        match solver.try_step(&mut f, config.t_end) {
            StepOutcome::Accepted(dense) => {
                steps += 1;
                let t = solver.t;
                let x: Vec<f64> = solver.y.iter().map(|v| v.exp()).collect();
                let with_full = steps.is_multiple_of(config.monitor_stride);
                let s = sample_at(t, x.clone(), with_full);
                if s.r.iter().any(|v| !v.is_finite()) || !s.scalar.is_finite() {
                    return Err(Error::IntegratorFailure {
                        t: t_prev,
                        reason: "Ricci data is not finite".into(),
                        last_state: u_prev.iter().map(|v| v.exp()).collect(),
                    });
                }
                if let Some(times) = &grid {
                    while next_grid < times.len() && times[next_grid] <= t {
                        let tg = times[next_grid];
                        let xg = if tg == t { x.clone() } else { dense.eval(tg).iter().map(|v| v.exp()).collect() };
                        samples.push(sample_at(tg, xg, false));
                        next_grid += 1;
                    }
                } else {
                    samples.push(s.clone());
                }
                if tail.len() == TAIL_LEN {
                    tail.remove(0);
                }
                tail.push(s.clone());
                if let Some(e) = diagonality_event(s.diag, t) {
                    terminal = Some(e);
                    if grid.is_some() && samples.last().map(|l| l.t) != Some(t) {
                        samples.push(s);
                    }
                    break;
                }
                let x_min = x.iter().copied().fold(f64::INFINITY, f64::min);
                if x_min < config.extinction_eps {
                    if grid.is_some() && samples.last().map(|l| l.t) != Some(t) {
                        samples.push(s);
                    }
                    terminal = Some(extinction_event(t, x_min, "threshold", &x));
                } else if t >= config.t_end {
                    terminal = Some(Event {
                        t,
                        kind: EventKind::Completed,
                        payload: json!({ "steps": steps }),
                    });
                }
            }
            StepOutcome::Rejected | StepOutcome::NonFinite => {}
        }
        if terminal.is_none() && solver.h < 1e-14 * solver.t.abs().max(1.0) {
            let x: Vec<f64> = solver.y.iter().map(|v| v.exp()).collect();
            let x_min = x.iter().copied().fold(f64::INFINITY, f64::min);
            if tail.last().map(|s| s.t) != Some(solver.t) {
                let s = sample_at(solver.t, x.clone(), false);
                tail.push(s.clone());
                samples.push(s);
            }
            terminal = Some(extinction_event(solver.t, x_min, "step_underflow", &x));
        }
    }
    events.extend(terminal);
    let meta = TrajectoryMeta {
        space_hash: String::new(),
        config: config.clone(),
        seed: 0,
        accepted_steps: solver.accepted,
        rejected_steps: solver.rejected,
    };
    Ok(FlowTrajectory {
        samples,
        tail,
        events,
        meta,
    })
}

fn extinction_event(t: f64, x_min: f64, reason: &str, x: &[f64]) -> Event {
    Event {
        t,
        kind: EventKind::Extinction,
        payload: json!({ "reason": reason, "x_min": x_min, "x": x }),
    }
}

fn diagonality_event(diag: Option<DiagonalCheck>, t: f64) -> Option<Event> {
    let d = diag?;
    let ratio = d.off_diagonal.max(d.diagonal_mismatch);
    (ratio >= DIAGONALITY_TOL || !ratio.is_finite()).then(|| Event {
        t,
        kind: EventKind::DiagonalityBroken,
        payload: json!({ "ratio": ratio, "off_diagonal": d.off_diagonal, "mixed_block": d.mixed_block, "diagonal_mismatch": d.diagonal_mismatch }),
    })
}
