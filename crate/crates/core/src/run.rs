//! Run manifests and the build → decompose → flow → monitor → profile
//! pipeline.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::{CartanSplit, LieAlgebra};
use crate::asymptotics::{blowdown_profile, blowup_profile, ProfileOptions, RescaledProfile};
use crate::catalog::{preset, CatalogAlgebra};
use crate::curvature::{csv_header, MetricState};
use crate::document::AlgebraDocument;
use crate::error::{Error, Result};
use crate::flow::monitors::MONITOR_NAMES;
use crate::flow::{
    detect_extinction, integrate_flow, monitor_suite, space_hash, Event, EventKind, ExtinctionReport, FlowConfig,
    FlowTrajectory, MonitorReport,
};
use crate::isotropy::{decomposition_report, BracketTensor, DecompositionReport, ReductiveSpace};
use crate::sampling::{apply_ties, random_state, rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceSource {
    /// A preset key such as `sl3r_trivial`.
    Catalog(String),
    /// A catalog algebra key such as `sl(3,R)` plus isotropy indices.
    Algebra {
        key: String,
        #[serde(default)]
        h_indices: Vec<usize>,
    },
    /// Path to an algebra document, relative to the manifest.
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Explicit(Vec<f64>),
    Isotropic(f64),
    /// Log-uniform in `[lo, hi]`, drawn from the manifest seed.
    Random { lo: f64, hi: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub space: SpaceSource,
    pub initial: InitialState,
    #[serde(default)]
    pub flow: FlowConfig,
    /// Seed of the commutant draw; defaults to `seed`.
    #[serde(default)]
    pub decomposition_seed: Option<u64>,
    /// Module groups held equal in random starts; defaults to the preset's.
    #[serde(default)]
    pub ties: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl RunManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.flow.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// A space ready for simulation.
#[derive(Clone, Debug)]
pub struct PreparedSpace {
    pub label: String,
    pub space: ReductiveSpace,
    pub tensor: BracketTensor,
    pub ties: Vec<Vec<usize>>,
}

pub fn prepare_space(source: &SpaceSource, base: &Path, seed: u64) -> Result<PreparedSpace> {
    let (label, alg, split, h, ties): (String, LieAlgebra, CartanSplit, Vec<usize>, Vec<Vec<usize>>) = match source {
        SpaceSource::Catalog(key) => {
            let c = preset(key)?;
            (key.clone(), c.algebra, c.split, c.h_indices, c.ties)
        }
        SpaceSource::Algebra { key, h_indices } => {
            let (a, s) = CatalogAlgebra::parse(key)?.build()?;
            (key.clone(), a, s, h_indices.clone(), Vec::new())
        }
        SpaceSource::File(path) => {
            let p = if path.is_absolute() { path.clone() } else { base.join(path) };
            let (a, s, h) = AlgebraDocument::load(&p)?.to_parts()?;
            (p.display().to_string(), a, s, h, Vec::new())
        }
    };
    let space = ReductiveSpace::build(&alg, &split, &h, seed)?;
    let tensor = BracketTensor::new(&space);
    Ok(PreparedSpace {
        label,
        space,
        tensor,
        ties,
    })
}

pub fn initial_state(spec: &InitialState, n: usize, ties: &[Vec<usize>], seed: u64) -> Result<MetricState> {
    match spec {
        InitialState::Explicit(x) => {
            if x.len() != n {
                return Err(Error::Input(format!("explicit state has {} entries, space has {n} modules", x.len())));
            }
            let mut x = x.clone();
            let before = x.clone();
            apply_ties(&mut x, ties)?;
            if x != before {
                return Err(Error::Input("explicit state breaks the space's tie groups".into()));
            }
            MetricState::new(x)
        }
        InitialState::Isotropic(v) => MetricState::isotropic(n, *v),
        InitialState::Random { lo, hi } => random_state(n, ties, *lo, *hi, &mut rng(seed)),
    }
}

/// Machine-readable run summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub schema: &'static str,
    pub space: String,
    pub space_hash: String,
    pub seed: u64,
    pub decomposition_seed: u64,
    pub dims: Vec<usize>,
    pub n_l: usize,
    /// `extinct`, `immortal` (reached `t_end`) or `incomplete`.
    pub regime: &'static str,
    pub terminal: Option<Event>,
    pub t_final: f64,
    pub t_estimate: Option<f64>,
    pub t_interval: Option<(f64, f64)>,
    pub scalar_positive_at: Option<f64>,
    pub c0: Option<f64>,
    /// Fitted slope of the eligible l-eigenvalue, the empirical `−λ/d`.
    pub lambda_over_d: Option<f64>,
    pub monitors_pass: bool,
    pub violations: Vec<String>,
    pub profile_verdict: Option<&'static str>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

pub const SUMMARY_SCHEMA: &str = "hflow.summary.v1";

impl Summary {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Input(format!("summary schema: {m}")));
        if !self.t_final.is_finite() {
            return bad("t_final is not finite");
        }
        if self.regime == "extinct" && self.t_estimate.is_none() {
            return bad("extinct run without a T estimate");
        }
        if self.regime != "extinct" && self.t_estimate.is_some() {
            return bad("T estimate on a non-extinct run");
        }
        if let Some((a, b)) = self.t_interval {
            if !(a <= b) {
                return bad("T interval is reversed");
            }
        }
        if self.dims.is_empty() || self.n_l > self.dims.len() {
            return bad("module counts are inconsistent");
        }
        if self.monitors_pass != self.violations.is_empty() {
            return bad("monitor verdict disagrees with the violation list");
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub prepared: PreparedSpace,
    pub manifest: RunManifest,
    pub trajectory: FlowTrajectory,
    pub monitors: MonitorReport,
    pub extinction: Option<ExtinctionReport>,
    pub profile: Option<RescaledProfile>,
    pub profile_note: Option<String>,
    pub decomposition: DecompositionReport,
    pub summary: Summary,
}

impl RunOutcome {
    /// Failure the run should be reported as, after artifacts are written.
    pub fn failure(&self) -> Option<Error> {
        if let Some(e) = self.trajectory.terminal_error() {
            return Some(e);
        }
        if let Some(e) = self.trajectory.terminal().filter(|e| e.kind == EventKind::MaxStepsReached) {
            return Some(Error::IntegratorFailure {
                t: e.t,
                reason: "max_steps reached before t_end".into(),
                last_state: self.trajectory.last().x.clone(),
            });
        }
        if !self.monitors.pass() {
            return Some(Error::MonitorViolation(self.summary.violations.join(", ")));
        }
        None
    }
}

/// Executes a manifest; `base` resolves relative paths inside it.
pub fn execute(manifest: &RunManifest, base: &Path) -> Result<RunOutcome> {
    manifest.flow.validate()?;
    let dseed = manifest.decomposition_seed.unwrap_or(manifest.seed);
    let mut prepared = prepare_space(&manifest.space, base, dseed)?;
    if let Some(t) = &manifest.ties {
        prepared.ties = t.clone();
    }
    let n = prepared.space.n_modules();
    let state0 = initial_state(&manifest.initial, n, &prepared.ties, manifest.seed)?;
    let mut trajectory = integrate_flow(&state0, &prepared.space, &prepared.tensor, &manifest.flow)?;
    trajectory.meta.seed = manifest.seed;
    let monitors = monitor_suite(&trajectory, &prepared.space);
    let violations: Vec<String> = monitors.violations().iter().map(|e| e.name.to_string()).collect();
    // report-only monitors are logged before the terminal event
    let terminal = trajectory.events.pop();
    for e in monitors.violations() {
        trajectory.events.push(Event {
            t: e.first_violation.unwrap_or(f64::NAN),
            kind: EventKind::MonitorViolation,
            payload: json!({ "monitor": e.name, "worst_slack": e.worst_slack, "tolerance": e.tolerance }),
        });
    }
    trajectory.events.sort_by(|a, b| a.t.total_cmp(&b.t));
    trajectory.events.extend(terminal);

    let extinction = if trajectory.is_extinct() {
        Some(detect_extinction(&trajectory, &prepared.space, &manifest.flow)?)
    } else {
        None
    };
    let opts = ProfileOptions::default();
    let completed = trajectory.terminal().is_some_and(|e| e.kind == EventKind::Completed);
    let (profile, profile_note) = match (&extinction, completed) {
        (Some(ex), _) => split_result(blowup_profile(&trajectory, &prepared.space, ex.t_estimate, &opts)),
        (None, true) => split_result(blowdown_profile(&trajectory, &prepared.space, &opts)),
        _ => (None, Some("run did not complete; no profile".into())),
    };
    let decomposition = decomposition_report(&prepared.space, &prepared.tensor);
    let regime = if extinction.is_some() {
        "extinct"
    } else if completed {
        "immortal"
    } else {
        "incomplete"
    };
    let summary = Summary {
        schema: SUMMARY_SCHEMA,
        space: prepared.label.clone(),
        space_hash: space_hash(&prepared.space),
        seed: manifest.seed,
        decomposition_seed: dseed,
        dims: prepared.space.dims(),
        n_l: prepared.space.n_l,
        regime,
        terminal: trajectory.terminal().cloned(),
        t_final: trajectory.last().t,
        t_estimate: extinction.as_ref().map(|e| e.t_estimate),
        t_interval: extinction.as_ref().map(|e| e.interval),
        scalar_positive_at: extinction.as_ref().and_then(|e| e.scalar_positive_at),
        c0: monitors.c0,
        lambda_over_d: extinction.as_ref().and_then(|e| e.eligible_slope),
        monitors_pass: monitors.pass(),
        violations,
        profile_verdict: profile.as_ref().map(|p| p.verdict),
        accepted_steps: trajectory.meta.accepted_steps,
        rejected_steps: trajectory.meta.rejected_steps,
    };
    summary.validate()?;
    Ok(RunOutcome {
        prepared,
        manifest: manifest.clone(),
        trajectory,
        monitors,
        extinction,
        profile,
        profile_note,
        decomposition,
        summary,
    })
}

fn split_result(r: Result<RescaledProfile>) -> (Option<RescaledProfile>, Option<String>) {
    match r {
        Ok(p) => (Some(p), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

/// `samples.csv`: time, eigenvalues, Ricci eigenvalues, scalar curvature,
/// estimate slacks and monitor slacks.
pub fn samples_csv(out: &RunOutcome) -> String {
    let n = out.prepared.space.n_modules();
    let mut header = vec!["t".to_string()];
    header.extend(csv_header(n));
    header.extend(MONITOR_NAMES.iter().map(|m| format!("monitor_{m}")));
    let mut s = header.join(",");
    s.push('\n');
    let f = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:e}"));
    for (k, smp) in out.trajectory.samples.iter().enumerate() {
        let data = crate::curvature::RicciData {
            r: smp.r.clone(),
            scalar: smp.scalar,
            full: None,
        };
        let bounds = crate::curvature::bound_suite_with(&smp.x, &smp.r, &out.prepared.space, &out.prepared.tensor);
        let mut row = vec![format!("{:e}", smp.t)];
        row.extend(crate::curvature::csv_row(&smp.x, &data, &bounds));
        let series = k
            .checked_sub(out.monitors.start)
            .and_then(|j| out.monitors.series.get(j).copied())
            .unwrap_or([None; 6]);
        row.extend(series.iter().map(|v| f(*v)));
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// One JSON object per event; `wall_time` is the only nondeterministic field.
pub fn events_jsonl(traj: &FlowTrajectory, wall_time: &str) -> String {
    traj.events
        .iter()
        .map(|e| {
            let mut v = serde_json::to_value(e).unwrap_or(Value::Null);
            v["wall_time"] = Value::String(wall_time.to_string());
            v.to_string() + "\n"
        })
        .collect()
}

/// Structured error document.
pub fn error_json(err: &Error) -> Value {
    let mut v = json!({ "error": err.kind(), "message": err.to_string() });
    if let Error::IntegratorFailure { t, last_state, .. } = err {
        v["t"] = json!(t);
        v["last_state"] = json!(last_state);
    }
    if let Error::DiagonalityBroken { t, ratio } = err {
        v["t"] = json!(t);
        v["ratio"] = json!(ratio);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(space: &str, initial: &str, flow: &str) -> RunManifest {
        RunManifest::from_json(&format!(r#"{{"space": {space}, "initial": {initial}, "flow": {flow}, "seed": 3}}"#))
            .unwrap()
    }

    #[test]
    fn sl3_run_is_extinct_and_valid() {
        let m = manifest(r#"{"catalog": "sl3r_trivial"}"#, r#"{"isotropic": 1.0}"#, "{}");
        let out = execute(&m, Path::new(".")).unwrap();
        assert_eq!(out.summary.regime, "extinct");
        let t = out.summary.t_estimate.unwrap();
        assert!((t - 9.7317).abs() < 1e-3, "{t}");
        assert!(out.failure().is_none());
        let csv = samples_csv(&out);
        let width = csv.lines().next().unwrap().split(',').count();
        assert!(csv.lines().all(|l| l.split(',').count() == width));
    }

    #[test]
    fn explicit_state_length_is_checked() {
        let m = manifest(r#"{"catalog": "sl2r_trivial"}"#, r#"{"explicit": [1.0, 2.0]}"#, "{}");
        assert!(matches!(execute(&m, Path::new(".")), Err(Error::Input(_))));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"space": {"catalog": "sl2r_trivial"}, "initial": {"isotropic": 1.0}, "bogus": 1}"#;
        assert!(RunManifest::from_json(text).is_err());
    }

    #[test]
    fn events_carry_wall_time_only_at_write() {
        let m = manifest(
            r#"{"algebra": {"key": "sl(2,R)", "h_indices": [0]}}"#,
            r#"{"isotropic": 1.0}"#,
            r#"{"t_end": 5.0}"#,
        );
        let out = execute(&m, Path::new(".")).unwrap();
        assert!(serde_json::to_value(&out.trajectory.events[0]).unwrap().get("wall_time").is_none());
        let line = events_jsonl(&out.trajectory, "2026-01-01T00:00:00Z");
        let v: Value = serde_json::from_str(line.lines().last().unwrap()).unwrap();
        assert_eq!(v["kind"], "Completed");
        assert_eq!(v["wall_time"], "2026-01-01T00:00:00Z");
    }
}
