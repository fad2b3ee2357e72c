use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use hflow::asymptotics::{plot_data, plot_script};
use hflow::catalog::{preset, PRESETS};
use hflow::checks::run_suite;
use hflow::isotropy::{classify_topology, ReductiveSpace};
use hflow::run::{error_json, events_jsonl, execute, samples_csv, RunManifest, RunOutcome};
use hflow::{Error, Result};

const DEFAULT_OUT: &str = "hflow_out";

#[derive(Parser)]
#[command(name = "hflow", version, about = "Homogeneous Ricci flow of awesome metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one run manifest and write its artifacts.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides both integrator tolerances.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run an invariant suite over the catalog.
    Check {
        /// algebra, isotropy, curvature, flow, asymptotics or all.
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the check lines as JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List catalog presets.
    Catalog,
    /// Repeat a manifest over consecutive seeds.
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// First seed; defaults to the manifest's.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 10)]
        runs: u64,
        /// Runs executed concurrently.
        #[arg(long, default_value_t = 1)]
        batch: usize,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Input(_) | Error::Io(_) | Error::Json(_) => 2,
        Error::IntegratorFailure { .. } => 4,
        Error::MonitorViolation(_) | Error::DiagonalityBroken { .. } => 5,
        _ => 3,
    }
}

fn write_json(path: &Path, v: &impl serde::Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

fn load_manifest(path: &Path, seed: Option<u64>, tol: Option<f64>) -> Result<RunManifest> {
    let mut m = RunManifest::load(path)?;
    if let Some(s) = seed {
        m.seed = s;
    }
    if let Some(t) = tol {
        m.flow.rel_tol = t;
        m.flow.abs_tol = t;
        m.flow.validate()?;
    }
    Ok(m)
}

fn write_artifacts(out: &RunOutcome, dir: &Path) -> Result<()> {
    let wall = chrono::Utc::now().to_rfc3339();
    fs::write(dir.join("samples.csv"), samples_csv(out))?;
    fs::write(dir.join("events.jsonl"), events_jsonl(&out.trajectory, &wall))?;
    write_json(&dir.join("decomposition.json"), &out.decomposition)?;
    write_json(&dir.join("monitors.json"), &out.monitors)?;
    if let Some(ex) = &out.extinction {
        write_json(&dir.join("extinction.json"), ex)?;
    }
    match &out.profile {
        Some(p) => {
            write_json(&dir.join("profile.json"), p)?;
            fs::write(dir.join("profile.dat"), plot_data(p))?;
            fs::write(dir.join("profile.gp"), plot_script(p, "profile.dat"))?;
        }
        None => {
            let note = out.profile_note.clone().unwrap_or_default();
            write_json(&dir.join("profile.json"), &json!({ "profile": null, "note": note }))?;
        }
    }
    out.summary.validate()?;
    write_json(&dir.join("summary.json"), &out.summary)
}

/// Runs a manifest into `dir`; every failure leaves an `error.json`.
fn run_into(manifest: &RunManifest, base: &Path, dir: &Path) -> (u8, Option<Value>) {
    if let Err(e) = fs::create_dir_all(dir) {
        eprintln!("cannot create {}: {e}", dir.display());
        return (2, None);
    }
    let result = (|| -> Result<RunOutcome> {
        write_json(&dir.join("manifest.json"), manifest)?;
        let out = execute(manifest, base)?;
        write_artifacts(&out, dir)?;
        Ok(out)
    })();
    let err = match result {
        Ok(out) => match out.failure() {
            None => return (0, serde_json::to_value(&out.summary).ok()),
            Some(e) => e,
        },
        Err(e) => e,
    };
    let doc = error_json(&err);
    if let Err(w) = write_json(&dir.join("error.json"), &doc) {
        eprintln!("cannot write error.json: {w}");
    }
    eprintln!("{err}");
    (exit_code(&err), Some(doc))
}

fn base_dir(manifest: &Path) -> PathBuf {
    manifest.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn out_dir(cli: Option<PathBuf>, m: &RunManifest) -> PathBuf {
    cli.or_else(|| m.output.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn cmd_run(manifest: &Path, out: Option<PathBuf>, seed: Option<u64>, tol: Option<f64>) -> u8 {
    let m = match load_manifest(manifest, seed, tol) {
        Ok(m) => m,
        Err(e) => return report_early(&e, out.as_deref()),
    };
    let dir = out_dir(out, &m);
    let (code, doc) = run_into(&m, &base_dir(manifest), &dir);
    if let Some(d) = doc {
        println!("{}", serde_json::to_string_pretty(&d).unwrap_or_default());
    }
    code
}

/// Failure before a run directory exists; writes error.json if `out` is given.
fn report_early(e: &Error, out: Option<&Path>) -> u8 {
    let doc = error_json(e);
    if let Some(dir) = out {
        if fs::create_dir_all(dir).is_ok() {
            let _ = write_json(&dir.join("error.json"), &doc);
        }
    }
    eprintln!("{e}");
    println!("{doc}");
    exit_code(e)
}

fn cmd_check(suite: &str, seed: u64, out: Option<PathBuf>) -> u8 {
    let lines = match run_suite(suite, seed) {
        Ok(l) => l,
        Err(e) => return report_early(&e, None),
    };
    for l in &lines {
        println!("{l}");
    }
    let failed = lines.iter().filter(|l| !l.pass).count();
    println!("{} checks, {failed} failed", lines.len());
    if let Some(path) = out {
        if let Err(e) = write_json(&path, &lines) {
            return report_early(&e, None);
        }
    }
    if failed == 0 {
        0
    } else {
        3
    }
}

fn cmd_catalog() -> u8 {
    for e in PRESETS {
        let built = preset(e.key).and_then(|c| {
            let space = ReductiveSpace::build(&c.algebra, &c.split, &c.h_indices, 0)?;
            Ok((c, space))
        });
        let (c, space) = match built {
            Ok(v) => v,
            Err(err) => return report_early(&err, None),
        };
        let regime = if classify_topology(&space).contractible { "contractible" } else { "non-contractible" };
        println!(
            "{}: dim {}, k {}, p {}, h {}, {} modules {:?}, regime {} ({})",
            e.key,
            c.algebra.dim(),
            c.split.k_indices.len(),
            c.split.p_indices.len(),
            c.h_indices.len(),
            space.n_modules(),
            space.dims(),
            regime,
            e.description
        );
    }
    0
}

fn cmd_sweep(
    manifest: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
    tol: Option<f64>,
    runs: u64,
    batch: usize,
) -> u8 {
    let m = match load_manifest(manifest, seed, tol) {
        Ok(m) => m,
        Err(e) => return report_early(&e, out.as_deref()),
    };
    let root = out_dir(out, &m);
    let base = base_dir(manifest);
    let seeds: Vec<u64> = (0..runs).map(|k| m.seed.wrapping_add(k)).collect();
    let mut results: Vec<(u64, u8, Option<Value>)> = Vec::new();
    for chunk in seeds.chunks(batch.max(1)) {
        std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&sd| {
                    let mut mk = m.clone();
                    mk.seed = sd;
                    let dir = root.join(format!("seed_{sd}"));
                    let base = &base;
                    s.spawn(move || {
                        let (code, doc) = run_into(&mk, base, &dir);
                        (sd, code, doc)
                    })
                })
                .collect();
            for h in handles {
                results.push(h.join().unwrap_or((0, 4, None)));
            }
        });
    }
    let index: Vec<Value> = results
        .iter()
        .map(|(sd, code, doc)| {
            json!({
                "seed": sd,
                "exit_code": code,
                "dir": format!("seed_{sd}"),
                "regime": doc.as_ref().and_then(|d| d.get("regime").cloned()),
                "t_estimate": doc.as_ref().and_then(|d| d.get("t_estimate").cloned()),
            })
        })
        .collect();
    for r in &index {
        println!("{r}");
    }
    if let Err(e) = write_json(&root.join("sweep.json"), &index) {
        return report_early(&e, None);
    }
    results.iter().map(|r| r.1).max().unwrap_or(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { manifest, out, seed, tol } => cmd_run(&manifest, out, seed, tol),
        Command::Check { suite, seed, out } => cmd_check(&suite, seed, out),
        Command::Catalog => cmd_catalog(),
        Command::Sweep {
            manifest,
            out,
            seed,
            tol,
            runs,
            batch,
        } => cmd_sweep(&manifest, out, seed, tol, runs, batch),
    };
    ExitCode::from(code)
}
