use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hflow"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hflow-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_manifest(dir: &Path, body: &str) -> Output {
    let m = dir.join("manifest.in.json");
    fs::write(&m, body).unwrap();
    bin()
        .args(["run", "--manifest"])
        .arg(&m)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn sl2_isotropic_is_immortal_and_consistent() {
    let dir = scratch("sl2");
    let out = run_manifest(
        &dir,
        r#"{"space": {"catalog": "sl2r_trivial"}, "initial": {"isotropic": 1.0}, "flow": {"t_end": 1e4}}"#,
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = read_json(&dir.join("out/summary.json"));
    assert_eq!(s["regime"], "immortal");
    assert_eq!(s["profile_verdict"], "consistent");
    for f in ["samples.csv", "events.jsonl", "decomposition.json", "manifest.json", "profile.gp"] {
        assert!(dir.join("out").join(f).exists(), "{f} missing");
    }
}

#[test]
fn sl3_isotropic_is_extinct_with_finite_t() {
    let dir = scratch("sl3");
    let out = run_manifest(&dir, r#"{"space": {"catalog": "sl3r_trivial"}, "initial": {"isotropic": 1.0}}"#);
    assert_eq!(out.status.code(), Some(0));
    let s = read_json(&dir.join("out/summary.json"));
    assert_eq!(s["regime"], "extinct");
    let t = s["t_estimate"].as_f64().unwrap();
    assert!(t.is_finite() && t > 0.0);
    let events = fs::read_to_string(dir.join("out/events.jsonl")).unwrap();
    let last: Value = serde_json::from_str(events.lines().last().unwrap()).unwrap();
    assert_eq!(last["kind"], "Extinction");
    assert!(last["wall_time"].is_string());
}

#[test]
fn compact_so3_is_an_invalid_cartan_split() {
    let dir = scratch("so3");
    let doc = r#"{"dim": 3, "basis": ["e1", "e2", "e3"],
        "brackets": [[0, 1, 2, 1.0], [1, 2, 0, 1.0], [2, 0, 1, 1.0]],
        "k_indices": [0, 1, 2], "p_indices": []}"#;
    fs::write(dir.join("so3.json"), doc).unwrap();
    let out = run_manifest(&dir, r#"{"space": {"file": "so3.json"}, "initial": {"isotropic": 1.0}}"#);
    assert_eq!(out.status.code(), Some(3));
    let e = read_json(&dir.join("out/error.json"));
    assert_eq!(e["error"], "InvalidCartanSplit");
    assert!(e["message"].as_str().unwrap().contains("p is empty"));
}

#[test]
fn malformed_manifest_is_input_error() {
    let dir = scratch("bad");
    let out = run_manifest(&dir, r#"{"space": {"catalog": "sl2r_trivial"}}"#);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(read_json(&dir.join("out/error.json"))["error"], "InputError");
}

#[test]
fn untied_sl3_start_breaks_diagonality() {
    let dir = scratch("untied");
    let out = run_manifest(
        &dir,
        r#"{"space": {"catalog": "sl3r_trivial"}, "ties": [],
            "initial": {"explicit": [1.0, 2.0, 3.0, 1.0, 1.5, 2.5, 1.0, 1.0]}}"#,
    );
    assert_eq!(out.status.code(), Some(5));
    let e = read_json(&dir.join("out/error.json"));
    assert_eq!(e["error"], "DiagonalityBroken");
    assert!(e["ratio"].as_f64().unwrap() > 1e-8);
}

#[test]
fn runs_are_reproducible_from_the_seed() {
    let body = r#"{"space": {"catalog": "so_3_2_mod_so_3"}, "initial": {"random": {"lo": 0.1, "hi": 10.0}},
        "flow": {"t_end": 100.0}, "seed": 11}"#;
    let a = scratch("rep-a");
    let b = scratch("rep-b");
    assert_eq!(run_manifest(&a, body).status.code(), Some(0));
    assert_eq!(run_manifest(&b, body).status.code(), Some(0));
    for f in ["summary.json", "samples.csv", "decomposition.json"] {
        assert_eq!(
            fs::read(a.join("out").join(f)).unwrap(),
            fs::read(b.join("out").join(f)).unwrap(),
            "{f} differs"
        );
    }
    assert_eq!(read_json(&a.join("out/summary.json"))["seed"], 11);
}

#[test]
fn sweep_runs_batches_into_separate_directories() {
    let dir = scratch("sweep");
    let m = dir.join("m.json");
    fs::write(
        &m,
        r#"{"space": {"catalog": "sl2r_trivial"}, "initial": {"random": {"lo": 0.1, "hi": 10.0}}, "flow": {"t_end": 50.0}}"#,
    )
    .unwrap();
    let out = bin()
        .args(["sweep", "--runs", "3", "--batch", "2", "--seed", "5", "--manifest"])
        .arg(&m)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let idx = read_json(&dir.join("out/sweep.json"));
    assert_eq!(idx.as_array().unwrap().len(), 3);
    for sd in 5..8 {
        let s = read_json(&dir.join(format!("out/seed_{sd}/summary.json")));
        assert_eq!(s["seed"], sd);
    }
}

#[test]
fn tol_override_reaches_the_manifest_copy() {
    let dir = scratch("tol");
    let m = dir.join("m.json");
    fs::write(&m, r#"{"space": {"catalog": "hyperbolic_plane"}, "initial": {"isotropic": 2.0}, "flow": {"t_end": 10.0}}"#)
        .unwrap();
    let out = bin()
        .args(["run", "--tol", "1e-9", "--manifest"])
        .arg(&m)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let copy = read_json(&dir.join("out/manifest.json"));
    assert_eq!(copy["flow"]["rel_tol"], 1e-9);
}

#[test]
fn check_isotropy_passes() {
    let out = bin().args(["check", "isotropy"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("bracket sum identity"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn check_all_is_deterministic() {
    let a = bin().args(["check", "all", "--seed", "4"]).output().unwrap();
    let b = bin().args(["check", "all", "--seed", "4"]).output().unwrap();
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn unknown_suite_is_input_error() {
    assert_eq!(bin().args(["check", "nope"]).output().unwrap().status.code(), Some(2));
}

#[test]
fn catalog_lists_regimes_and_modules() {
    let out = bin().arg("catalog").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("sl2r_trivial: dim 3") && text.contains("regime contractible"));
    assert!(text.lines().any(|l| l.starts_with("sl3r_trivial: dim 8") && l.contains("regime non-contractible")));
    assert!(text.lines().any(|l| l.starts_with("so_3_2_mod_so_3") && l.contains("3 modules")));
}
