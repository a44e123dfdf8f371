use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_singint"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).expect("report exists")).expect("report parses")
}

fn sha256_hex(path: &Path) -> String {
    let bytes = fs::read(path).expect("file readable");
    let mut out = String::new();
    for b in Sha256::digest(&bytes) {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Small deterministic pipeline config; tolerances are opened up because
/// the plumbing under test does not depend on tight numerics.
fn small_config(outdir: &Path) -> Value {
    json!({
        "poly": "x1*x2",
        "levels": [4, 6],
        "sublevel": {"eps_lo": 1e-5, "eps_hi": 1e-2, "points": 10, "samples": 20000},
        "rects": {"count": 2, "j_max": 6, "mc_samples": 10000},
        "pairing": {"tol": 1e-4, "max_level": 40, "nodes": 12},
        "operator": {"grid": 256, "sigma": 0.1},
        "riesz_grid": 24,
        "tolerances": {
            "sublevel_delta": 0.6,
            "sublevel_log_power": 2.8,
            "estimator_agreement": 0.05,
            "stability": 1.5,
            "c_small": 2.1,
            "reconstruction": 1e-9
        },
        "outdir": outdir.to_str().unwrap()
    })
}

fn write_config(dir: &Path, cfg: &Value) -> std::path::PathBuf {
    let path = dir.join("config-in.json");
    fs::write(&path, serde_json::to_vec_pretty(cfg).unwrap()).unwrap();
    path
}

#[test]
fn analyze_emits_the_contracted_invariants() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "analyze",
        "--poly",
        "x1^2*x2^3",
        "--outdir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["schema"], "singint.newton/1");
    assert_eq!(v["newton_distance"], "3");
    assert_eq!(v["delta0"], "1/3");
    assert_eq!(v["multiplicity"], 1);
    assert_eq!(v["vertices"], json!([[2, 3]]));
    assert_eq!(v["central_face"]["dim"], 1);
    assert_eq!(v["central_face"]["vertices"], json!([[2, 3]]));
    let facets = v["facets"].as_array().unwrap();
    assert_eq!(facets.len(), 2);
    assert!(facets.contains(&json!({"normal": ["1", "0"], "offset": "2"})));
    assert!(facets.contains(&json!({"normal": ["0", "1"], "offset": "3"})));

    // the file is the same document that went to stdout
    let on_disk = read_json(&out_dir.join("newton.json"));
    assert_eq!(on_disk, v);
}

#[test]
fn rational_invariants_survive_the_report_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "analyze",
        "--poly",
        "x1^2 + x2^6",
        "--outdir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    // 1/d = 1/2 + 1/6 for the even power sum
    assert_eq!(v["newton_distance"], "3/2");
    assert_eq!(v["delta0"], "2/3");
    assert_eq!(v["multiplicity"], 1);
}

#[test]
fn run_pipeline_is_deterministic_and_checksummed() {
    let tmp = tempfile::tempdir().unwrap();
    let out1 = tmp.path().join("a");
    let out2 = tmp.path().join("b");
    let cfg_path = write_config(tmp.path(), &small_config(&out1));

    let first = run(&["run", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(
        first.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&first.stderr)
    );
    let second = run(&[
        "run",
        "--config",
        cfg_path.to_str().unwrap(),
        "--outdir",
        out2.to_str().unwrap(),
    ]);
    assert_eq!(second.status.code(), Some(0));

    // stage reports and series are byte-identical across reruns
    for name in [
        "newton.json",
        "hypotheses.json",
        "kernel.json",
        "estimates.json",
        "sublevel.csv",
        "decay.csv",
        "multiplier.csv",
        "operator.csv",
    ] {
        let a = fs::read(out1.join(name)).unwrap_or_else(|_| panic!("{name} missing"));
        let b = fs::read(out2.join(name)).unwrap_or_else(|_| panic!("{name} missing"));
        assert_eq!(a, b, "{name} differs between reruns");
    }

    // manifests agree up to wall times and the config file (whose outdir
    // field differs by construction)
    let mut m1 = read_json(&out1.join("manifest.json"));
    let mut m2 = read_json(&out2.join("manifest.json"));
    for m in [&mut m1, &mut m2] {
        for s in m["stages"].as_array_mut().unwrap() {
            s["wall_ms"] = json!(0);
        }
        m["config_sha256"] = json!("");
        let files = m["files"].as_array_mut().unwrap();
        files.retain(|f| f["path"] != "config.json");
    }
    assert_eq!(m1, m2);
    assert_eq!(m1["rollup"], "pass");

    // every checksum in the manifest matches the file on disk
    let manifest = read_json(&out1.join("manifest.json"));
    let files = manifest["files"].as_array().unwrap();
    assert!(files.len() >= 8);
    for f in files {
        let name = f["path"].as_str().unwrap();
        let path = out1.join(name);
        assert_eq!(
            f["sha256"].as_str().unwrap(),
            sha256_hex(&path),
            "checksum mismatch for {name}"
        );
        assert_eq!(
            f["bytes"].as_u64().unwrap(),
            fs::metadata(&path).unwrap().len()
        );
    }
}

#[test]
fn hypothesis_violation_gates_downstream_and_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "run",
        "--poly",
        "x1^2-2*x1*x2+x2^2",
        "--outdir",
        out_dir.to_str().unwrap(),
        "--sublevel-samples",
        "20000",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let manifest = read_json(&out_dir.join("manifest.json"));
    assert_eq!(manifest["rollup"], "hypothesis-violation");
    let stages = manifest["stages"].as_array().unwrap();
    let by_name = |n: &str| stages.iter().find(|s| s["name"] == n).unwrap();
    assert_eq!(by_name("hypotheses")["status"], "hypothesis-violation");
    for name in ["verify-kernel", "verify-estimates"] {
        let s = by_name(name);
        assert_eq!(s["status"], "skipped");
        assert!(s["reason"].as_str().unwrap().contains("hypotheses"));
        assert_eq!(s["report"], Value::Null);
    }
    assert!(!out_dir.join("kernel.json").exists());
    assert!(!out_dir.join("estimates.json").exists());
}

#[test]
fn inadmissible_kernel_still_runs_the_measure_checks() {
    // mixed exponent parity on x1 passes the face screen (the only compact
    // face is the vertex) but the signed kernel cannot be built; the
    // estimates stage must still deliver its measure-side results
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let mut cfg = small_config(&out_dir);
    cfg["poly"] = json!("x1*x2 + x1^4*x2");
    let cfg_path = write_config(tmp.path(), &cfg);
    let out = run(&["run", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let manifest = read_json(&out_dir.join("manifest.json"));
    assert_eq!(manifest["rollup"], "hypothesis-violation");
    let stages = manifest["stages"].as_array().unwrap();
    let kernel = stages.iter().find(|s| s["name"] == "verify-kernel").unwrap();
    assert_eq!(kernel["status"], "hypothesis-violation");
    assert!(kernel["reason"].as_str().unwrap().contains("parity"));
    let est = stages
        .iter()
        .find(|s| s["name"] == "verify-estimates")
        .unwrap();
    assert_eq!(est["status"], "pass");

    let estimates = read_json(&out_dir.join("estimates.json"));
    assert!(estimates["sublevel"]["delta_hat"].is_number());
    let skipped = estimates["skipped"].as_array().unwrap();
    assert!(skipped
        .iter()
        .any(|s| s["reason"].as_str().unwrap().contains("parity")));
    assert!(out_dir.join("sublevel.csv").exists());
    assert!(!out_dir.join("decay.csv").exists());
}

#[test]
fn exhausted_sublevel_budget_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let mut cfg = small_config(&out_dir);
    // three decades of epsilon where every Monte Carlo estimate is zero
    cfg["sublevel"] = json!({
        "eps_lo": 1e-13, "eps_hi": 1e-10, "points": 8, "samples": 20000
    });
    let cfg_path = write_config(tmp.path(), &cfg);
    let out = run(&["run", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest = read_json(&out_dir.join("manifest.json"));
    assert_eq!(manifest["rollup"], "budget-exhausted");
    let estimates = read_json(&out_dir.join("estimates.json"));
    assert!(!estimates["budget_notes"].as_array().unwrap().is_empty());
}

#[test]
fn standalone_verify_kernel_materializes_its_dependencies() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "verify-kernel",
        "--poly",
        "x1*x2",
        "--outdir",
        out_dir.to_str().unwrap(),
        "--pairing-tol",
        "1e-4",
        "--levels",
        "4,6",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    assert_eq!(v["schema"], "singint.kernel/1");
    assert_eq!(v["pass"], true);
    assert!(out_dir.join("newton.json").exists());
    assert!(out_dir.join("hypotheses.json").exists());
    assert!(out_dir.join("kernel.json").exists());
    assert!(!out_dir.join("estimates.json").exists());
    assert!(!out_dir.join("manifest.json").exists());
}

#[test]
fn one_variable_estimates_pass_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let mut cfg = small_config(&out_dir);
    cfg["poly"] = json!("x1^3");
    let cfg_path = write_config(tmp.path(), &cfg);
    let out = run(&["verify-estimates", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    assert_eq!(v["pass"], true);
    assert_eq!(v["delta0"].as_f64().unwrap(), 1.0 / 3.0);
    assert!(out_dir.join("multiplier.csv").exists());
    assert!(out_dir.join("operator.csv").exists());
}

#[test]
fn three_variables_skip_the_unsupported_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let mut cfg = small_config(&out_dir);
    cfg["poly"] = json!("x1*x2*x3");
    let cfg_path = write_config(tmp.path(), &cfg);
    let out = run(&["verify-estimates", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    let skipped: Vec<&str> = v["skipped"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["name"].as_str().unwrap())
        .collect();
    assert!(skipped.contains(&"piece_decay"));
    assert!(skipped.contains(&"multiplier_and_marcinkiewicz"));
    assert!(skipped.contains(&"operator"));
    // the measure-side checks still ran
    assert!(v["sublevel"]["delta_hat"].is_number());
    assert!(v["checks"].as_array().unwrap().len() >= 3);
}

#[test]
fn usage_errors_exit_1() {
    let out = run(&["run", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    let out = run(&["analyze", "--poly", "x1 +"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("polynomial"));

    // constant term is rejected before any stage runs
    let out = run(&["analyze", "--poly", "1 + x1*x2"]);
    assert_eq!(out.status.code(), Some(1));

    // sublevel grid narrower than three decades
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "run",
            "--poly",
            "x1*x2",
            "--eps-lo",
            "1e-3",
            "--eps-hi",
            "1e-2",
            "--outdir",
        ])
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("decades"));
}

#[test]
fn help_and_version_exit_0() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("singint"));

    let out = run(&["--version"]);
    assert_eq!(out.status.code(), Some(0));
}
