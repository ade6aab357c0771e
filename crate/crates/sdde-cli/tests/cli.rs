use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn sdde(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdde"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn error_record(o: &Output) -> Value {
    let line = String::from_utf8_lossy(&o.stderr)
        .lines()
        .last()
        .unwrap_or_default()
        .to_string();
    serde_json::from_str(&line).expect("stderr ends with a json record")
}

#[test]
fn manifest_hashes_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = sdde(&["cmf", "--order", "3"], dir.path());
    assert!(o.status.success());
    let m = manifest(dir.path());
    assert_eq!(m["status"], "ok");
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    let files = m["files"].as_object().unwrap();
    for name in ["cmf.json", "cmf.txt", "plot.py"] {
        let entry = &files[name];
        let data = std::fs::read(dir.path().join(name)).unwrap();
        assert_eq!(entry["sha256"], hex::encode(Sha256::digest(&data)));
        assert_eq!(entry["bytes"], data.len());
    }
    assert!(m["runtimes_s"]["total"].as_f64().unwrap() >= 0.0);
}

#[test]
fn lemma_check_prints_an_exact_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = sdde(&["cmf", "--order", "2", "--check-lemma"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("2/3 - 2/1 b"));
    assert!(stdout.contains("all exact"));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("lemma.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], true);
}

#[test]
fn identical_runs_give_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = [
        "simulate", "--alpha", "-0.1", "--beta", "-1.7", "--t-end", "30", "--seed", "42",
    ];
    assert!(sdde(&args, a.path()).status.success());
    assert!(sdde(&args, b.path()).status.success());
    for f in ["timeseries.csv", "breakpoints.csv", "summary.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let c = tempfile::tempdir().unwrap();
    let other = [
        "simulate", "--alpha", "-0.1", "--beta", "-1.7", "--t-end", "30", "--seed", "43",
    ];
    assert!(sdde(&other, c.path()).status.success());
    assert_ne!(
        std::fs::read(a.path().join("timeseries.csv")).unwrap(),
        std::fs::read(c.path().join("timeseries.csv")).unwrap()
    );
}

#[test]
fn worker_count_does_not_change_output() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(sdde(
        &["stab", "--alpha", "0.2", "--beta", "-1.5", "--workers", "1"],
        a.path()
    )
    .status
    .success());
    assert!(sdde(
        &["stab", "--alpha", "0.2", "--beta", "-1.5", "--workers", "3"],
        b.path()
    )
    .status
    .success());
    for f in ["H.csv", "Z.csv", "roots.csv", "scan.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn floats_carry_seventeen_digits() {
    let dir = tempfile::tempdir().unwrap();
    assert!(sdde(&["stab"], dir.path()).status.success());
    let csv = std::fs::read_to_string(dir.path().join("H.csv")).unwrap();
    let cell = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    let mantissa = cell.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17, "{cell}");
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.toml");
    std::fs::write(&cfg, "alpha = 0.5\nbeta = -1.2\nt_end = 5.0\nseed = 9\n").unwrap();
    let out = dir.path().join("run");
    let o = sdde(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--alpha",
            "-0.3",
        ],
        &out,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let opts = &manifest(&out)["options"]["command"];
    assert_eq!(opts["alpha"], -0.3);
    assert_eq!(opts["beta"], -1.2);
    assert_eq!(opts["t_end"], 5.0);
    assert_eq!(opts["seed"], 9);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "alpha = 0.5\nperiod_kap = 10\n").unwrap();
    let o = sdde(
        &["stab", "--config", cfg.to_str().unwrap()],
        &dir.path().join("run"),
    );
    assert_eq!(o.status.code(), Some(2));
    let rec = error_record(&o);
    assert_eq!(rec["kind"], "config");
    assert_eq!(rec["exit_code"], 2);
    assert!(rec["message"].as_str().unwrap().contains("period_kap"));
}

#[test]
fn invalid_values_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        sdde(&["simulate", "--tol", "-1"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        sdde(&["branch", "--b", "0"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        sdde(&["planar", "--order", "2"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        sdde(&["simulate", "--b", "-0.5"], dir.path()).status.code(),
        Some(2)
    );
}

#[test]
fn vanishing_delay_is_a_physicality_stop() {
    let dir = tempfile::tempdir().unwrap();
    let o = sdde(
        &[
            "simulate",
            "--alpha",
            "1",
            "--beta",
            "0",
            "--history",
            "-0.5",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(error_record(&o)["kind"], "physicality");
    let m = manifest(dir.path());
    assert_eq!(m["status"], "error");
    assert!(m["files"].get("timeseries.csv").is_some());
    assert!(dir.path().join("error.json").exists());
}

#[test]
fn branch_writes_schema_and_orbits() {
    let dir = tempfile::tempdir().unwrap();
    let o = sdde(
        &[
            "branch",
            "--b",
            "0",
            "--beta",
            "-1.7",
            "--free",
            "alpha",
            "--period-cap",
            "12",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("branch.csv")).unwrap();
    assert!(csv.starts_with("index,alpha,beta,b,period,amplitude,min_u,max_u,slope_est,n_unstable,fold_tf,min_plus_one,event\n"));
    assert!(csv.contains("FOLD"));
    let events = std::fs::read_to_string(dir.path().join("events.csv")).unwrap();
    assert!(events.contains("PERIOD_CAP"));
    let orbit: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("orbits/last.json")).unwrap(),
    )
    .unwrap();
    for key in ["alpha", "beta", "b", "period", "mesh", "coeffs", "metrics"] {
        assert!(orbit.get(key).is_some(), "{key}");
    }
}

#[test]
fn planar_section_emits_objects() {
    let dir = tempfile::tempdir().unwrap();
    let o = sdde(&["planar", "--b", "0.34"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("planar.csv")).unwrap();
    assert!(csv.starts_with("b,p,q,object,"));
    for obj in [",Z,", ",H,", ",GH,", ",F,"] {
        assert!(csv.contains(obj), "missing {obj}");
    }
}
