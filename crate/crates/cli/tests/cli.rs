use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mvot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvot"))
        .args(args)
        .env_remove("MVOT_CONFIG")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_params(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("params.json");
    let o = mvot(&["keygen", "--gamma", "20", "--n", "5", "--k", "4", "--dim", "32", "--out", p(&path)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    path
}

#[test]
fn keygen_examples() {
    let o = mvot(&["keygen", "--gamma", "54", "--n", "5", "--k", "5", "--m", "2000"]);
    assert_eq!(code(&o), 0);
    let params = json(&o);
    assert_eq!(params["m"], 2000);
    assert_eq!(params["dim"], 512);
    let minimal = json(&mvot(&["keygen", "--gamma", "54", "--n", "5", "--k", "5"]));
    assert_eq!(minimal["m"], 1783);

    assert_eq!(code(&mvot(&["keygen", "--gamma", "0"])), 2);
    let o = mvot(&["keygen", "--gamma", "54", "--k", "4", "--m", "2000"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("43.86"));
}

#[test]
fn enroll_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let params = small_params(dir.path());
    let helper = dir.path().join("h.mvot");
    let o = mvot(&[
        "enroll", "--params", p(&params), "--template", "synthetic:3", "--out", p(&helper), "--seed", "1",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = json(&o);
    let m = summary["params"]["m"].as_u64().unwrap() as usize;
    let size = std::fs::metadata(&helper).unwrap().len() as usize;
    let entries = 4 * 32 * 5 * (m + 1);
    // Header, params and salt; per-vault headers; 5 commitments of 4
    // indices; checksum.
    let metadata = 8 + 56 + 16 + 5 * 8 + 4 + 5 * (4 + 16 + 32) + 4;
    assert_eq!(size, entries + metadata);

    let o = mvot(&["verify", "--helper", p(&helper), "--query", "synthetic:3", "--tr", "1"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["decision"], "accept");
    assert_eq!(v["diagnostics"]["hash_count"], 1);

    let o = mvot(&["verify", "--helper", p(&helper), "--query", "unrelated", "--seed", "5"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["decision"], "reject");

    assert_eq!(code(&mvot(&["verify", "--helper", p(&helper), "--query", "synthetic:3", "--tr", "0"])), 2);
}

#[test]
fn enrollment_salt_is_fresh_without_seed() {
    let dir = tempfile::tempdir().unwrap();
    let params = small_params(dir.path());
    let a = dir.path().join("a.mvot");
    let b = dir.path().join("b.mvot");
    for out in [&a, &b] {
        let o = mvot(&["enroll", "--params", p(&params), "--template", "synthetic:0", "--out", p(out)]);
        assert_eq!(code(&o), 0);
    }
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    for h in [&a, &b] {
        assert_eq!(code(&mvot(&["verify", "--helper", p(h), "--query", "synthetic:0", "--tr", "1"])), 0);
    }

    let c = dir.path().join("c.mvot");
    let d = dir.path().join("d.mvot");
    for out in [&c, &d] {
        let o = mvot(&["enroll", "--params", p(&params), "--template", "synthetic:0", "--out", p(out), "--seed", "9"]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(std::fs::read(&c).unwrap(), std::fs::read(&d).unwrap());
}

#[test]
fn simulate_then_enroll_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let params = small_params(dir.path());
    let m = json(&mvot(&["keygen", "--gamma", "20", "--n", "5", "--k", "4", "--dim", "32"]))["m"]
        .as_u64()
        .unwrap() as usize;
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"num_identities": 4, "dim": 32, "n_channels": 5,
        "genuine_cos": {"mean": 0.9, "std": 0.05, "lo": 0.8, "hi": 1.0},
        "imposter_cos": {"mean": 0.3, "std": 0.05, "lo": 0.2, "hi": 0.4},
        "unrelated_cos": {"mean": 0.0, "std": 0.1, "lo": -0.25, "hi": 0.25},
        "rng_seed": 0}"#)
    .unwrap();
    let faces = dir.path().join("faces.csv");
    let chaff = dir.path().join("chaff.csv");
    let short = dir.path().join("short.csv");
    let count = (5 * m).to_string();
    let o = mvot(&[
        "simulate", "--spec", p(&spec), "--out", p(&faces), "--chaff", &count, "--chaff-out", p(&chaff),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["rows"], 20);

    let helper = dir.path().join("h.mvot");
    let enroll = |chaff: &Path| {
        mvot(&[
            "enroll", "--params", p(&params), "--template", p(&faces), "--identity", "id-2", "--chaff", p(chaff),
            "--out", p(&helper),
        ])
    };
    let o = enroll(&chaff);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = mvot(&["verify", "--helper", p(&helper), "--query", p(&faces), "--identity", "id-2", "--tr", "1"]);
    assert_eq!(code(&o), 0);
    let o = mvot(&["verify", "--helper", p(&helper), "--query", p(&faces), "--identity", "id-1", "--tr", "1"]);
    assert_eq!(code(&o), 1);

    let fewer = (5 * m - 3).to_string();
    let o = mvot(&["simulate", "--spec", p(&spec), "--out", p(&faces), "--chaff", &fewer, "--chaff-out", p(&short)]);
    assert_eq!(code(&o), 0);
    let o = enroll(&short);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("short by 3"));

    let o = mvot(&["enroll", "--params", p(&params), "--template", p(&faces), "--out", p(&helper)]);
    assert_eq!(code(&o), 2, "ambiguous identity is a usage error");
}

#[test]
fn attack_small_and_refused() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("tiny.json");
    let o = mvot(&["keygen", "--gamma", "3", "--n", "2", "--k", "2", "--dim", "8", "--m", "3", "--out", p(&params)]);
    assert_eq!(code(&o), 0);
    let helper = dir.path().join("tiny.mvot");
    let o = mvot(&["enroll", "--params", p(&params), "--template", "synthetic:0", "--out", p(&helper), "--seed", "2"]);
    assert_eq!(code(&o), 0);
    let o = mvot(&["attack", "--helper", p(&helper), "--seed", "3"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert!(r["result"]["tries_to_success"].as_u64().unwrap() <= 16);
    assert_eq!(r["seed"], 3);

    let big = dir.path().join("big.mvot");
    let o = mvot(&["enroll", "--template", "synthetic:0", "--out", p(&big), "--seed", "2"]);
    assert_eq!(code(&o), 0);
    let o = mvot(&["attack", "--helper", p(&big)]);
    assert_ne!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("54.8 bits"));
}

#[test]
fn format_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.mvot");
    std::fs::write(&junk, b"not a helper file").unwrap();
    assert_eq!(code(&mvot(&["verify", "--helper", p(&junk), "--query", "unrelated"])), 3);
    let empty = dir.path().join("empty.mvot");
    std::fs::write(&empty, b"").unwrap();
    assert_eq!(code(&mvot(&["attack", "--helper", p(&empty)])), 3);
    assert_eq!(code(&mvot(&["verify", "--helper", "/nonexistent/h.mvot", "--query", "unrelated"])), 3);
}

#[test]
fn bench_writes_artifacts_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let pop = r#"{"num_identities": 20, "dim": 32, "n_channels": 5,
        "genuine_cos": {"mean": 0.9, "std": 0.05, "lo": 0.8, "hi": 1.0},
        "imposter_cos": {"mean": 0.3, "std": 0.05, "lo": 0.2, "hi": 0.4},
        "unrelated_cos": {"mean": 0.0, "std": 0.1, "lo": -0.25, "hi": 0.25},
        "rng_seed": 0}"#;
    let params = |m: u32, k: u32| {
        format!(
            r#"{{"gamma": 20, "n": 5, "m": {m}, "k": {k}, "tr": 3, "dim": 32, "scalar_range": [0.5, 2.0],
            "noise_delta": 0.05, "hash_version": 1}}"#
        )
    };
    std::fs::write(
        &cfg,
        format!(
            r#"{{"bench": {{"population": {pop}, "params_grid": [{}, {}],
            "tr_sweep": [1, 2, 3], "table_tr": 2, "genuine_trials": 100, "imposter_trials": 100,
            "enrollments": 5, "rng_seed": 1}}}}"#,
            params(100, 5),
            params(100, 4)
        ),
    )
    .unwrap();
    let out = dir.path().join("out");
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_mvot"))
            .args(["bench", "--out", p(&out), "--threads", "2"])
            .env("MVOT_CONFIG", &cfg)
            .output()
            .unwrap()
    };
    let o = run();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "roc.csv",
        "roc_1.csv",
        "table.csv",
        "timing.csv",
        "hist_genuine.csv",
        "hist_imposter.csv",
        "hist_chaff.csv",
        "report.json",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let roc = std::fs::read_to_string(out.join("roc.csv")).unwrap();
    assert_eq!(roc.lines().next(), Some("fpr,tpr,tr"));
    assert_eq!(roc.lines().count(), 4);
    let table = std::fs::read_to_string(out.join("table.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);

    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["rng_seed"], 1);
    let first = std::fs::read_to_string(out.join("table.csv")).unwrap();
    assert_eq!(code(&run()), 0);
    assert_eq!(std::fs::read_to_string(out.join("table.csv")).unwrap(), first);
}
