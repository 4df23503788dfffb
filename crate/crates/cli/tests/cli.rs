use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn mppstat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mppstat"))
        .args(args)
        .env("MPPSTAT_THREADS", "2")
        .output()
        .expect("spawn mppstat")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn small_config() -> Value {
    json!({
        "spec": {
            "dim": 1,
            "classes": [
                {"p": 0.5, "ground": {"kind": "poisson", "intensity": 1.0},
                 "marks": {"kind": "iid", "law": "normal", "mean": 0.0, "sd": 1.0}},
                {"p": 0.5, "ground": {"kind": "poisson", "intensity": 4.0},
                 "marks": {"kind": "iid", "law": "normal", "mean": 10.0, "sd": 1.0}}
            ]
        },
        "window": 20.0,
        "bands": [{"lo": 0.5, "hi": 1.5}],
        "f": {"name": "first"},
        "estimators": [{"kind": "mu_hat_n"}, {"kind": "mu_hat_alpha"}],
        "n_realizations": 3,
        "seed": 7
    })
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(path: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            headers.iter().map(String::from).zip(rec.iter().map(String::from)).collect()
        })
        .collect()
}

#[test]
fn simulate_writes_patterns_and_manifest_reproducibly() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &small_config());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = mppstat(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let mut names: Vec<String> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 4, "{names:?}");
    assert!(names.contains(&"manifest.json".to_string()));
    for name in &names {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
    let manifest: Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["realizations"].as_array().unwrap().len(), 3);

    let other = tmp.path().join("c");
    let o = mppstat(&["simulate", "--config", &cfg, "--seed", "8", "--out", other.to_str().unwrap()]);
    assert!(o.status.success());
    assert_ne!(fs::read(a.join(&names[0])).unwrap(), fs::read(other.join(&names[0])).unwrap());
}

#[test]
fn estimate_is_deterministic_and_matches_saved_patterns() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_config();
    cfg["n_realizations"] = json!(20);
    let cfg = write_config(tmp.path(), "c.json", &cfg);
    let (r1, r2, r3) = (tmp.path().join("r1.csv"), tmp.path().join("r2.csv"), tmp.path().join("r3.csv"));
    for out in [&r1, &r2] {
        let o = mppstat(&["estimate", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&r1).unwrap(), fs::read(&r2).unwrap());

    let pats = tmp.path().join("pats");
    assert!(mppstat(&["simulate", "--config", &cfg, "--out", pats.to_str().unwrap()]).status.success());
    let o = mppstat(&[
        "estimate", "--config", &cfg, "--patterns", pats.to_str().unwrap(), "--out", r3.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (sim, saved) = (read_csv(&r1), read_csv(&r3));
    assert_eq!(sim.len(), 2);
    for (a, b) in sim.iter().zip(&saved) {
        assert_eq!(a["estimator"], b["estimator"]);
        let (x, y): (f64, f64) = (a["value"].parse().unwrap(), b["value"].parse().unwrap());
        assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{x} vs {y}");
        assert!(!a["target"].is_empty(), "closed-form target missing");
    }
}

#[test]
fn weights_flag_adds_weighted_rows() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_config();
    cfg["estimators"] = json!([{"kind": "mu_hat_weighted"}]);
    cfg["n_realizations"] = json!(10);
    let cfg = write_config(tmp.path(), "c.json", &cfg);
    let out = tmp.path().join("r.csv");
    let o = mppstat(&["estimate", "--config", &cfg, "--weights", "count", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(&out);
    assert_eq!(rows[0]["weights"], "count");
    assert_eq!(rows[0]["weights_digest"].len(), 16);

    let o = mppstat(&["estimate", "--config", &cfg, "--weights", "rfvar", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "rfvar without covariance must fail");
}

#[test]
fn malformed_pattern_names_file_and_line() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &small_config());
    let pats = tmp.path().join("pats");
    assert!(mppstat(&["simulate", "--config", &cfg, "--out", pats.to_str().unwrap()]).status.success());
    fs::remove_file(pats.join("manifest.json")).unwrap();
    fs::write(pats.join("pattern_1.csv"), "# dim=1\nx1,y,z\n0.5,1.0,1.0\nnot-a-number,2.0,1.0\n").unwrap();
    let o = mppstat(&["estimate", "--config", &cfg, "--patterns", pats.to_str().unwrap(), "--out", "/dev/null"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("pattern_1.csv"), "{err}");
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn bad_config_is_an_input_error() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_config();
    cfg["unknown_key"] = json!(1);
    let path = write_config(tmp.path(), "c.json", &cfg);
    let o = mppstat(&["simulate", "--config", &path, "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown_key"), "{}", stderr(&o));
}

#[test]
fn undefined_estimates_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_config();
    cfg["spec"]["classes"] = json!([
        {"p": 1.0, "ground": {"kind": "grid", "spacing": 10.0},
         "marks": {"kind": "iid", "law": "normal", "mean": 0.0, "sd": 1.0}}
    ]);
    let cfg = write_config(tmp.path(), "c.json", &cfg);
    let out = tmp.path().join("r.csv");
    let o = mppstat(&["estimate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let rows = read_csv(&out);
    assert!(rows.iter().all(|r| r["value"].is_empty()));
    assert!(rows.iter().any(|r| r["exclusions"] == "3"));
}

#[test]
fn report_summarizes_against_the_oracle() {
    let tmp = TempDir::new().unwrap();
    let mut cfg: Value = serde_json::from_str(&fs::read_to_string(configs().join("two_class.json")).unwrap()).unwrap();
    cfg["n_replicates"] = json!(12);
    let cfg = write_config(tmp.path(), "two_class.json", &cfg);
    let results = tmp.path().join("results.csv");
    let o = mppstat(&["estimate", "--config", &cfg, "--out", results.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = mppstat(&["report", "--results", results.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(tmp.path().join("plot.gp").exists());
    let summary = read_csv(&tmp.path().join("summary.csv"));
    let get = |est: &str| summary.iter().find(|r| r["estimator"] == est).unwrap();
    for (est, target) in [("mu_hat_alpha", 160.0 / 17.0), ("mu_hat_n", 5.0)] {
        let row = get(est);
        let (mean, var): (f64, f64) = (row["mean"].parse().unwrap(), row["variance"].parse().unwrap());
        let t: f64 = row["target"].parse().unwrap();
        assert!((t - target).abs() < 1e-9, "{est} target {t}");
        let se = (var / 12.0).sqrt();
        assert!((mean - target).abs() < 4.0 * se, "{est}: mean {mean}, se {se}, target {target}");
    }
    let sep = get("mu_hat_alpha")["mean"].parse::<f64>().unwrap() - get("mu_hat_n")["mean"].parse::<f64>().unwrap();
    assert!(sep > 3.0, "separation {sep}");
}

#[test]
fn infer_clt_writes_statistics() {
    let tmp = TempDir::new().unwrap();
    let mut cfg: Value = serde_json::from_str(&fs::read_to_string(configs().join("clt_grid.json")).unwrap()).unwrap();
    cfg["n_realizations"] = json!(40);
    cfg["window"] = json!(100.0);
    let cfg = write_config(tmp.path(), "clt.json", &cfg);
    let out = tmp.path().join("clt.csv");
    let o = mppstat(&["infer", "clt", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(summary.is_object());
    let rows = read_csv(&out);
    assert_eq!(rows.len(), 40);
    assert!(rows.iter().all(|r| r["centered_stat"].parse::<f64>().unwrap().is_finite()));
}
