use std::path::Path;
use std::process::Command;

fn difftransfer(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_difftransfer")).args(args).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap(), text)
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const QUICK: &str = r#""q": {"n_pre": 64, "pretrain_epochs": 50, "fit_epochs": 10}"#;

#[test]
fn validate_config_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", r#"{"name": "g", "kind": "revolute", "target": "source", "method": "direct"}"#);
    let (code, text) = difftransfer(&["validate-config", &good]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("hash"));
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"name": "b", "kind": "revolute", "target": "source", "method": "direct", "transfer": {"eta": -1, "n_epoch": 5, "eps_t": 1e-4, "grad_clip": 1}}"#,
    );
    assert_eq!(difftransfer(&["validate-config", &bad]).0, 2);
    let broken = write(dir.path(), "broken.json", "{ not json");
    assert_eq!(difftransfer(&["validate-config", &broken]).0, 2);
    assert_eq!(difftransfer(&["validate-config", "/nonexistent/config.json"]).0, 2);
}

#[test]
fn run_aggregate_and_landscape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "near.json",
        &format!(r#"{{"name": "near", "kind": "prismatic", "target": {{"offset": {{"tx": 0.03, "ty": 0.0, "degrees": 0.0}}}}, "method": "diff-transfer", {QUICK}}}"#),
    );
    let out = dir.path().join("runs");
    let out_s = out.to_string_lossy().into_owned();
    let (code, text) = difftransfer(&["run", "--config", &cfg, "--seeds", "0,1", "--out", &out_s]);
    assert_eq!(code, 0, "{text}");
    assert!(out.join("near-seed0.json").exists() && out.join("near-seed1.json").exists());
    assert!(out.join("index.json").exists());

    let table = dir.path().join("table.csv");
    let (code, text) = difftransfer(&["aggregate", &out_s, "--out", &table.to_string_lossy()]);
    assert_eq!(code, 0, "{text}");
    let csv = std::fs::read_to_string(&table).unwrap();
    assert!(csv.starts_with("task,method,runs,n_mean,n_std,d_mean,d_std,success_rate\nnear,diff-transfer,2,"));

    let land = dir.path().join("land.csv");
    let run = out.join("near-seed0.json");
    let (code, text) = difftransfer(&["landscape", "--run", &run.to_string_lossy(), "--grid", "5x3", "--out", &land.to_string_lossy()]);
    assert_eq!(code, 0, "{text}");
    assert_eq!(std::fs::read_to_string(&land).unwrap().lines().count(), 16);
}

#[test]
fn planning_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "far.json",
        r#"{"name": "far", "kind": "planar-push", "target": {"change": [1.0, 0.5, 0.0]}, "method": "linear-interp",
            "transfer": {"eta": 100, "n_epoch": 3, "eps_t": 1e-4, "grad_clip": 0.005}, "seeds": [0]}"#,
    );
    let out = dir.path().join("o").to_string_lossy().into_owned();
    let (code, text) = difftransfer(&["run", "--config", &cfg, "--out", &out]);
    assert_eq!(code, 1, "{text}");
    assert!(text.contains("failure"));
}

#[test]
fn gradcheck_passes() {
    let (code, text) = difftransfer(&["gradcheck", "--trials", "12"]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("12 trials, 0 failed"));
}

#[test]
fn aggregate_without_records_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = difftransfer(&["aggregate", &dir.path().to_string_lossy()]);
    assert_eq!(code, 2);
}
