use std::path::Path;
use std::process::{Command, Output};

fn evcharge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evcharge")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = evcharge(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SMALL: &str = "[train]\nepochs = 2\nhidden_layers = [8]\nbatch_size = 8\neval_every = 1\n[split]\ntest_days = 2\n";

fn setup(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let data = dir.join("days.json");
    let config = dir.join("config.toml");
    std::fs::write(&config, SMALL).unwrap();
    ok(&["synth", "--days", "6", "--seed", "3", "--out", p(&data)]);
    (data, config)
}

#[test]
fn train_eval_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let (data, config) = setup(dir.path());
    let run = dir.path().join("run");
    ok(&["train", "--data", p(&data), "--config", p(&config), "--out", p(&run)]);
    let ckpt = run.join("checkpoint_best.json");
    assert!(ckpt.exists() && run.join("run.json").exists());

    let summary: serde_json::Value = serde_json::from_str(&ok(&[
        "eval", "--checkpoint", p(&ckpt), "--data", p(&data), "--config", p(&config), "--test-only",
    ]))
    .unwrap();
    assert_eq!(summary["days"], 2);

    let metered: serde_json::Value = serde_json::from_str(&ok(&[
        "eval", "--checkpoint", p(&ckpt), "--data", p(&data), "--policy", "metered",
    ]))
    .unwrap();
    assert_eq!(metered["mean_cost_savings_pct"], 0.0);

    ok(&["report", "--run", p(&run)]);
    let trajectories = std::fs::read_dir(run.join("report").join("trajectories")).unwrap().count();
    assert_eq!(trajectories, 2);
}

#[test]
fn oracle_prints_a_full_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let (data, _) = setup(dir.path());
    let out: serde_json::Value = serde_json::from_str(&ok(&["oracle", "--day", "2018-06-02", "--data", p(&data)])).unwrap();
    assert_eq!(out["actions"].as_str().unwrap().len(), 96);
    let short: serde_json::Value = serde_json::from_str(&ok(&[
        "oracle", "--day", "2018-06-02", "--data", p(&data), "--horizon", "10", "--exhaustive",
    ]))
    .unwrap();
    assert_eq!(short["actions"].as_str().unwrap().len(), 10);
}

#[test]
fn configuration_problems_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let (data, _) = setup(dir.path());
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[train]\ngamma = 2.0\n").unwrap();
    let out = evcharge(&["train", "--data", p(&data), "--config", p(&bad), "--out", p(&dir.path().join("r"))]);
    assert_eq!(out.status.code(), Some(2));

    let out = evcharge(&["oracle", "--day", "2018-06-02", "--data", p(&data), "--horizon", "30", "--exhaustive"]);
    assert_eq!(out.status.code(), Some(2));
    let out = evcharge(&["oracle", "--day", "2019-01-01", "--data", p(&data)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn foreign_checkpoint_versions_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let (data, config) = setup(dir.path());
    let run = dir.path().join("run");
    ok(&["train", "--data", p(&data), "--config", p(&config), "--out", p(&run)]);
    let ckpt = run.join("checkpoint_final.json");
    let mut value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&ckpt).unwrap()).unwrap();
    value["version"] = serde_json::json!(99);
    std::fs::write(&ckpt, value.to_string()).unwrap();
    let out = evcharge(&["eval", "--checkpoint", p(&ckpt), "--data", p(&data)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn divergence_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let (data, _) = setup(dir.path());
    let wild = dir.path().join("wild.toml");
    std::fs::write(&wild, "[train]\nepochs = 3\nhidden_layers = [8]\nbatch_size = 8\nlearning_rate = 1e300\ngrad_clip = 0.0\n").unwrap();
    let out = evcharge(&["train", "--data", p(&data), "--config", p(&wild), "--out", p(&dir.path().join("r"))]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
