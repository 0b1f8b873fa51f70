use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[synth]
name = "small"
trials_per_profile = 3
seed = 1
balance_directions = true
profiles = [
  { robot = "taurus-sim", domain = "sim", params = { objects = 2 } },
  { robot = "yumi", domain = "real", params = { objects = 2, workspace_scale = 2.0 } },
]

[experiment]
folds = 3
seeds = [0]

[experiment.learner]
kind = "random-forest"
trees = 10
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_surgeme-kit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env("SURGEME_KIT_LOG", "error").output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("cfg.toml");
    std::fs::write(&path, format!("{SMALL}{extra}")).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn synth_then_ingest_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("bench");
    let o = run(&["synth", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let stdout = text(&o.stdout);
    assert!(stdout.contains("wrote 6 trials, 84 segments"), "{stdout}");
    assert!(stdout.contains("robot yumi:"));

    let manifest = out.join("manifest.csv");
    let o = run(&["ingest-check", manifest.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let stdout = text(&o.stdout);
    assert!(stdout.contains("segments 84"));
    assert!(stdout.contains("violations 0"));

    let again = run(&["synth", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(1));
    assert!(text(&again.stderr).starts_with("error[config]:"));
}

#[test]
fn seed_changes_bytes_not_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let mut kinematics = Vec::new();
    for (seed, name) in [("3", "a"), ("4", "b")] {
        let out = dir.path().join(name);
        let o = run(&["synth", "--config", &cfg, "--seed", seed, "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        let counts: Vec<String> = text(&o.stdout).lines().skip(1).map(String::from).collect();
        kinematics.push((std::fs::read(out.join("kinematics/yumi-000.csv")).unwrap(), counts));
    }
    assert_ne!(kinematics[0].0, kinematics[1].0);
    assert_eq!(kinematics[0].1, kinematics[1].1);
}

#[test]
fn train_writes_model_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("model");
    let o = run(&["train", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let line = text(&o.stdout);
    assert_eq!(line.lines().count(), 1);
    assert!(line.starts_with("rf trained on"));
    let model = surgeme_kit::learners::load_model(&out.join("model.sgkm")).unwrap();
    assert_eq!(model.kind(), surgeme_kit::learners::LearnerKind::RandomForest);
}

#[test]
fn experiment_and_report_rerender() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let transfer = std::fs::read_to_string(&cfg)
        .unwrap()
        .replace("folds = 3", "folds = 3\nscenario = \"domain-transfer\"\nratio_grid = [0.0, 1.0]");
    let tcfg = dir.path().join("transfer.toml");
    std::fs::write(&tcfg, transfer).unwrap();

    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = run(&["experiment", "--config", &cfg, "--out", a.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert!(text(&o.stdout).starts_with("robot,"));
    let o = run(&["experiment", "--config", tcfg.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let svg = std::fs::read_to_string(b.join("ratio_sweep_yumi.svg")).unwrap();
    assert!(svg.contains("real-only baseline"));

    let before = std::fs::read(a.join("table.csv")).unwrap();
    std::fs::remove_file(a.join("table.csv")).unwrap();
    let combined = dir.path().join("combined");
    let o = run(&[
        "report",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--out",
        combined.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert_eq!(std::fs::read(a.join("table.csv")).unwrap(), before);
    let table = std::fs::read_to_string(combined.join("table.csv")).unwrap();
    assert_eq!(table, text(&o.stdout));
    assert!(table.lines().count() >= 3);
}

#[test]
fn frame_wise_spectral_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let text_cfg = std::fs::read_to_string(&cfg)
        .unwrap()
        .replace("folds = 3", "folds = 3\nmode = \"frame-wise\"\nfeature_kind = \"spectral\"");
    std::fs::write(&cfg, text_cfg).unwrap();
    let o = run(&["experiment", "--config", &cfg, "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = text(&o.stderr);
    assert!(err.starts_with("error[config]:"), "{err}");
    assert!(err.contains("spectral"));
    assert!(!dir.path().join("x").exists());
}

#[test]
fn missing_manifest_names_the_path() {
    let o = run(&["ingest-check", "/no/such/dir/manifest.csv"]);
    assert_eq!(o.status.code(), Some(1));
    let err = text(&o.stderr);
    assert!(err.starts_with("error[io]:"));
    assert!(err.contains("/no/such/dir/manifest.csv"));
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn unknown_config_key_and_bad_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "\n[train]\nmodel = \"x\"\n");
    let o = run(&["train", "--config", &cfg, "--dry-run"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).starts_with("error[config]:"));
    let o = run(&["experiment", "--jobs", "many"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dry_run_prints_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("never");
    let o = run(&["train", "--config", &cfg, "--seed", "42", "--out", out.to_str().unwrap(), "--dry-run"]);
    assert!(o.status.success());
    let stdout = text(&o.stdout);
    assert!(stdout.contains("seed = 42"));
    assert!(stdout.contains("seeds = [42]"));
    assert!(!out.exists());
}
