use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ftl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ftl"))
        .args(args)
        .current_dir(dir)
        .env_remove("FTL_SEED")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SIMULATE: &str = r#"{
  "schema": 1,
  "pool": {"synth": {"name": "mini", "target_accuracy": 0.65, "size": 150,
                     "clusters": {"count": 3, "dim": 4}, "confidence": true, "seed": 5}},
  "output_dir": "pool"
}"#;

fn campaign(extra: &str) -> String {
    format!(
        r#"{{
  "schema": 1,
  "pool": {{"path": "pool/pool.json"}},
  "estimators": {{
    "a": {{"name": "AT", "kind": "active_bayes", "groups": {{"mode": "auto", "min": 2, "max": 4}}}},
    "b": {{"name": "RS", "kind": "random_sampling"}}
  }},
  "n_runs": 10,
  "max_budget": 15,
  "epsilon": {{"mode": "auto_delta"}},
  "output_dir": "out"{extra}
}}"#
    )
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("sim.json"), SIMULATE).unwrap();
    fs::write(dir.path().join("run.json"), campaign("")).unwrap();
    let o = ftl(&["simulate", "--config", "sim.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    dir
}

#[test]
fn simulate_then_run_writes_every_output() {
    let dir = setup();
    let o = ftl(&["run", "--config", "run.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("delta*"));
    assert!(stdout.contains("conflict rate"));
    for f in [
        "trajectory_A.csv",
        "trajectory_B.csv",
        "comparison.csv",
        "margin_search.json",
        "manifest.json",
    ] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
}

#[test]
fn active_bayes_runs_are_byte_identical() {
    let dir = setup();
    let read = |d: &Path| -> Vec<Vec<u8>> {
        ["trajectory_A.csv", "trajectory_B.csv", "comparison.csv"]
            .iter()
            .map(|f| fs::read(d.join("out").join(f)).unwrap())
            .collect()
    };
    assert!(ftl(&["-q", "run", "--config", "run.json"], dir.path()).status.success());
    let first = read(dir.path());
    fs::remove_dir_all(dir.path().join("out")).unwrap();
    assert!(ftl(&["-q", "run", "--config", "run.json"], dir.path()).status.success());
    assert_eq!(first, read(dir.path()));
}

#[test]
fn seed_env_overrides_flag() {
    let dir = setup();
    let run = |seed_flag: &str, env: Option<&str>| -> Vec<u8> {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_ftl"));
        cmd.args(["-q", "--seed", seed_flag, "run", "--config", "run.json"])
            .current_dir(dir.path())
            .env_remove("FTL_SEED");
        if let Some(v) = env {
            cmd.env("FTL_SEED", v);
        }
        assert!(cmd.status().unwrap().success());
        fs::read(dir.path().join("out/trajectory_B.csv")).unwrap()
    };
    let flag_1 = run("1", None);
    let flag_2 = run("2", None);
    assert_ne!(flag_1, flag_2);
    assert_eq!(run("2", Some("1")), flag_1);

    let manifest = fs::read_to_string(dir.path().join("out/manifest.json")).unwrap();
    assert!(manifest.contains("\"base_seed\": 1"));
}

#[test]
fn single_run_config_exits_with_validation_code() {
    let dir = setup();
    let cfg = campaign("").replace("\"n_runs\": 10", "\"n_runs\": 1");
    fs::write(dir.path().join("bad.json"), cfg).unwrap();
    let o = ftl(&["run", "--config", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("tests undefined for N<2"), "{}", stderr(&o));
}

#[test]
fn malformed_inputs_exit_with_validation_code() {
    let dir = setup();
    fs::write(dir.path().join("unknown.json"), campaign(r#", "bogus": 1"#)).unwrap();
    assert_eq!(
        ftl(&["run", "--config", "unknown.json"], dir.path()).status.code(),
        Some(1)
    );

    let single = campaign("").replace(r#""b": {"name": "RS", "kind": "random_sampling"}"#, r#""b": null"#);
    fs::write(dir.path().join("single.json"), single).unwrap();
    let o = ftl(&["delta-search", "--config", "single.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));

    fs::write(
        dir.path().join("pool/records.csv"),
        "instance_id,correct\na,1\nb,maybe\n",
    )
    .unwrap();
    let o = ftl(&["run", "--config", "run.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    assert_eq!(ftl(&["run"], dir.path()).status.code(), Some(1));
    assert_eq!(
        ftl(&["--alpha", "1.5", "run", "--config", "run.json"], dir.path())
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn missing_file_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ftl(&["run", "--config", "nope.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_delta_search_and_report() {
    let dir = setup();
    assert!(ftl(&["-q", "run", "--config", "run.json"], dir.path()).status.success());

    let o = ftl(
        &[
            "compare",
            "--a",
            "out/trajectory_A.csv",
            "--b",
            "out/trajectory_B.csv",
            "--out",
            "cmp",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("15 budgets, conflict rate"));
    assert_eq!(
        fs::read(dir.path().join("cmp/comparison.csv")).unwrap(),
        fs::read(dir.path().join("out/comparison.csv")).unwrap()
    );

    let o = ftl(&["delta-search", "--config", "run.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().filter(|l| l.starts_with("delta ")).count() <= 7);
    let searched = fs::read(dir.path().join("out/margin_search.json")).unwrap();
    assert!(!searched.is_empty());

    for (format, file) in [("csv", "plot_data.csv"), ("json", "plot_data.json")] {
        let o = ftl(&["-q", "report", "--in", "out", "--format", format], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(o.stdout.is_empty());
        assert!(dir.path().join("out").join(file).exists());
    }
}
