use std::fs;
use std::path::{Path, PathBuf};

use ftl_core::estimators::{EstimatorConfig, GroupSelection};
use ftl_core::harness::{self, EpsilonSchedule};
use ftl_core::margin::{search_margin, Branch};
use ftl_core::pool::{ClusterSpec, SynthConfig};
use ftl_core::report::{
    self, read_trajectory_csv, CampaignConfig, EpsilonMode, EstimatorPair, PlotFormat, PoolSource, RunManifest,
};
use ftl_core::synth_pool;

const GOLDEN_DIR: &str = "tests/fixtures/golden";

fn tiny_pool() -> SynthConfig {
    SynthConfig {
        name: "tiny".into(),
        target_accuracy: 0.6,
        size: 120,
        clusters: Some(ClusterSpec {
            count: 3,
            dim: 4,
            ..ClusterSpec::default()
        }),
        confidence: true,
        seed: 11,
    }
}

fn tiny_campaign(out: &Path) -> CampaignConfig {
    CampaignConfig {
        schema: 1,
        pool: PoolSource::Synth(tiny_pool()),
        estimators: EstimatorPair {
            a: EstimatorConfig::active_bayes(
                "AT",
                GroupSelection::Auto {
                    min: Some(2),
                    max: Some(5),
                },
            ),
            b: Some(EstimatorConfig::random_sampling("RS")),
        },
        n_runs: 8,
        max_budget: 12,
        alpha: 0.05,
        epsilon: EpsilonMode::AutoDelta,
        base_seed: 3,
        output_dir: out.to_path_buf(),
        independent_budgets: false,
        resolution: None,
    }
}

fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(GOLDEN_DIR).join(name)
}

#[test]
fn golden_outputs() {
    let dir = tempfile::tempdir().unwrap();
    report::run_config(&tiny_campaign(dir.path())).unwrap();
    let bless = std::env::var_os("FTL_BLESS").is_some();
    for name in [
        "trajectory_A.csv",
        "trajectory_B.csv",
        "comparison.csv",
        "margin_search.json",
    ] {
        let got = fs::read_to_string(dir.path().join(name)).unwrap();
        let golden = golden_path(name);
        if bless {
            fs::create_dir_all(golden.parent().unwrap()).unwrap();
            fs::write(&golden, &got).unwrap();
            continue;
        }
        let want = fs::read_to_string(&golden).unwrap_or_else(|_| panic!("missing golden file {}", golden.display()));
        assert_eq!(got, want, "{name} drifted from its golden copy");
    }
}

#[test]
fn written_rows_revalidate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_campaign(dir.path());
    let outcome = report::run_config(&cfg).unwrap();
    let manifest = RunManifest::load(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(manifest.ground_truth, outcome.ground_truth);
    assert_eq!(manifest.trial_seeds, (3..11).collect::<Vec<u64>>());
    for name in ["trajectory_A.csv", "trajectory_B.csv"] {
        let rows = read_trajectory_csv(&dir.path().join(name)).unwrap();
        assert_eq!(rows.len(), 12);
        for r in &rows {
            r.validate(manifest.ground_truth, cfg.n_runs, cfg.alpha).unwrap();
        }
    }
    for f in &manifest.files {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn tampered_row_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_campaign(dir.path());
    let outcome = report::run_config(&cfg).unwrap();
    let rows = read_trajectory_csv(&dir.path().join("trajectory_B.csv")).unwrap();
    let mut r = rows[5];
    r.p_two_sided = (r.p_two_sided + 0.1).min(1.0) * 0.5;
    assert!(r.validate(outcome.ground_truth, cfg.n_runs, cfg.alpha).is_err());
    let mut r = rows[5];
    r.ft_pass = !r.ft_pass;
    assert!(r.validate(outcome.ground_truth, cfg.n_runs, cfg.alpha).is_err());
}

#[test]
fn memoized_search_matches_naive_reruns() {
    // The search reuses one set of per-budget summaries. Re-running both
    // campaigns from scratch at every probed δ must give the same verdicts.
    let pool = synth_pool(&tiny_pool()).unwrap();
    let truth = pool.ground_truth();
    let a_cfg = EstimatorConfig::injected("biased", 0.05, 0.02);
    let b_cfg = EstimatorConfig::random_sampling("RS");
    let (n, k) = (20, 30);
    let summaries = |cfg: &EstimatorConfig| {
        let runs = harness::run_campaign(&pool, cfg, n, k, 9).unwrap();
        harness::budget_summaries(&runs).unwrap()
    };
    let result = search_margin(&summaries(&a_cfg), &summaries(&b_cfg), truth, 0.05).unwrap();
    assert!(!result.trace.is_empty());

    for step in &result.trace {
        let schedule = EpsilonSchedule::Dynamic { delta: step.delta };
        let verdicts = |cfg: &EstimatorConfig| -> Vec<bool> {
            let runs = harness::run_campaign(&pool, cfg, n, k, 9).unwrap();
            harness::summarize_campaign(&cfg.name, &runs, truth, 0.05, &schedule)
                .unwrap()
                .points
                .iter()
                .map(|p| p.report.ft_pass)
                .collect()
        };
        let (va, vb) = (verdicts(&a_cfg), verdicts(&b_cfg));
        let first = va.iter().zip(&vb).position(|(x, y)| x != y).map(|i| i + 1);
        assert_eq!(first, step.divergent_budget, "delta {}", step.delta);
        let expected = match first {
            Some(_) => Branch::Distinguished,
            None if va[k - 1] && vb[k - 1] => Branch::BothPass,
            None => Branch::BothFail,
        };
        assert_eq!(expected, step.branch, "delta {}", step.delta);
    }
}

#[test]
fn plot_data_formats() {
    let dir = tempfile::tempdir().unwrap();
    report::run_config(&tiny_campaign(dir.path())).unwrap();

    let csv_path = report::write_plot_data(dir.path(), PlotFormat::Csv).unwrap();
    let text = fs::read_to_string(csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("series,budget,value"));
    assert!(text.contains("AT.rmse,1,"));
    assert!(text.contains("RS.ft_stat,12,"));
    assert!(text.contains("ground_truth,12,"));

    let json_path = report::write_plot_data(dir.path(), PlotFormat::Json).unwrap();
    let points: Vec<report::PlotPoint> = serde_json::from_str(&fs::read_to_string(json_path).unwrap()).unwrap();
    // two estimators × 9 metrics × 12 budgets, plus the truth line
    assert_eq!(points.len(), 2 * 9 * 12 + 12);
}

#[test]
fn compare_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = report::run_config(&tiny_campaign(dir.path())).unwrap();
    let out = dir.path().join("cmp");
    let (table, rate, path) = report::compare_files(
        &dir.path().join("trajectory_A.csv"),
        &dir.path().join("trajectory_B.csv"),
        &out,
    )
    .unwrap();
    assert_eq!(Some(rate), outcome.conflict_rate);
    assert_eq!(Some(&table), outcome.comparison.as_ref());
    assert_eq!(
        fs::read(path).unwrap(),
        fs::read(dir.path().join("comparison.csv")).unwrap()
    );
    assert!(table.rows.iter().all(|r| r.dataset == "tiny"));
}

#[test]
fn config_file_paths_resolve_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let pool = synth_pool(&tiny_pool()).unwrap();
    ftl_core::save_pool(&pool, dir.path().join("pool")).unwrap();
    let cfg_path = dir.path().join("c.json");
    fs::write(
        &cfg_path,
        r#"{
            "schema": 1,
            "pool": {"path": "pool/pool.json"},
            "estimators": {"a": {"name": "RS", "kind": "random_sampling"}},
            "n_runs": 4,
            "max_budget": 5,
            "epsilon": {"mode": "fixed", "epsilon": 0.05},
            "output_dir": "results"
        }"#,
    )
    .unwrap();
    let cfg = CampaignConfig::load(&cfg_path).unwrap();
    let outcome = report::run_config(&cfg).unwrap();
    assert_eq!(outcome.output_dir, dir.path().join("results"));
    assert!(dir.path().join("results/trajectory_A.csv").exists());
    assert!(!dir.path().join("results/trajectory_B.csv").exists());
    assert!(outcome.comparison.is_none());
}

#[test]
fn budget_beyond_pool_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_campaign(dir.path());
    cfg.max_budget = 121;
    let err = report::run_config(&cfg).unwrap_err();
    assert!(err.is_validation());
    assert!(err.to_string().contains("exceeds the pool size"));
}
