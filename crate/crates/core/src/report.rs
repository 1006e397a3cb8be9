//! Campaign configuration, on-disk result bundles, comparison tables and
//! long-format plot data.
//!
//! Every number written to CSV goes through [`format_number`], which keeps 12
//! significant digits so that identical runs produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{Estimator, EstimatorConfig};
use crate::harness::{self, BudgetPoint, EpsilonSchedule, Trajectory, DEFAULT_MAX_BUDGET, DEFAULT_RUNS};
use crate::margin::{self, MarginSearchResult};
use crate::metrics::{ft_eval, two_sided_test, DEFAULT_ALPHA};
use crate::pool::{load_pool, synth_pool, EvaluationPool, SynthConfig};
use crate::stats::SampleStats;

pub const SCHEMA_VERSION: u32 = 1;
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Decimal rendering with 12 significant digits, trailing zeros trimmed.
/// Magnitudes outside [1e-5, 1e12) use exponent notation.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    if !(-5..12).contains(&exp) {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{sign}{m}e{exp}");
    }
    let (int_part, frac_part) = if exp >= 0 {
        let split = exp as usize + 1;
        (digits[..split].to_string(), digits[split..].to_string())
    } else {
        ("0".to_string(), "0".repeat((-exp - 1) as usize) + &digits)
    };
    let frac = frac_part.trim_end_matches('0');
    if frac.is_empty() {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac}")
    }
}

fn round_trip(x: f64) -> f64 {
    format_number(x).parse().expect("formatted numbers parse")
}

/// Where a campaign's pool comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolSource {
    /// A manifest (`.json`) or bare prediction CSV.
    Path(PathBuf),
    Synth(SynthConfig),
    Preset {
        name: String,
        seed: u64,
    },
}

impl PoolSource {
    pub fn resolve(&self) -> Result<EvaluationPool> {
        match self {
            PoolSource::Path(p) => load_pool(p),
            PoolSource::Synth(cfg) => synth_pool(cfg),
            PoolSource::Preset { name, seed } => {
                let cfg = SynthConfig::preset(name, *seed)
                    .ok_or_else(|| Error::invalid(format!("unknown preset {name:?}")))?;
                synth_pool(&cfg)
            }
        }
    }

    fn rebase(&mut self, base: &Path) {
        if let PoolSource::Path(p) = self {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    /// Overrides the generator seed of synthetic sources.
    pub fn set_seed(&mut self, seed: u64) {
        match self {
            PoolSource::Path(_) => {}
            PoolSource::Synth(cfg) => cfg.seed = seed,
            PoolSource::Preset { seed: s, .. } => *s = seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EpsilonMode {
    Fixed {
        epsilon: f64,
    },
    Dynamic {
        delta: f64,
    },
    /// δ chosen by the margin search, then used as a dynamic tolerance.
    AutoDelta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorPair {
    pub a: EstimatorConfig,
    #[serde(default)]
    pub b: Option<EstimatorConfig>,
}

fn default_runs() -> usize {
    DEFAULT_RUNS
}
fn default_budget() -> usize {
    DEFAULT_MAX_BUDGET
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub schema: u32,
    pub pool: PoolSource,
    pub estimators: EstimatorPair,
    #[serde(default = "default_runs")]
    pub n_runs: usize,
    #[serde(default = "default_budget")]
    pub max_budget: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub epsilon: EpsilonMode,
    #[serde(default)]
    pub base_seed: u64,
    pub output_dir: PathBuf,
    /// Fresh runs per budget instead of prefixes of one run.
    #[serde(default)]
    pub independent_budgets: bool,
    /// Bracket width at which the margin search stops.
    #[serde(default)]
    pub resolution: Option<f64>,
}

impl CampaignConfig {
    /// Reads a config; relative paths resolve against the config's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.pool.rebase(base);
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "unsupported config schema {} (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        if self.n_runs < 2 {
            return Err(Error::invalid("tests undefined for N<2"));
        }
        if self.max_budget == 0 {
            return Err(Error::invalid("max_budget must be >= 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        match self.epsilon {
            EpsilonMode::Fixed { epsilon: v } | EpsilonMode::Dynamic { delta: v } if !(v >= 0.0 && v.is_finite()) => {
                return Err(Error::invalid("epsilon/delta must be a non-negative number"));
            }
            EpsilonMode::AutoDelta if self.estimators.b.is_none() => {
                return Err(Error::invalid("epsilon mode auto_delta needs two estimators (a and b)"));
            }
            _ => {}
        }
        if let Some(r) = self.resolution {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::invalid("resolution must lie in (0, 1)"));
            }
        }
        if let Some(b) = &self.estimators.b {
            if b.name == self.estimators.a.name {
                return Err(Error::invalid("estimators a and b need distinct names"));
            }
        }
        Ok(())
    }
}

/// One row of `trajectory_{A,B}.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub budget: usize,
    pub mean: f64,
    pub sample_std: Option<f64>,
    pub rmse: f64,
    pub p_two_sided: f64,
    pub p_lower: f64,
    pub p_upper: f64,
    pub ft_stat: f64,
    pub ft_pass: bool,
    pub epsilon: f64,
}

pub const TRAJECTORY_HEADER: [&str; 10] = [
    "budget",
    "mean",
    "sample_std",
    "rmse",
    "p_two_sided",
    "p_lower",
    "p_upper",
    "ft_stat",
    "ft_pass",
    "epsilon",
];

impl TrajectoryRow {
    pub fn from_point(p: &BudgetPoint) -> Self {
        Self {
            budget: p.summary.budget,
            mean: p.summary.mean,
            sample_std: p.summary.sample_std,
            rmse: p.report.rmse,
            p_two_sided: p.report.p_two_sided,
            p_lower: p.report.p_lower,
            p_upper: p.report.p_upper,
            ft_stat: p.report.ft_stat,
            ft_pass: p.report.ft_pass,
            epsilon: p.report.epsilon_used,
        }
    }

    /// The row as it reads back from disk.
    pub fn rounded(&self) -> Self {
        Self {
            budget: self.budget,
            mean: round_trip(self.mean),
            sample_std: self.sample_std.map(round_trip),
            rmse: round_trip(self.rmse),
            p_two_sided: round_trip(self.p_two_sided),
            p_lower: round_trip(self.p_lower),
            p_upper: round_trip(self.p_upper),
            ft_stat: round_trip(self.ft_stat),
            ft_pass: self.ft_pass,
            epsilon: round_trip(self.epsilon),
        }
    }

    fn to_record(self) -> Vec<String> {
        vec![
            self.budget.to_string(),
            format_number(self.mean),
            self.sample_std.map(format_number).unwrap_or_default(),
            format_number(self.rmse),
            format_number(self.p_two_sided),
            format_number(self.p_lower),
            format_number(self.p_upper),
            format_number(self.ft_stat),
            self.ft_pass.to_string(),
            format_number(self.epsilon),
        ]
    }

    /// Re-derives the test statistics from (mean, sample_std, epsilon) and
    /// checks the stored values agree.
    pub fn validate(&self, truth: f64, n_runs: usize, alpha: f64) -> Result<()> {
        let bad = |what: &str| Err(Error::invalid(format!("budget {}: {what}", self.budget)));
        if self.ft_stat != self.p_lower.max(self.p_upper) {
            return bad("ft_stat is not max(p_lower, p_upper)");
        }
        if self.ft_pass != (self.ft_stat < alpha) {
            return bad("ft_pass disagrees with ft_stat < alpha");
        }
        let stats = SampleStats::from_moments(n_runs, self.mean, self.sample_std)?;
        let tol = 1e-8;
        if (two_sided_test(&stats, truth)? - self.p_two_sided).abs() > tol {
            return bad("p_two_sided does not match its recomputation");
        }
        let ft = ft_eval(&stats, truth, self.epsilon, alpha)?;
        if (ft.p_lower - self.p_lower).abs() > tol || (ft.p_upper - self.p_upper).abs() > tol {
            return bad("one-sided p-values do not match their recomputation");
        }
        if self.rmse < 0.0 || !(0.0..=1.0).contains(&self.p_two_sided) {
            return bad("metric out of range");
        }
        Ok(())
    }
}

pub fn write_trajectory_csv(path: &Path, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRAJECTORY_HEADER)?;
    for r in rows {
        w.write_record(r.to_record())?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, line: usize) -> Result<T> {
    let field = TRAJECTORY_HEADER[idx];
    rec.get(idx).and_then(|s| s.parse().ok()).ok_or_else(|| Error::Parse {
        line,
        field: field.to_string(),
        msg: format!("invalid {field}"),
    })
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<TrajectoryRow>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(TRAJECTORY_HEADER.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            field: "header".into(),
            msg: format!("{}: expected header {}", path.display(), TRAJECTORY_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let sample_std = match rec.get(2) {
            Some("") | None => None,
            Some(_) => Some(parse_field(&rec, 2, line)?),
        };
        rows.push(TrajectoryRow {
            budget: parse_field(&rec, 0, line)?,
            mean: parse_field(&rec, 1, line)?,
            sample_std,
            rmse: parse_field(&rec, 3, line)?,
            p_two_sided: parse_field(&rec, 4, line)?,
            p_lower: parse_field(&rec, 5, line)?,
            p_upper: parse_field(&rec, 6, line)?,
            ft_stat: parse_field(&rec, 7, line)?,
            ft_pass: parse_field(&rec, 8, line)?,
            epsilon: parse_field(&rec, 9, line)?,
        });
    }
    if rows.is_empty() {
        return Err(Error::invalid(format!("{}: no rows", path.display())));
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub dataset: String,
    pub budget: usize,
    pub p_value_a: f64,
    pub p_value_b: f64,
    pub rmse_a: f64,
    pub rmse_b: f64,
    pub ft_stat_a: f64,
    pub ft_stat_b: f64,
    pub ft_pass_a: bool,
    pub ft_pass_b: bool,
}

impl ComparisonRow {
    /// Higher p-value wins; `None` on an exact tie.
    pub fn p_value_winner(&self) -> Option<Side> {
        match self.p_value_a.partial_cmp(&self.p_value_b)? {
            std::cmp::Ordering::Greater => Some(Side::A),
            std::cmp::Ordering::Less => Some(Side::B),
            std::cmp::Ordering::Equal => None,
        }
    }

    /// Lower RMSE wins; `None` on an exact tie.
    pub fn rmse_winner(&self) -> Option<Side> {
        match self.rmse_a.partial_cmp(&self.rmse_b)? {
            std::cmp::Ordering::Less => Some(Side::A),
            std::cmp::Ordering::Greater => Some(Side::B),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn conflict(&self) -> bool {
        matches!((self.p_value_winner(), self.rmse_winner()), (Some(p), Some(r)) if p != r)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn build(dataset: &str, a: &[TrajectoryRow], b: &[TrajectoryRow]) -> Result<Self> {
        if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.budget != y.budget) {
            return Err(Error::invalid("trajectories cover different budgets"));
        }
        let rows = a
            .iter()
            .zip(b)
            .map(|(x, y)| ComparisonRow {
                dataset: dataset.to_string(),
                budget: x.budget,
                p_value_a: x.p_two_sided,
                p_value_b: y.p_two_sided,
                rmse_a: x.rmse,
                rmse_b: y.rmse,
                ft_stat_a: x.ft_stat,
                ft_stat_b: y.ft_stat,
                ft_pass_a: x.ft_pass,
                ft_pass_b: y.ft_pass,
            })
            .collect();
        Ok(Self { rows })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "dataset",
            "budget",
            "p_value_A",
            "p_value_B",
            "rmse_A",
            "rmse_B",
            "ft_stat_A",
            "ft_stat_B",
            "ft_pass_A",
            "ft_pass_B",
            "conflict",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.dataset.clone(),
                r.budget.to_string(),
                format_number(r.p_value_a),
                format_number(r.p_value_b),
                format_number(r.rmse_a),
                format_number(r.rmse_b),
                format_number(r.ft_stat_a),
                format_number(r.ft_stat_b),
                r.ft_pass_a.to_string(),
                r.ft_pass_b.to_string(),
                r.conflict().to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Fraction of rows whose p-value winner differs from the RMSE winner.
pub fn conflict_rate(table: &ComparisonTable) -> Result<f64> {
    if table.rows.is_empty() {
        return Err(Error::invalid("comparison table is empty"));
    }
    let conflicts = table.rows.iter().filter(|r| r.conflict()).count();
    Ok(conflicts as f64 / table.rows.len() as f64)
}

/// `manifest.json`: the resolved config plus everything needed to
/// re-validate the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: u32,
    pub tool_version: String,
    pub config: CampaignConfig,
    pub pool_name: String,
    pub pool_size: usize,
    pub ground_truth: f64,
    pub trial_seeds: Vec<u64>,
    pub estimator_a: String,
    pub estimator_b: Option<String>,
    pub epsilon: EpsilonSchedule,
    pub delta_star: Option<f64>,
    pub conflict_rate: Option<f64>,
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

/// Everything a campaign produced, as written to `output_dir`.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub ground_truth: f64,
    pub trajectory_a: Trajectory,
    pub trajectory_b: Option<Trajectory>,
    pub margin: Option<MarginSearchResult>,
    pub comparison: Option<ComparisonTable>,
    pub conflict_rate: Option<f64>,
    pub files: Vec<PathBuf>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

type RunMatrix = Vec<crate::estimators::TrajectoryRun>;

fn simulate_runs(config: &CampaignConfig) -> Result<(EvaluationPool, RunMatrix, Option<RunMatrix>)> {
    config.validate()?;
    let pool = config.pool.resolve()?;
    if config.max_budget > pool.len() {
        return Err(Error::invalid(format!(
            "max_budget {} exceeds the pool size {}",
            config.max_budget,
            pool.len()
        )));
    }
    let run = |cfg: &EstimatorConfig| -> Result<_> {
        let est = Estimator::prepare(&pool, cfg)?;
        harness::run_trials(
            &est,
            config.n_runs,
            config.max_budget,
            config.base_seed,
            config.independent_budgets,
        )
    };
    let runs_a = run(&config.estimators.a)?;
    let runs_b = config.estimators.b.as_ref().map(run).transpose()?;
    Ok((pool, runs_a, runs_b))
}

fn margin_for(
    config: &CampaignConfig,
    truth: f64,
    runs_a: &RunMatrix,
    runs_b: &RunMatrix,
) -> Result<MarginSearchResult> {
    let sa = harness::budget_summaries(runs_a)?;
    let sb = harness::budget_summaries(runs_b)?;
    margin::search_margin_with(
        &sa,
        &sb,
        truth,
        config.alpha,
        config.resolution.unwrap_or(margin::DEFAULT_RESOLUTION),
    )
}

/// Runs both estimators and the margin search only, writing
/// `margin_search.json` into the output directory.
pub fn delta_search(config: &CampaignConfig) -> Result<(MarginSearchResult, PathBuf)> {
    if config.estimators.b.is_none() {
        return Err(Error::invalid("delta search needs two estimators (a and b)"));
    }
    let (pool, runs_a, runs_b) = simulate_runs(config)?;
    let result = margin_for(config, pool.ground_truth(), &runs_a, runs_b.as_ref().expect("checked"))?;
    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let path = out.join("margin_search.json");
    write_json(&path, &result)?;
    Ok((result, path))
}

/// Runs the full campaign described by `config` and writes its outputs.
pub fn run_config(config: &CampaignConfig) -> Result<RunOutcome> {
    let (pool, runs_a, runs_b) = simulate_runs(config)?;
    let truth = pool.ground_truth();

    let mut margin_result = None;
    let schedule = match &config.epsilon {
        EpsilonMode::Fixed { epsilon } => EpsilonSchedule::Fixed { epsilon: *epsilon },
        EpsilonMode::Dynamic { delta } => EpsilonSchedule::Dynamic { delta: *delta },
        EpsilonMode::AutoDelta => {
            let res = margin_for(config, truth, &runs_a, runs_b.as_ref().expect("validated"))?;
            let delta = res.delta_star.unwrap_or(0.0);
            margin_result = Some(res);
            EpsilonSchedule::Dynamic { delta }
        }
    };

    let traj_a = harness::summarize_campaign(&config.estimators.a.name, &runs_a, truth, config.alpha, &schedule)?;
    let traj_b = match (&config.estimators.b, &runs_b) {
        (Some(cfg), Some(runs)) => Some(harness::summarize_campaign(
            &cfg.name,
            runs,
            truth,
            config.alpha,
            &schedule,
        )?),
        _ => None,
    };

    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut files = Vec::new();

    let rows_a: Vec<TrajectoryRow> = traj_a
        .points
        .iter()
        .map(|p| TrajectoryRow::from_point(p).rounded())
        .collect();
    let path = out.join("trajectory_A.csv");
    write_trajectory_csv(&path, &rows_a)?;
    files.push(path);

    let mut comparison = None;
    let mut rate = None;
    if let Some(tb) = &traj_b {
        let rows_b: Vec<TrajectoryRow> = tb
            .points
            .iter()
            .map(|p| TrajectoryRow::from_point(p).rounded())
            .collect();
        let path = out.join("trajectory_B.csv");
        write_trajectory_csv(&path, &rows_b)?;
        files.push(path);

        let table = ComparisonTable::build(pool.name(), &rows_a, &rows_b)?;
        let path = out.join("comparison.csv");
        table.write_csv(&path)?;
        files.push(path);
        rate = Some(conflict_rate(&table)?);
        comparison = Some(table);
    }
    if let Some(m) = &margin_result {
        let path = out.join("margin_search.json");
        write_json(&path, m)?;
        files.push(path);
    }

    let manifest_path = out.join("manifest.json");
    let mut names: Vec<String> = files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    names.push("manifest.json".into());
    let manifest = RunManifest {
        schema: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        pool_name: pool.name().to_string(),
        pool_size: pool.len(),
        ground_truth: truth,
        trial_seeds: (0..config.n_runs as u64)
            .map(|i| config.base_seed.wrapping_add(i))
            .collect(),
        estimator_a: config.estimators.a.name.clone(),
        estimator_b: config.estimators.b.as_ref().map(|b| b.name.clone()),
        epsilon: schedule,
        delta_star: margin_result.as_ref().and_then(|m| m.delta_star),
        conflict_rate: rate,
        files: names,
    };
    write_json(&manifest_path, &manifest)?;
    files.push(manifest_path);

    Ok(RunOutcome {
        output_dir: out.clone(),
        ground_truth: truth,
        trajectory_a: traj_a,
        trajectory_b: traj_b,
        margin: margin_result,
        comparison,
        conflict_rate: rate,
        files,
    })
}

/// Builds a comparison from two trajectory CSVs. The dataset label is taken
/// from a `manifest.json` next to `a` when present.
pub fn compare_files(a: &Path, b: &Path, out_dir: &Path) -> Result<(ComparisonTable, f64, PathBuf)> {
    let rows_a = read_trajectory_csv(a)?;
    let rows_b = read_trajectory_csv(b)?;
    let manifest = a.parent().map(|d| d.join("manifest.json")).filter(|p| p.exists());
    let dataset = match manifest {
        Some(p) => RunManifest::load(&p)?.pool_name,
        None => a
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into()),
    };
    let table = ComparisonTable::build(&dataset, &rows_a, &rows_b)?;
    let rate = conflict_rate(&table)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let path = out_dir.join("comparison.csv");
    table.write_csv(&path)?;
    Ok((table, rate, path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotFormat {
    Csv,
    Json,
}

/// One long-format plot value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub series: String,
    pub budget: usize,
    pub value: f64,
}

/// Flattens a result directory into (series, budget, value) rows.
pub fn plot_data(dir: &Path) -> Result<Vec<PlotPoint>> {
    let manifest_path = dir.join("manifest.json");
    let manifest = manifest_path
        .exists()
        .then(|| RunManifest::load(&manifest_path))
        .transpose()?;
    let label_a = manifest.as_ref().map_or("A".to_string(), |m| m.estimator_a.clone());
    let label_b = manifest
        .as_ref()
        .and_then(|m| m.estimator_b.clone())
        .unwrap_or_else(|| "B".to_string());

    let mut points = Vec::new();
    let mut sides = vec![(label_a, dir.join("trajectory_A.csv"))];
    let path_b = dir.join("trajectory_B.csv");
    if path_b.exists() {
        sides.push((label_b, path_b));
    }
    for (label, path) in sides {
        let rows = read_trajectory_csv(&path)?;
        for r in &rows {
            let mut push = |metric: &str, value: f64| {
                points.push(PlotPoint {
                    series: format!("{label}.{metric}"),
                    budget: r.budget,
                    value,
                })
            };
            push("mean", r.mean);
            if let Some(s) = r.sample_std {
                push("sample_std", s);
            }
            push("rmse", r.rmse);
            push("p_two_sided", r.p_two_sided);
            push("p_lower", r.p_lower);
            push("p_upper", r.p_upper);
            push("ft_stat", r.ft_stat);
            push("ft_pass", if r.ft_pass { 1.0 } else { 0.0 });
            push("epsilon", r.epsilon);
        }
        if let Some(m) = &manifest {
            for r in &rows {
                points.push(PlotPoint {
                    series: "ground_truth".into(),
                    budget: r.budget,
                    value: m.ground_truth,
                });
            }
        }
    }
    points.sort_by(|a, b| a.series.cmp(&b.series).then(a.budget.cmp(&b.budget)));
    points.dedup();
    Ok(points)
}

/// Writes `plot_data.{csv,json}` into `dir` and returns its path.
pub fn write_plot_data(dir: &Path, format: PlotFormat) -> Result<PathBuf> {
    let points = plot_data(dir)?;
    match format {
        PlotFormat::Csv => {
            let path = dir.join("plot_data.csv");
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["series", "budget", "value"])?;
            for p in &points {
                w.write_record([p.series.clone(), p.budget.to_string(), format_number(p.value)])?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            Ok(path)
        }
        PlotFormat::Json => {
            let path = dir.join("plot_data.json");
            let rounded: Vec<PlotPoint> = points
                .into_iter()
                .map(|p| PlotPoint {
                    value: round_trip(p.value),
                    ..p
                })
                .collect();
            write_json(&path, &rounded)?;
            Ok(path)
        }
    }
}

/// `ftl simulate` input: a synthetic pool source and where to write it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub schema: u32,
    pub pool: PoolSource,
    pub output_dir: PathBuf,
}

impl SimulateConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        if cfg.output_dir.is_relative() {
            cfg.output_dir = path.parent().unwrap_or(Path::new("")).join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    /// Generates the pool and saves it, returning the manifest path.
    pub fn run(&self) -> Result<(EvaluationPool, PathBuf)> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "unsupported config schema {} (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        if matches!(self.pool, PoolSource::Path(_)) {
            return Err(Error::invalid("simulate needs a synth or preset pool source"));
        }
        let pool = self.pool.resolve()?;
        let manifest = crate::pool::save_pool(&pool, &self.output_dir)?;
        Ok((pool, manifest))
    }
}
