//! N-trial campaigns and their per-budget aggregation into metric
//! trajectories.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{Estimator, EstimatorConfig, TrajectoryRun};
use crate::margin::dynamic_epsilon;
use crate::metrics::{mse_rmse, MetricReport};
use crate::pool::EvaluationPool;
use crate::stats::{summarize, SampleStats};

pub const DEFAULT_RUNS: usize = 100;
pub const DEFAULT_MAX_BUDGET: usize = 100;

/// Mean and spread of the N estimates at one budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub budget: usize,
    pub n_runs: usize,
    pub mean: f64,
    pub sample_std: Option<f64>,
}

impl RunSummary {
    pub fn stats(&self) -> Result<SampleStats> {
        SampleStats::from_moments(self.n_runs, self.mean, self.sample_std)
    }
}

/// Tolerance ε applied at each budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EpsilonSchedule {
    Fixed {
        epsilon: f64,
    },
    /// ε_k = δ + t_{α,N−1}·s_k/√N
    Dynamic {
        delta: f64,
    },
    /// One ε per budget, budget 1 first.
    PerBudget {
        epsilons: Vec<f64>,
    },
}

impl EpsilonSchedule {
    fn epsilon_at(&self, summary: &RunSummary, alpha: f64) -> Result<f64> {
        match self {
            EpsilonSchedule::Fixed { epsilon } => Ok(*epsilon),
            EpsilonSchedule::Dynamic { delta } => dynamic_epsilon(*delta, summary, alpha),
            EpsilonSchedule::PerBudget { epsilons } => epsilons
                .get(summary.budget - 1)
                .copied()
                .ok_or_else(|| Error::invalid(format!("no epsilon for budget {}", summary.budget))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetPoint {
    pub summary: RunSummary,
    pub report: MetricReport,
}

/// Metric trajectory of one estimator over budgets 1..=max_budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub estimator_name: String,
    pub ground_truth: f64,
    pub alpha: f64,
    pub points: Vec<BudgetPoint>,
}

impl Trajectory {
    pub fn summaries(&self) -> Vec<RunSummary> {
        self.points.iter().map(|p| p.summary).collect()
    }
}

/// Runs `n_runs` trials; trial i is seeded with `base_seed + i`.
pub fn run_campaign(
    pool: &EvaluationPool,
    config: &EstimatorConfig,
    n_runs: usize,
    max_budget: usize,
    base_seed: u64,
) -> Result<Vec<TrajectoryRun>> {
    let estimator = Estimator::prepare(pool, config)?;
    run_trials(&estimator, n_runs, max_budget, base_seed, false)
}

/// Runs trials on a prepared estimator.
///
/// With `independent_budgets`, every budget k gets its own fresh run of
/// length k instead of reading the prefix of one run to `max_budget`.
pub fn run_trials(
    estimator: &Estimator<'_>,
    n_runs: usize,
    max_budget: usize,
    base_seed: u64,
    independent_budgets: bool,
) -> Result<Vec<TrajectoryRun>> {
    if n_runs == 0 {
        return Err(Error::invalid("n_runs must be >= 1"));
    }
    (0..n_runs as u64)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i);
            if !independent_budgets {
                return estimator.run(max_budget, seed);
            }
            let mut estimates = Vec::with_capacity(max_budget);
            let mut acquired = Vec::new();
            for k in 1..=max_budget {
                let run = estimator.run(k, budget_seed(seed, k))?;
                estimates.push(*run.estimates.last().expect("k >= 1"));
                if k == max_budget {
                    acquired = run.acquired;
                }
            }
            Ok(TrajectoryRun {
                acquired,
                estimates,
                seed,
            })
        })
        .collect()
}

fn budget_seed(trial_seed: u64, budget: usize) -> u64 {
    // splitmix64 finaliser over (seed, budget)
    let mut z = trial_seed ^ (budget as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The N estimates at each budget, sorted so aggregation is independent of
/// trial order.
fn budget_columns(runs: &[TrajectoryRun]) -> Result<Vec<Vec<f64>>> {
    let first = runs.first().ok_or(Error::EmptySample)?;
    let len = first.estimates.len();
    if len == 0 {
        return Err(Error::invalid("runs contain no estimates"));
    }
    if runs.iter().any(|r| r.estimates.len() != len) {
        return Err(Error::invalid("ragged runs: estimate trajectories differ in length"));
    }
    Ok((0..len)
        .map(|k| {
            let mut col: Vec<f64> = runs.iter().map(|r| r.estimates[k]).collect();
            col.sort_by(f64::total_cmp);
            col
        })
        .collect())
}

pub fn budget_summaries(runs: &[TrajectoryRun]) -> Result<Vec<RunSummary>> {
    budget_columns(runs)?
        .iter()
        .enumerate()
        .map(|(k, col)| {
            let s = summarize(col)?;
            Ok(RunSummary {
                budget: k + 1,
                n_runs: s.n,
                mean: s.mean,
                sample_std: s.sample_std,
            })
        })
        .collect()
}

/// Aggregates the runs at every budget and evaluates every metric.
pub fn summarize_campaign(
    estimator_name: &str,
    runs: &[TrajectoryRun],
    truth: f64,
    alpha: f64,
    epsilon: &EpsilonSchedule,
) -> Result<Trajectory> {
    let columns = budget_columns(runs)?;
    if runs.len() < 2 {
        return Err(Error::TestUndefined);
    }
    let points = columns
        .iter()
        .enumerate()
        .map(|(k, col)| {
            let stats = summarize(col)?;
            let summary = RunSummary {
                budget: k + 1,
                n_runs: stats.n,
                mean: stats.mean,
                sample_std: stats.sample_std,
            };
            let eps = epsilon.epsilon_at(&summary, alpha)?;
            let report = MetricReport::from_parts(&stats, mse_rmse(col, truth)?, truth, eps, alpha)?;
            Ok(BudgetPoint { summary, report })
        })
        .collect::<Result<_>>()?;
    Ok(Trajectory {
        estimator_name: estimator_name.to_string(),
        ground_truth: truth,
        alpha,
        points,
    })
}
