//! Fault-tolerant evaluation of sample-efficient model performance
//! estimators.
//!
//! The crate runs labeling campaigns for competing estimators over a sweep of
//! budgets, scores them with RMSE, the two-sided t-test and a two one-sided
//! test (TOST) against a tolerance ε, and picks the smallest discrimination
//! margin δ* at which two estimators receive different verdicts.
//!
//! ```
//! use ftl_core::{harness, margin, EstimatorConfig, SynthConfig};
//!
//! let pool = ftl_core::synth_pool(&SynthConfig::preset("engineering-like", 0).unwrap())?;
//! let truth = pool.ground_truth();
//! let rs = harness::run_campaign(&pool, &EstimatorConfig::random_sampling("RS"), 50, 40, 0)?;
//! let biased = harness::run_campaign(&pool, &EstimatorConfig::injected("biased", 0.02, 0.01), 50, 40, 0)?;
//! let result = margin::search_margin(
//!     &harness::budget_summaries(&biased)?,
//!     &harness::budget_summaries(&rs)?,
//!     truth,
//!     0.05,
//! )?;
//! assert!(result.trace.len() <= 7);
//! # Ok::<(), ftl_core::Error>(())
//! ```

pub mod error;
pub mod estimators;
pub mod grouping;
pub mod harness;
pub mod margin;
pub mod metrics;
pub mod pool;
pub mod report;
pub mod stats;

pub use error::{Error, Result};
pub use estimators::{
    active_bayes_reward, run_active_bayes, run_random_sampling, ActiveBayes, Estimator, EstimatorConfig, EstimatorKind,
    GroupPosterior, GroupSelection, Prior, TrajectoryRun, WithinGroup,
};
pub use grouping::{density_scores, kmeans, select_group_count, silhouette, DensityScores, GroupAssignment};
pub use harness::{run_campaign, summarize_campaign, EpsilonSchedule, RunSummary, Trajectory};
pub use margin::{dynamic_epsilon, search_margin, MarginSearchResult};
pub use metrics::{ft_eval, mse_rmse, two_sided_test, FtOutcome, MetricReport};
pub use pool::{load_pool, save_pool, synth_pool, EvaluationPool, PredictionRecord, SynthConfig};
pub use report::{conflict_rate, run_config, CampaignConfig, ComparisonTable};
pub use stats::{beta_moments, summarize, t_critical, t_survival, SampleStats};
