//! Shared fixtures for the benchmarks.

use ftl_core::harness::RunSummary;
use ftl_core::pool::{synth_pool, ClusterSpec, EvaluationPool, SynthConfig};

/// Clustered pool with embeddings.
pub fn clustered_pool(size: usize, seed: u64) -> EvaluationPool {
    let cfg = SynthConfig {
        name: "bench".into(),
        target_accuracy: 0.7,
        size,
        clusters: Some(ClusterSpec::default()),
        confidence: true,
        seed,
    };
    synth_pool(&cfg).expect("valid synthetic config")
}

/// Summaries shaped like a random-sampling sweep: spread shrinking as 1/√k.
pub fn sweep(mean: f64, spread: f64, n_runs: usize, budgets: usize) -> Vec<RunSummary> {
    (1..=budgets)
        .map(|k| RunSummary {
            budget: k,
            n_runs,
            mean,
            sample_std: Some(spread / (k as f64).sqrt()),
        })
        .collect()
}
