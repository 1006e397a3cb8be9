//! Estimator quality metrics: MSE/RMSE with its bias–variance split, the
//! classical two-sided t-test, and the fault-tolerant TOST check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{summarize, t_survival, SampleStats};

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Squared-error summary of N estimates against the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorDecomposition {
    pub mse: f64,
    pub rmse: f64,
    /// θ̄ − θ*
    pub bias: f64,
    /// Population variance of the estimates.
    pub pop_var: f64,
}

pub fn mse_rmse(estimates: &[f64], truth: f64) -> Result<ErrorDecomposition> {
    check_truth(truth)?;
    let stats = summarize(estimates)?;
    let mse = estimates.iter().map(|e| (e - truth) * (e - truth)).sum::<f64>() / estimates.len() as f64;
    Ok(ErrorDecomposition {
        mse,
        rmse: mse.sqrt(),
        bias: stats.mean - truth,
        pop_var: stats.pop_var,
    })
}

fn check_truth(truth: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&truth) {
        return Err(Error::invalid(format!("ground truth must lie in [0, 1], got {truth}")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Two-sided one-sample t-test of H0: θ̄ = θ*.
///
/// With zero spread the statistic is undefined; the p-value is then 1 when
/// the mean hits the truth exactly and 0 otherwise.
pub fn two_sided_test(stats: &SampleStats, truth: f64) -> Result<f64> {
    let s = stats.require_std()?;
    let bias = stats.mean - truth;
    if s == 0.0 {
        return Ok(if bias == 0.0 { 1.0 } else { 0.0 });
    }
    let t = bias / (s / (stats.n as f64).sqrt());
    let p = 2.0 * t_survival(t.abs(), (stats.n - 1) as f64)?;
    Ok(p.clamp(0.0, 1.0))
}

/// Outcome of the two one-sided tests against the interval [θ*−ε, θ*+ε].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FtOutcome {
    pub p_lower: f64,
    pub p_upper: f64,
    pub ft_stat: f64,
    pub pass: bool,
}

/// Fault-tolerant evaluation: rejects both one-sided nulls iff
/// max(p_lower, p_upper) < alpha.
pub fn ft_eval(stats: &SampleStats, truth: f64, epsilon: f64, alpha: f64) -> Result<FtOutcome> {
    let s = stats.require_std()?;
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::invalid(format!("epsilon must be non-negative, got {epsilon}")));
    }
    check_alpha(alpha)?;
    let bias = stats.mean - truth;
    let (p_lower, p_upper) = if s == 0.0 {
        let p_l = if bias > -epsilon { 0.0 } else { 1.0 };
        let p_u = if bias < epsilon { 0.0 } else { 1.0 };
        (p_l, p_u)
    } else {
        let se = s / (stats.n as f64).sqrt();
        let df = (stats.n - 1) as f64;
        let t_lower = (bias + epsilon) / se;
        let t_upper = (epsilon - bias) / se;
        (t_survival(t_lower, df)?, t_survival(t_upper, df)?)
    };
    let ft_stat = p_lower.max(p_upper);
    Ok(FtOutcome {
        p_lower,
        p_upper,
        ft_stat,
        pass: ft_stat < alpha,
    })
}

/// Every metric for one (estimator, budget) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mse: f64,
    pub rmse: f64,
    pub bias: f64,
    pub pop_var: f64,
    pub p_two_sided: f64,
    pub p_lower: f64,
    pub p_upper: f64,
    pub ft_stat: f64,
    pub ft_pass: bool,
    pub epsilon_used: f64,
    pub alpha_used: f64,
}

impl MetricReport {
    /// Computes the full report from the raw per-run estimates.
    pub fn compute(estimates: &[f64], truth: f64, epsilon: f64, alpha: f64) -> Result<Self> {
        let stats = summarize(estimates)?;
        let dec = mse_rmse(estimates, truth)?;
        Self::from_parts(&stats, dec, truth, epsilon, alpha)
    }

    pub(crate) fn from_parts(
        stats: &SampleStats,
        dec: ErrorDecomposition,
        truth: f64,
        epsilon: f64,
        alpha: f64,
    ) -> Result<Self> {
        let p_two_sided = two_sided_test(stats, truth)?;
        let ft = ft_eval(stats, truth, epsilon, alpha)?;
        Ok(Self {
            mse: dec.mse,
            rmse: dec.rmse,
            bias: dec.bias,
            pop_var: dec.pop_var,
            p_two_sided,
            p_lower: ft.p_lower,
            p_upper: ft.p_upper,
            ft_stat: ft.ft_stat,
            ft_pass: ft.pass,
            epsilon_used: epsilon,
            alpha_used: alpha,
        })
    }
}
