//! Automatic selection of the discrimination margin δ* by bisection, with a
//! per-estimator dynamic tolerance ε_k = δ + t_{α,N−1}·s_k/√N.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::RunSummary;
use crate::metrics::ft_eval;
use crate::stats::{t_critical, SampleStats};

pub const DEFAULT_RESOLUTION: f64 = 0.01;

pub fn dynamic_epsilon(delta: f64, summary: &RunSummary, alpha: f64) -> Result<f64> {
    if summary.n_runs < 2 {
        return Err(Error::TestUndefined);
    }
    let s = summary.stats()?.require_std()?;
    let n = summary.n_runs as f64;
    Ok(delta + t_critical(alpha, n - 1.0)? * s / n.sqrt())
}

/// Which way the bracket moved after one δ probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Verdicts differ at some budget; δ recorded, search left.
    Distinguished,
    /// Both pass at the last scanned budget; search left.
    BothPass,
    /// Both fail at the last scanned budget; search right.
    BothFail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchStep {
    pub delta: f64,
    pub distinguished: bool,
    /// First budget where the verdicts differ.
    pub divergent_budget: Option<usize>,
    /// Verdicts at the budget where the scan stopped.
    pub last_pass_a: bool,
    pub last_pass_b: bool,
    pub branch: Branch,
    pub low: f64,
    pub high: f64,
}

/// Tolerances and verdicts of both estimators at one δ, for every budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginSchedule {
    pub delta: f64,
    pub epsilon_a: Vec<f64>,
    pub epsilon_b: Vec<f64>,
    pub pass_a: Vec<bool>,
    pub pass_b: Vec<bool>,
}

impl MarginSchedule {
    pub fn first_divergence(&self) -> Option<usize> {
        self.pass_a
            .iter()
            .zip(&self.pass_b)
            .position(|(a, b)| a != b)
            .map(|i| i + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginSearchResult {
    pub delta_star: Option<f64>,
    pub trace: Vec<SearchStep>,
    /// Final bracket.
    pub low: f64,
    pub high: f64,
    /// Full schedule at δ*, when one was found.
    pub schedule: Option<MarginSchedule>,
}

fn validate(a: &[RunSummary], b: &[RunSummary]) -> Result<()> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::invalid(format!(
            "budget ranges differ: {} vs {} summaries",
            a.len(),
            b.len()
        )));
    }
    for (i, (sa, sb)) in a.iter().zip(b).enumerate() {
        if sa.budget != i + 1 || sb.budget != i + 1 {
            return Err(Error::invalid(format!(
                "budget ranges must both be 1..={} in order",
                a.len()
            )));
        }
        if sa.n_runs < 2 || sb.n_runs < 2 {
            return Err(Error::TestUndefined);
        }
    }
    Ok(())
}

/// Per-budget statistics with the δ-independent half-width t_{α,N−1}·s/√N
/// computed once.
struct Prepared {
    stats: Vec<SampleStats>,
    half_width: Vec<f64>,
}

fn prepare(summaries: &[RunSummary], alpha: f64) -> Result<Prepared> {
    let mut cache: Vec<(usize, f64)> = Vec::new();
    let mut stats = Vec::with_capacity(summaries.len());
    let mut half_width = Vec::with_capacity(summaries.len());
    for s in summaries {
        let st = s.stats()?;
        let sd = st.require_std()?;
        let t = match cache.iter().find(|(n, _)| *n == s.n_runs) {
            Some(&(_, t)) => t,
            None => {
                let t = t_critical(alpha, s.n_runs as f64 - 1.0)?;
                cache.push((s.n_runs, t));
                t
            }
        };
        half_width.push(t * sd / (s.n_runs as f64).sqrt());
        stats.push(st);
    }
    Ok(Prepared { stats, half_width })
}

impl Prepared {
    fn verdict(&self, i: usize, truth: f64, delta: f64, alpha: f64) -> Result<(f64, bool)> {
        let eps = delta + self.half_width[i];
        let pass = ft_eval(&self.stats[i], truth, eps, alpha)?.pass;
        Ok((eps, pass))
    }
}

/// FT verdicts of both estimators at `delta` over every budget.
pub fn evaluate_at(a: &[RunSummary], b: &[RunSummary], truth: f64, alpha: f64, delta: f64) -> Result<MarginSchedule> {
    validate(a, b)?;
    let (pa, pb) = (prepare(a, alpha)?, prepare(b, alpha)?);
    let mut s = MarginSchedule {
        delta,
        epsilon_a: Vec::with_capacity(a.len()),
        epsilon_b: Vec::with_capacity(a.len()),
        pass_a: Vec::with_capacity(a.len()),
        pass_b: Vec::with_capacity(a.len()),
    };
    for i in 0..a.len() {
        let (ea, va) = pa.verdict(i, truth, delta, alpha)?;
        let (eb, vb) = pb.verdict(i, truth, delta, alpha)?;
        s.epsilon_a.push(ea);
        s.epsilon_b.push(eb);
        s.pass_a.push(va);
        s.pass_b.push(vb);
    }
    Ok(s)
}

pub fn search_margin(a: &[RunSummary], b: &[RunSummary], truth: f64, alpha: f64) -> Result<MarginSearchResult> {
    search_margin_with(a, b, truth, alpha, DEFAULT_RESOLUTION)
}

/// Bisection over δ ∈ [0, 1] until the bracket is narrower than `resolution`.
///
/// Each probe scans budgets in order and stops at the first one where the two
/// verdicts differ. Without a divergence, the branch is decided by the
/// verdicts at the final budget.
pub fn search_margin_with(
    a: &[RunSummary],
    b: &[RunSummary],
    truth: f64,
    alpha: f64,
    resolution: f64,
) -> Result<MarginSearchResult> {
    validate(a, b)?;
    if !(resolution > 0.0 && resolution < 1.0) {
        return Err(Error::invalid("resolution must lie in (0, 1)"));
    }
    let (prep_a, prep_b) = (prepare(a, alpha)?, prepare(b, alpha)?);
    let mut delta_star = None;
    let (mut low, mut high) = (0.0_f64, 1.0_f64);
    let mut trace = Vec::new();
    while high - low >= resolution {
        let delta = 0.5 * (low + high);
        let mut divergent = None;
        let (mut pass_a, mut pass_b) = (false, false);
        for (i, sa) in a.iter().enumerate() {
            pass_a = prep_a.verdict(i, truth, delta, alpha)?.1;
            pass_b = prep_b.verdict(i, truth, delta, alpha)?.1;
            if pass_a != pass_b {
                divergent = Some(sa.budget);
                break;
            }
        }
        let branch = if divergent.is_some() {
            delta_star = Some(delta);
            high = delta;
            Branch::Distinguished
        } else if pass_a && pass_b {
            high = delta;
            Branch::BothPass
        } else {
            low = delta;
            Branch::BothFail
        };
        trace.push(SearchStep {
            delta,
            distinguished: divergent.is_some(),
            divergent_budget: divergent,
            last_pass_a: pass_a,
            last_pass_b: pass_b,
            branch,
            low,
            high,
        });
    }
    let schedule = delta_star.map(|d| evaluate_at(a, b, truth, alpha, d)).transpose()?;
    Ok(MarginSearchResult {
        delta_star,
        trace,
        low,
        high,
        schedule,
    })
}
