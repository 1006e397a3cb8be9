//! Performance estimators: uniform random sampling, the group-wise active
//! Bayesian estimator (Thompson-style Beta posteriors with an
//! expected-variance-reduction reward), and an injected estimator with a
//! fixed bias used as a controlled reference.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grouping::{self, GroupAssignment, DEFAULT_NEIGHBOR_K};
use crate::pool::EvaluationPool;
use crate::stats::beta_moments_unchecked;

pub const UNINFORMED_PRIOR: f64 = 0.5;
pub const DEFAULT_PRIOR_STRENGTH: f64 = 2.0;
const CONFIDENCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Prior {
    /// Beta(0.5, 0.5) for every group.
    #[default]
    Uninformed,
    /// Beta(strength·c̄_g, strength·(1−c̄_g)) with c̄_g the group's mean confidence.
    Informed {
        #[serde(default = "default_strength")]
        strength: f64,
    },
}

fn default_strength() -> f64 {
    DEFAULT_PRIOR_STRENGTH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GroupSelection {
    /// k-means over the embeddings with the group count chosen by silhouette.
    Auto {
        #[serde(default)]
        min: Option<usize>,
        #[serde(default)]
        max: Option<usize>,
    },
    /// Explicit per-record group labels.
    Fixed { labels: Vec<usize> },
    /// One group holding the whole pool.
    Single,
}

impl Default for GroupSelection {
    fn default() -> Self {
        GroupSelection::Auto { min: None, max: None }
    }
}

/// How an item is drawn inside the chosen group.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WithinGroup {
    /// Density-weighted when the pool has embeddings, uniform otherwise.
    #[default]
    Auto,
    Density,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorKind {
    RandomSampling,
    ActiveBayes {
        #[serde(default)]
        prior: Prior,
        #[serde(default = "default_neighbor_k")]
        neighbor_k: usize,
        #[serde(default)]
        groups: GroupSelection,
        #[serde(default)]
        within_group: WithinGroup,
    },
    /// θ* + bias + N(0, noise_std²) at every budget, clamped to [0, 1].
    Injected {
        bias: f64,
        noise_std: f64,
    },
}

fn default_neighbor_k() -> usize {
    DEFAULT_NEIGHBOR_K
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub name: String,
    #[serde(flatten)]
    pub kind: EstimatorKind,
    /// Seed for one-off preparation (clustering); trial seeds come from the campaign.
    #[serde(default)]
    pub seed: u64,
}

impl EstimatorConfig {
    pub fn random_sampling(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: EstimatorKind::RandomSampling,
            seed: 0,
        }
    }

    pub fn active_bayes(name: impl Into<String>, groups: GroupSelection) -> Self {
        Self {
            name: name.into(),
            kind: EstimatorKind::ActiveBayes {
                prior: Prior::Uninformed,
                neighbor_k: DEFAULT_NEIGHBOR_K,
                groups,
                within_group: WithinGroup::Auto,
            },
            seed: 0,
        }
    }

    pub fn injected(name: impl Into<String>, bias: f64, noise_std: f64) -> Self {
        Self {
            name: name.into(),
            kind: EstimatorKind::Injected { bias, noise_std },
            seed: 0,
        }
    }
}

/// A group's Beta posterior over its accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPosterior {
    pub alpha: f64,
    pub beta: f64,
    pub weight: f64,
    pub members: Vec<usize>,
    pub labeled: Vec<usize>,
}

impl GroupPosterior {
    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

/// One sequential labeling run: the estimate after every acquisition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRun {
    /// Pool indices in acquisition order.
    pub acquired: Vec<usize>,
    /// `estimates[k - 1]` is the estimate after k labels.
    pub estimates: Vec<f64>,
    pub seed: u64,
}

impl TrajectoryRun {
    pub fn acquired_ids<'a>(&self, pool: &'a EvaluationPool) -> Vec<&'a str> {
        self.acquired
            .iter()
            .map(|&i| pool.records()[i].instance_id.as_str())
            .collect()
    }
}

fn check_budget(pool: &EvaluationPool, max_budget: usize) -> Result<()> {
    if max_budget == 0 || max_budget > pool.len() {
        return Err(Error::invalid(format!(
            "max_budget must be in 1..={}, got {max_budget}",
            pool.len()
        )));
    }
    Ok(())
}

/// Labels a uniformly random prefix of the pool (without replacement).
pub fn run_random_sampling(pool: &EvaluationPool, max_budget: usize, seed: u64) -> Result<TrajectoryRun> {
    check_budget(pool, max_budget)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..pool.len()).collect();
    let mut hits = 0usize;
    let mut estimates = Vec::with_capacity(max_budget);
    for i in 0..max_budget {
        let j = rng.random_range(i..order.len());
        order.swap(i, j);
        hits += usize::from(pool.correct(order[i]));
        estimates.push(hits as f64 / (i + 1) as f64);
    }
    order.truncate(max_budget);
    Ok(TrajectoryRun {
        acquired: order,
        estimates,
        seed,
    })
}

fn reward(alpha: f64, beta: f64, weight: f64, theta: f64) -> f64 {
    let (_, var_now) = beta_moments_unchecked(alpha, beta);
    let (_, var_hit) = beta_moments_unchecked(alpha + 1.0, beta);
    let (_, var_miss) = beta_moments_unchecked(alpha, beta + 1.0);
    weight * (var_now - (theta * var_hit + (1.0 - theta) * var_miss))
}

/// Weighted expected reduction in posterior variance from labeling one more
/// item of `group`, given a sampled group accuracy `theta_sample`.
pub fn active_bayes_reward(group: &GroupPosterior, theta_sample: f64) -> f64 {
    reward(group.alpha, group.beta, group.weight, theta_sample)
}

/// Group structure, priors and density weights, computed once per campaign.
#[derive(Debug, Clone)]
pub struct ActiveBayes<'p> {
    pool: &'p EvaluationPool,
    groups: GroupAssignment,
    members: Vec<Vec<usize>>,
    weights: Vec<f64>,
    priors: Vec<(f64, f64)>,
    density: Option<Vec<f64>>,
}

impl<'p> ActiveBayes<'p> {
    pub fn prepare(pool: &'p EvaluationPool, config: &EstimatorConfig) -> Result<Self> {
        let EstimatorKind::ActiveBayes {
            prior,
            neighbor_k,
            groups,
            within_group,
        } = &config.kind
        else {
            return Err(Error::invalid(format!(
                "{} is not an active_bayes estimator",
                config.name
            )));
        };

        let groups = match groups {
            GroupSelection::Single => GroupAssignment::single(pool.len())?,
            GroupSelection::Fixed { labels } => {
                if labels.len() != pool.len() {
                    return Err(Error::invalid(format!(
                        "fixed group labels cover {} records, pool has {}",
                        labels.len(),
                        pool.len()
                    )));
                }
                GroupAssignment::from_labels(labels.clone())?
            }
            GroupSelection::Auto { min, max } => {
                let points = pool
                    .embeddings()
                    .ok_or_else(|| Error::invalid("automatic grouping needs embeddings; the pool has none"))?;
                let default = grouping::default_group_range(pool.len()).ok_or_else(|| {
                    Error::invalid(format!(
                        "pool of {} records is too small for automatic grouping",
                        pool.len()
                    ))
                })?;
                let lo = min.unwrap_or(*default.start());
                let hi = max.unwrap_or(*default.end());
                grouping::select_group_count(&points, lo..=hi, config.seed)?
            }
        };
        Self::with_groups(pool, groups, *prior, *neighbor_k, *within_group)
    }

    pub fn with_groups(
        pool: &'p EvaluationPool,
        groups: GroupAssignment,
        prior: Prior,
        neighbor_k: usize,
        within_group: WithinGroup,
    ) -> Result<Self> {
        if groups.len() != pool.len() {
            return Err(Error::invalid("group assignment does not match the pool"));
        }
        let members = groups.members();
        let weights = groups.weights();

        let priors = match prior {
            Prior::Uninformed => vec![(UNINFORMED_PRIOR, UNINFORMED_PRIOR); groups.group_count],
            Prior::Informed { strength } => {
                if !(strength > 0.0 && strength.is_finite()) {
                    return Err(Error::invalid("informed prior strength must be positive"));
                }
                let conf = pool
                    .confidences()
                    .ok_or_else(|| Error::invalid("informed prior needs a confidence for every record"))?;
                members
                    .iter()
                    .map(|m| {
                        let c = m.iter().map(|&i| conf[i]).sum::<f64>() / m.len() as f64;
                        let c = c.clamp(CONFIDENCE_FLOOR, 1.0 - CONFIDENCE_FLOOR);
                        (strength * c, strength * (1.0 - c))
                    })
                    .collect()
            }
        };

        let density = match (within_group, pool.embeddings()) {
            (WithinGroup::Uniform, _) | (WithinGroup::Auto, None) => None,
            (WithinGroup::Density, None) => {
                return Err(Error::invalid("density sampling needs embeddings; the pool has none"))
            }
            (_, Some(points)) => Some(grouping::density_scores(&points, neighbor_k)?.scores),
        };

        Ok(Self {
            pool,
            groups,
            members,
            weights,
            priors,
            density,
        })
    }

    pub fn groups(&self) -> &GroupAssignment {
        &self.groups
    }

    pub fn run(&self, max_budget: usize, seed: u64) -> Result<TrajectoryRun> {
        self.run_detailed(max_budget, seed).map(|(run, _)| run)
    }

    /// Runs the acquisition loop and also returns the final group posteriors.
    pub fn run_detailed(&self, max_budget: usize, seed: u64) -> Result<(TrajectoryRun, Vec<GroupPosterior>)> {
        if max_budget == 0 {
            return Err(Error::invalid("max_budget must be >= 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut posts: Vec<GroupPosterior> = self
            .members
            .iter()
            .zip(&self.weights)
            .zip(&self.priors)
            .map(|((m, &w), &(a, b))| GroupPosterior {
                alpha: a,
                beta: b,
                weight: w,
                members: m.clone(),
                labeled: Vec::new(),
            })
            .collect();
        let mut unlabeled = self.members.clone();
        let mut acquired = Vec::with_capacity(max_budget);
        let mut estimates = Vec::with_capacity(max_budget);

        for _ in 0..max_budget {
            let mut best: Option<(usize, f64)> = None;
            for (g, post) in posts.iter().enumerate() {
                let beta = Beta::new(post.alpha, post.beta).map_err(|e| Error::invalid(e.to_string()))?;
                let theta = beta.sample(&mut rng);
                if unlabeled[g].is_empty() {
                    continue;
                }
                let r = active_bayes_reward(post, theta);
                if best.is_none_or(|(_, br)| r > br) {
                    best = Some((g, r));
                }
            }
            let (g, _) = best.ok_or(Error::BudgetExceedsPool)?;

            let pos = self.pick_within(&unlabeled[g], &mut rng);
            let item = unlabeled[g].remove(pos);
            let z = self.pool.correct(item);
            let post = &mut posts[g];
            if z {
                post.alpha += 1.0;
            } else {
                post.beta += 1.0;
            }
            post.labeled.push(item);
            acquired.push(item);
            estimates.push(global_estimate(&posts));
        }
        Ok((
            TrajectoryRun {
                acquired,
                estimates,
                seed,
            },
            posts,
        ))
    }

    fn pick_within(&self, candidates: &[usize], rng: &mut ChaCha8Rng) -> usize {
        match &self.density {
            None => rng.random_range(0..candidates.len()),
            Some(scores) => {
                let total: f64 = candidates.iter().map(|&i| scores[i]).sum();
                let mut target = rng.random::<f64>() * total;
                for (pos, &i) in candidates.iter().enumerate() {
                    if target < scores[i] {
                        return pos;
                    }
                    target -= scores[i];
                }
                candidates.len() - 1
            }
        }
    }
}

/// Σ_g p_g · α_g / (α_g + β_g)
pub fn global_estimate(groups: &[GroupPosterior]) -> f64 {
    groups.iter().map(|g| g.weight * g.mean()).sum::<f64>().clamp(0.0, 1.0)
}

pub fn run_active_bayes(
    pool: &EvaluationPool,
    config: &EstimatorConfig,
    max_budget: usize,
    seed: u64,
) -> Result<TrajectoryRun> {
    check_budget(pool, max_budget)?;
    ActiveBayes::prepare(pool, config)?.run(max_budget, seed)
}

/// An estimator resolved against a pool, ready to run trials.
#[derive(Debug, Clone)]
pub enum Estimator<'p> {
    RandomSampling(&'p EvaluationPool),
    ActiveBayes(ActiveBayes<'p>),
    Injected {
        pool: &'p EvaluationPool,
        bias: f64,
        noise_std: f64,
    },
}

impl<'p> Estimator<'p> {
    pub fn prepare(pool: &'p EvaluationPool, config: &EstimatorConfig) -> Result<Self> {
        match &config.kind {
            EstimatorKind::RandomSampling => Ok(Estimator::RandomSampling(pool)),
            EstimatorKind::ActiveBayes { .. } => Ok(Estimator::ActiveBayes(ActiveBayes::prepare(pool, config)?)),
            &EstimatorKind::Injected { bias, noise_std } => {
                if !(noise_std >= 0.0 && noise_std.is_finite() && bias.is_finite()) {
                    return Err(Error::invalid(
                        "injected estimator needs finite bias and noise_std >= 0",
                    ));
                }
                Ok(Estimator::Injected { pool, bias, noise_std })
            }
        }
    }

    pub fn pool(&self) -> &'p EvaluationPool {
        match self {
            Estimator::RandomSampling(p) => p,
            Estimator::ActiveBayes(ab) => ab.pool,
            Estimator::Injected { pool, .. } => pool,
        }
    }

    pub fn run(&self, max_budget: usize, seed: u64) -> Result<TrajectoryRun> {
        check_budget(self.pool(), max_budget)?;
        match self {
            Estimator::RandomSampling(pool) => run_random_sampling(pool, max_budget, seed),
            Estimator::ActiveBayes(ab) => ab.run(max_budget, seed),
            &Estimator::Injected { pool, bias, noise_std } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let noise = Normal::new(0.0, noise_std).map_err(|e| Error::invalid(e.to_string()))?;
                let center = pool.ground_truth() + bias;
                let estimates = (0..max_budget)
                    .map(|_| (center + noise.sample(&mut rng)).clamp(0.0, 1.0))
                    .collect();
                Ok(TrajectoryRun {
                    acquired: Vec::new(),
                    estimates,
                    seed,
                })
            }
        }
    }
}
