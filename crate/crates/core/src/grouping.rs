//! Embedding-space partitioning for the group-based estimator: seeded
//! k-means, silhouette-driven choice of the group count, and k-NN density.

use std::cmp::Ordering;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const KMEANS_MAX_ITER: usize = 100;
pub const DEFAULT_NEIGHBOR_K: usize = 10;
const DENSITY_ETA: f64 = 1e-9;

/// A partition of the pool into G non-empty groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAssignment {
    pub group_count: usize,
    pub labels: Vec<usize>,
    pub sizes: Vec<usize>,
    /// Per-group mean embedding; empty when built from labels alone.
    pub centroids: Vec<Vec<f64>>,
}

impl GroupAssignment {
    /// Builds an assignment from explicit labels in `[0, G)`.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("group labels are empty"));
        }
        let g = labels.iter().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0usize; g];
        for &l in &labels {
            sizes[l] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::invalid(format!("group {empty} has no members")));
        }
        Ok(Self {
            group_count: g,
            labels,
            sizes,
            centroids: Vec::new(),
        })
    }

    /// Everything in one group.
    pub fn single(n: usize) -> Result<Self> {
        Self::from_labels(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// p_g = |group g| / |D|.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.labels.len() as f64;
        self.sizes.iter().map(|&s| s as f64 / n).collect()
    }

    /// Member indices of each group, in ascending order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}

/// Per-record local density; larger means a denser neighbourhood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityScores {
    pub scores: Vec<f64>,
    pub neighbor_k: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

fn check_points<P: AsRef<[f64]>>(points: &[P]) -> Result<usize> {
    let first = points
        .first()
        .ok_or_else(|| Error::invalid("no embeddings supplied"))?
        .as_ref()
        .len();
    if first == 0 {
        return Err(Error::invalid("embeddings have zero dimensions"));
    }
    for p in points {
        let p = p.as_ref();
        if p.len() != first {
            return Err(Error::invalid("ragged embeddings"));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite embedding component"));
        }
    }
    Ok(first)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn distinct_count<P: AsRef<[f64]>>(points: &[P]) -> usize {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| lex_cmp(points[a].as_ref(), points[b].as_ref()));
    1 + idx
        .windows(2)
        .filter(|w| points[w[0]].as_ref() != points[w[1]].as_ref())
        .count()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Seeded k-means++ initialisation followed by Lloyd iterations.
pub fn kmeans<P: AsRef<[f64]> + Sync>(points: &[P], g: usize, seed: u64) -> Result<GroupAssignment> {
    let dim = check_points(points)?;
    if g == 0 {
        return Err(Error::invalid("cluster count must be >= 1"));
    }
    let distinct = distinct_count(points);
    if g > distinct {
        return Err(Error::invalid(format!(
            "cluster count {g} exceeds the {distinct} distinct points"
        )));
    }
    let n = points.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(g);
    centroids.push(points[rng.random_range(0..n)].as_ref().to_vec());
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p.as_ref(), &centroids[0])).collect();
    while centroids.len() < g {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            if w > 0.0 {
                pick = Some(i);
                if target < w {
                    break;
                }
                target -= w;
            }
        }
        let pick = pick.expect("g <= distinct points leaves positive mass");
        let c = points[pick].as_ref().to_vec();
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p.as_ref(), &c));
        }
        centroids.push(c);
    }

    let mut labels = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITER {
        let assigned: Vec<(usize, f64)> = points.par_iter().map(|p| nearest(p.as_ref(), &centroids)).collect();
        let mut new_labels: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        repair_empty(points, &mut new_labels, &assigned, &mut centroids, g);
        let changed = new_labels != labels;
        labels = new_labels;
        centroids = mean_centroids(points, &labels, g, dim);
        if !changed {
            break;
        }
    }

    let mut sizes = vec![0; g];
    for &l in &labels {
        sizes[l] += 1;
    }
    Ok(GroupAssignment {
        group_count: g,
        labels,
        sizes,
        centroids,
    })
}

/// Moves the point farthest from its own centroid into each empty cluster.
fn repair_empty<P: AsRef<[f64]>>(
    points: &[P],
    labels: &mut [usize],
    assigned: &[(usize, f64)],
    centroids: &mut [Vec<f64>],
    g: usize,
) {
    let mut sizes = vec![0usize; g];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    let mut dists: Vec<f64> = assigned.iter().map(|a| a.1).collect();
    for j in 0..g {
        if sizes[j] > 0 {
            continue;
        }
        let far = (0..labels.len())
            .filter(|&i| sizes[labels[i]] > 1)
            .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
            .expect("some cluster has more than one member");
        sizes[labels[far]] -= 1;
        labels[far] = j;
        sizes[j] = 1;
        dists[far] = 0.0;
        centroids[j] = points[far].as_ref().to_vec();
    }
}

fn mean_centroids<P: AsRef<[f64]>>(points: &[P], labels: &[usize], g: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; g];
    let mut counts = vec![0usize; g];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p.as_ref()) {
            *s += x;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    sums
}

/// Mean silhouette coefficient under Euclidean distance.
pub fn silhouette<P: AsRef<[f64]> + Sync>(points: &[P], assignment: &GroupAssignment) -> Result<f64> {
    check_points(points)?;
    if assignment.group_count < 2 {
        return Err(Error::invalid("silhouette needs at least 2 groups"));
    }
    if assignment.labels.len() != points.len() {
        return Err(Error::invalid("assignment does not match the number of points"));
    }
    if assignment.sizes.contains(&0) {
        return Err(Error::invalid("every group must be non-empty"));
    }
    let first = points[0].as_ref();
    if points.iter().all(|p| p.as_ref() == first) {
        return Err(Error::DegenerateGeometry("all points are identical".into()));
    }
    let g = assignment.group_count;
    let labels = &assignment.labels;
    let sizes = &assignment.sizes;
    let per_point: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let own = labels[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; g];
            let pi = points[i].as_ref();
            for (j, p) in points.iter().enumerate() {
                if j != i {
                    sums[labels[j]] += dist(pi, p.as_ref());
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..g)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m > 0.0 {
                (b - a) / m
            } else {
                0.0
            }
        })
        .collect();
    Ok(per_point.iter().sum::<f64>() / points.len() as f64)
}

/// The default search range 2..=min(20, ⌊n/10⌋), or `None` when the pool is
/// too small to hold two groups of ten.
pub fn default_group_range(n: usize) -> Option<RangeInclusive<usize>> {
    let hi = 20.min(n / 10);
    (hi >= 2).then_some(2..=hi)
}

/// Silhouette score of each candidate group count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCountScan {
    pub scores: Vec<(usize, f64)>,
    pub best: GroupAssignment,
}

/// Runs k-means for every g in `range` and keeps the assignment with the
/// highest mean silhouette (ties go to the smaller g).
pub fn select_group_count<P: AsRef<[f64]> + Sync>(
    points: &[P],
    range: RangeInclusive<usize>,
    seed: u64,
) -> Result<GroupAssignment> {
    scan_group_counts(points, range, seed).map(|s| s.best)
}

pub fn scan_group_counts<P: AsRef<[f64]> + Sync>(
    points: &[P],
    range: RangeInclusive<usize>,
    seed: u64,
) -> Result<GroupCountScan> {
    let upper = 20.min(points.len() / 10);
    if range.is_empty() || *range.start() < 2 || *range.end() > upper {
        return Err(Error::invalid(format!(
            "group-count range {}..={} must be a non-empty subset of 2..={upper}",
            range.start(),
            range.end()
        )));
    }
    let results: Vec<(usize, GroupAssignment, f64)> = range
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|g| {
            let a = kmeans(points, g, seed)?;
            let s = silhouette(points, &a)?;
            Ok((g, a, s))
        })
        .collect::<Result<_>>()?;
    let scores = results.iter().map(|(g, _, s)| (*g, *s)).collect();
    let mut best_idx = 0;
    for (i, r) in results.iter().enumerate() {
        if r.2 > results[best_idx].2 {
            best_idx = i;
        }
    }
    let best = results.into_iter().nth(best_idx).expect("non-empty").1;
    Ok(GroupCountScan { scores, best })
}

/// score_i = 1 / (mean distance to the `neighbor_k` nearest other points + η).
pub fn density_scores<P: AsRef<[f64]> + Sync>(points: &[P], neighbor_k: usize) -> Result<DensityScores> {
    check_points(points)?;
    if neighbor_k == 0 {
        return Err(Error::invalid("neighbor_k must be >= 1"));
    }
    if points.len() <= neighbor_k {
        return Err(Error::invalid(format!(
            "neighbor_k {neighbor_k} requires more than {neighbor_k} points, got {}",
            points.len()
        )));
    }
    let scores = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let pi = points[i].as_ref();
            let mut d: Vec<f64> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, p)| dist(pi, p.as_ref()))
                .collect();
            d.select_nth_unstable_by(neighbor_k - 1, f64::total_cmp);
            let nearest = &mut d[..neighbor_k];
            nearest.sort_by(f64::total_cmp);
            let mean = nearest.iter().sum::<f64>() / neighbor_k as f64;
            1.0 / (mean + DENSITY_ETA)
        })
        .collect();
    Ok(DensityScores { scores, neighbor_k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(centers: &[[f64; 2]], per: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut out = Vec::new();
        for c in centers {
            for _ in 0..per {
                out.push(vec![c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)]);
            }
        }
        out
    }

    #[test]
    fn two_blobs_separate_exactly() {
        let pts = blobs(&[[0.0, 0.0], [10.0, 0.0]], 40, 1);
        let a = kmeans(&pts, 2, 5).unwrap();
        let first = a.labels[0];
        assert!(a.labels[..40].iter().all(|&l| l == first));
        assert!(a.labels[40..].iter().all(|&l| l != first));
        // centroids sit on the blob centres
        let c0 = &a.centroids[first];
        assert!(dist(c0, &[0.0, 0.0]) < 0.5);
        assert_eq!(a.sizes, vec![40, 40]);
    }

    #[test]
    fn single_cluster() {
        let pts = blobs(&[[0.0, 0.0]], 15, 2);
        let a = kmeans(&pts, 1, 0).unwrap();
        assert!(a.labels.iter().all(|&l| l == 0));
        assert_eq!(a.weights(), vec![1.0]);
    }

    #[test]
    fn kmeans_is_deterministic() {
        let pts = blobs(&[[0.0, 0.0], [3.0, 3.0], [6.0, 0.0]], 30, 3);
        assert_eq!(kmeans(&pts, 3, 9).unwrap(), kmeans(&pts, 3, 9).unwrap());
    }

    #[test]
    fn kmeans_rejects_too_many_clusters() {
        let pts = vec![vec![1.0], vec![1.0], vec![2.0]];
        assert!(kmeans(&pts, 3, 0).is_err());
        assert!(kmeans(&pts, 2, 0).is_ok());
    }

    #[test]
    fn kmeans_duplicates_still_fill_every_cluster() {
        let mut pts = vec![vec![0.0, 0.0]; 20];
        pts.push(vec![5.0, 5.0]);
        pts.push(vec![9.0, 1.0]);
        let a = kmeans(&pts, 3, 4).unwrap();
        assert!(a.sizes.iter().all(|&s| s > 0));
        assert_eq!(a.sizes.iter().sum::<usize>(), 22);
    }

    #[test]
    fn silhouette_well_separated() {
        let pts = blobs(&[[0.0, 0.0], [10.0, 0.0]], 40, 4);
        let a = kmeans(&pts, 2, 0).unwrap();
        assert!(silhouette(&pts, &a).unwrap() > 0.9);
    }

    #[test]
    fn silhouette_random_labels_near_zero() {
        let mut total = 0.0;
        for seed in 0..10 {
            let pts = blobs(&[[0.0, 0.0]], 100, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let mut labels: Vec<usize> = (0..100).map(|i| i % 2).collect();
            for i in (1..labels.len()).rev() {
                labels.swap(i, rng.random_range(0..=i));
            }
            let a = GroupAssignment::from_labels(labels).unwrap();
            let s = silhouette(&pts, &a).unwrap();
            assert!(s.abs() < 0.2, "seed {seed}: {s}");
            total += s;
        }
        assert!((total / 10.0).abs() < 0.1);
    }

    #[test]
    fn silhouette_direct_formula() {
        // 1-D: {0, 1} vs {10}: singleton scores 0;
        // point 0: a = 1, b = 10 → 0.9; point 1: a = 1, b = 9 → 8/9
        let pts = vec![vec![0.0], vec![1.0], vec![10.0]];
        let a = GroupAssignment::from_labels(vec![0, 0, 1]).unwrap();
        let expect = (0.9 + 8.0 / 9.0 + 0.0) / 3.0;
        assert!((silhouette(&pts, &a).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn silhouette_errors() {
        let pts = vec![vec![1.0, 1.0]; 6];
        let a = GroupAssignment::from_labels(vec![0, 0, 0, 1, 1, 1]).unwrap();
        assert!(silhouette(&pts, &a)
            .unwrap_err()
            .to_string()
            .contains("degenerate geometry"));
        let one = GroupAssignment::single(6).unwrap();
        assert!(silhouette(&pts, &one).is_err());
    }

    #[test]
    fn selects_three_blobs() {
        let pts = blobs(&[[0.0, 0.0], [12.0, 0.0], [6.0, 10.0]], 25, 6);
        let a = select_group_count(&pts, 2..=6, 1).unwrap();
        assert_eq!(a.group_count, 3);
    }

    #[test]
    fn selection_maximises_silhouette() {
        let pts = blobs(&[[0.0, 0.0], [4.0, 0.0], [2.0, 3.0], [8.0, 8.0]], 30, 8);
        let scan = scan_group_counts(&pts, 2..=8, 2).unwrap();
        let chosen = silhouette(&pts, &scan.best).unwrap();
        for g in 2..=8 {
            let s = silhouette(&pts, &kmeans(&pts, g, 2).unwrap()).unwrap();
            assert!(chosen >= s, "g={g}");
        }
    }

    #[test]
    fn selection_single_candidate_and_determinism() {
        let pts = blobs(&[[0.0, 0.0], [12.0, 0.0], [6.0, 10.0]], 25, 6);
        let a = select_group_count(&pts, 2..=2, 3).unwrap();
        assert_eq!(a.group_count, 2);
        assert_eq!(a, select_group_count(&pts, 2..=2, 3).unwrap());
        assert_eq!(
            select_group_count(&pts, 2..=7, 3).unwrap(),
            select_group_count(&pts, 2..=7, 3).unwrap()
        );
    }

    #[test]
    fn selection_range_validated() {
        let pts = blobs(&[[0.0, 0.0]], 30, 0);
        assert!(select_group_count(&pts, 2..=4, 0).is_err());
        assert!(select_group_count(&pts, 1..=3, 0).is_err());
        assert_eq!(default_group_range(30), Some(2..=3));
        assert_eq!(default_group_range(19), None);
        assert_eq!(default_group_range(5_000), Some(2..=20));
    }

    #[test]
    fn density_identical_points() {
        let pts = vec![vec![3.0, 3.0]; 5];
        let d = density_scores(&pts, 2).unwrap();
        assert!(d.scores.iter().all(|&s| s == 1.0 / DENSITY_ETA));
    }

    #[test]
    fn density_outlier_is_sparsest() {
        let mut pts = blobs(&[[0.0, 0.0]], 30, 7);
        pts.push(vec![40.0, 40.0]);
        let d = density_scores(&pts, 5).unwrap();
        let min = d.scores.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(d.scores[30], min);
        assert!(d.scores[..30].iter().all(|&s| s > min));
    }

    #[test]
    fn density_permutation_equivariant() {
        let pts = blobs(&[[0.0, 0.0], [5.0, 5.0]], 20, 9);
        let d = density_scores(&pts, 4).unwrap();
        let mut perm: Vec<usize> = (0..pts.len()).collect();
        perm.reverse();
        perm.swap(3, 17);
        let shuffled: Vec<Vec<f64>> = perm.iter().map(|&i| pts[i].clone()).collect();
        let ds = density_scores(&shuffled, 4).unwrap();
        for (new, &old) in perm.iter().enumerate() {
            assert_eq!(ds.scores[new], d.scores[old]);
        }
        assert!(d.scores.iter().all(|s| *s > 0.0 && s.is_finite()));
    }

    #[test]
    fn density_requires_enough_points() {
        let pts = vec![vec![0.0], vec![1.0]];
        assert!(density_scores(&pts, 2).is_err());
        assert!(density_scores(&pts, 0).is_err());
        assert!(density_scores(&pts, 1).is_ok());
    }

    #[test]
    fn from_labels_validation() {
        assert!(GroupAssignment::from_labels(vec![0, 2]).is_err());
        let a = GroupAssignment::from_labels(vec![1, 0, 1, 1]).unwrap();
        assert_eq!(a.weights(), vec![0.25, 0.75]);
        assert_eq!(a.members(), vec![vec![1], vec![0, 2, 3]]);
    }
}
