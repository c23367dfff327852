//! Seeded k-means++ with Lloyd refinement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{par, CosegError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub n_clusters: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once no center moves farther than this.
    pub tol: f64,
    /// Independent k-means++ starts; the lowest within-cluster sum of squares wins.
    pub n_init: usize,
}

impl KMeansConfig {
    pub fn new(n_clusters: usize, seed: u64) -> Self {
        KMeansConfig {
            n_clusters,
            seed,
            max_iter: 300,
            tol: 1e-10,
            n_init: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignment: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub wcss: f64,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center; ties go to the lowest index.
fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Within-cluster sum of squares of `assignment` around the cluster means.
pub fn wcss(points: &[Vec<f64>], assignment: &[usize], n_clusters: usize) -> f64 {
    let centers = means(points, assignment, n_clusters);
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| sq_dist(p, &centers[c]))
        .sum()
}

fn means(points: &[Vec<f64>], assignment: &[usize], n_clusters: usize) -> Vec<Vec<f64>> {
    let dim = points.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; dim]; n_clusters];
    let mut counts = vec![0usize; n_clusters];
    for (p, &c) in points.iter().zip(assignment) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        if n > 0 {
            s.iter_mut().for_each(|x| *x /= n as f64);
        }
    }
    sums
}

fn plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let m = points.len();
    let mut centers = vec![points[rng.random_range(0..m)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut idx = m - 1;
            for (i, &w) in d2.iter().enumerate() {
                if r < w {
                    idx = i;
                    break;
                }
                r -= w;
            }
            idx
        } else {
            rng.random_range(0..m)
        };
        centers.push(points[pick].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &points[pick]));
        }
    }
    centers
}

/// Move the farthest point of a multi-point cluster into each empty cluster.
fn reseed_empty(points: &[Vec<f64>], assignment: &mut [usize], centers: &mut [Vec<f64>]) {
    let k = centers.len();
    loop {
        let mut counts = vec![0usize; k];
        for &c in assignment.iter() {
            counts[c] += 1;
        }
        let Some(empty) = counts.iter().position(|&n| n == 0) else {
            return;
        };
        let mut far = (usize::MAX, -1.0);
        for (i, (p, &c)) in points.iter().zip(assignment.iter()).enumerate() {
            if counts[c] > 1 {
                let d = sq_dist(p, &centers[c]);
                if d > far.1 {
                    far = (i, d);
                }
            }
        }
        assignment[far.0] = empty;
        centers[empty] = points[far.0].clone();
    }
}

fn lloyd(points: &[Vec<f64>], cfg: &KMeansConfig, rng: &mut ChaCha8Rng) -> KMeansResult {
    let k = cfg.n_clusters;
    let mut centers = plus_plus(points, k, rng);
    let mut assignment = vec![0; points.len()];
    let mut iterations = 0;
    while iterations < cfg.max_iter.max(1) {
        iterations += 1;
        assignment = par::map_slice(points, |p| nearest(p, &centers).0);
        reseed_empty(points, &mut assignment, &mut centers);
        let next = means(points, &assignment, k);
        let shift = centers
            .iter()
            .zip(&next)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centers = next;
        if shift < cfg.tol {
            break;
        }
    }
    hartigan(points, &mut assignment, &mut centers, cfg.max_iter.max(1));
    let wcss = points
        .iter()
        .zip(&assignment)
        .map(|(p, &c)| sq_dist(p, &centers[c]))
        .sum();
    KMeansResult {
        assignment,
        centers,
        wcss,
        iterations,
    }
}

/// Single-point transfers that lower the within-cluster sum of squares,
/// accounting for the centroid shift on both sides. Lloyd fixed points are
/// not always stable under such moves.
fn hartigan(
    points: &[Vec<f64>],
    assignment: &mut [usize],
    centers: &mut [Vec<f64>],
    max_sweeps: usize,
) {
    let k = centers.len();
    let mut counts = vec![0usize; k];
    for &c in assignment.iter() {
        counts[c] += 1;
    }
    for _ in 0..max_sweeps {
        let mut moved = false;
        for (i, p) in points.iter().enumerate() {
            let a = assignment[i];
            if counts[a] < 2 {
                continue;
            }
            let na = counts[a] as f64;
            let removal = na / (na - 1.0) * sq_dist(p, &centers[a]);
            let mut best = (a, 0.0);
            for b in (0..k).filter(|&b| b != a) {
                let nb = counts[b] as f64;
                let gain = nb / (nb + 1.0) * sq_dist(p, &centers[b]) - removal;
                if gain < best.1 - 1e-12 * removal {
                    best = (b, gain);
                }
            }
            let b = best.0;
            if b == a {
                continue;
            }
            let nb = counts[b] as f64;
            for (c, x) in centers[a].iter_mut().zip(p) {
                *c = (*c * na - x) / (na - 1.0);
            }
            for (c, x) in centers[b].iter_mut().zip(p) {
                *c = (*c * nb + x) / (nb + 1.0);
            }
            counts[a] -= 1;
            counts[b] += 1;
            assignment[i] = b;
            moved = true;
        }
        if !moved {
            break;
        }
    }
    let exact = means(points, assignment, k);
    centers.clone_from_slice(&exact);
}

/// Relabel clusters in order of their first member.
fn canonical(mut r: KMeansResult) -> KMeansResult {
    let k = r.centers.len();
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    for &c in &r.assignment {
        if map[c] == usize::MAX {
            map[c] = next;
            next += 1;
        }
    }
    let mut centers = vec![Vec::new(); k];
    for (old, &new) in map.iter().enumerate() {
        centers[new] = std::mem::take(&mut r.centers[old]);
    }
    r.assignment.iter_mut().for_each(|c| *c = map[*c]);
    r.centers = centers;
    r
}

/// Cluster `points` (rows) into exactly `cfg.n_clusters` non-empty clusters.
pub fn kmeans(points: &[Vec<f64>], cfg: &KMeansConfig) -> Result<KMeansResult> {
    let m = points.len();
    if cfg.n_clusters == 0 || cfg.n_clusters > m {
        return Err(CosegError::TooFewPoints {
            points: m,
            clusters: cfg.n_clusters,
        });
    }
    let mut best: Option<KMeansResult> = None;
    for start in 0..cfg.n_init.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(start as u64);
        let run = lloyd(points, cfg, &mut rng);
        if best.as_ref().is_none_or(|b| run.wcss < b.wcss) {
            best = Some(run);
        }
    }
    Ok(canonical(best.expect("at least one start")))
}
