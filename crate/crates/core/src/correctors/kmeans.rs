//! Deterministic one-dimensional k-means.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans1d {
    /// Ascending.
    pub centroids: Vec<f64>,
    /// Index into `centroids` for every input value.
    pub labels: Vec<usize>,
    pub inertia: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct KMeansOptions {
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            restarts: 10,
            seed: 0,
        }
    }
}

fn nearest(centroids: &[f64], v: f64) -> usize {
    crate::trial::nearest_index(centroids, v)
}

fn distinct_sorted(values: &[f64]) -> Vec<f64> {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    s.dedup();
    s
}

/// Seeds at the `(i + 0.5) / k` quantiles of the sorted values, falling back to
/// quantiles of the distinct values when those collide.
fn quantile_seeds(values: &[f64], k: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pick = |s: &[f64]| -> Vec<f64> {
        (0..k)
            .map(|i| s[(((i as f64 + 0.5) * s.len() as f64 / k as f64) as usize).min(s.len() - 1)])
            .collect()
    };
    let seeds = pick(&sorted);
    if seeds.windows(2).all(|w| w[0] < w[1]) {
        seeds
    } else {
        pick(&distinct_sorted(values))
    }
}

/// k-means++ seeding.
fn plus_plus_seeds(values: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut seeds = vec![values[rng.random_range(0..values.len())]];
    let mut d2: Vec<f64> = values.iter().map(|v| (v - seeds[0]).powi(2)).collect();
    while seeds.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = values.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if *d > 0.0 && target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            values[chosen]
        } else {
            values[rng.random_range(0..values.len())]
        };
        seeds.push(next);
        for (d, v) in d2.iter_mut().zip(values) {
            *d = d.min((v - next).powi(2));
        }
    }
    seeds
}

fn lloyd(values: &[f64], mut centroids: Vec<f64>, max_iter: usize) -> KMeans1d {
    let k = centroids.len();
    let mut labels: Vec<usize> = values.iter().map(|&v| nearest(&centroids, v)).collect();
    for _ in 0..max_iter {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (&v, &l) in values.iter().zip(&labels) {
            sums[l] += v;
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c] / counts[c] as f64;
            } else {
                // Empty cluster: move it onto the worst-fitted point.
                let (far, _) = values
                    .iter()
                    .zip(&labels)
                    .map(|(&v, &l)| (v - centroids[l]).abs())
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, d)| if d > best.1 { (i, d) } else { best });
                centroids[c] = values[far];
                labels[far] = c;
            }
        }
        let next: Vec<usize> = values.iter().map(|&v| nearest(&centroids, v)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    let inertia = values
        .iter()
        .zip(&labels)
        .map(|(&v, &l)| (v - centroids[l]).powi(2))
        .sum();
    KMeans1d {
        centroids,
        labels,
        inertia,
    }
}

fn sort_clusters(mut fit: KMeans1d) -> KMeans1d {
    let mut order: Vec<usize> = (0..fit.centroids.len()).collect();
    order.sort_by(|&a, &b| fit.centroids[a].total_cmp(&fit.centroids[b]).then(a.cmp(&b)));
    let mut rank = vec![0; order.len()];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }
    fit.centroids = order.iter().map(|&c| fit.centroids[c]).collect();
    fit.labels.iter_mut().for_each(|l| *l = rank[*l]);
    fit
}

/// Best of one quantile-seeded run and `restarts - 1` k-means++ runs, with
/// clusters relabelled in ascending centroid order. Returns `None` when there
/// are fewer distinct values than clusters.
pub fn kmeans_1d(values: &[f64], k: usize, opts: KMeansOptions) -> Option<KMeans1d> {
    if k == 0 || values.iter().any(|v| !v.is_finite()) || distinct_sorted(values).len() < k {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = lloyd(values, quantile_seeds(values, k), opts.max_iter);
    for _ in 1..opts.restarts.max(1) {
        let fit = lloyd(values, plus_plus_seeds(values, k, &mut rng), opts.max_iter);
        if fit.inertia < best.inertia {
            best = fit;
        }
    }
    Some(sort_clusters(best))
}
