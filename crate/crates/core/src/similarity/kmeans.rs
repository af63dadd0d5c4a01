//! Seeded Lloyd k-means with farthest-point initialization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansOptions {
    pub seed: u64,
    pub max_iterations: usize,
    /// Relative change in inertia below which Lloyd iterations stop.
    pub tolerance: f64,
    pub restarts: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            max_iterations: 100,
            tolerance: 1e-4,
            restarts: 1,
        }
    }
}

impl KMeansOptions {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    /// Cluster id per point; ids are numbered by first occurrence.
    pub labels: Vec<usize>,
    /// Row-major `k x dim`, row `c` is the centroid of cluster `c`.
    pub centroids: Vec<f64>,
    pub dim: usize,
    pub inertia: f64,
    pub iterations: usize,
}

impl ClusterAssignment {
    pub fn k(&self) -> usize {
        self.centroids.len() / self.dim
    }

    pub fn centroid(&self, c: usize) -> &[f64] {
        &self.centroids[c * self.dim..(c + 1) * self.dim]
    }

    /// True when some cluster received no points.
    pub fn is_degenerate(&self) -> bool {
        let mut seen = vec![false; self.k()];
        self.labels.iter().for_each(|&l| seen[l] = true);
        seen.iter().any(|s| !s)
    }
}

/// Clusters the rows of a row-major `n x dim` matrix into `k` groups.
pub fn kmeans(
    data: &[f64],
    dim: usize,
    k: usize,
    opts: &KMeansOptions,
) -> Result<ClusterAssignment> {
    if dim == 0 || !data.len().is_multiple_of(dim) {
        return Err(Error::DimMismatch {
            expected: dim,
            found: data.len(),
        });
    }
    let n = data.len() / dim;
    if k == 0 {
        return Err(Error::InvalidValue("k must be at least 1".into()));
    }
    if n < k {
        return Err(Error::TooFewPoints {
            points: n,
            clusters: k,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<ClusterAssignment> = None;
    for _ in 0..opts.restarts.max(1) {
        let run = lloyd(data, dim, k, opts, &mut rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(relabel_by_first_occurrence(best.unwrap()))
}

fn lloyd(
    data: &[f64],
    dim: usize,
    k: usize,
    opts: &KMeansOptions,
    rng: &mut ChaCha8Rng,
) -> ClusterAssignment {
    let n = data.len() / dim;
    let row = |i: usize| &data[i * dim..(i + 1) * dim];

    let mut centroids = farthest_point_init(data, dim, k, rng);
    let mut labels = vec![usize::MAX; n];
    let mut prev_inertia = f64::INFINITY;
    let mut iterations = 0;

    loop {
        iterations += 1;
        let mut changed = false;
        let mut inertia = 0.0;
        for i in 0..n {
            let (c, d) = nearest(row(i), &centroids, dim);
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
            inertia += d;
        }
        let converged = !changed
            || inertia == 0.0
            || (prev_inertia.is_finite()
                && (prev_inertia - inertia).abs() <= opts.tolerance * prev_inertia);
        if converged || iterations >= opts.max_iterations {
            return ClusterAssignment {
                labels,
                centroids,
                dim,
                inertia,
                iterations,
            };
        }
        prev_inertia = inertia;

        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = labels[i];
            counts[c] += 1;
            for (s, v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            // empty clusters keep their previous centroid
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (dst, s) in centroids[c * dim..(c + 1) * dim]
                    .iter_mut()
                    .zip(&sums[c * dim..(c + 1) * dim])
                {
                    *dst = s * inv;
                }
            }
        }
    }
}

fn farthest_point_init(data: &[f64], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = data.len() / dim;
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let first = rng.random_range(0..n);
    let mut centroids = row(first).to_vec();
    let mut min_dist: Vec<f64> = (0..n).map(|i| sq_dist(row(i), row(first))).collect();
    for _ in 1..k {
        let mut pick = 0;
        for i in 1..n {
            if min_dist[i] > min_dist[pick] {
                pick = i;
            }
        }
        centroids.extend_from_slice(row(pick));
        for i in 0..n {
            min_dist[i] = min_dist[i].min(sq_dist(row(i), row(pick)));
        }
    }
    centroids
}

fn nearest(point: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn relabel_by_first_occurrence(mut ca: ClusterAssignment) -> ClusterAssignment {
    let k = ca.k();
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    for &l in &ca.labels {
        if map[l] == usize::MAX {
            map[l] = next;
            next += 1;
        }
    }
    for slot in map.iter_mut() {
        if *slot == usize::MAX {
            *slot = next;
            next += 1;
        }
    }
    let mut centroids = vec![0.0; ca.centroids.len()];
    for (old, &new) in map.iter().enumerate() {
        centroids[new * ca.dim..(new + 1) * ca.dim]
            .copy_from_slice(&ca.centroids[old * ca.dim..(old + 1) * ca.dim]);
    }
    ca.labels.iter_mut().for_each(|l| *l = map[*l]);
    ca.centroids = centroids;
    ca
}
