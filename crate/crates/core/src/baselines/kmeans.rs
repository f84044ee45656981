use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// K-means centroids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    centroids: Vec<Vec<f64>>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Codebook {
    pub fn new(centroids: Vec<Vec<f64>>) -> Result<Self> {
        let dim = centroids.first().map(Vec::len).ok_or_else(|| Error::contract("codebook needs k >= 1"))?;
        if centroids.iter().any(|c| c.len() != dim || c.iter().any(|v| !v.is_finite())) {
            return Err(Error::contract("centroids must share one width and be finite"));
        }
        Ok(Codebook { centroids })
    }

    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn dim(&self) -> usize {
        self.centroids[0].len()
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    /// Index of the closest centroid; ties go to the lowest index.
    pub fn nearest(&self, frame: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (j, c) in self.centroids.iter().enumerate() {
            let d = sq_dist(frame, c);
            if d < best.1 {
                best = (j, d);
            }
        }
        best.0
    }

    /// Sum of squared distances from each frame to its nearest centroid.
    pub fn inertia(&self, frames: &[Vec<f64>]) -> f64 {
        frames.iter().map(|f| sq_dist(f, &self.centroids[self.nearest(f)])).sum()
    }
}

/// A fitted codebook and the inertia measured after every assignment step.
#[derive(Clone, Debug)]
pub struct KMeansFit {
    pub codebook: Codebook,
    pub inertia: Vec<f64>,
    pub converged: bool,
}

/// Lloyd iterations from `k` distinct, seeded starting points.
pub fn kmeans_fit(frames: &[Vec<f64>], k: usize, seed: u64, max_iters: usize) -> Result<Codebook> {
    Ok(kmeans_fit_traced(frames, k, seed, max_iters)?.codebook)
}

/// [`kmeans_fit`] with the per-iteration inertia. An emptied cluster is
/// re-seeded at the frame farthest from its assigned centroid.
pub fn kmeans_fit_traced(frames: &[Vec<f64>], k: usize, seed: u64, max_iters: usize) -> Result<KMeansFit> {
    if k == 0 || k > frames.len() {
        return Err(Error::contract(format!("k = {k} with {} frames", frames.len())));
    }
    let dim = frames[0].len();
    if frames.iter().any(|f| f.len() != dim) {
        return Err(Error::contract("frames differ in width"));
    }
    let mut order: Vec<usize> = (0..frames.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    for &i in &order {
        if centroids.len() == k {
            break;
        }
        if !centroids.iter().any(|c| c == &frames[i]) {
            centroids.push(frames[i].clone());
        }
    }
    // Fewer than k distinct frames: duplicates start empty and get re-seeded.
    for &i in order.iter().cycle().take(k - centroids.len()) {
        centroids.push(frames[i].clone());
    }

    let mut assign = vec![usize::MAX; frames.len()];
    let mut inertia = Vec::new();
    let mut converged = false;
    for _ in 0..max_iters.max(1) {
        let book = Codebook { centroids };
        let mut changed = false;
        let mut cost = 0.0;
        for (a, f) in assign.iter_mut().zip(frames) {
            let j = book.nearest(f);
            cost += sq_dist(f, &book.centroids[j]);
            if *a != j {
                *a = j;
                changed = true;
            }
        }
        centroids = book.centroids;
        inertia.push(cost);
        if !changed {
            converged = true;
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&j, f) in assign.iter().zip(frames) {
            counts[j] += 1;
            for (s, v) in sums[j].iter_mut().zip(f) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                let far = (0..frames.len())
                    .max_by(|&a, &b| {
                        sq_dist(&frames[a], &centroids[assign[a]])
                            .total_cmp(&sq_dist(&frames[b], &centroids[assign[b]]))
                            .then(b.cmp(&a))
                    })
                    .expect("frames is non-empty");
                centroids[j] = frames[far].clone();
                counts[assign[far]] -= 1;
                assign[far] = j;
                counts[j] = 1;
            }
        }
    }
    Ok(KMeansFit {
        codebook: Codebook { centroids },
        inertia,
        converged,
    })
}
