use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sq_dist;
use crate::rng::component_rng;

/// Cluster assignment of attractor points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorPartition {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub k: usize,
    /// Within-cluster sum of squares after each Lloyd iteration.
    pub inertia_history: Vec<f64>,
}

impl AttractorPartition {
    pub fn inertia(&self) -> f64 {
        self.inertia_history.last().copied().unwrap_or(0.0)
    }

    /// Index of the nearest centroid, lowest index on ties.
    pub fn nearest(&self, point: &[f64]) -> usize {
        nearest_centroid(&self.centroids, point).0
    }

    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l == cluster)
            .map(|(i, _)| i)
    }
}

pub(crate) fn nearest_centroid(centroids: &[Vec<f64>], point: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(centroid, point);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn kmeans_plus_plus(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = component_rng(seed, 0x6b6d);
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = d2.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.random_range(0..points.len())
        };
        centroids.push(points[next].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

/// Lloyd iterations from a seeded k-means++ start. A cluster that loses all
/// members keeps its previous centroid.
pub fn kmeans_partition(points: &[Vec<f64>], k: usize, seed: u64, max_iters: usize) -> Result<AttractorPartition> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    if k < 1 || k > points.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must lie in 1..={}",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::ShapeMismatch("points differ in dimension".into()));
    }
    let mut centroids = kmeans_plus_plus(points, k, seed);
    let mut labels = vec![usize::MAX; points.len()];
    let mut inertia_history = Vec::new();
    for _ in 0..max_iters.max(1) {
        let mut changed = false;
        for (label, p) in labels.iter_mut().zip(points) {
            let (c, _) = nearest_centroid(&centroids, p);
            if *label != c {
                *label = c;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&l, p) in labels.iter().zip(points) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(s, v)| *s += v);
        }
        for ((c, s), &n) in centroids.iter_mut().zip(sums).zip(&counts) {
            if n > 0 {
                *c = s.into_iter().map(|v| v / n as f64).collect();
            }
        }
        let inertia = labels.iter().zip(points).map(|(&l, p)| sq_dist(p, &centroids[l])).sum();
        inertia_history.push(inertia);
        if !changed {
            break;
        }
    }
    Ok(AttractorPartition {
        labels,
        centroids,
        k,
        inertia_history,
    })
}
