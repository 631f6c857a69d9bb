use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::kmeans::{nearest_centroid, AttractorPartition};
use crate::error::{Error, Result};
use crate::linalg::{dot, RidgeAccumulator};

/// Local linear operators, one per attractor cluster. A query evolves with
/// the operator of its nearest centroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectModel {
    pub centroids: Vec<Vec<f64>>,
    /// `d × d` maps `x_t ↦ x_{t+1}`.
    pub operators: Vec<DMatrix<f64>>,
    pub ridge_lambda: f64,
}

impl DirectModel {
    pub fn dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }

    pub fn cluster_of(&self, x: &[f64]) -> usize {
        nearest_centroid(&self.centroids, x).0
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let op = &self.operators[self.cluster_of(x)];
        (0..op.nrows()).map(|i| (0..op.ncols()).map(|j| op[(i, j)] * x[j]).sum()).collect()
    }
}

/// Ridge-fits one operator per cluster from the transitions
/// `current[i] → next[i]`, where `partition.labels[i]` is the cluster of
/// `current[i]`. Clusters without members get the identity.
pub fn fit_direct_operators(
    current: &[Vec<f64>],
    next: &[Vec<f64>],
    partition: &AttractorPartition,
    ridge_lambda: f64,
) -> Result<DirectModel> {
    if current.len() != next.len() || current.len() != partition.labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} current, {} next, {} labels",
            current.len(),
            next.len(),
            partition.labels.len()
        )));
    }
    let d = partition.centroids.first().map_or(0, Vec::len);
    let mut accs = vec![RidgeAccumulator::new(d, d); partition.k];
    for ((x, y), &l) in current.iter().zip(next).zip(&partition.labels) {
        if x.len() != d || y.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len().max(y.len()),
            });
        }
        accs[l].add(x, y);
    }
    let operators = accs
        .iter_mut()
        .map(|acc| {
            if acc.count() == 0 {
                Ok(DMatrix::identity(d, d))
            } else {
                acc.solve(ridge_lambda).map(|beta| beta.transpose())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DirectModel {
        centroids: partition.centroids.clone(),
        operators,
        ridge_lambda,
    })
}

/// `∇_i = min_{j≠i} (A_iᵀA_i − A_iᵀA_j)` over the partition's centroids;
/// infinite when there is a single cluster.
pub fn attractor_separation(partition: &AttractorPartition) -> Vec<f64> {
    separation_of(&partition.centroids)
}

pub fn separation_of(centroids: &[Vec<f64>]) -> Vec<f64> {
    centroids
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let self_sim = dot(a, a);
            centroids
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, b)| self_sim - dot(a, b))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn partition_of(centroids: Vec<Vec<f64>>, labels: Vec<usize>) -> AttractorPartition {
        AttractorPartition {
            k: centroids.len(),
            centroids,
            labels,
            inertia_history: vec![],
        }
    }

    #[test]
    fn contraction_recovered() {
        let xs: Vec<Vec<f64>> = (0..20).map(|i| vec![(i as f64).sin(), (i as f64 * 0.7).cos()]).collect();
        let ys: Vec<Vec<f64>> = xs.iter().map(|x| x.iter().map(|v| 0.5 * v).collect()).collect();
        let p = partition_of(vec![vec![0.0, 0.0]], vec![0; 20]);
        let m = fit_direct_operators(&xs, &ys, &p, 1e-10).unwrap();
        let e = (&m.operators[0] - DMatrix::identity(2, 2) * 0.5).abs().max();
        assert!(e < 1e-6);
    }

    #[test]
    fn empty_cluster_falls_back_to_identity() {
        let p = partition_of(vec![vec![0.0], vec![10.0]], vec![0, 0]);
        let m = fit_direct_operators(&[vec![1.0], vec![2.0]], &[vec![2.0], vec![4.0]], &p, 0.1).unwrap();
        assert_eq!(m.operators[1], DMatrix::identity(1, 1));
        assert_eq!(m.apply(&[9.0]), vec![9.0]);
    }

    #[test]
    fn single_pair_with_ridge_is_shrunken() {
        let p = partition_of(vec![vec![0.0]], vec![0]);
        let m = fit_direct_operators(&[vec![1.0]], &[vec![3.0]], &p, 1.0).unwrap();
        assert!((m.operators[0][(0, 0)] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn separation_examples() {
        assert_eq!(separation_of(&[vec![1.0, 0.0], vec![0.0, 1.0]]), vec![1.0, 1.0]);
        assert_eq!(separation_of(&[vec![1.0, 2.0], vec![1.0, 2.0]]), vec![0.0, 0.0]);
        let s = separation_of(&[vec![1.0, 0.0], vec![0.5, 0.5]]);
        assert!((s[0] - 0.5).abs() < 1e-15);
        assert!(separation_of(&[vec![1.0]])[0].is_infinite());
    }
}
