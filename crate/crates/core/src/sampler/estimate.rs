//! Batch-means estimators and per-snapshot observables.

use super::chain::ChainState;
use super::MIN_BATCHES;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::graphgen::tree_ball_order;
use crate::law::{table_size, NeighborhoodLaw, LAW_TABLE_CAP};
use crate::tree::{encode_pattern, tree_size};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub mean: f64,
    /// Batch-means standard error.
    pub se: f64,
    pub samples: usize,
    pub batches: usize,
}

impl EstimatorReport {
    /// Splits the series into `batches` contiguous batches (the remainder is dropped).
    pub fn from_series(values: &[f64], batches: usize) -> Result<Self> {
        Self::pooled(&[values], batches)
    }

    /// Batch means pooled over independent series, `batches` per series.
    pub fn pooled<S: AsRef<[f64]>>(series: &[S], batches: usize) -> Result<Self> {
        if batches < MIN_BATCHES {
            return Err(Error::InvalidParams(format!(
                "standard errors need at least {MIN_BATCHES} batches"
            )));
        }
        let mut means = Vec::new();
        let mut samples = 0;
        for s in series {
            let s = s.as_ref();
            let size = s.len() / batches;
            if size == 0 {
                return Err(Error::InvalidParams(format!(
                    "{} samples cannot fill {batches} batches",
                    s.len()
                )));
            }
            samples += size * batches;
            means.extend(
                s.chunks_exact(size)
                    .take(batches)
                    .map(|c| c.iter().sum::<f64>() / size as f64),
            );
        }
        if means.is_empty() {
            return Err(Error::InvalidParams("no series".into()));
        }
        let k = means.len() as f64;
        let mean = means.iter().sum::<f64>() / k;
        let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0);
        Ok(EstimatorReport {
            mean,
            se: (var / k).sqrt(),
            samples,
            batches: means.len(),
        })
    }

    /// |mean - target| <= k se
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se
    }

    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target) / self.se
    }
}

/// Agreeing base edges per vertex.
pub fn agreement_per_vertex(colors: &[u8], g: &Graph) -> f64 {
    let agree = g
        .edges()
        .iter()
        .filter(|&&(u, v)| colors[u] == colors[v])
        .count();
    agree as f64 / g.n() as f64
}

/// Fraction of vertices with color k.
pub fn color_density(colors: &[u8], k: u8) -> f64 {
    colors.iter().filter(|&&c| c == k).count() as f64 / colors.len() as f64
}

/// Fraction of base vertices in the ghost's open cluster.
pub fn ghost_density(state: &ChainState) -> f64 {
    let n = state.labels.len() - 1;
    (0..n).filter(|&v| state.in_ghost_cluster(v)).count() as f64 / n as f64
}

/// Fraction of base edges whose endpoints share an open cluster.
pub fn edge_connectivity(state: &ChainState, g: &Graph) -> f64 {
    let joined = g
        .edges()
        .iter()
        .filter(|&&(u, v)| state.labels[u] == state.labels[v])
        .count();
    joined as f64 / g.m() as f64
}

/// (1/n) sum over edges of mu(sigma_i = sigma_j).
pub fn internal_energy(snapshots: &[ChainState], g: &Graph) -> Result<EstimatorReport> {
    let series: Vec<f64> = snapshots
        .iter()
        .map(|s| agreement_per_vertex(s.colors(), g))
        .collect();
    EstimatorReport::from_series(&series, MIN_BATCHES)
}

/// Empirical pattern law on T_d(t) over roots v with B_v(2t) isomorphic to T_d(2t).
#[derive(Clone, Debug)]
pub struct NeighborhoodCounter {
    d: usize,
    t: usize,
    q: usize,
    roots: Vec<Vec<usize>>,
    counts: Vec<u64>,
    scratch: Vec<u8>,
}

impl NeighborhoodCounter {
    pub fn new(g: &Graph, t: usize, q: usize) -> Result<Self> {
        let d = g
            .regular_degree()
            .ok_or_else(|| Error::InvalidGraph("neighborhood laws need a regular graph".into()))?;
        let size = table_size(d, t, q, LAW_TABLE_CAP)?;
        let ball = tree_size(d, t).expect("bounded by the table cap");
        let roots: Vec<Vec<usize>> = (0..g.n())
            .filter_map(|v| tree_ball_order(g, v, 2 * t))
            .map(|mut order| {
                order.truncate(ball);
                order
            })
            .collect();
        if roots.is_empty() {
            return Err(Error::InvalidGraph("no tree-like balls".into()));
        }
        Ok(NeighborhoodCounter {
            d,
            t,
            q,
            roots,
            counts: vec![0; size],
            scratch: vec![0; ball],
        })
    }

    pub fn n_roots(&self) -> usize {
        self.roots.len()
    }

    pub fn observe(&mut self, colors: &[u8]) {
        for order in &self.roots {
            for (slot, &v) in self.scratch.iter_mut().zip(order) {
                *slot = colors[v];
            }
            self.counts[encode_pattern(&self.scratch, self.q) as usize] += 1;
        }
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn law(&self) -> Result<NeighborhoodLaw<f64>> {
        let w = self.counts.iter().map(|&c| c as f64).collect();
        NeighborhoodLaw::from_weights(self.d, self.t, self.q, w)
    }
}

/// Empirical neighborhood law averaged over tree-like roots and snapshots.
pub fn neighborhood_law_estimate(
    g: &Graph,
    snapshots: &[ChainState],
    t: usize,
    q: usize,
) -> Result<NeighborhoodLaw<f64>> {
    let mut counter = NeighborhoodCounter::new(g, t, q)?;
    for s in snapshots {
        counter.observe(s.colors());
    }
    counter.law()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn batch_means_of_iid_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xs: Vec<f64> = (0..4000).map(|_| rng.gen::<f64>()).collect();
        let r = EstimatorReport::from_series(&xs, 20).unwrap();
        assert_eq!(r.samples, 4000);
        assert!(r.within(0.5, 4.0));
        // sd of the mean of 4000 uniforms
        let exact = (1.0 / 12.0 / 4000.0f64).sqrt();
        assert!(r.se > 0.5 * exact && r.se < 1.6 * exact);
    }

    #[test]
    fn too_few_batches() {
        assert!(EstimatorReport::from_series(&[1.0; 100], 10).is_err());
        assert!(EstimatorReport::from_series(&[1.0; 10], 20).is_err());
    }

    #[test]
    fn frozen_energy() {
        let g = Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3)]).unwrap();
        assert_eq!(agreement_per_vertex(&[1, 1, 1, 1], &g), 1.5);
        assert_eq!(agreement_per_vertex(&[0, 1, 2, 0], &g), 0.25);
    }
}
