//! Exact Swendsen-Wang transition matrix on tiny graphs.

use super::enumerate::{check_cap, components, enumerate_potts, for_each_coloring, pow_sat};
use crate::dsu::UnionFind;
use crate::error::Result;
use crate::graph::{GhostGraph, Graph};
use crate::params::Params;

/// Row-stochastic matrix over base colorings (ghost pinned to color 1), in
/// pattern-index order: bonds open independently with p_e on agreeing edges of
/// G*, then every cluster off the ghost is recolored uniformly.
pub fn sw_transition_matrix(gg: &GhostGraph, p: &Params<f64>) -> Result<Vec<Vec<f64>>> {
    let n = gg.n();
    let states = pow_sat(p.q, n);
    let bits = gg.n_edges();
    check_cap(
        "Swendsen-Wang kernel",
        states
            .saturating_mul(states)
            .saturating_mul(1u128 << bits.min(127)),
    )?;
    let states = states as usize;
    let pe: Vec<f64> = (0..bits)
        .map(|e| {
            if gg.is_ghost_edge(e) {
                p.p_ghost()
            } else {
                p.p_edge()
            }
        })
        .collect();
    let mut colorings = Vec::with_capacity(states);
    for_each_coloring(n, p.q, |c| {
        let mut full = c.to_vec();
        full.push(0);
        colorings.push(full);
    });
    let mut uf = UnionFind::new(n + 1);
    let mut matrix = vec![vec![0.0; states]; states];
    for (from, sigma) in colorings.iter().enumerate() {
        let agree: Vec<usize> = (0..bits)
            .filter(|&e| {
                let (u, v) = gg.endpoints(e);
                sigma[u] == sigma[v]
            })
            .collect();
        for k in 0..1u64 << agree.len() {
            let mut mask = 0u64;
            let mut prob = 1.0;
            for (i, &e) in agree.iter().enumerate() {
                if k >> i & 1 == 1 {
                    mask |= 1 << e;
                    prob *= pe[e];
                } else {
                    prob *= 1.0 - pe[e];
                }
            }
            if prob == 0.0 {
                continue;
            }
            let free = components(gg, mask, &mut uf) - 1;
            let each = prob * (p.q as f64).powi(-(free as i32));
            for (to, tau) in colorings.iter().enumerate() {
                let consistent = (0..=n).all(|v| tau[uf.find(v)] == tau[v]);
                if consistent {
                    matrix[from][to] += each;
                }
            }
        }
    }
    Ok(matrix)
}

/// max_j |(mu P)_j - mu_j| for the Potts law mu.
pub fn sw_stationarity_residual(gg: &GhostGraph, p: &Params<f64>) -> Result<f64> {
    let mu = enumerate_potts(gg.base(), p)?;
    let matrix = sw_transition_matrix(gg, p)?;
    let len = mu.len();
    let mut worst: f64 = 0.0;
    for j in 0..len {
        let pushed: f64 = (0..len).map(|i| mu.probs[i] * matrix[i][j]).sum();
        worst = worst.max((pushed - mu.probs[j]).abs());
    }
    // Rows must also be stochastic.
    for row in &matrix {
        worst = worst.max((row.iter().sum::<f64>() - 1.0).abs());
    }
    Ok(worst)
}

/// Every labeled simple graph on n vertices.
pub fn all_graphs(n: usize) -> Vec<Graph> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    (0..1u64 << pairs.len())
        .map(|mask| {
            let edges = pairs
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            Graph::new(n, edges).expect("simple by construction")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_counts() {
        assert_eq!(all_graphs(1).len(), 1);
        assert_eq!(all_graphs(3).len(), 8);
        assert_eq!(all_graphs(4).len(), 64);
    }

    #[test]
    fn stationary_on_small_graphs() {
        for (q, beta, b) in [(2, 0.7, 0.0), (3, 1.1, 0.25)] {
            let p = Params::f64(q, 3, beta, b).unwrap();
            for g in all_graphs(3) {
                let r = sw_stationarity_residual(&GhostGraph::new(g), &p).unwrap();
                assert!(r < 1e-12, "{r}");
            }
        }
    }

    #[test]
    fn frozen_bonds_without_coupling() {
        // beta = B = 0: one sweep draws iid uniform spins.
        let p = Params::f64(3, 3, 0.0, 0.0).unwrap();
        let g = GhostGraph::new(Graph::new(2, vec![(0, 1)]).unwrap());
        let m = sw_transition_matrix(&g, &p).unwrap();
        assert!(m.iter().flatten().all(|&x| (x - 1.0 / 9.0).abs() < 1e-15));
    }
}
