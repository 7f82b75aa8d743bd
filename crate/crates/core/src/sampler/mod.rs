//! Swendsen-Wang sampling on ghost-augmented graphs and the estimators built
//! on it.

mod chain;
mod clusters;
mod dominant;
mod estimate;
mod ti;

pub use chain::{
    bonds_given_spins, chain_rng, collect_chain, run_chain, spins_given_bonds, sweep_stream,
    tie_stream, Budget, Chain, ChainStart, ChainState,
};
pub use clusters::{
    bimodality, cluster_histogram, dip_statistic, free_cluster_tail_bound, sim_unif_coloring,
    sim_unif_colors, Bimodality, ClusterHistogram, SimUnif, SimUnifColoring,
};
pub use dominant::{
    color_counts, condition_on_dominant, conditioning_exactness_tv, dominant_color, local_dominant,
    LocalDominance, LocalDominant,
};
pub use estimate::{
    agreement_per_vertex, color_density, edge_connectivity, ghost_density, internal_energy,
    neighborhood_law_estimate, EstimatorReport, NeighborhoodCounter,
};
pub use ti::{
    default_path, free_energy_path, free_energy_ti, phi_at_zero_coupling, FreeEnergyEstimate, Leg,
    TiConfig,
};

use crate::bethe::{classify_region, Region, Tolerances};
use crate::error::Result;
use crate::graph::GhostGraph;
use crate::params::Params;
use rayon::prelude::*;

/// Fewest batches behind any standard error.
pub const MIN_BATCHES: usize = 20;

/// Start matching the dominant Bethe branch: all color 1 where nu_1 wins.
pub fn start_for(p: &Params<f64>) -> ChainStart {
    match classify_region(p, &Tolerances::default()).region {
        Region::R1 => ChainStart::Color(0),
        _ => ChainStart::Disordered,
    }
}

/// Runs `chains` independent chains in parallel. Chain i uses sweep stream
/// 2i and tie stream 2i+1 of `seed`; results come back in chain order, so
/// the thread count never changes them.
pub fn run_parallel<T: Send>(
    gg: &GhostGraph,
    p: &Params<f64>,
    budget: &Budget,
    seed: u64,
    starts: &[ChainStart],
    per_chain: impl Fn(usize, &mut Chain, &mut rand_chacha::ChaCha8Rng) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    budget.validate()?;
    starts
        .par_iter()
        .enumerate()
        .map(|(i, &start)| {
            let mut chain = Chain::new(gg, p, start, chain_rng(seed, sweep_stream(i)))?;
            let mut tie = chain_rng(seed, tie_stream(i));
            per_chain(i, &mut chain, &mut tie)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    #[test]
    fn parallel_results_ignore_thread_count() {
        let gg =
            GhostGraph::new(Graph::new(20, (0..20).map(|i| (i, (i + 1) % 20)).collect()).unwrap());
        let p = Params::f64(3, 3, 1.0, 0.1).unwrap();
        let budget = Budget {
            burn_in: 10,
            samples: 40,
            thin: 2,
            batches: 20,
        };
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                run_parallel(
                    &gg,
                    &p,
                    &budget,
                    8,
                    &[ChainStart::Disordered; 6],
                    |_, chain, _| {
                        let mut xs = Vec::new();
                        chain.run(&budget, |s| xs.push(color_density(s.colors(), 0)))?;
                        EstimatorReport::from_series(&xs, 20)
                    },
                )
                .unwrap()
            })
        };
        assert_eq!(run(1), run(4));
    }
}
