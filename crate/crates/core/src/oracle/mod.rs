//! Brute-force ground truth on instances small enough to enumerate.

mod enumerate;
mod order;
mod partition;
mod simunif;
mod suite;
mod surgery;
mod sw;
mod tree;

pub(crate) use enumerate::for_each_coloring;
pub use enumerate::{
    correlation_identity_residual, enumerate_es, enumerate_potts, enumerate_potts_ghosted,
    enumerate_potts_weighted, enumerate_rcm, es_residuals, for_each_es, marginal_rcm_direct,
    marginal_rcm_summed, restricted_log_z, restricted_total_residual, restricted_z, EsDistribution,
    EsResiduals, ExactDistribution, ENUM_CAP,
};
pub use order::{leq, stochastic_order, OrderWitness, FLOW_SLACK};
pub use partition::{
    boundary_pairs, free_wired_boundary_laws, gf, gf_expectation, gf_separation, ghost_decay_probe,
    ghost_decay_probe_full, induced_boundary_law, BoundaryPartition, DecayProbe, GhostBall,
};
pub use simunif::{sim_unif_check, sim_unif_law};
pub use suite::{all_pass, random_instance, run_suite, summarize, OracleCheck, SuiteConfig};
pub use surgery::{annulus_edges, pre_messages, surgery_ratio_check, SurgeryResidual};
pub use sw::{all_graphs, sw_stationarity_residual, sw_transition_matrix};
pub use tree::tree_law_enumerated;
