//! The full oracle suite with a JSON-serializable report.

use super::enumerate::*;
use super::order::stochastic_order;
use super::partition::{
    free_wired_boundary_laws, gf_separation, ghost_decay_probe, ghost_decay_probe_full,
};
use super::simunif::sim_unif_check;
use super::surgery::surgery_ratio_check;
use super::sw::{all_graphs, sw_stationarity_residual};
use super::tree::tree_law_enumerated;
use crate::graph::{GhostGraph, Graph};
use crate::params::Params;
use crate::treeexact::{neighborhood_law, Boundary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct OracleCheck {
    pub check_name: String,
    pub instance: String,
    pub max_residual: f64,
    pub pass: bool,
}

impl OracleCheck {
    fn new(name: &str, instance: String, residual: f64, tol: f64) -> Self {
        OracleCheck {
            check_name: name.into(),
            instance,
            max_residual: residual,
            pass: residual.is_finite() && residual < tol,
        }
    }

    fn failed(name: &str, instance: String, err: crate::Error) -> Self {
        OracleCheck {
            check_name: name.into(),
            instance: format!("{instance}: {err}"),
            max_residual: f64::INFINITY,
            pass: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub random_graphs: usize,
    pub max_vertices: usize,
    pub tolerance: f64,
    pub surgery_samples: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 2024,
            random_graphs: 60,
            max_vertices: 5,
            tolerance: 1e-9,
            surgery_samples: 20,
        }
    }
}

/// A random graph on 1..=max_n vertices with a random parameter point; every
/// fourth instance has B = 0.
pub fn random_instance(rng: &mut ChaCha8Rng, k: usize, max_n: usize) -> (Graph, Params<f64>) {
    let n = rng.gen_range(1..=max_n);
    let density = rng.gen_range(0.2..0.9);
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|_| rng.gen_bool(density))
        .collect();
    let q = rng.gen_range(2..=3);
    let beta = rng.gen_range(0.0..2.0);
    let field = if k.is_multiple_of(4) {
        0.0
    } else {
        rng.gen_range(0.0..1.0)
    };
    (
        Graph::new(n, edges).expect("simple"),
        Params::f64(q, 3, beta, field).expect("valid"),
    )
}

fn describe(g: &Graph, p: &Params<f64>) -> String {
    format!(
        "n={} edges={:?} q={} beta={:.6} B={:.6}",
        g.n(),
        g.edges(),
        p.q,
        p.beta,
        p.field
    )
}

fn graph_checks(g: &Graph, p: &Params<f64>, rng_seed: u64, tol: f64) -> Vec<OracleCheck> {
    let gg = GhostGraph::new(g.clone());
    let inst = describe(g, p);
    let mut out = Vec::new();
    match es_residuals(&gg, p) {
        Ok(r) => {
            out.push(OracleCheck::new(
                "es_spin_marginal",
                inst.clone(),
                r.spin,
                tol,
            ));
            out.push(OracleCheck::new(
                "es_bond_marginal",
                inst.clone(),
                r.bond,
                tol,
            ));
            out.push(OracleCheck::new(
                "es_cluster_coloring",
                inst.clone(),
                r.theta,
                tol,
            ));
            out.push(OracleCheck::new(
                "partition_function_consistency",
                inst.clone(),
                r.z,
                tol,
            ));
        }
        Err(e) => out.push(OracleCheck::failed("es_marginals", inst.clone(), e)),
    }
    let corr = correlation_identity_residual(&gg, p);
    out.push(match corr {
        Ok(r) => OracleCheck::new("correlation_identity", inst.clone(), r, tol),
        Err(e) => OracleCheck::failed("correlation_identity", inst.clone(), e),
    });
    let dual = marginal_rcm_summed(&gg, p).and_then(|a| {
        let b = marginal_rcm_direct(g, p)?;
        Ok(a.max_abs_diff(&b.probs)
            .max((a.log_z - b.log_z).exp_m1().abs()))
    });
    out.push(match dual {
        Ok(r) => OracleCheck::new("marginal_rcm_dual", inst.clone(), r, tol),
        Err(e) => OracleCheck::failed("marginal_rcm_dual", inst.clone(), e),
    });
    // A random subset of E*, ghost edges included.
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let w: Vec<usize> = (0..gg.n_edges()).filter(|_| rng.gen_bool(0.5)).collect();
    let base: Vec<usize> = w
        .iter()
        .copied()
        .filter(|&e| !gg.is_ghost_edge(e))
        .collect();
    let total = restricted_total_residual(&gg, &w, p)
        .and_then(|a| Ok(a.max(restricted_total_residual(&gg, &base, p)?)));
    out.push(match total {
        Ok(r) => OracleCheck::new("restricted_z_total", format!("{inst} W={w:?}"), r, tol),
        Err(e) => OracleCheck::failed("restricted_z_total", inst, e),
    });
    out
}

fn designated_trees() -> Vec<Graph> {
    let star = |k: usize| Graph::new(k + 1, (1..=k).map(|v| (0, v)).collect()).unwrap();
    vec![
        Graph::new(3, vec![(0, 1), (1, 2)]).unwrap(),
        star(3),
        star(4),
        Graph::new(5, vec![(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap(),
    ]
}

fn tree_law_checks(tol: f64) -> Vec<OracleCheck> {
    let points = [(2, 0.7, 0.0), (3, 1.2, 0.0), (3, 0.9, 0.3)];
    let mut jobs = Vec::new();
    for &(q, beta, b) in &points {
        let mut kinds = vec![
            Boundary::Free,
            Boundary::FixedPointFree,
            Boundary::FixedPointWired,
        ];
        kinds.extend((0..q).map(Boundary::Color));
        if b == 0.0 {
            kinds.extend((1..q).map(Boundary::FixedPointColor));
        }
        for kind in kinds {
            for t in 1..=2 {
                jobs.push((q, beta, b, kind, t));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(q, beta, b, kind, t)| {
            let p = Params::f64(q, 3, beta, b).unwrap();
            let inst = format!("d=3 t={t} q={q} beta={beta} B={b} boundary={kind}");
            let r = tree_law_enumerated(t, t, &kind, &p)
                .and_then(|a| Ok(a.max_abs_diff(&neighborhood_law(t, t, &kind, &p)?)));
            match r {
                Ok(r) => OracleCheck::new("tree_law", inst, r, tol),
                Err(e) => OracleCheck::failed("tree_law", inst, e),
            }
        })
        .collect()
}

fn surgery_checks(cfg: &SuiteConfig) -> Vec<OracleCheck> {
    let perms = vec![
        vec![0, 1, 2, 3],
        vec![1, 0, 2, 3],
        vec![0, 2, 1, 3],
        vec![0, 3, 2, 1],
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5157);
    let mut jobs: Vec<(f64, f64, Vec<bool>)> = (0..cfg.surgery_samples)
        .map(|_| (0.8, 0.3, (0..24).map(|_| rng.gen_bool(0.4)).collect()))
        .collect();
    jobs.push((0.0, 0.3, vec![false; 24]));
    jobs.push((0.8, 0.3, vec![true; 24]));
    jobs.into_par_iter()
        .map(|(beta, b, y)| {
            let p = Params::f64(3, 4, beta, b).unwrap();
            let bits: String = y.iter().map(|&x| if x { '1' } else { '0' }).collect();
            let inst = format!("d=4 r=2 t=1 q=3 beta={beta} B={b} y={bits}");
            match surgery_ratio_check(4, 2, 1, &y, &perms, &p) {
                Ok(r) => OracleCheck::new("surgery_identities", inst, r.max(), cfg.tolerance),
                Err(e) => OracleCheck::failed("surgery_identities", inst, e),
            }
        })
        .collect()
}

fn lattice_checks(tol: f64) -> Vec<OracleCheck> {
    let mut out = Vec::new();
    let p = Params::f64(3, 3, 1.0, 0.2).unwrap();
    let inst = "d=3 t=1 q=3 beta=1 B=0.2".to_string();
    out.push(match gf_separation(0, 3, &p) {
        // Residual is the violation of strict separation.
        Ok(gap) => OracleCheck {
            check_name: "gf_strict_separation".into(),
            instance: format!("{inst} min_gap={gap:.6e}"),
            max_residual: (-gap).max(0.0),
            pass: gap > 0.0,
        },
        Err(e) => OracleCheck::failed("gf_strict_separation", inst.clone(), e),
    });
    out.push(match free_wired_boundary_laws(1, 3, &p) {
        Ok((states, a, b)) => {
            let w = stochastic_order(&a, &b, &states);
            OracleCheck {
                check_name: "free_below_wired".into(),
                instance: format!("{inst} states={}", states.len()),
                max_residual: w.deficit(1.0),
                pass: w.feasible && w.deficit(1.0) < tol,
            }
        }
        Err(e) => OracleCheck::failed("free_below_wired", inst, e),
    });
    let p = Params::f64(3, 3, 1.0, 1.5).unwrap();
    for s in 1..=2 {
        let inst = format!("d=3 t=1 s={s} q=3 beta=1 B=1.5");
        out.push(match ghost_decay_probe(3, 1, s, &p) {
            Ok(r) => OracleCheck {
                check_name: "ghost_decay_bound".into(),
                instance: format!("{inst} prob={:.6e} bound={:.6e}", r.probability, r.bound),
                max_residual: (r.probability - r.bound).max(0.0),
                pass: r.probability <= r.bound,
            },
            Err(e) => OracleCheck::failed("ghost_decay_bound", inst, e),
        });
    }
    let cross = ghost_decay_probe(3, 1, 1, &p)
        .and_then(|a| Ok((a.probability - ghost_decay_probe_full(3, 1, 1, &p)?.probability).abs()));
    out.push(match cross {
        Ok(r) => OracleCheck::new("ghost_decay_two_paths", "d=3 t=1 s=1".into(), r, tol),
        Err(e) => OracleCheck::failed("ghost_decay_two_paths", "d=3 t=1 s=1".into(), e),
    });
    out
}

fn sim_unif_checks(tol: f64) -> Vec<OracleCheck> {
    let mut out = Vec::new();
    for q in 2..=3 {
        for m in 0..=6 {
            let inst = format!("M={m} q={q}");
            out.push(match sim_unif_check(m, q) {
                Ok(r) => OracleCheck::new("sim_unif", inst, r, tol),
                Err(e) => OracleCheck::failed("sim_unif", inst, e),
            });
        }
    }
    out
}

fn sw_checks() -> Vec<OracleCheck> {
    let points = [(2, 0.8, 0.0), (3, 1.3, 0.0), (3, 0.6, 0.4)];
    (1..=4)
        .flat_map(all_graphs)
        .collect::<Vec<_>>()
        .into_par_iter()
        .flat_map_iter(|g| {
            points.iter().map(move |&(q, beta, b)| {
                let p = Params::f64(q, 3, beta, b).unwrap();
                let inst = describe(&g, &p);
                match sw_stationarity_residual(&GhostGraph::new(g.clone()), &p) {
                    Ok(r) => OracleCheck::new("sw_stationarity", inst, r, 1e-10),
                    Err(e) => OracleCheck::failed("sw_stationarity", inst, e),
                }
            })
        })
        .collect()
}

/// Runs every check; order of the report is fixed.
pub fn run_suite(cfg: &SuiteConfig) -> Vec<OracleCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut instances: Vec<(Graph, Params<f64>, u64)> = (0..cfg.random_graphs)
        .map(|k| {
            let (g, p) = random_instance(&mut rng, k, cfg.max_vertices);
            (g, p, rng.gen())
        })
        .collect();
    for (k, g) in designated_trees().into_iter().enumerate() {
        let beta = 0.5 + 0.3 * k as f64;
        instances.push((
            g,
            Params::f64(2 + k % 2, 3, beta, 0.25 * (k % 3) as f64).unwrap(),
            k as u64,
        ));
    }
    let tol = cfg.tolerance;
    let mut out: Vec<OracleCheck> = instances
        .par_iter()
        .flat_map_iter(|(g, p, s)| graph_checks(g, p, *s, tol))
        .collect();
    out.extend(tree_law_checks(tol));
    out.extend(surgery_checks(cfg));
    out.extend(lattice_checks(tol));
    out.extend(sim_unif_checks(tol));
    out.extend(sw_checks());
    out
}

pub fn all_pass(checks: &[OracleCheck]) -> bool {
    checks.iter().all(|c| c.pass)
}

/// (name, passed, total, worst residual) per check name, in report order.
pub fn summarize(checks: &[OracleCheck]) -> Vec<(String, usize, usize, f64)> {
    let mut names: Vec<String> = checks.iter().map(|c| c.check_name.clone()).collect();
    names.dedup();
    let mut seen = std::collections::HashSet::new();
    names.retain(|n| seen.insert(n.clone()));
    names
        .into_iter()
        .map(|n| {
            let group: Vec<&OracleCheck> = checks.iter().filter(|c| c.check_name == n).collect();
            let passed = group.iter().filter(|c| c.pass).count();
            let worst = group.iter().map(|c| c.max_residual).fold(0.0, f64::max);
            (n, passed, group.len(), worst)
        })
        .collect()
}
