//! Monte Carlo checks of the Swendsen-Wang estimators against exact tree values.

use rand::seq::index::sample;
use treepotts::bethe::{
    beta_c, bethe_functional, classify_region, fixed_points, internal_energy_prediction, Phase,
    Region, Tolerances,
};
use treepotts::graphgen::{random_regular, GenSpec, Model};
use treepotts::sampler::*;
use treepotts::treeexact::{mg_single, neighborhood_law, root_marginal, Boundary};
use treepotts::{GhostGraph, Graph, Params, TreeIndex};

fn rrg(n: usize, d: usize, seed: u64) -> Graph {
    random_regular(&GenSpec {
        n,
        d,
        model: Model::Configuration,
        seed,
    })
    .unwrap()
}

fn budget(burn_in: usize, samples: usize, thin: usize) -> Budget {
    Budget {
        burn_in,
        samples,
        thin,
        batches: 20,
    }
}

#[test]
fn root_marginal_on_small_tree() {
    let p = Params::f64(3, 3, 1.1, 0.3).unwrap();
    let gg = GhostGraph::new(TreeIndex::new(3, 2).unwrap().graph());
    let exact = root_marginal(2, &Boundary::Free, &p).unwrap();
    let mut series = vec![Vec::new(); 3];
    run_chain(
        &gg,
        &p,
        &budget(200, 40_000, 1),
        21,
        ChainStart::Disordered,
        |s| {
            for (k, xs) in series.iter_mut().enumerate() {
                xs.push(f64::from(s.colors()[0] == k as u8));
            }
        },
    )
    .unwrap();
    for (k, xs) in series.iter().enumerate() {
        let r = EstimatorReport::from_series(xs, 20).unwrap();
        assert!(r.within(exact[k], 3.0), "color {k}: {r:?} vs {}", exact[k]);
    }
}

#[test]
fn field_density_matches_single_site_law() {
    // Above the largest non-unique field, so nu_1 is the only fixed point.
    let p = Params::f64(3, 3, 1.5, 0.05).unwrap();
    assert_eq!(
        classify_region(&p, &Tolerances::default()).region,
        Region::Unique
    );
    let (_, wired) = fixed_points(&p);
    let target = mg_single(&wired, &p)[0];
    let g = rrg(10_000, 3, 2);
    let gg = GhostGraph::new(g);
    let mut xs = Vec::new();
    run_chain(
        &gg,
        &p,
        &budget(1000, 400, 5),
        3,
        ChainStart::Color(0),
        |s| xs.push(color_density(s.colors(), 0)),
    )
    .unwrap();
    let r = EstimatorReport::from_series(&xs, 20).unwrap();
    assert!(r.within(target, 3.0), "{r:?} vs {target}");
}

#[test]
fn internal_energy_in_unique_region() {
    let p = Params::f64(3, 3, 1.0, 0.2).unwrap();
    let g = rrg(10_000, 3, 4);
    let gg = GhostGraph::new(g.clone());
    let snaps = collect_chain(&gg, &p, &budget(1000, 400, 5), 5, ChainStart::Disordered).unwrap();
    let r = internal_energy(&snaps, &g).unwrap();
    let target = 0.5 * internal_energy_prediction(Phase::Free, &p);
    assert!(r.within(target, 3.0), "{r:?} vs {target}");
}

#[test]
fn zero_coupling_energy() {
    let p = Params::f64(4, 3, 0.0, 0.0).unwrap();
    let g = rrg(2000, 3, 6);
    let gg = GhostGraph::new(g.clone());
    let snaps = collect_chain(&gg, &p, &budget(10, 400, 1), 7, ChainStart::Color(0)).unwrap();
    let r = internal_energy(&snaps, &g).unwrap();
    assert!(r.within(3.0 / 8.0, 3.0), "{r:?}");
}

#[test]
fn free_energy_of_the_ising_case() {
    let p = Params::f64(2, 3, 0.4, 0.0).unwrap();
    let pt = classify_region(&p, &Tolerances::default());
    let g = rrg(10_000, 3, 8);
    let est = free_energy_ti(&GhostGraph::new(g), &p, &TiConfig::default(), 9).unwrap();
    let rel = (est.phi - pt.phi_max()).abs() / pt.phi_max();
    assert!(rel < 0.01, "{} vs {}", est.phi, pt.phi_max());
}

#[test]
fn bethe_functional_at_zero_coupling() {
    let p = Params::f64(3, 3, 0.0, 0.7).unwrap();
    let (free, _) = fixed_points(&p);
    assert!((bethe_functional(&free, &p) - phi_at_zero_coupling(3, 0.7)).abs() < 1e-12);
}

#[test]
fn integration_paths_agree() {
    let p = Params::f64(3, 3, 1.0, 0.1).unwrap();
    let gg = GhostGraph::new(rrg(10_000, 3, 10));
    let cfg = TiConfig::default();
    let field_first = [
        Leg::Beta {
            field: 0.0,
            from: 0.0,
            to: 0.0,
        },
        Leg::Field {
            beta: 0.0,
            from: 0.0,
            to: 0.1,
        },
        Leg::Beta {
            field: 0.1,
            from: 0.0,
            to: 1.0,
        },
    ];
    let beta_first = [
        Leg::Beta {
            field: 0.0,
            from: 0.0,
            to: 1.0,
        },
        Leg::Field {
            beta: 1.0,
            from: 0.0,
            to: 0.1,
        },
    ];
    let a = free_energy_path(&gg, &p, &field_first, &cfg, 11).unwrap();
    let b = free_energy_path(&gg, &p, &beta_first, &cfg, 12).unwrap();
    let tol = 3.0 * a.error().hypot(b.error());
    assert!(
        (a.phi - b.phi).abs() < tol,
        "{} vs {} (tol {tol})",
        a.phi,
        b.phi
    );
}

fn neighborhood_tv(beta: f64, field: f64, boundary: Boundary) -> f64 {
    let p = Params::f64(3, 3, beta, field).unwrap();
    let g = rrg(10_000, 3, 1);
    let gg = GhostGraph::new(g.clone());
    let mut counter = NeighborhoodCounter::new(&g, 1, 3).unwrap();
    run_chain(&gg, &p, &budget(1000, 200, 10), 5, start_for(&p), |s| {
        counter.observe(s.colors())
    })
    .unwrap();
    let reference = neighborhood_law(1, 1, &boundary, &p).unwrap();
    counter.law().unwrap().total_variation(&reference)
}

#[test]
fn neighborhood_law_in_free_region() {
    let p = Params::f64(3, 3, 1.3425, 0.0).unwrap();
    assert_eq!(
        classify_region(&p, &Tolerances::default()).region,
        Region::RFree
    );
    let tv = neighborhood_tv(1.3425, 0.0, Boundary::FixedPointFree);
    assert!(tv < 0.05, "{tv}");
}

#[test]
fn neighborhood_law_in_wired_region() {
    let p = Params::f64(3, 3, 1.358, 0.001).unwrap();
    assert_eq!(
        classify_region(&p, &Tolerances::default()).region,
        Region::R1
    );
    let tv = neighborhood_tv(1.358, 0.001, Boundary::FixedPointWired);
    assert!(tv < 0.05, "{tv}");
}

#[test]
fn local_dominant_is_uniform_below_criticality() {
    let p = Params::f64(3, 3, 1.0, 0.0).unwrap();
    assert!(p.beta < beta_c(0.0, &p).unwrap());
    let g = rrg(10_000, 3, 12);
    let gg = GhostGraph::new(g.clone());
    let local = LocalDominance::new(&g, 2, 3).unwrap();
    let mut tie = chain_rng(13, tie_stream(0));
    let mut series = vec![Vec::new(); 3];
    run_chain(
        &gg,
        &p,
        &budget(500, 200, 10),
        13,
        ChainStart::Disordered,
        |s| {
            let mut counts = [0usize; 3];
            for v in 0..g.n() {
                counts[local.at(s.colors(), v, &mut tie).color as usize] += 1;
            }
            for k in 0..3 {
                series[k].push(counts[k] as f64 / g.n() as f64);
            }
        },
    )
    .unwrap();
    for xs in &series {
        let r = EstimatorReport::from_series(xs, 20).unwrap();
        assert!(r.within(1.0 / 3.0, 3.0), "{r:?}");
    }
}

#[test]
fn large_clusters_are_rare_below_criticality() {
    let p = Params::f64(3, 3, 1.0, 0.0).unwrap();
    let g = rrg(10_000, 3, 14);
    let gg = GhostGraph::new(g);
    let sizes = [2, 4, 10, 22, 46];
    let mut series = vec![Vec::new(); sizes.len()];
    run_chain(
        &gg,
        &p,
        &budget(500, 200, 5),
        15,
        ChainStart::Disordered,
        |s| {
            let h = cluster_histogram(&s.bonds, &gg);
            assert_eq!(h.total_mass(), gg.n());
            for (xs, &r) in series.iter_mut().zip(&sizes) {
                xs.push(h.mass_at_least(r));
            }
        },
    )
    .unwrap();
    let means: Vec<f64> = series
        .iter()
        .map(|xs| EstimatorReport::from_series(xs, 20).unwrap().mean)
        .collect();
    assert!(means.windows(2).all(|w| w[1] <= w[0]));
    for (xs, &r) in series.iter().zip(&sizes) {
        let est = EstimatorReport::from_series(xs, 20).unwrap();
        let bound = free_cluster_tail_bound(&p, r);
        assert!(
            est.mean <= bound + 3.0 * est.se,
            "r = {r}: {est:?} vs {bound}"
        );
    }
}

#[test]
fn agreement_matches_connectivity_on_edges() {
    let p = Params::f64(3, 3, 1.1, 0.0).unwrap();
    let g = rrg(5000, 3, 16);
    let gg = GhostGraph::new(g.clone());
    let edges: Vec<usize> = sample(&mut chain_rng(17, 0), g.m(), 20).into_vec();
    let q = p.q as f64;
    let mut diff = Vec::new();
    run_chain(
        &gg,
        &p,
        &budget(300, 2000, 2),
        18,
        ChainStart::Disordered,
        |s| {
            let d: f64 = edges
                .iter()
                .map(|&e| {
                    let (u, v) = g.edge(e);
                    let agree = f64::from(s.colors()[u] == s.colors()[v]);
                    let joined = f64::from(s.labels[u] == s.labels[v]);
                    agree - ((1.0 - 1.0 / q) * joined + 1.0 / q)
                })
                .sum();
            diff.push(d / edges.len() as f64);
        },
    )
    .unwrap();
    let r = EstimatorReport::from_series(&diff, 20).unwrap();
    assert!(r.within(0.0, 3.0), "{r:?}");
}

#[test]
fn dominance_is_stable_above_criticality() {
    let p = Params::f64(3, 3, 1.6, 0.0).unwrap();
    let g = rrg(10_000, 3, 19);
    let gg = GhostGraph::new(g.clone());
    let local = LocalDominance::new(&g, 3, 3).unwrap();
    let mut tie = chain_rng(20, tie_stream(0));
    let mut hits = Vec::new();
    run_chain(
        &gg,
        &p,
        &budget(500, 100, 10),
        20,
        ChainStart::Color(0),
        |s| {
            let c = condition_on_dominant(s.colors(), 1, &p, &mut tie).unwrap();
            let h = (0..g.n())
                .filter(|&v| local.at(&c, v, &mut tie).color == 1)
                .count();
            hits.push(h as f64 / g.n() as f64);
        },
    )
    .unwrap();
    let r = EstimatorReport::from_series(&hits, 20).unwrap();
    assert!(r.mean >= 0.9, "{r:?}");
}
