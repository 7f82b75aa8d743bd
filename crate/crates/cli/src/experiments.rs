//! One driver per subcommand. Each returns its files, checks and a JSON
//! summary; nothing is written here.

use crate::config::{Command, ExperimentConfig, Point};
use crate::report::{csv_row, Check, Outcome};
use crate::svg::phase_panel;
use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde_json::json;
use std::collections::BTreeMap;
use std::time::Instant;
use treepotts::bethe::{
    b_plus, beta_c, bp_step, classify_region, internal_energy_prediction, percolation_factor,
    CriticalCurves, Phase, Region, Tolerances,
};
use treepotts::graphgen::{expansion_estimate, is_connected, random_regular, tree_like_fraction};
use treepotts::oracle::{run_suite, summarize};
use treepotts::sampler::*;
use treepotts::treeexact::{
    mg_single, neighborhood_law, rcm_edge_connectivity, rcm_ghost_connectivity, wired_reference,
    Boundary,
};
use treepotts::{fmt17, GhostGraph, Params, Params64};

pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    match cmd {
        Command::Gen => gen(cfg),
        Command::Phase => phase(cfg),
        Command::Fixedpoint => fixedpoint(cfg),
        Command::Sample => sample(cfg),
        Command::Lwc => lwc(cfg),
        Command::Purestate => purestate(cfg),
        Command::Critical => critical(cfg),
        Command::FreeEnergy => free_energy(cfg),
        Command::Oracle => oracle(cfg),
    }
}

fn phase_of(region: Region) -> Phase {
    match region {
        Region::R1 => Phase::Wired,
        _ => Phase::Free,
    }
}

fn chain_seeds(cfg: &ExperimentConfig) -> BTreeMap<String, u64> {
    BTreeMap::from([
        ("graph".to_string(), cfg.graph_seed()),
        ("chains".to_string(), cfg.chain_seed()),
    ])
}

fn graph(cfg: &ExperimentConfig) -> Result<GhostGraph> {
    let spec = cfg.gen_spec();
    let g = random_regular(&spec).with_context(|| format!("generating {spec:?}"))?;
    Ok(GhostGraph::new(g))
}

fn label(pt: &Point, region: Region) -> String {
    match pt.q {
        Some(q) => format!("q={q} beta={} B={} ({region})", pt.beta, pt.field),
        None => format!("beta={} B={} ({region})", pt.beta, pt.field),
    }
}

/// z-score that treats an exact match with zero spread as 0.
fn z_of(r: &EstimatorReport, target: f64) -> f64 {
    if r.se == 0.0 {
        if (r.mean - target).abs() < 1e-15 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        r.z_score(target)
    }
}

fn gen(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.gen_spec();
    let g = random_regular(&spec)?;
    let connected = is_connected(&g);
    let expansion = if connected {
        Some(expansion_estimate(&g, cfg.chain_seed())?)
    } else {
        None
    };
    let (l2, cert) = expansion.map_or((f64::NAN, f64::NAN), |e| (e.lambda2, e.certificate));
    let tl1 = tree_like_fraction(&g, 1);
    let tl2 = tree_like_fraction(&g, 2);
    let model = format!("{:?}", spec.model).to_lowercase();
    let csv = format!(
        "n,d,m,model,seed,connected,tree_like_1,tree_like_2,lambda2,certificate\n{},{},{},{model},{},{connected},{}\n",
        g.n(),
        spec.d,
        g.m(),
        spec.seed,
        csv_row(&[tl1, tl2, l2, cert])
    );
    Ok(Outcome {
        files: vec![
            (format!("{}.csv", cfg.experiment), csv),
            (format!("{}.graph", cfg.experiment), g.to_text()),
        ],
        checks: vec![
            Check::flag("regular", g.regular_degree() == Some(spec.d)),
            Check::flag("connected", connected),
        ],
        data: json!({ "spec": spec, "tree_like": [tl1, tl2], "expansion": expansion }),
        seeds: BTreeMap::from([("graph".to_string(), spec.seed)]),
    })
}

fn phase(cfg: &ExperimentConfig) -> Result<Outcome> {
    let tol = cfg.thresholds.merge;
    let mut out = Outcome::default();
    let mut panels = Vec::new();
    for &(q, d) in &cfg.panels {
        let c = CriticalCurves::trace(q, d, cfg.grid)?;
        let stem = format!("{}_q{q}_d{d}", cfg.experiment);
        out.files.push((format!("{stem}.csv"), c.to_csv()));
        out.files.push((format!("{stem}.svg"), phase_panel(&c)));
        for (b, e) in &c.failures {
            out.checks
                .push(Check::failed(format!("trace q={q} d={d} B={b}"), e));
        }
        let name = format!("ordering and merge q={q} d={d}");
        out.checks.push(match c.check_structure(tol) {
            Ok(()) => Check::flag(name, true),
            Err(e) => Check::failed(name, e),
        });
        if q == 2 {
            // The region collapses onto the ray B = 0, beta >= beta_c.
            let spread = c
                .points
                .iter()
                .map(|p| (p.beta_plus - p.beta_free).abs())
                .fold(c.b_plus, f64::max);
            out.checks
                .push(Check::below(format!("collapse q=2 d={d}"), spread, tol));
        }
        panels.push(json!({
            "q": q, "d": d, "b_plus": c.b_plus, "beta_minus": c.beta_minus,
            "points": c.points.len(), "failures": c.failures,
        }));
    }
    out.data = json!({ "panels": panels });
    Ok(out)
}

fn fixedpoint(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut csv = String::from(
        "q,d,beta,B,region,a_free,a_1,phi_free,phi_1,energy_free,energy_1,m,b_plus,beta_c_at_B\n",
    );
    let mut rows = Vec::new();
    for pt in &cfg.points {
        let p = cfg.params(pt)?;
        let cls = classify_region(&p, &Tolerances::default());
        let res = bp_step(&cls.nu_free, &p)
            .sup_dist(&cls.nu_free)
            .max(bp_step(&cls.nu_1, &p).sup_dist(&cls.nu_1));
        let (_, m) = percolation_factor(&p);
        let bp = b_plus(&p, 1e-12);
        let bc = beta_c(p.field, &p).unwrap_or(f64::NAN);
        let ef = internal_energy_prediction(Phase::Free, &p);
        let e1 = internal_energy_prediction(Phase::Wired, &p);
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.q,
            p.d,
            fmt17(p.beta),
            fmt17(p.field),
            cls.region,
            csv_row(&[
                cls.nu_free.a,
                cls.nu_1.a,
                cls.phi_free,
                cls.phi_1,
                ef,
                e1,
                m,
                bp,
                bc
            ])
        ));
        out.checks.push(Check::below(
            format!("fixed point residual {}", label(pt, cls.region)),
            res,
            cfg.thresholds.fixed_point,
        ));
        rows.push(json!({
            "q": p.q, "beta": p.beta, "B": p.field, "region": cls.region.to_string(),
            "a_free": cls.nu_free.a, "a_1": cls.nu_1.a, "phi_free": cls.phi_free,
            "phi_1": cls.phi_1, "m": m, "b_plus": bp,
        }));
    }
    out.files.push((format!("{}.csv", cfg.experiment), csv));
    out.data = json!({ "points": rows });
    Ok(out)
}

struct SampleChain {
    series: [Vec<f64>; 4],
    big_cluster_mass: Vec<f64>,
    exposed: Vec<f64>,
    consistent: bool,
}

fn sample(cfg: &ExperimentConfig) -> Result<Outcome> {
    let pt = *cfg
        .points
        .first()
        .context("sample needs one parameter point")?;
    let p = cfg.params(&pt)?;
    let gg = graph(cfg)?;
    let n = gg.base().n() as f64;
    let cls = classify_region(&p, &Tolerances::default());
    let phase = phase_of(cls.region);
    let starts = vec![start_for(&p); cfg.chains];
    let chains = run_parallel(
        &gg,
        &p,
        &cfg.budget,
        cfg.chain_seed(),
        &starts,
        |_, chain, tie| {
            let mut c = SampleChain {
                series: Default::default(),
                big_cluster_mass: Vec::new(),
                exposed: Vec::new(),
                consistent: true,
            };
            chain.run(&cfg.budget, |s| {
                c.series[0].push(color_density(s.colors(), 0));
                c.series[1].push(agreement_per_vertex(s.colors(), gg.base()));
                c.series[2].push(ghost_density(s));
                c.series[3].push(edge_connectivity(s, gg.base()));
                c.consistent &= s.bonds.iter_open().all(|e| {
                    let (u, v) = gg.endpoints(e);
                    s.spins.colors[u] == s.spins.colors[v]
                });
                c.big_cluster_mass
                    .push(cluster_histogram(&s.bonds, &gg).mass_at_least(10));
                if p.field == 0.0 {
                    c.exposed
                        .push(sim_unif_coloring(&s.bonds, &gg, p.q, tie).exposed_sites as f64 / n);
                }
            })?;
            Ok(c)
        },
    )?;

    let nu = if phase == Phase::Wired {
        cls.nu_1
    } else {
        cls.nu_free
    };
    let predictions = [
        ("color_1_density", mg_single(&nu, &p)[0]),
        (
            "agreement_per_vertex",
            0.5 * internal_energy_prediction(phase, &p),
        ),
        ("ghost_connectivity", rcm_ghost_connectivity(phase, &p)?),
        ("edge_connectivity", rcm_edge_connectivity(1, phase, &p)?[0]),
    ];
    let mut out = Outcome {
        seeds: chain_seeds(cfg),
        ..Outcome::default()
    };
    out.checks.push(Check::flag(
        "open bonds join equal spins",
        chains.iter().all(|c| c.consistent),
    ));
    let mut csv = String::from("observable,mean,se,prediction,z\n");
    let mut reports = serde_json::Map::new();
    for (i, (name, pred)) in predictions.iter().enumerate() {
        let series: Vec<&[f64]> = chains.iter().map(|c| c.series[i].as_slice()).collect();
        let r = EstimatorReport::pooled(&series, cfg.budget.batches)?;
        let z = z_of(&r, *pred);
        csv.push_str(&format!("{name},{}\n", csv_row(&[r.mean, r.se, *pred, z])));
        if cls.region == Region::Unique {
            out.checks.push(Check::z(
                format!("{name} {}", label(&pt, cls.region)),
                z,
                cfg.thresholds.se_multiple,
            ));
        }
        reports.insert(
            name.to_string(),
            json!({ "estimate": r, "prediction": pred }),
        );
    }
    let big: Vec<&[f64]> = chains
        .iter()
        .map(|c| c.big_cluster_mass.as_slice())
        .collect();
    let big = EstimatorReport::pooled(&big, cfg.budget.batches)?;
    csv.push_str(&format!(
        "cluster_mass_at_least_10,{}\n",
        csv_row(&[big.mean, big.se, free_cluster_tail_bound(&p, 10), f64::NAN])
    ));
    let exposed = if p.field == 0.0 {
        let e: Vec<&[f64]> = chains.iter().map(|c| c.exposed.as_slice()).collect();
        let e = EstimatorReport::pooled(&e, cfg.budget.batches)?;
        csv.push_str(&format!(
            "sim_unif_exposed_fraction,{}\n",
            csv_row(&[e.mean, e.se, f64::NAN, f64::NAN])
        ));
        Some(e)
    } else {
        None
    };
    out.files.push((format!("{}.csv", cfg.experiment), csv));
    out.data = json!({
        "region": cls.region.to_string(),
        "observables": reports,
        "cluster_mass_at_least_10": big,
        "cluster_tail_bound_10": free_cluster_tail_bound(&p, 10),
        "sim_unif_exposed_fraction": exposed,
    });
    Ok(out)
}

struct LwcRow {
    pt: Point,
    region: Region,
    roots: usize,
    tv: f64,
    ghost: EstimatorReport,
    ghost_pred: f64,
    edge: EstimatorReport,
    edge_pred: f64,
}

fn lwc_point(cfg: &ExperimentConfig, gg: &GhostGraph, i: usize, pt: &Point) -> Result<LwcRow> {
    let p = cfg.params(pt)?;
    let t = cfg.depth;
    let region = classify_region(&p, &Tolerances::default()).region;
    let reference = match region {
        Region::Unique | Region::RFree => neighborhood_law(t, t, &Boundary::FixedPointFree, &p)?,
        Region::R1 => wired_reference(t, &p)?,
        Region::RC => bail!("no single reference law on the critical line"),
    };
    let phase = phase_of(region);
    let mut counter = NeighborhoodCounter::new(gg.base(), t, p.q)?;
    let (mut ghost, mut edge) = (Vec::new(), Vec::new());
    let mut chain = Chain::new(
        gg,
        &p,
        start_for(&p),
        chain_rng(cfg.chain_seed(), sweep_stream(i)),
    )?;
    chain.run(&cfg.budget, |s| {
        counter.observe(s.colors());
        ghost.push(ghost_density(s));
        edge.push(edge_connectivity(s, gg.base()));
    })?;
    Ok(LwcRow {
        pt: *pt,
        region,
        roots: counter.n_roots(),
        tv: counter.law()?.total_variation(&reference),
        ghost: EstimatorReport::from_series(&ghost, cfg.budget.batches)?,
        ghost_pred: rcm_ghost_connectivity(phase, &p)?,
        edge: EstimatorReport::from_series(&edge, cfg.budget.batches)?,
        edge_pred: rcm_edge_connectivity(1, phase, &p)?[0],
    })
}

fn lwc(cfg: &ExperimentConfig) -> Result<Outcome> {
    let gg = graph(cfg)?;
    let rows: Vec<Result<LwcRow>> = cfg
        .points
        .par_iter()
        .enumerate()
        .map(|(i, pt)| lwc_point(cfg, &gg, i, pt))
        .collect();
    let th = &cfg.thresholds;
    let mut out = Outcome {
        seeds: chain_seeds(cfg),
        ..Outcome::default()
    };
    let mut csv = String::from(
        "beta,B,region,roots,tv,ghost_mean,ghost_se,ghost_pred,edge_mean,edge_se,edge_pred\n",
    );
    let mut data = Vec::new();
    for (pt, row) in cfg.points.iter().zip(rows) {
        let r = match row {
            Ok(r) => r,
            Err(e) => {
                out.checks
                    .push(Check::failed(format!("beta={} B={}", pt.beta, pt.field), e));
                continue;
            }
        };
        let tag = label(&r.pt, r.region);
        out.checks
            .push(Check::below(format!("tv {tag}"), r.tv, th.tv));
        out.checks.push(Check::z(
            format!("ghost connectivity {tag}"),
            z_of(&r.ghost, r.ghost_pred),
            th.se_multiple,
        ));
        out.checks.push(Check::z(
            format!("edge connectivity {tag}"),
            z_of(&r.edge, r.edge_pred),
            th.se_multiple,
        ));
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt17(r.pt.beta),
            fmt17(r.pt.field),
            r.region,
            r.roots,
            csv_row(&[
                r.tv,
                r.ghost.mean,
                r.ghost.se,
                r.ghost_pred,
                r.edge.mean,
                r.edge.se,
                r.edge_pred
            ])
        ));
        data.push(json!({
            "beta": r.pt.beta, "B": r.pt.field, "region": r.region.to_string(),
            "roots": r.roots, "tv": r.tv, "ghost": r.ghost, "ghost_prediction": r.ghost_pred,
            "edge": r.edge, "edge_prediction": r.edge_pred,
        }));
    }
    out.files.push((format!("{}.csv", cfg.experiment), csv));
    out.data = json!({ "depth": cfg.depth, "points": data });
    Ok(out)
}

struct PureRow {
    beta: f64,
    below: bool,
    tv: Vec<f64>,
    /// Local dominant-color rate per k; above criticality only.
    dominance: Option<Vec<f64>>,
}

fn purestate_point(
    cfg: &ExperimentConfig,
    gg: &GhostGraph,
    i: usize,
    pt: &Point,
) -> Result<PureRow> {
    let p = cfg.params(pt)?;
    if p.field != 0.0 {
        bail!("pure states are defined at B = 0");
    }
    let q = p.q;
    let t = cfg.depth;
    let below = match classify_region(&p, &Tolerances::default()).region {
        Region::Unique | Region::RFree => true,
        Region::R1 => false,
        Region::RC => bail!("beta = beta_c(0) has no single conditioned limit"),
    };
    let references = (0..q)
        .map(|k| {
            let b = if below {
                Boundary::FixedPointFree
            } else {
                Boundary::FixedPointColor(k)
            };
            neighborhood_law(t, t, &b, &p)
        })
        .collect::<treepotts::Result<Vec<_>>>()?;
    let local = if below {
        None
    } else {
        Some(LocalDominance::new(gg.base(), cfg.ell, q)?)
    };
    let mut counters = vec![NeighborhoodCounter::new(gg.base(), t, q)?; q];
    let mut hits = vec![0u64; q];
    let mut seen = 0u64;
    let mut tie = chain_rng(cfg.chain_seed(), tie_stream(i));
    let mut chain = Chain::new(
        gg,
        &p,
        start_for(&p),
        chain_rng(cfg.chain_seed(), sweep_stream(i)),
    )?;
    let mut failure = None;
    chain.run(&cfg.budget, |s| {
        for k in 0..q {
            let c = match condition_on_dominant(s.colors(), k as u8, &p, &mut tie) {
                Ok(c) => c,
                Err(e) => {
                    failure.get_or_insert(e);
                    return;
                }
            };
            counters[k].observe(&c);
            if let Some(local) = &local {
                hits[k] += (0..gg.base().n())
                    .filter(|&v| local.at(&c, v, &mut tie).color == k as u8)
                    .count() as u64;
            }
        }
        seen += gg.base().n() as u64;
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let tv = counters
        .iter()
        .zip(&references)
        .map(|(c, r)| Ok(c.law()?.total_variation(r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PureRow {
        beta: p.beta,
        below,
        tv,
        dominance: local.map(|_| hits.iter().map(|&h| h as f64 / seen as f64).collect()),
    })
}

fn purestate(cfg: &ExperimentConfig) -> Result<Outcome> {
    let gg = graph(cfg)?;
    let rows: Vec<Result<PureRow>> = cfg
        .points
        .par_iter()
        .enumerate()
        .map(|(i, pt)| purestate_point(cfg, &gg, i, pt))
        .collect();
    let th = &cfg.thresholds;
    let mut out = Outcome {
        seeds: chain_seeds(cfg),
        ..Outcome::default()
    };
    let mut csv = String::from("beta,k,reference,tv,dominance\n");
    let mut data = Vec::new();
    for (pt, row) in cfg.points.iter().zip(rows) {
        let r = match row {
            Ok(r) => r,
            Err(e) => {
                out.checks
                    .push(Check::failed(format!("beta={} B={}", pt.beta, pt.field), e));
                continue;
            }
        };
        for (k, &tv) in r.tv.iter().enumerate() {
            let reference = if r.below {
                "fixed_point_free".to_string()
            } else {
                format!("fixed_point_color_{k}")
            };
            let dom = r.dominance.as_ref().map_or(f64::NAN, |d| d[k]);
            csv.push_str(&format!(
                "{},{k},{reference},{}\n",
                fmt17(r.beta),
                csv_row(&[tv, dom])
            ));
            out.checks.push(Check::below(
                format!("tv beta={} k={k} vs {reference}", r.beta),
                tv,
                th.tv,
            ));
            if r.dominance.is_some() {
                out.checks.push(Check::at_least(
                    format!("local dominant rate beta={} k={k} ell={}", r.beta, cfg.ell),
                    dom,
                    th.dominance,
                ));
            }
        }
        data.push(json!({ "beta": r.beta, "below_critical": r.below, "tv": r.tv, "dominance": r.dominance }));
    }
    out.files.push((format!("{}.csv", cfg.experiment), csv));
    out.data = json!({ "depth": cfg.depth, "ell": cfg.ell, "points": data });
    Ok(out)
}

fn critical(cfg: &ExperimentConfig) -> Result<Outcome> {
    let base = Params::f64(cfg.q, cfg.d, 0.0, 0.0)?;
    let field = cfg.field_fraction * b_plus(&base, 1e-12);
    let bc = beta_c(field, &base)?;
    let p = base.with_beta(bc).with_field(field);
    let cls = classify_region(&p, &Tolerances::default());
    let free_pred = mg_single(&cls.nu_free, &p)[0];
    let wired_pred = mg_single(&cls.nu_1, &p)[0];
    let gg = graph(cfg)?;
    let starts: Vec<ChainStart> = (0..cfg.chains)
        .map(|i| {
            if i % 2 == 0 {
                ChainStart::Disordered
            } else {
                ChainStart::Color(0)
            }
        })
        .collect();
    let series = run_parallel(
        &gg,
        &p,
        &cfg.budget,
        cfg.chain_seed(),
        &starts,
        |_, chain, _| {
            let mut xs = Vec::new();
            chain.run(&cfg.budget, |s| xs.push(color_density(s.colors(), 0)))?;
            Ok(xs)
        },
    )?;
    let all = series.concat();
    let bm = bimodality(&all, 40).context("too few snapshots for a histogram")?;
    let reports = series
        .iter()
        .map(|xs| EstimatorReport::from_series(xs, cfg.budget.batches))
        .collect::<treepotts::Result<Vec<_>>>()?;
    let high: Vec<bool> = reports.iter().map(|r| r.mean > bm.threshold).collect();
    let group = |want: bool| -> Vec<&[f64]> {
        series
            .iter()
            .zip(&high)
            .filter(|(_, &h)| h == want)
            .map(|(xs, _)| xs.as_slice())
            .collect()
    };
    let (low_group, high_group) = (group(false), group(true));
    let th = &cfg.thresholds;
    let mut out = Outcome {
        seeds: chain_seeds(cfg),
        ..Outcome::default()
    };
    out.checks.push(Check::flag(
        "critical line point in R_C",
        cls.region == Region::RC,
    ));
    out.checks.push(Check::flag(
        "both modes visited",
        !low_group.is_empty() && !high_group.is_empty(),
    ));
    let mut modes = serde_json::Map::new();
    if !low_group.is_empty() && !high_group.is_empty() {
        let low_max = low_group
            .iter()
            .flat_map(|xs| xs.iter())
            .cloned()
            .fold(f64::MIN, f64::max);
        let high_min = high_group
            .iter()
            .flat_map(|xs| xs.iter())
            .cloned()
            .fold(f64::MAX, f64::min);
        out.checks.push(
            Check::flag("modes separated", low_max < high_min)
                .with_detail(format!("low max {low_max:.6}, high min {high_min:.6}")),
        );
        for (name, grp, pred) in [
            ("free", &low_group, free_pred),
            ("wired", &high_group, wired_pred),
        ] {
            let r = EstimatorReport::pooled(grp, cfg.budget.batches)?;
            out.checks.push(
                Check::z(
                    format!("{name} mode vs single-site prediction"),
                    z_of(&r, pred),
                    th.se_multiple,
                )
                .with_detail(format!("{:.6} +- {:.6} vs {pred:.6}", r.mean, r.se)),
            );
            modes.insert(
                name.into(),
                json!({ "estimate": r, "prediction": pred, "chains": grp.len() }),
            );
        }
    }
    let mut csv = String::from("chain,start,mode,mean,se\n");
    for (i, (r, s)) in reports.iter().zip(&starts).enumerate() {
        let start = match s {
            ChainStart::Disordered => "disordered".to_string(),
            ChainStart::Color(k) => format!("color_{k}"),
        };
        let mode = if high[i] { "wired" } else { "free" };
        csv.push_str(&format!(
            "{i},{start},{mode},{}\n",
            csv_row(&[r.mean, r.se])
        ));
    }
    let mut hist = String::from("center,count\n");
    for (c, k) in &bm.histogram {
        hist.push_str(&format!("{},{k}\n", fmt17(*c)));
    }
    out.files.push((format!("{}.csv", cfg.experiment), csv));
    out.files
        .push((format!("{}_histogram.csv", cfg.experiment), hist));
    out.data = json!({
        "q": p.q, "d": p.d, "beta": p.beta, "B": p.field, "region": cls.region.to_string(),
        "threshold": bm.threshold, "separation": bm.separation, "dip": bm.dip,
        "free_prediction": free_pred, "wired_prediction": wired_pred, "modes": modes,
    });
    Ok(out)
}

struct FeRow {
    p: Params64,
    region: Region,
    est: FreeEnergyEstimate,
    bethe: f64,
}

fn free_energy(cfg: &ExperimentConfig) -> Result<Outcome> {
    let gg = graph(cfg)?;
    let rows: Vec<Result<FeRow>> = cfg
        .points
        .par_iter()
        .enumerate()
        .map(|(i, pt)| {
            let p = cfg.params(pt)?;
            let cls = classify_region(&p, &Tolerances::default());
            let est = free_energy_ti(&gg, &p, &cfg.ti, cfg.chain_seed().wrapping_add(i as u64))?;
            Ok(FeRow {
                p,
                region: cls.region,
                est,
                bethe: cls.phi_max(),
            })
        })
        .collect();
    let mut out = Outcome {
        seeds: chain_seeds(cfg),
        ..Outcome::default()
    };
    let mut csv =
        String::from("q,beta,B,region,phi_hat,mc_se,quadrature_error,phi_bethe,rel_error\n");
    let mut data = Vec::new();
    for (pt, row) in cfg.points.iter().zip(rows) {
        let r = match row {
            Ok(r) => r,
            Err(e) => {
                out.checks
                    .push(Check::failed(format!("beta={} B={}", pt.beta, pt.field), e));
                continue;
            }
        };
        let rel = (r.est.phi - r.bethe).abs() / r.bethe.abs();
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.p.q,
            fmt17(r.p.beta),
            fmt17(r.p.field),
            r.region,
            csv_row(&[r.est.phi, r.est.mc_se, r.est.quadrature_error, r.bethe, rel])
        ));
        let tag = format!(
            "q={} beta={} B={} ({})",
            r.p.q, r.p.beta, r.p.field, r.region
        );
        out.checks.push(
            Check::below(
                format!("relative error {tag}"),
                rel,
                cfg.thresholds.free_energy_rel,
            )
            .with_detail(format!("{:.6} vs {:.6}", r.est.phi, r.bethe)),
        );
        data.push(json!({
            "q": r.p.q, "beta": r.p.beta, "B": r.p.field, "region": r.region.to_string(),
            "phi_hat": r.est.phi, "mc_se": r.est.mc_se, "quadrature_error": r.est.quadrature_error,
            "phi_bethe": r.bethe, "path": r.est.path,
        }));
    }
    out.files.push((format!("{}.csv", cfg.experiment), csv));
    out.data = json!({ "points": data });
    Ok(out)
}

fn oracle(cfg: &ExperimentConfig) -> Result<Outcome> {
    let start = Instant::now();
    let checks = run_suite(&cfg.oracle);
    let secs = start.elapsed().as_secs_f64();
    let mut out = Outcome {
        seeds: BTreeMap::from([("oracle".to_string(), cfg.oracle.seed)]),
        ..Outcome::default()
    };
    let mut csv = String::from("check,passed,total,worst_residual\n");
    for (name, passed, total, worst) in summarize(&checks) {
        csv.push_str(&format!("{name},{passed},{total},{}\n", fmt17(worst)));
        let mut c = Check::flag(format!("{name} ({passed}/{total})"), passed == total);
        c.value = worst;
        out.checks.push(c);
    }
    out.checks.push(Check::below(
        "runtime seconds",
        secs,
        cfg.thresholds.oracle_seconds,
    ));
    out.files.push((format!("{}.csv", cfg.experiment), csv));
    out.data = json!({ "checks": checks, "seconds": secs });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(cmd: Command) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(cmd);
        cfg.graph.n = 200;
        cfg.budget = Budget {
            burn_in: 20,
            samples: 40,
            thin: 1,
            batches: 20,
        };
        cfg
    }

    #[test]
    fn fixedpoint_rows() {
        let mut cfg = small(Command::Fixedpoint);
        cfg.points = vec![Point::new(1.0, 0.2), Point::new(1.6, 0.0)];
        let out = run(Command::Fixedpoint, &cfg).unwrap();
        assert!(out.pass());
        let csv = out.file("fixedpoint.csv").unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(2).unwrap().contains(",R_1,"));
    }

    #[test]
    fn gen_is_deterministic() {
        let cfg = small(Command::Gen);
        let a = run(Command::Gen, &cfg).unwrap();
        let b = run(Command::Gen, &cfg).unwrap();
        assert!(a.pass());
        assert_eq!(a.files, b.files);
    }

    #[test]
    fn sample_reports_every_observable() {
        let mut cfg = small(Command::Sample);
        cfg.points = vec![Point::new(0.5, 0.0)];
        let out = run(Command::Sample, &cfg).unwrap();
        let csv = out.file("sample.csv").unwrap();
        for name in [
            "color_1_density",
            "edge_connectivity",
            "sim_unif_exposed_fraction",
        ] {
            assert!(csv.contains(name), "{name}");
        }
        assert!(out.checks[0].pass);
    }

    #[test]
    fn critical_line_points_are_rejected_for_lwc() {
        let mut cfg = small(Command::Lwc);
        let bc = treepotts::bethe::beta_c_zero_closed_form(3, 3);
        cfg.points = vec![Point::new(bc, 0.0)];
        let out = run(Command::Lwc, &cfg).unwrap();
        assert!(!out.pass());
        assert!(out.checks[0].detail.contains("critical line"));
    }
}
