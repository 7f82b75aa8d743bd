//! Exhaustive Potts, random-cluster and Edwards-Sokal distributions.
//!
//! Partition functions share one normalization: every edge e of G* carries
//! e^{beta*_e} p_e^eta (1-p_e)^{1-eta}, so each total mass equals the Potts
//! partition function including the field factor.

use crate::dsu::UnionFind;
use crate::error::{Error, Result};
use crate::graph::{GhostGraph, Graph};
use crate::params::Params;
use crate::scalar::log_sum_exp;

/// Weighted configurations per call.
pub const ENUM_CAP: u128 = 1 << 26;

pub(crate) fn check_cap(what: &'static str, needed: u128) -> Result<()> {
    if needed > ENUM_CAP {
        return Err(Error::CapExceeded {
            what,
            needed,
            cap: ENUM_CAP,
        });
    }
    Ok(())
}

pub(crate) fn pow_sat(base: usize, exp: usize) -> u128 {
    (0..exp).fold(1u128, |acc, _| acc.saturating_mul(base as u128))
}

/// Normalized law over an implicitly indexed configuration space.
#[derive(Clone, Debug)]
pub struct ExactDistribution {
    pub probs: Vec<f64>,
    pub log_z: f64,
}

impl ExactDistribution {
    pub fn from_log_weights(mut lw: Vec<f64>) -> Self {
        let log_z = log_sum_exp(&lw);
        lw.iter_mut().for_each(|x| *x = (*x - log_z).exp());
        ExactDistribution { probs: lw, log_z }
    }

    pub fn z(&self) -> f64 {
        self.log_z.exp()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn max_abs_diff(&self, other: &[f64]) -> f64 {
        self.probs
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Visits [q]^n in index order (last coordinate fastest).
pub(crate) fn for_each_coloring(n: usize, q: usize, mut f: impl FnMut(&[u8])) {
    let mut c = vec![0u8; n];
    loop {
        f(&c);
        let mut k = n;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if (c[k] as usize) + 1 < q {
                c[k] += 1;
                break;
            }
            c[k] = 0;
        }
    }
}

/// Potts law on G with extra per-vertex log-weights `vertex[v][color]`.
pub fn enumerate_potts_weighted(
    g: &Graph,
    q: usize,
    beta: f64,
    vertex: &[Vec<f64>],
) -> Result<ExactDistribution> {
    check_cap("Potts enumeration", pow_sat(q, g.n()))?;
    let mut lw = Vec::with_capacity(pow_sat(q, g.n()) as usize);
    for_each_coloring(g.n(), q, |c| {
        let agree = g.edges().iter().filter(|&&(u, v)| c[u] == c[v]).count();
        let site: f64 = c
            .iter()
            .enumerate()
            .map(|(v, &s)| vertex[v][s as usize])
            .sum();
        lw.push(beta * agree as f64 + site);
    });
    Ok(ExactDistribution::from_log_weights(lw))
}

/// Potts measure on [q]^V with weight exp(beta sum delta + B sum delta(sigma_v, 1)).
pub fn enumerate_potts(g: &Graph, p: &Params<f64>) -> Result<ExactDistribution> {
    let field: Vec<f64> = (0..p.q)
        .map(|s| if s == 0 { p.field } else { 0.0 })
        .collect();
    enumerate_potts_weighted(g, p.q, p.beta, &vec![field; g.n()])
}

/// Potts measure on G* with the ghost pinned to color 1, indexed by base colors.
pub fn enumerate_potts_ghosted(gg: &GhostGraph, p: &Params<f64>) -> Result<ExactDistribution> {
    let n = gg.n();
    check_cap("Potts enumeration", pow_sat(p.q, n))?;
    let coupling: Vec<f64> = (0..gg.n_edges())
        .map(|e| if gg.is_ghost_edge(e) { p.field } else { p.beta })
        .collect();
    let ends: Vec<(usize, usize)> = (0..gg.n_edges()).map(|e| gg.endpoints(e)).collect();
    let mut full = vec![0u8; n + 1];
    let mut lw = Vec::with_capacity(pow_sat(p.q, n) as usize);
    for_each_coloring(n, p.q, |c| {
        full[..n].copy_from_slice(c);
        let h: f64 = ends
            .iter()
            .zip(&coupling)
            .filter(|(&(u, v), _)| full[u] == full[v])
            .map(|(_, &j)| j)
            .sum();
        lw.push(h);
    });
    Ok(ExactDistribution::from_log_weights(lw))
}

/// log(e^x - 1) per edge of G*: the open-bond weight after the e^{beta*} rescaling.
pub(crate) fn open_log_weights(gg: &GhostGraph, p: &Params<f64>) -> Vec<f64> {
    let lb = log_em1(p.beta);
    let lg = log_em1(p.field);
    (0..gg.n_edges())
        .map(|e| if gg.is_ghost_edge(e) { lg } else { lb })
        .collect()
}

pub(crate) fn log_em1(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        x.exp_m1().ln()
    }
}

/// Number of components of G* under `mask` (bit e = edge e of G*).
pub(crate) fn components(gg: &GhostGraph, mask: u64, uf: &mut UnionFind) -> usize {
    uf.reset();
    let mut comps = gg.n() + 1;
    let mut m = mask;
    while m != 0 {
        let e = m.trailing_zeros() as usize;
        m &= m - 1;
        let (u, v) = gg.endpoints(e);
        if uf.union(u, v) {
            comps -= 1;
        }
    }
    comps
}

/// Bond masks are single words.
fn mask_width(gg: &GhostGraph) -> Result<usize> {
    let bits = gg.n_edges();
    if bits >= 64 {
        return Err(Error::CapExceeded {
            what: "bond mask width",
            needed: bits as u128,
            cap: 63,
        });
    }
    Ok(bits)
}

fn rcm_bits(gg: &GhostGraph) -> Result<usize> {
    let bits = mask_width(gg)?;
    check_cap("RCM enumeration", 1u128 << bits)?;
    Ok(bits)
}

/// Random-cluster measure on G*, indexed by the bond mask.
pub fn enumerate_rcm(gg: &GhostGraph, p: &Params<f64>) -> Result<ExactDistribution> {
    let bits = rcm_bits(gg)?;
    let w = open_log_weights(gg, p);
    let lq = (p.q as f64).ln();
    let mut uf = UnionFind::new(gg.n() + 1);
    let lw = (0..1u64 << bits)
        .map(|mask| {
            let open: f64 = (0..bits)
                .filter(|&e| mask >> e & 1 == 1)
                .map(|e| w[e])
                .sum();
            open + (components(gg, mask, &mut uf) - 1) as f64 * lq
        })
        .collect();
    Ok(ExactDistribution::from_log_weights(lw))
}

/// Base-bond marginal of [`enumerate_rcm`], by summing out the ghost bonds.
pub fn marginal_rcm_summed(gg: &GhostGraph, p: &Params<f64>) -> Result<ExactDistribution> {
    let full = enumerate_rcm(gg, p)?;
    let m = gg.n_base_edges();
    let mut probs = vec![0.0; 1 << m];
    for (mask, &pr) in full.probs.iter().enumerate() {
        probs[mask & ((1 << m) - 1)] += pr;
    }
    Ok(ExactDistribution {
        probs,
        log_z: full.log_z,
    })
}

/// Base-bond marginal from cluster weights prod_C (1 + (q-1) e^{-B|C|}), no ghost.
pub fn marginal_rcm_direct(g: &Graph, p: &Params<f64>) -> Result<ExactDistribution> {
    let m = g.m();
    check_cap("RCM enumeration", 1u128 << m.min(127))?;
    let lb = log_em1(p.beta);
    let qm1 = (p.q - 1) as f64;
    let mut uf = UnionFind::new(g.n());
    let mut sizes = vec![0usize; g.n()];
    let lw: Vec<f64> = (0..1u64 << m)
        .map(|mask| {
            uf.reset();
            for e in 0..m {
                if mask >> e & 1 == 1 {
                    let (u, v) = g.edge(e);
                    uf.union(u, v);
                }
            }
            sizes.iter_mut().for_each(|s| *s = 0);
            for v in 0..g.n() {
                sizes[uf.find(v)] += 1;
            }
            let clusters: f64 = sizes
                .iter()
                .filter(|&&s| s > 0)
                .map(|&s| (1.0 + qm1 * (-p.field * s as f64).exp()).ln())
                .sum();
            mask.count_ones() as f64 * lb + clusters
        })
        .collect();
    let mut dist = ExactDistribution::from_log_weights(lw);
    // Ghost bonds contribute e^{B n} to the total mass.
    dist.log_z += p.field * g.n() as f64;
    Ok(dist)
}

/// Calls `f(spin_index, colors, bond_mask, log_weight)` for every Edwards-Sokal
/// configuration with nonzero weight; bonds range over submasks of the agreeing edges.
pub fn for_each_es(
    gg: &GhostGraph,
    p: &Params<f64>,
    mut f: impl FnMut(u64, &[u8], u64, f64),
) -> Result<()> {
    let bits = rcm_bits(gg)?;
    check_cap(
        "Edwards-Sokal enumeration",
        pow_sat(p.q, gg.n()).saturating_mul(1u128 << bits),
    )?;
    let w = open_log_weights(gg, p);
    let n = gg.n();
    let mut full = vec![0u8; n + 1];
    let mut index = 0u64;
    for_each_coloring(n, p.q, |c| {
        full[..n].copy_from_slice(c);
        let agree: u64 = (0..bits)
            .filter(|&e| {
                let (u, v) = gg.endpoints(e);
                full[u] == full[v] && w[e] > f64::NEG_INFINITY
            })
            .fold(0, |acc, e| acc | 1 << e);
        let mut sub = 0u64;
        loop {
            let lw: f64 = (0..bits).filter(|&e| sub >> e & 1 == 1).map(|e| w[e]).sum();
            f(index, c, sub, lw);
            if sub == agree {
                break;
            }
            sub = (sub.wrapping_sub(agree)) & agree;
        }
        index += 1;
    });
    Ok(())
}

/// Materialized Edwards-Sokal law.
#[derive(Clone, Debug)]
pub struct EsDistribution {
    pub q: usize,
    pub n: usize,
    pub n_edges: usize,
    /// (spin index, bond mask) per configuration.
    pub configs: Vec<(u64, u64)>,
    pub probs: Vec<f64>,
    pub log_z: f64,
}

pub fn enumerate_es(gg: &GhostGraph, p: &Params<f64>) -> Result<EsDistribution> {
    let mut configs = Vec::new();
    let mut lw = Vec::new();
    for_each_es(gg, p, |s, _, b, w| {
        configs.push((s, b));
        lw.push(w);
    })?;
    let d = ExactDistribution::from_log_weights(lw);
    Ok(EsDistribution {
        q: p.q,
        n: gg.n(),
        n_edges: gg.n_edges(),
        configs,
        probs: d.probs,
        log_z: d.log_z,
    })
}

impl EsDistribution {
    pub fn spin_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; pow_sat(self.q, self.n) as usize];
        for (&(s, _), &pr) in self.configs.iter().zip(&self.probs) {
            out[s as usize] += pr;
        }
        out
    }

    pub fn bond_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; 1 << self.n_edges];
        for (&(_, b), &pr) in self.configs.iter().zip(&self.probs) {
            out[b as usize] += pr;
        }
        out
    }
}

/// Residuals of the Edwards-Sokal coupling identities on one graph.
#[derive(Clone, Copy, Debug, Default)]
pub struct EsResiduals {
    /// Spin marginal vs Potts.
    pub spin: f64,
    /// Bond marginal vs random-cluster.
    pub bond: f64,
    /// Conditional spins given bonds vs uniform-per-cluster with ghost cluster = 1.
    pub theta: f64,
    /// Largest relative mismatch among the Potts, ghosted Potts, RCM, ES and
    /// marginal-RCM partition functions.
    pub z: f64,
}

pub fn es_residuals(gg: &GhostGraph, p: &Params<f64>) -> Result<EsResiduals> {
    let potts = enumerate_potts(gg.base(), p)?;
    let ghosted = enumerate_potts_ghosted(gg, p)?;
    let rcm = enumerate_rcm(gg, p)?;
    let direct = marginal_rcm_direct(gg.base(), p)?;

    // Pass 1: marginals and total mass, without materializing.
    let mut lws = Vec::new();
    for_each_es(gg, p, |_, _, _, w| lws.push(w))?;
    let log_z = log_sum_exp(&lws);
    drop(lws);
    let mut spin = vec![0.0; potts.len()];
    let mut bond = vec![0.0; rcm.len()];
    for_each_es(gg, p, |s, _, b, w| {
        let pr = (w - log_z).exp();
        spin[s as usize] += pr;
        bond[b as usize] += pr;
    })?;

    // Pass 2: P(sigma | eta) against q^{-#clusters off the ghost}.
    let n = gg.n();
    let lq = (p.q as f64).ln();
    let mut uf = UnionFind::new(n + 1);
    let mut theta: f64 = 0.0;
    for_each_es(gg, p, |_, _, b, w| {
        if bond[b as usize] == 0.0 {
            return;
        }
        let cond = (w - log_z).exp() / bond[b as usize];
        let free_clusters = components(gg, b, &mut uf) - 1;
        theta = theta.max((cond - (-(free_clusters as f64) * lq).exp()).abs());
    })?;

    let rel = |a: f64, b: f64| ((a - b).exp_m1()).abs();
    let z = [ghosted.log_z, rcm.log_z, log_z, direct.log_z]
        .iter()
        .map(|&x| rel(x, potts.log_z))
        .fold(0.0, f64::max);
    Ok(EsResiduals {
        spin: potts.max_abs_diff(&spin).max(ghosted.max_abs_diff(&spin)),
        bond: rcm.max_abs_diff(&bond),
        theta,
        z,
    })
}

/// max over base edges of |mu(sigma_i = sigma_j) - (1 - 1/q) phi(i <-> j) - 1/q|,
/// connections in G* (through the ghost included).
pub fn correlation_identity_residual(gg: &GhostGraph, p: &Params<f64>) -> Result<f64> {
    let potts = enumerate_potts(gg.base(), p)?;
    let rcm = enumerate_rcm(gg, p)?;
    let g = gg.base();
    let mut agree = vec![0.0; g.m()];
    let mut idx = 0usize;
    for_each_coloring(g.n(), p.q, |c| {
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            if c[u] == c[v] {
                agree[e] += potts.probs[idx];
            }
        }
        idx += 1;
    });
    let mut conn = vec![0.0; g.m()];
    let mut uf = UnionFind::new(gg.n() + 1);
    for (mask, &pr) in rcm.probs.iter().enumerate() {
        if pr == 0.0 {
            continue;
        }
        components(gg, mask as u64, &mut uf);
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            if uf.same(u, v) {
                conn[e] += pr;
            }
        }
    }
    let qf = p.q as f64;
    Ok(agree
        .iter()
        .zip(&conn)
        .map(|(a, c)| (a - (1.0 - 1.0 / qf) * c - 1.0 / qf).abs())
        .fold(0.0, f64::max))
}

/// Restricted partition function: sum over bonds of G* agreeing with `y` on the
/// edges `restricted`, of q^{|C|-1} prod_{open} (e^{beta*_e} - 1).
/// Passing only base edges gives the base-edge variant.
pub fn restricted_z(
    gg: &GhostGraph,
    restricted: &[usize],
    y: &[bool],
    p: &Params<f64>,
) -> Result<f64> {
    Ok(restricted_log_z(gg, restricted, y, p)?.exp())
}

pub fn restricted_log_z(
    gg: &GhostGraph,
    restricted: &[usize],
    y: &[bool],
    p: &Params<f64>,
) -> Result<f64> {
    if restricted.len() != y.len() {
        return Err(Error::InvalidParams(format!(
            "{} restricted edges but {} values",
            restricted.len(),
            y.len()
        )));
    }
    let bits = mask_width(gg)?;
    let mut fixed = 0u64;
    let mut base = 0u64;
    for (&e, &v) in restricted.iter().zip(y) {
        if e >= bits {
            return Err(Error::InvalidParams(format!("edge {e} out of range")));
        }
        fixed |= 1 << e;
        if v {
            base |= 1 << e;
        }
    }
    let free: Vec<usize> = (0..bits).filter(|&e| fixed >> e & 1 == 0).collect();
    check_cap("restricted enumeration", 1u128 << free.len())?;
    let w = open_log_weights(gg, p);
    let lq = (p.q as f64).ln();
    let mut uf = UnionFind::new(gg.n() + 1);
    let lw: Vec<f64> = (0..1u64 << free.len())
        .map(|k| {
            let mut mask = base;
            for (i, &e) in free.iter().enumerate() {
                if k >> i & 1 == 1 {
                    mask |= 1 << e;
                }
            }
            let open: f64 = (0..bits)
                .filter(|&e| mask >> e & 1 == 1)
                .map(|e| w[e])
                .sum();
            open + (components(gg, mask, &mut uf) - 1) as f64 * lq
        })
        .collect();
    Ok(log_sum_exp(&lw))
}

/// |sum_y Z_W(y) / Z - 1| for the edge set `restricted`.
pub fn restricted_total_residual(
    gg: &GhostGraph,
    restricted: &[usize],
    p: &Params<f64>,
) -> Result<f64> {
    let z = enumerate_potts(gg.base(), p)?.log_z;
    let k = restricted.len();
    check_cap("restricted values", 1u128 << k.min(127))?;
    let parts = (0..1u64 << k)
        .map(|bits| {
            let y: Vec<bool> = (0..k).map(|i| bits >> i & 1 == 1).collect();
            restricted_log_z(gg, restricted, &y, p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((log_sum_exp(&parts) - z).exp_m1().abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pr(q: usize, beta: f64, b: f64) -> Params<f64> {
        Params::f64(q, 3, beta, b).unwrap()
    }

    fn ghost(n: usize, edges: &[(usize, usize)]) -> GhostGraph {
        GhostGraph::new(Graph::new(n, edges.to_vec()).unwrap())
    }

    #[test]
    fn single_vertex_field() {
        let d = enumerate_potts(&Graph::empty(1), &pr(3, 0.0, 1.0)).unwrap();
        let e = 1f64.exp();
        assert_abs_diff_eq!(d.probs[0], e / (e + 2.0), epsilon = 1e-15);
        assert_abs_diff_eq!(d.z(), e + 2.0, epsilon = 1e-13);
    }

    #[test]
    fn edge_agreement() {
        let beta = 0.7;
        let d = enumerate_potts(&Graph::new(2, vec![(0, 1)]).unwrap(), &pr(2, beta, 0.0)).unwrap();
        let agree = d.probs[0] + d.probs[3];
        assert_abs_diff_eq!(agree, beta.exp() / (beta.exp() + 1.0), epsilon = 1e-15);
    }

    #[test]
    fn ghosted_law_matches() {
        let gg = ghost(3, &[(0, 1), (1, 2)]);
        let p = pr(3, 0.9, 0.4);
        let a = enumerate_potts(gg.base(), &p).unwrap();
        let b = enumerate_potts_ghosted(&gg, &p).unwrap();
        assert!(a.max_abs_diff(&b.probs) < 1e-15);
        assert_abs_diff_eq!(a.log_z, b.log_z, epsilon = 1e-13);
    }

    #[test]
    fn zero_field_closes_ghost_bonds() {
        let gg = ghost(3, &[(0, 1), (1, 2)]);
        let d = enumerate_rcm(&gg, &pr(3, 1.0, 0.0)).unwrap();
        let ghost_open: f64 = d
            .probs
            .iter()
            .enumerate()
            .filter(|(mask, _)| mask >> 2 != 0)
            .map(|(_, p)| p)
            .sum();
        assert_eq!(ghost_open, 0.0);
    }

    #[test]
    fn single_edge_open_probability() {
        let gg = ghost(2, &[(0, 1)]);
        let p = pr(3, 0.8, 0.0);
        let m = marginal_rcm_summed(&gg, &p).unwrap();
        let pe = p.p_edge();
        assert_abs_diff_eq!(m.probs[1], pe / (pe + 3.0 * (1.0 - pe)), epsilon = 1e-15);
    }

    #[test]
    fn triangle_dual_marginals() {
        let gg = ghost(3, &[(0, 1), (0, 2), (1, 2)]);
        let p = pr(3, 1.0, 0.5);
        let a = marginal_rcm_summed(&gg, &p).unwrap();
        let b = marginal_rcm_direct(gg.base(), &p).unwrap();
        assert!(a.max_abs_diff(&b.probs) < 1e-12);
        assert_abs_diff_eq!(a.log_z, b.log_z, epsilon = 1e-12);
    }

    #[test]
    fn path_three_way_agreement() {
        let gg = ghost(3, &[(0, 1), (1, 2)]);
        for (beta, b) in [(0.6, 0.0), (1.3, 0.4)] {
            let r = es_residuals(&gg, &pr(2, beta, b)).unwrap();
            assert!(
                r.spin < 1e-12 && r.bond < 1e-12 && r.theta < 1e-12 && r.z < 1e-12,
                "{r:?}"
            );
        }
    }

    #[test]
    fn infinite_temperature_es() {
        let gg = ghost(2, &[(0, 1)]);
        let es = enumerate_es(&gg, &pr(3, 0.0, 0.0)).unwrap();
        assert_eq!(es.configs.len(), 9);
        assert!(es.configs.iter().all(|&(_, b)| b == 0));
        assert!(es.probs.iter().all(|&x| (x - 1.0 / 9.0).abs() < 1e-15));
    }

    #[test]
    fn correlation_identity_small() {
        let gg = ghost(4, &[(0, 1), (1, 2), (2, 3), (0, 2)]);
        for (q, beta, b) in [(2, 0.5, 0.0), (3, 1.2, 0.3)] {
            assert!(correlation_identity_residual(&gg, &pr(q, beta, b)).unwrap() < 1e-13);
        }
    }

    #[test]
    fn restricted_sums() {
        let gg = ghost(2, &[(0, 1)]);
        let p = pr(3, 0.9, 0.2);
        let z = enumerate_potts(gg.base(), &p).unwrap().z();
        assert_abs_diff_eq!(restricted_z(&gg, &[], &[], &p).unwrap(), z, epsilon = 1e-12);
        let open = restricted_z(&gg, &[0], &[true], &p).unwrap();
        let closed = restricted_z(&gg, &[0], &[false], &p).unwrap();
        assert_abs_diff_eq!(open + closed, z, epsilon = 1e-12);
        // Open edge: both endpoints equal, sum_s e^{beta} e^{2B delta(s,1)} (1 - e^{-beta}).
        let want = (0.9f64.exp() - 1.0) * (0.4f64.exp() + 2.0);
        assert_abs_diff_eq!(open, want, epsilon = 1e-12);
        let tri = ghost(3, &[(0, 1), (0, 2), (1, 2)]);
        assert!(restricted_total_residual(&tri, &[0, 2, 4], &p).unwrap() < 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let g = Graph::empty(30);
        assert!(matches!(
            enumerate_potts(&g, &pr(2, 0.1, 0.0)),
            Err(Error::CapExceeded { .. })
        ));
    }
}
