//! Restricted partition functions on a tree ball before and after removing the
//! root, against the Psi functionals of the pre-messages.

use super::enumerate::{check_cap, components, open_log_weights, restricted_log_z};
use crate::bethe::{psi_e, psi_vx};
use crate::dsu::UnionFind;
use crate::error::{Error, Result};
use crate::graph::{GhostGraph, Graph};
use crate::graphgen::{remove_vertex, rewire};
use crate::params::Params;
use crate::scalar::log_sum_exp;
use crate::tree::TreeIndex;

/// Edges of B*(r) \ B*(t) in G* numbering: base edges into depth > t and ghost
/// edges of vertices at depth > t. `with_ghost = false` keeps the base edges only.
pub fn annulus_edges(index: &TreeIndex, t: usize, with_ghost: bool) -> Vec<usize> {
    let m = index.n_edges();
    let mut out: Vec<usize> = (0..m).filter(|&e| index.vertex_depth(e + 1) > t).collect();
    if with_ghost {
        out.extend(
            (0..index.len())
                .filter(|&v| index.vertex_depth(v) > t)
                .map(|v| m + v),
        );
    }
    out
}

/// The same edges in a graph derived by surgery, given the vertex relabeling.
fn mapped_edges(
    index: &TreeIndex,
    edges: &[usize],
    target: &GhostGraph,
    map: &[Option<usize>],
) -> Result<Vec<usize>> {
    let m = index.n_edges();
    edges
        .iter()
        .map(|&e| {
            let missing = || Error::InvalidGraph(format!("annulus edge {e} lost in surgery"));
            if e < m {
                let (u, v) = (index.parent(e + 1).unwrap(), e + 1);
                let (a, b) = (map[u].ok_or_else(missing)?, map[v].ok_or_else(missing)?);
                target.base().edge_between(a, b).ok_or_else(missing)
            } else {
                Ok(target.ghost_edge(map[e - m].ok_or_else(missing)?))
            }
        })
        .collect()
}

/// Pre-message s_{u -> o}(y) for each root neighbor u: the probability that u is
/// joined to the ghost under the RCM on B*_o(r) given the bond (u, o) closed and
/// the annulus bonds equal to `y`.
pub fn pre_messages(index: &TreeIndex, t: usize, y: &[bool], p: &Params<f64>) -> Result<Vec<f64>> {
    let gg = GhostGraph::new(index.graph());
    let annulus = annulus_edges(index, t, true);
    if annulus.len() != y.len() {
        return Err(Error::InvalidParams(format!(
            "annulus has {} edges, got {} values",
            annulus.len(),
            y.len()
        )));
    }
    let bits = gg.n_edges();
    if bits >= 64 {
        return Err(Error::InvalidParams(
            "ball too large for word bond masks".into(),
        ));
    }
    let w = open_log_weights(&gg, p);
    let lq = (p.q as f64).ln();
    let mut uf = UnionFind::new(gg.n() + 1);
    index
        .children(0)
        .map(|u| {
            // Edge (o, u) is base edge u - 1.
            let mut fixed: Vec<usize> = annulus.clone();
            fixed.push(u - 1);
            let mut base = 0u64;
            for (&e, &v) in annulus.iter().zip(y) {
                if v {
                    base |= 1 << e;
                }
            }
            let fixed_mask = fixed.iter().fold(0u64, |a, &e| a | 1 << e);
            let free: Vec<usize> = (0..bits).filter(|&e| fixed_mask >> e & 1 == 0).collect();
            check_cap("pre-message enumeration", 1u128 << free.len())?;
            let (mut all, mut hit) = (Vec::new(), Vec::new());
            for k in 0..1u64 << free.len() {
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
                let lw = open + (components(&gg, mask, &mut uf) - 1) as f64 * lq;
                all.push(lw);
                if uf.same(u, gg.ghost()) {
                    hit.push(lw);
                }
            }
            Ok((log_sum_exp(&hit) - log_sum_exp(&all)).exp())
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SurgeryResidual {
    /// Relative error of Z_{B(r)}/Z_{B^-(r)} against Psi^vx.
    pub vertex: f64,
    /// Largest relative error of Z_{B^pi(r)}/Z_{B^-(r)} against Psi^e, over the permutations.
    pub edge: f64,
    pub messages: Vec<f64>,
}

impl SurgeryResidual {
    pub fn max(&self) -> f64 {
        self.vertex.max(self.edge)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Checks both surgery identities on B_o(r) in T_d for annulus values `y`
/// (ordered as [`annulus_edges`] with ghost edges). `perms` are orderings of the
/// root's neighbors; an empty list skips the edge identity.
pub fn surgery_ratio_check(
    d: usize,
    r: usize,
    t: usize,
    y: &[bool],
    perms: &[Vec<usize>],
    p: &Params<f64>,
) -> Result<SurgeryResidual> {
    if t >= r {
        return Err(Error::InvalidParams(format!(
            "need t < r, got t = {t}, r = {r}"
        )));
    }
    if p.d != d {
        return Err(Error::InvalidParams(format!(
            "params degree {} != {d}",
            p.d
        )));
    }
    if !perms.is_empty() && !d.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!("odd degree d = {d}")));
    }
    let index = TreeIndex::new(d, r)?;
    let g: Graph = index.graph();
    let gg = GhostGraph::new(g.clone());
    let annulus = annulus_edges(&index, t, true);

    let full = restricted_log_z(&gg, &annulus, y, p)?;
    let (minus, map) = remove_vertex(&g, 0)?;
    let minus = GhostGraph::new(minus);
    let w_minus = mapped_edges(&index, &annulus, &minus, &map)?;
    let z_minus = restricted_log_z(&minus, &w_minus, y, p)?;

    let b = pre_messages(&index, t, y, p)?;
    let vertex = rel((full - z_minus).exp(), psi_vx(&b, p)?);

    let mut edge: f64 = 0.0;
    for pi in perms {
        let (rw, map) = rewire(&g, 0, pi)?;
        let rw = GhostGraph::new(rw);
        let w_rw = mapped_edges(&index, &annulus, &rw, &map)?;
        let z_pi = restricted_log_z(&rw, &w_rw, y, p)?;
        let permuted: Vec<f64> = pi.iter().map(|&i| b[i]).collect();
        edge = edge.max(rel((z_pi - z_minus).exp(), psi_e(&permuted, p)?));
    }
    Ok(SurgeryResidual {
        vertex,
        edge,
        messages: b,
    })
}
