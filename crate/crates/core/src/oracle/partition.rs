//! Random-cluster measures on the ghosted tree ball T*_d(t) with the boundary
//! ∂T_d(t) ∪ {v*} wired according to a partition, the laws they induce one
//! level up, the functional F_s, and the ghost-decay probe.

use super::enumerate::{check_cap, log_em1};
use crate::dsu::UnionFind;
use crate::error::{Error, Result};
use crate::graph::GhostGraph;
use crate::params::Params;
use crate::scalar::log_sum_exp;
use crate::tree::TreeIndex;
use std::collections::BTreeMap;

/// Partition of the depth-t vertices plus the ghost (last slot), as canonical
/// block labels (first occurrence order).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BoundaryPartition {
    pub labels: Vec<usize>,
}

impl BoundaryPartition {
    /// `l` boundary vertices, all singletons, ghost alone.
    pub fn singletons(l: usize) -> Self {
        BoundaryPartition {
            labels: (0..=l).collect(),
        }
    }

    /// All boundary vertices in one block, joined with the ghost if `with_ghost`.
    pub fn wired(l: usize, with_ghost: bool) -> Self {
        let mut labels = vec![0; l + 1];
        if !with_ghost {
            labels[l] = 1;
        }
        BoundaryPartition { labels }.canonical()
    }

    pub fn from_labels(labels: Vec<usize>) -> Self {
        BoundaryPartition { labels }.canonical()
    }

    fn canonical(self) -> Self {
        let mut map = BTreeMap::new();
        let labels = self
            .labels
            .iter()
            .map(|x| {
                let next = map.len();
                *map.entry(*x).or_insert(next)
            })
            .collect();
        BoundaryPartition { labels }
    }

    /// Number of boundary vertices (the ghost excluded).
    pub fn boundary_len(&self) -> usize {
        self.labels.len() - 1
    }

    /// Indicator of the boundary edges K(∂T) then K*(∂T): bit k set when the
    /// k-th pair of [`boundary_pairs`] lies in one block.
    pub fn indicator(&self) -> u64 {
        boundary_pairs(self.boundary_len())
            .iter()
            .enumerate()
            .filter(|(_, &(i, j))| self.labels[i] == self.labels[j])
            .fold(0, |acc, (k, _)| acc | 1 << k)
    }

    pub fn from_indicator(l: usize, bits: u64) -> Self {
        let mut uf = UnionFind::new(l + 1);
        for (k, &(i, j)) in boundary_pairs(l).iter().enumerate() {
            if bits >> k & 1 == 1 {
                uf.union(i, j);
            }
        }
        BoundaryPartition::from_labels((0..=l).map(|v| uf.find(v)).collect())
    }

    /// Every block of `self` lies inside a block of `other`.
    pub fn refines(&self, other: &Self) -> bool {
        let (a, b) = (self.indicator(), other.indicator());
        a & !b == 0
    }

    /// All partitions of l + 1 elements, ordered lexicographically by indicator
    /// (first pair most significant).
    pub fn all(l: usize) -> Vec<Self> {
        fn rec(k: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if k == n {
                out.push(cur.clone());
                return;
            }
            let top = cur.iter().copied().max().map_or(0, |m| m + 1);
            for label in 0..=top {
                cur.push(label);
                rec(k + 1, n, cur, out);
                cur.pop();
            }
        }
        let mut raw = Vec::new();
        rec(0, l + 1, &mut Vec::new(), &mut raw);
        let pairs = boundary_pairs(l).len();
        let mut out: Vec<Self> = raw
            .into_iter()
            .map(|labels| BoundaryPartition { labels })
            .collect();
        out.sort_by_key(|c| {
            let x = c.indicator();
            (0..pairs).map(|k| x >> k & 1).collect::<Vec<_>>()
        });
        out
    }
}

/// (i, j) pairs among l boundary vertices, then (i, ghost) with ghost = l.
pub fn boundary_pairs(l: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(l * (l + 1) / 2);
    for i in 0..l {
        for j in i + 1..l {
            out.push((i, j));
        }
    }
    out.extend((0..l).map(|i| (i, l)));
    out
}

/// The ghosted ball T*_d(t): base edge k ends at tree vertex k + 1, ghost edge of v is m + v.
pub struct GhostBall {
    pub index: TreeIndex,
    pub gg: GhostGraph,
}

impl GhostBall {
    pub fn new(d: usize, t: usize) -> Result<Self> {
        let index = TreeIndex::new(d, t)?;
        let gg = GhostGraph::new(index.graph());
        Ok(GhostBall { index, gg })
    }

    pub fn boundary(&self) -> std::ops::Range<usize> {
        self.index.leaves()
    }

    fn ghost(&self) -> usize {
        self.gg.ghost()
    }

    /// Vertex of G* for boundary slot k (the ghost for k = l).
    fn slot_vertex(&self, k: usize) -> usize {
        let leaves = self.boundary();
        if k == leaves.len() {
            self.ghost()
        } else {
            leaves.start + k
        }
    }

    /// Depth of the deeper endpoint of an edge of G*; ghost edges take the vertex depth.
    fn edge_depth(&self, e: usize) -> usize {
        if self.gg.is_ghost_edge(e) {
            self.index.vertex_depth(e - self.gg.n_base_edges())
        } else {
            self.index.vertex_depth(e + 1)
        }
    }

    fn merge_pairs(&self, c: &BoundaryPartition) -> Vec<(usize, usize)> {
        let l = c.boundary_len();
        (0..=l)
            .flat_map(|i| (i + 1..=l).map(move |j| (i, j)))
            .filter(|&(i, j)| c.labels[i] == c.labels[j])
            .map(|(i, j)| (self.slot_vertex(i), self.slot_vertex(j)))
            .collect()
    }

    fn union_mask(&self, uf: &mut UnionFind, mask: u64, keep: impl Fn(usize) -> bool) -> usize {
        let mut merged = 0;
        let mut m = mask;
        while m != 0 {
            let e = m.trailing_zeros() as usize;
            m &= m - 1;
            if keep(e) {
                let (u, v) = self.gg.endpoints(e);
                merged += usize::from(uf.union(u, v));
            }
        }
        merged
    }

    /// Calls `f(mask, log_weight)` for every bond configuration of T*(t) under
    /// phi_C: weight prod_open (e^{beta*_e} - 1) q^{#components after wiring C}.
    fn for_each_config(
        &self,
        c: &BoundaryPartition,
        p: &Params<f64>,
        mut f: impl FnMut(u64, f64, &mut UnionFind),
    ) -> Result<()> {
        if c.boundary_len() != self.boundary().len() {
            return Err(Error::InvalidParams(format!(
                "partition of {} boundary vertices, ball has {}",
                c.boundary_len(),
                self.boundary().len()
            )));
        }
        let m = self.gg.n_base_edges();
        // Ghost bonds never open at B = 0.
        let bits = if p.field > 0.0 { self.gg.n_edges() } else { m };
        check_cap("partition measure", 1u128 << bits.min(127))?;
        let (lb, lg) = (log_em1(p.beta), log_em1(p.field));
        let lq = (p.q as f64).ln();
        let merges = self.merge_pairs(c);
        let nv = self.gg.n() + 1;
        let mut uf = UnionFind::new(nv);
        for mask in 0..1u64 << bits {
            let base = (mask & ((1 << m) - 1)).count_ones() as f64;
            let ghost = (mask >> m).count_ones() as f64;
            let mut lw = 0.0;
            if base > 0.0 {
                lw += base * lb;
            }
            if ghost > 0.0 {
                lw += ghost * lg;
            }
            if lw == f64::NEG_INFINITY {
                continue;
            }
            uf.reset();
            let mut comps = nv - self.union_mask(&mut uf, mask, |_| true);
            for &(u, v) in &merges {
                comps -= usize::from(uf.union(u, v));
            }
            f(mask, lw + comps as f64 * lq, &mut uf);
        }
        Ok(())
    }
}

/// Law of the partition of ∂T(t) ∪ {v*} induced on T*(t+1) under phi_C, where
/// C partitions ∂T(t+1) ∪ {v*} and connections use only bonds outside T*(t)
/// together with the wiring of C. Keyed by indicator.
pub fn induced_boundary_law(
    t: usize,
    d: usize,
    outer: &BoundaryPartition,
    p: &Params<f64>,
) -> Result<BTreeMap<u64, f64>> {
    let ball = GhostBall::new(d, t + 1)?;
    let inner = ball.index.level(t);
    let l = inner.len();
    let merges = ball.merge_pairs(outer);
    let nv = ball.gg.n() + 1;
    let mut acc: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    let mut uf2 = UnionFind::new(nv);
    ball.for_each_config(outer, p, |mask, lw, _| {
        uf2.reset();
        ball.union_mask(&mut uf2, mask, |e| ball.edge_depth(e) > t);
        for &(u, v) in &merges {
            uf2.union(u, v);
        }
        let slot = |k: usize| {
            if k == l {
                ball.ghost()
            } else {
                inner.start + k
            }
        };
        let key = boundary_pairs(l)
            .iter()
            .enumerate()
            .filter(|(_, &(i, j))| uf2.same(slot(i), slot(j)))
            .fold(0u64, |a, (k, _)| a | 1 << k);
        acc.entry(key).or_default().push(lw);
    })?;
    let logs: BTreeMap<u64, f64> = acc.into_iter().map(|(k, v)| (k, log_sum_exp(&v))).collect();
    let z = log_sum_exp(&logs.values().copied().collect::<Vec<_>>());
    Ok(logs.into_iter().map(|(k, v)| (k, (v - z).exp())).collect())
}

/// Level-t partition laws induced from the free and the wired measures on
/// T-hat*(t+1), on a common list of states. At B = 0 the wiring skips the ghost.
pub fn free_wired_boundary_laws(
    t: usize,
    d: usize,
    p: &Params<f64>,
) -> Result<(Vec<u64>, Vec<f64>, Vec<f64>)> {
    let l = TreeIndex::new(d, t + 1)?.leaves().len();
    let free = induced_boundary_law(t, d, &BoundaryPartition::singletons(l), p)?;
    let wired = induced_boundary_law(t, d, &BoundaryPartition::wired(l, p.field > 0.0), p)?;
    let mut states: Vec<u64> = free.keys().chain(wired.keys()).copied().collect();
    states.sort_unstable();
    states.dedup();
    let a = states
        .iter()
        .map(|k| free.get(k).copied().unwrap_or(0.0))
        .collect();
    let b = states
        .iter()
        .map(|k| wired.get(k).copied().unwrap_or(0.0))
        .collect();
    Ok((states, a, b))
}

/// F_s on T-hat*(s+1): the number of pairs (i, j), i at depth s and j a tree
/// neighbor of i, joined by open bonds of T*(s+1) plus the open boundary edges
/// `boundary` (indicator over [`boundary_pairs`] of ∂T(s+1)).
pub fn gf(s: usize, d: usize, bonds: u64, boundary: u64) -> Result<usize> {
    let ball = GhostBall::new(d, s + 1)?;
    let mut uf = UnionFind::new(ball.gg.n() + 1);
    ball.union_mask(&mut uf, bonds, |_| true);
    let l = ball.boundary().len();
    for (k, &(i, j)) in boundary_pairs(l).iter().enumerate() {
        if boundary >> k & 1 == 1 {
            uf.union(ball.slot_vertex(i), ball.slot_vertex(j));
        }
    }
    Ok(count_gf(&ball, s, &mut uf))
}

fn count_gf(ball: &GhostBall, s: usize, uf: &mut UnionFind) -> usize {
    let g = ball.gg.base();
    ball.index
        .level(s)
        .map(|i| g.neighbors(i).iter().filter(|&&j| uf.same(i, j)).count())
        .sum()
}

/// Expectation of F_s under phi_C^{beta,B,s+1}.
pub fn gf_expectation(s: usize, d: usize, c: &BoundaryPartition, p: &Params<f64>) -> Result<f64> {
    let ball = GhostBall::new(d, s + 1)?;
    let mut lws = Vec::new();
    let mut vals = Vec::new();
    ball.for_each_config(c, p, |_, lw, uf| {
        lws.push(lw);
        vals.push(count_gf(&ball, s, uf) as f64);
    })?;
    let z = log_sum_exp(&lws);
    Ok(lws
        .iter()
        .zip(&vals)
        .map(|(&w, &v)| (w - z).exp() * v)
        .sum())
}

/// Smallest E_C'[F] - E_C[F] over strictly comparable pairs C < C' of
/// partitions of ∂T(s+1) ∪ {v*}.
pub fn gf_separation(s: usize, d: usize, p: &Params<f64>) -> Result<f64> {
    let l = TreeIndex::new(d, s + 1)?.leaves().len();
    let parts = BoundaryPartition::all(l);
    let vals = parts
        .iter()
        .map(|c| gf_expectation(s, d, c, p))
        .collect::<Result<Vec<_>>>()?;
    let mut gap = f64::INFINITY;
    for (a, ca) in parts.iter().enumerate() {
        for (b, cb) in parts.iter().enumerate() {
            if a != b && ca.refines(cb) {
                gap = gap.min(vals[b] - vals[a]);
            }
        }
    }
    Ok(gap)
}

#[derive(Clone, Copy, Debug)]
pub struct DecayProbe {
    pub s: usize,
    pub probability: f64,
    /// q^2 e^{-2Bs}.
    pub bound: f64,
}

/// Two depth-t vertices u, v (the first two) and their first depth-(t+s)
/// descendants u', v'; C joins u' and v' and leaves the ghost alone.
fn decay_setup(
    d: usize,
    t: usize,
    s: usize,
) -> Result<(GhostBall, usize, usize, BoundaryPartition)> {
    if t == 0 || s == 0 {
        return Err(Error::InvalidParams("decay probe needs t, s >= 1".into()));
    }
    let ball = GhostBall::new(d, t + s)?;
    let u = ball.index.level(t).start;
    let v = u + 1;
    let first_leaf = |mut x: usize| {
        while ball.index.vertex_depth(x) < t + s {
            x = ball.index.children(x).start;
        }
        x
    };
    let leaves = ball.boundary();
    let (lu, lv) = (first_leaf(u) - leaves.start, first_leaf(v) - leaves.start);
    let mut labels: Vec<usize> = (0..=leaves.len()).collect();
    labels[lv] = labels[lu];
    Ok((ball, u, v, BoundaryPartition::from_labels(labels)))
}

/// Probability that u's cluster, using only bonds of T-hat*(t+s) outside T*(t),
/// contains v but not the ghost. Full enumeration over T*(t+s).
pub fn ghost_decay_probe_full(d: usize, t: usize, s: usize, p: &Params<f64>) -> Result<DecayProbe> {
    let (ball, u, v, c) = decay_setup(d, t, s)?;
    let merges = ball.merge_pairs(&c);
    let ghost = ball.ghost();
    let mut uf2 = UnionFind::new(ball.gg.n() + 1);
    let (mut all, mut hit) = (Vec::new(), Vec::new());
    ball.for_each_config(&c, p, |mask, lw, _| {
        all.push(lw);
        uf2.reset();
        ball.union_mask(&mut uf2, mask, |e| ball.edge_depth(e) > t);
        for &(a, b) in &merges {
            uf2.union(a, b);
        }
        if uf2.same(u, v) && !uf2.same(u, ghost) {
            hit.push(lw);
        }
    })?;
    Ok(DecayProbe {
        s,
        probability: (log_sum_exp(&hit) - log_sum_exp(&all)).exp(),
        bound: decay_bound(p, s),
    })
}

fn decay_bound(p: &Params<f64>, s: usize) -> f64 {
    (p.q * p.q) as f64 * (-2.0 * p.field * s as f64).exp()
}

/// Same probability with the ghost bonds summed out per cluster, enumerating
/// base bonds only. A cluster K carries weight q + e^{B|K|} - 1, and all ghost
/// bonds on S ⊆ K are closed with probability (q + e^{B(|K|-|S|)} - 1)/(q + e^{B|K|} - 1).
pub fn ghost_decay_probe(d: usize, t: usize, s: usize, p: &Params<f64>) -> Result<DecayProbe> {
    let (ball, u, v, c) = decay_setup(d, t, s)?;
    let m = ball.gg.n_base_edges();
    check_cap("decay probe", 1u128 << m.min(127))?;
    let n = ball.gg.n();
    let merges: Vec<(usize, usize)> = ball
        .merge_pairs(&c)
        .into_iter()
        .filter(|&(a, b)| a < n && b < n)
        .collect();
    let lb = log_em1(p.beta);
    let qf = p.q as f64;
    let cluster_lw = |k: usize| (qf - 1.0 + (p.field * k as f64).exp()).ln();
    let (mut uf, mut uf2) = (UnionFind::new(n), UnionFind::new(n));
    let mut sizes = vec![0usize; n];
    let (mut all, mut hit) = (Vec::new(), Vec::new());
    for mask in 0..1u64 << m {
        let open = mask.count_ones() as f64;
        let mut lw = if open > 0.0 { open * lb } else { 0.0 };
        if lw == f64::NEG_INFINITY {
            continue;
        }
        uf.reset();
        uf2.reset();
        for e in 0..m {
            if mask >> e & 1 == 1 {
                uf.union(e + 1, ball.index.parent(e + 1).unwrap());
                if ball.index.vertex_depth(e + 1) > t {
                    uf2.union(e + 1, ball.index.parent(e + 1).unwrap());
                }
            }
        }
        for &(a, b) in &merges {
            uf.union(a, b);
            uf2.union(a, b);
        }
        sizes.iter_mut().for_each(|x| *x = 0);
        for x in 0..n {
            sizes[uf.find(x)] += 1;
        }
        lw += sizes
            .iter()
            .filter(|&&k| k > 0)
            .map(|&k| cluster_lw(k))
            .sum::<f64>();
        all.push(lw);
        if uf2.same(u, v) {
            let k = sizes[uf.find(u)];
            let sdeep = (0..n)
                .filter(|&x| ball.index.vertex_depth(x) > t && uf2.same(x, u))
                .count();
            let closed = (qf - 1.0 + (p.field * (k - sdeep) as f64).exp()).ln() - cluster_lw(k);
            hit.push(lw + closed);
        }
    }
    Ok(DecayProbe {
        s,
        probability: (log_sum_exp(&hit) - log_sum_exp(&all)).exp(),
        bound: decay_bound(p, s),
    })
}
