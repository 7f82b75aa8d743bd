//! Open-cluster statistics and the permutation-based recoloring of clusters.

use crate::bethe::percolation_factor;
use crate::dsu::UnionFind;
use crate::graph::{BondConfig, GhostGraph};
use crate::params::Params;
use crate::tree::tree_size;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::BTreeMap;

/// N(r): number of open clusters of size r, from base bonds only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterHistogram {
    pub n: usize,
    pub counts: BTreeMap<usize, usize>,
}

impl ClusterHistogram {
    /// Fraction of vertices in clusters of size at least `r`.
    pub fn mass_at_least(&self, r: usize) -> f64 {
        let mass: usize = self.counts.range(r..).map(|(&s, &c)| s * c).sum();
        mass as f64 / self.n as f64
    }

    pub fn total_mass(&self) -> usize {
        self.counts.iter().map(|(&s, &c)| s * c).sum()
    }
}

pub fn cluster_histogram(bonds: &BondConfig, gg: &GhostGraph) -> ClusterHistogram {
    let (sizes, _) = base_clusters(bonds, gg);
    let mut counts = BTreeMap::new();
    for &s in sizes.iter().filter(|&&s| s > 0) {
        *counts.entry(s).or_insert(0) += 1;
    }
    ClusterHistogram { n: gg.n(), counts }
}

/// Size of each root's cluster (0 off roots) and the root of every vertex.
fn base_clusters(bonds: &BondConfig, gg: &GhostGraph) -> (Vec<usize>, Vec<usize>) {
    let n = gg.n();
    let mut uf = UnionFind::new(n);
    for e in (0..gg.n_base_edges()).filter(|&e| bonds.get(e)) {
        let (u, v) = gg.endpoints(e);
        uf.union(u, v);
    }
    let roots: Vec<usize> = (0..n).map(|v| uf.find(v)).collect();
    let mut sizes = vec![0; n];
    for &r in &roots {
        sizes[r] += 1;
    }
    (sizes, roots)
}

/// Union bound on P(|C(o)| >= r) for the free tree RCM: a cluster that large
/// reaches depth t, where t is least with |T_d(t)| >= r, along one of
/// d (d-1)^{t-1} paths, each open with probability pi^t.
pub fn free_cluster_tail_bound(p: &Params<f64>, r: usize) -> f64 {
    if r <= 1 {
        return 1.0;
    }
    let (pi, _) = percolation_factor(p);
    let mut t = 1;
    while tree_size(p.d, t).is_some_and(|s| s < r) {
        t += 1;
    }
    let paths = p.d as f64 * ((p.d - 1) as f64).powi(t as i32 - 1);
    (paths * pi.powi(t as i32)).min(1.0)
}

/// Colors of M items: multinomial counts, a uniform split into B_k of the
/// minimal size plus remainders, and a uniform permutation gamma; item i gets
/// color k when i is in B_k or in the remainder of gamma(k).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimUnif {
    pub colors: Vec<u8>,
    /// Some(k) for items in B_k.
    pub core: Vec<Option<u8>>,
    /// Some(j) for items in the remainder of j.
    pub remainder: Vec<Option<u8>>,
    pub gamma: Vec<u8>,
}

impl SimUnif {
    /// Items whose color depends on gamma.
    pub fn exposed(&self) -> usize {
        self.remainder.iter().filter(|r| r.is_some()).count()
    }

    /// Colors under another permutation, with the split unchanged.
    pub fn recolor(&self, gamma: &[u8]) -> Vec<u8> {
        self.core
            .iter()
            .zip(&self.remainder)
            .map(|(c, r)| match (c, r) {
                (Some(k), _) => *k,
                (None, Some(j)) => gamma.iter().position(|g| g == j).unwrap() as u8,
                (None, None) => unreachable!("every item is in a set"),
            })
            .collect()
    }
}

pub fn sim_unif_colors<R: Rng>(m: usize, q: usize, rng: &mut R) -> SimUnif {
    let mut counts = vec![0usize; q];
    for _ in 0..m {
        counts[rng.gen_range(0..q)] += 1;
    }
    let star = counts.iter().copied().min().unwrap_or(0);
    let mut items: Vec<usize> = (0..m).collect();
    items.shuffle(rng);
    let mut core = vec![None; m];
    let mut remainder = vec![None; m];
    let mut it = items.into_iter();
    for k in 0..q {
        for i in it.by_ref().take(star) {
            core[i] = Some(k as u8);
        }
    }
    for (j, &c) in counts.iter().enumerate() {
        for i in it.by_ref().take(c - star) {
            remainder[i] = Some(j as u8);
        }
    }
    let mut gamma: Vec<u8> = (0..q as u8).collect();
    gamma.shuffle(rng);
    let mut out = SimUnif {
        colors: Vec::new(),
        core,
        remainder,
        gamma,
    };
    out.colors = out.recolor(&out.gamma);
    out
}

/// Spins from recoloring the base open clusters (B = 0), each size class by
/// [`sim_unif_colors`], and the number of vertices whose color depends on the
/// permutations.
#[derive(Clone, Debug)]
pub struct SimUnifColoring {
    pub colors: Vec<u8>,
    pub exposed_sites: usize,
}

pub fn sim_unif_coloring<R: Rng>(
    bonds: &BondConfig,
    gg: &GhostGraph,
    q: usize,
    rng: &mut R,
) -> SimUnifColoring {
    let (sizes, roots) = base_clusters(bonds, gg);
    let mut by_size: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (r, &s) in sizes.iter().enumerate().filter(|(_, &s)| s > 0) {
        by_size.entry(s).or_default().push(r);
    }
    let mut root_color = vec![0u8; gg.n()];
    let mut exposed_sites = 0;
    for (&size, clusters) in &by_size {
        let draw = sim_unif_colors(clusters.len(), q, rng);
        exposed_sites += size * draw.exposed();
        for (&r, &c) in clusters.iter().zip(&draw.colors) {
            root_color[r] = c;
        }
    }
    SimUnifColoring {
        colors: roots.iter().map(|&r| root_color[r]).collect(),
        exposed_sites,
    }
}

/// Two-mode summary of a scalar series.
#[derive(Clone, Debug, PartialEq)]
pub struct Bimodality {
    /// Split point maximizing the between-group variance.
    pub threshold: f64,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
    /// Gap between group means over the pooled within-group sd.
    pub separation: f64,
    pub dip: f64,
    pub histogram: Vec<(f64, usize)>,
}

pub fn bimodality(values: &[f64], bins: usize) -> Option<Bimodality> {
    if values.len() < 4 {
        return None;
    }
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let prefix: Vec<f64> = std::iter::once(0.0)
        .chain(xs.iter().scan(0.0, |s, &x| {
            *s += x;
            Some(*s)
        }))
        .collect();
    let total = prefix[n];
    let mut best = (f64::NEG_INFINITY, 1);
    for k in 1..n {
        if xs[k] == xs[k - 1] {
            continue;
        }
        let (m0, m1) = (prefix[k] / k as f64, (total - prefix[k]) / (n - k) as f64);
        let between = k as f64 * (n - k) as f64 * (m1 - m0).powi(2);
        if between > best.0 {
            best = (between, k);
        }
    }
    if best.0 == f64::NEG_INFINITY {
        return None;
    }
    let k = best.1;
    let threshold = 0.5 * (xs[k - 1] + xs[k]);
    let low: Vec<f64> = values.iter().copied().filter(|&x| x < threshold).collect();
    let high: Vec<f64> = values.iter().copied().filter(|&x| x >= threshold).collect();
    let stats = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>())
    };
    let ((m0, s0), (m1, s1)) = (stats(&low), stats(&high));
    let pooled = ((s0 + s1) / (n as f64 - 2.0).max(1.0)).sqrt();
    let separation = if pooled > 0.0 {
        (m1 - m0) / pooled
    } else {
        f64::INFINITY
    };
    Some(Bimodality {
        threshold,
        low,
        high,
        separation,
        dip: dip_statistic(&xs),
        histogram: histogram(&xs, bins),
    })
}

fn histogram(sorted: &[f64], bins: usize) -> Vec<(f64, usize)> {
    let bins = bins.max(1);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let mut counts = vec![0; bins];
    for &x in sorted {
        counts[(((x - lo) / width) as usize).min(bins - 1)] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + (i as f64 + 0.5) * width, c))
        .collect()
}

/// Approximate dip: over candidate modes, the sup distance between the
/// empirical CDF and its convex minorant to the left and concave majorant to
/// the right, halved; the minimum over candidates is returned.
pub fn dip_statistic(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n < 3 || sorted[0] == sorted[n - 1] {
        return 0.0;
    }
    let pts: Vec<(f64, f64)> = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (x, (i + 1) as f64 / n as f64))
        .collect();
    let step = (n / 200).max(1);
    (0..n)
        .step_by(step)
        .map(|m| {
            let left = hull_gap(&pts[..=m], false, 1.0 / n as f64);
            let right = hull_gap(&pts[m..], true, 1.0 / n as f64);
            0.5 * left.max(right)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Max vertical gap between the CDF (values y and y - jump at each point)
/// and the lower (convex) or upper (concave) hull of the points.
fn hull_gap(pts: &[(f64, f64)], upper: bool, jump: f64) -> f64 {
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in pts {
        while let [.., a, b] = hull[..] {
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if (upper && cross >= 0.0) || (!upper && cross <= 0.0) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut j = 0;
    let mut gap: f64 = 0.0;
    for &(x, y) in pts {
        while j + 1 < hull.len() && hull[j + 1].0 <= x {
            j += 1;
        }
        let h = match hull.get(j + 1) {
            Some(&b) if b.0 > hull[j].0 => {
                let a = hull[j];
                a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
            }
            _ => hull[j].1,
        };
        gap = gap.max((y - h).abs()).max((y - jump - h).abs());
    }
    gap
}
