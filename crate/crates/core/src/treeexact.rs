//! Exact Potts laws on finite balls of the d-regular tree.
//!
//! Every vertex at a given depth sees the same subtree, so upward messages are
//! one vector per level. Boundary conditions act as a weight on the leaf spins:
//! uniform (free), a Dirac mass (color k), or the weight sent up by an infinite
//! subtree whose root has the Bethe fixed-point law.

use crate::bethe::fixed_points;
use crate::error::{Error, Result};
use crate::law::{table_size, NeighborhoodLaw, LAW_TABLE_CAP};
use crate::params::{Params, SymmetricMeasure};
use crate::scalar::{log_sum_exp, Real};
use crate::tree::TreeIndex;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Free,
    /// Leaf spins pinned to a 0-based color.
    Color(usize),
    FixedPointFree,
    FixedPointWired,
    /// nu_1 with its favored color moved to `k`; requires B = 0 unless k = 0.
    FixedPointColor(usize),
}

impl Boundary {
    pub fn validate(&self, q: usize, field_is_zero: bool) -> Result<()> {
        match *self {
            Boundary::Color(k) | Boundary::FixedPointColor(k) if k >= q => Err(
                Error::InvalidParams(format!("boundary color {k} >= q = {q}")),
            ),
            Boundary::FixedPointColor(k) if k != 0 && !field_is_zero => Err(Error::InvalidParams(
                "recolored fixed point needs B = 0".into(),
            )),
            _ => Ok(()),
        }
    }

    /// The single-site law attached below the leaves, for fixed-point kinds.
    pub fn fixed_point<T: Real>(&self, p: &Params<T>) -> Option<Vec<T>> {
        let (nf, n1) = match self {
            Boundary::FixedPointFree | Boundary::FixedPointWired | Boundary::FixedPointColor(_) => {
                fixed_points(p)
            }
            _ => return None,
        };
        Some(match *self {
            Boundary::FixedPointFree => nf.to_vec(),
            Boundary::FixedPointWired => n1.to_vec(),
            Boundary::FixedPointColor(k) => {
                let mut v = n1.to_vec();
                v.swap(0, k);
                v
            }
            _ => unreachable!(),
        })
    }
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::Free => write!(f, "free"),
            Boundary::Color(k) => write!(f, "color{}", k + 1),
            Boundary::FixedPointFree => write!(f, "fixedpoint_free"),
            Boundary::FixedPointWired => write!(f, "fixedpoint_wired"),
            Boundary::FixedPointColor(k) => write!(f, "fixedpoint_color{}", k + 1),
        }
    }
}

fn log_field<T: Real>(p: &Params<T>, color: usize) -> T {
    if color == 0 {
        p.field
    } else {
        T::zero()
    }
}

/// log sum_tau e^{beta delta(sigma, tau)} e^{m(tau)} for each sigma.
fn log_edge_transfer<T: Real>(m: &[T], p: &Params<T>) -> Vec<T> {
    let total = log_sum_exp(m);
    if p.beta == T::zero() {
        return vec![total; m.len()];
    }
    // e^total + (e^beta - 1) e^{m(sigma)}
    let log_em1 = p.beta + (-(-p.beta).exp_m1()).ln();
    m.iter()
        .map(|&ms| total.log_add_exp(ms + log_em1))
        .collect()
}

/// Extra log-weight on a depth-t vertex with `kids` children in the infinite tree.
fn leaf_log_weight<T: Real>(boundary: &Boundary, p: &Params<T>, kids: usize) -> Result<Vec<T>> {
    boundary.validate(p.q, p.field == T::zero())?;
    Ok(match *boundary {
        Boundary::Free => vec![T::zero(); p.q],
        Boundary::Color(k) => (0..p.q)
            .map(|s| if s == k { T::zero() } else { T::neg_infinity() })
            .collect(),
        _ => {
            let nu = boundary.fixed_point(p).expect("fixed-point kind");
            let em = (-p.beta).exp();
            // (e^beta - 1) nu + 1 = e^beta (nu + e^{-beta}(1 - nu))
            nu.iter()
                .map(|&x| T::count(kids) * (p.beta + (x + em * (T::one() - x)).ln()))
                .collect()
        }
    })
}

fn normalize_log<T: Real>(m: &mut [T]) {
    let z = log_sum_exp(m);
    m.iter_mut().for_each(|x| *x = *x - z);
}

fn exp_normalized<T: Real>(m: &[T]) -> Vec<T> {
    let z = log_sum_exp(m);
    m.iter().map(|&x| (x - z).exp()).collect()
}

/// Upward messages on T_d(t): `levels[k]` (k = 1..=t) is the law of a depth-k spin
/// under its own subtree alone, in log form (normalized).
#[derive(Clone, Debug)]
pub struct TreeMessages<T> {
    pub t: usize,
    pub levels: Vec<Vec<T>>,
    pub params: Params<T>,
}

impl<T: Real> TreeMessages<T> {
    pub fn message(&self, depth: usize) -> Vec<T> {
        exp_normalized(&self.levels[depth])
    }
}

pub fn potts_tree_messages<T: Real>(
    t: usize,
    boundary: &Boundary,
    p: &Params<T>,
) -> Result<TreeMessages<T>> {
    if t == 0 {
        return Err(Error::InvalidParams("messages need depth t >= 1".into()));
    }
    p.validate()?;
    let leaf = leaf_log_weight(boundary, p, p.d - 1)?;
    let mut levels = vec![Vec::new(); t + 1];
    let mut m: Vec<T> = (0..p.q).map(|s| log_field(p, s) + leaf[s]).collect();
    normalize_log(&mut m);
    levels[t] = m;
    for k in (1..t).rev() {
        let up = log_edge_transfer(&levels[k + 1], p);
        let mut m: Vec<T> = (0..p.q)
            .map(|s| log_field(p, s) + T::count(p.d - 1) * up[s])
            .collect();
        normalize_log(&mut m);
        levels[k] = m;
    }
    Ok(TreeMessages {
        t,
        levels,
        params: *p,
    })
}

/// Law of the root spin on T_d(t) with the given boundary.
pub fn root_marginal<T: Real>(t: usize, boundary: &Boundary, p: &Params<T>) -> Result<Vec<T>> {
    if t == 0 {
        let leaf = leaf_log_weight(boundary, p, p.d)?;
        let m: Vec<T> = (0..p.q).map(|s| log_field(p, s) + leaf[s]).collect();
        return Ok(exp_normalized(&m));
    }
    let msgs = potts_tree_messages(t, boundary, p)?;
    let up = log_edge_transfer(&msgs.levels[1], p);
    let m: Vec<T> = (0..p.q)
        .map(|s| log_field(p, s) + T::count(p.d) * up[s])
        .collect();
    Ok(exp_normalized(&m))
}

/// Joint law of (parent, child) spins for an edge between depths k-1 and k,
/// for every k = 1..=t. Entry `[k-1][a * q + b]` is P(sigma_parent = a, sigma_child = b).
pub fn edge_pair_marginals<T: Real>(
    t: usize,
    boundary: &Boundary,
    p: &Params<T>,
) -> Result<Vec<Vec<T>>> {
    let msgs = potts_tree_messages(t, boundary, p)?;
    let q = p.q;
    let mut out = Vec::with_capacity(t);
    // down[s]: log weight of everything outside the child's subtree, given the parent spin s.
    let mut down_into_parent: Option<Vec<T>> = None;
    for k in 1..=t {
        let up_k = log_edge_transfer(&msgs.levels[k], p);
        let siblings = if k == 1 { p.d - 1 } else { p.d - 2 };
        let above = down_into_parent.as_ref().map(|d| log_edge_transfer(d, p));
        let down: Vec<T> = (0..q)
            .map(|s| {
                let mut w = log_field(p, s) + T::count(siblings) * up_k[s];
                if let Some(a) = &above {
                    w = w + a[s];
                }
                w
            })
            .collect();
        let mut joint = Vec::with_capacity(q * q);
        for a in 0..q {
            for b in 0..q {
                let bond = if a == b { p.beta } else { T::zero() };
                joint.push(down[a] + bond + msgs.levels[k][b]);
            }
        }
        out.push(exp_normalized(&joint));
        down_into_parent = Some(down);
    }
    Ok(out)
}

/// Joint law of the root and its first child.
pub fn pair_marginal<T: Real>(t: usize, boundary: &Boundary, p: &Params<T>) -> Result<Vec<T>> {
    Ok(edge_pair_marginals(t, boundary, p)?.swap_remove(0))
}

/// Exact law of the spins on T_d(t_report) under the Potts measure on T_d(t_total).
pub fn neighborhood_law<T: Real>(
    t_report: usize,
    t_total: usize,
    boundary: &Boundary,
    p: &Params<T>,
) -> Result<NeighborhoodLaw<T>> {
    if t_report > t_total {
        return Err(Error::InvalidParams(format!(
            "report depth {t_report} exceeds total depth {t_total}"
        )));
    }
    p.validate()?;
    let size = table_size(p.d, t_report, p.q, LAW_TABLE_CAP)?;
    let index = TreeIndex::new(p.d, t_report)?;
    let q = p.q;

    // Extra log-weight carried by each vertex at depth t_report.
    let frontier: Vec<Vec<T>> = if t_report == t_total {
        vec![
            leaf_log_weight(boundary, p, p.d)?,
            leaf_log_weight(boundary, p, p.d - 1)?,
        ]
    } else {
        let msgs = potts_tree_messages(t_total, boundary, p)?;
        let up = log_edge_transfer(&msgs.levels[t_report + 1], p);
        vec![
            up.iter().map(|&x| T::count(p.d) * x).collect(),
            up.iter().map(|&x| T::count(p.d - 1) * x).collect(),
        ]
    };
    let vertex_weight = |v: usize, s: usize| -> T {
        let mut w = log_field(p, s);
        if index.vertex_depth(v) == t_report {
            w = w + frontier[usize::from(v != 0)][s];
        }
        w
    };

    let n = index.len();
    let parents: Vec<Option<usize>> = (0..n).map(|v| index.parent(v)).collect();
    let mut logw = Vec::with_capacity(size);
    let mut colors = vec![0usize; n];
    let mut partial = vec![T::zero(); n + 1];
    fill(
        0,
        &mut colors,
        &mut partial,
        &mut logw,
        &parents,
        q,
        p.beta,
        &vertex_weight,
    );
    debug_assert_eq!(logw.len(), size);
    let probs = exp_normalized(&logw);
    NeighborhoodLaw::new(p.d, t_report, q, probs)
}

// Depth-first over vertices in canonical order, so patterns come out in index order.
#[allow(clippy::too_many_arguments)]
fn fill<T: Real, F: Fn(usize, usize) -> T>(
    v: usize,
    colors: &mut [usize],
    partial: &mut [T],
    out: &mut Vec<T>,
    parents: &[Option<usize>],
    q: usize,
    beta: T,
    weight: &F,
) {
    if v == colors.len() {
        out.push(partial[v]);
        return;
    }
    for s in 0..q {
        colors[v] = s;
        let mut w = partial[v] + weight(v, s);
        if let Some(u) = parents[v] {
            if colors[u] == s {
                w = w + beta;
            }
        }
        partial[v + 1] = w;
        fill(v + 1, colors, partial, out, parents, q, beta, weight);
    }
}

/// Infinite-volume wired reference: nu_1 boundary for B > 0, the balanced
/// mixture over recolored fixed points at B = 0.
pub fn wired_reference<T: Real>(t: usize, p: &Params<T>) -> Result<NeighborhoodLaw<T>> {
    if p.field > T::zero() {
        return neighborhood_law(t, t, &Boundary::FixedPointWired, p);
    }
    let laws = (0..p.q)
        .map(|k| neighborhood_law(t, t, &Boundary::FixedPointColor(k), p))
        .collect::<Result<Vec<_>>>()?;
    let w = T::one() / p.qf();
    let parts: Vec<(T, &NeighborhoodLaw<T>)> = laws.iter().map(|l| (w, l)).collect();
    NeighborhoodLaw::mixture(&parts)
}

/// Root law for a fixed point nu: proportional to ((e^beta - 1) nu + 1) nu.
pub fn mg_single<T: Real>(nu: &SymmetricMeasure<T>, p: &Params<T>) -> Vec<T> {
    let em1 = p.beta.exp_m1();
    let w: Vec<T> = nu
        .to_vec()
        .iter()
        .map(|&x| (em1 * x + T::one()) * x)
        .collect();
    let z = w.iter().fold(T::zero(), |a, &x| a + x);
    w.into_iter().map(|x| x / z).collect()
}

/// Edge law for a fixed point nu: proportional to e^{beta delta} nu(a) nu(b).
pub fn mg_pair<T: Real>(nu: &SymmetricMeasure<T>, p: &Params<T>) -> Vec<T> {
    let v = nu.to_vec();
    let eb = p.beta.exp();
    let mut w = Vec::with_capacity(p.q * p.q);
    for a in 0..p.q {
        for b in 0..p.q {
            w.push(if a == b { eb } else { T::one() } * v[a] * v[b]);
        }
    }
    let z = w.iter().fold(T::zero(), |a, &x| a + x);
    w.into_iter().map(|x| x / z).collect()
}

/// phi(i <-> j) = (mu(sigma_i = sigma_j) - 1/q)/(1 - 1/q)
pub fn connectivity_from_agreement<T: Real>(agree: T, q: usize) -> T {
    let inv = T::one() / T::count(q);
    (agree - inv) / (T::one() - inv)
}

fn fixed_point_boundary(phase: crate::bethe::Phase) -> Boundary {
    match phase {
        crate::bethe::Phase::Free => Boundary::FixedPointFree,
        crate::bethe::Phase::Wired => Boundary::FixedPointWired,
    }
}

/// Infinite-volume RCM probability of {i <-> j} for each edge of T_d(t), in edge order.
pub fn rcm_edge_connectivity<T: Real>(
    t: usize,
    phase: crate::bethe::Phase,
    p: &Params<T>,
) -> Result<Vec<T>> {
    let pairs = edge_pair_marginals(t, &fixed_point_boundary(phase), p)?;
    let index = TreeIndex::new(p.d, t)?;
    let per_depth: Vec<T> = pairs
        .iter()
        .map(|pm| {
            let agree = (0..p.q).fold(T::zero(), |a, s| a + pm[s * p.q + s]);
            connectivity_from_agreement(agree, p.q)
        })
        .collect();
    Ok((1..index.len())
        .map(|c| per_depth[index.vertex_depth(c) - 1])
        .collect())
}

/// Infinite-volume RCM probability that a vertex is joined to the ghost: b of its spin law.
pub fn rcm_ghost_connectivity<T: Real>(phase: crate::bethe::Phase, p: &Params<T>) -> Result<T> {
    let root = root_marginal(1, &fixed_point_boundary(phase), p)?;
    Ok(connectivity_from_agreement(root[0], p.q))
}
