//! Tree-ball laws by enumeration, for comparison with message passing.

use super::enumerate::{enumerate_potts_weighted, pow_sat, ENUM_CAP};
use crate::error::{Error, Result};
use crate::law::NeighborhoodLaw;
use crate::params::Params;
use crate::scalar::log_sum_exp;
use crate::tree::TreeIndex;
use crate::treeexact::Boundary;

/// Boundary log-weight on a depth-t vertex with `kids` missing children, each
/// summed explicitly over its color.
fn boundary_weight(boundary: &Boundary, p: &Params<f64>, kids: usize) -> Result<Vec<f64>> {
    boundary.validate(p.q, p.field == 0.0)?;
    Ok(match *boundary {
        Boundary::Free => vec![0.0; p.q],
        Boundary::Color(k) => (0..p.q)
            .map(|s| if s == k { 0.0 } else { f64::NEG_INFINITY })
            .collect(),
        _ => {
            let nu = boundary.fixed_point(p).expect("fixed-point boundary");
            (0..p.q)
                .map(|s| {
                    let one: f64 = (0..p.q)
                        .map(|tau| nu[tau] * if tau == s { p.beta.exp() } else { 1.0 })
                        .sum();
                    kids as f64 * one.ln()
                })
                .collect()
        }
    })
}

/// Law of the spins on T_d(t_report) under the Potts measure on T_d(t_total)
/// with the given boundary, by exhaustive enumeration. When q^{|T(t_total)|}
/// exceeds the cap, deepest levels are summed out vertex by vertex first.
pub fn tree_law_enumerated(
    t_report: usize,
    t_total: usize,
    boundary: &Boundary,
    p: &Params<f64>,
) -> Result<NeighborhoodLaw<f64>> {
    if t_report > t_total {
        return Err(Error::InvalidParams(
            "report depth exceeds total depth".into(),
        ));
    }
    let full = TreeIndex::new(p.d, t_total)?;
    let field = |s: usize| if s == 0 { p.field } else { 0.0 };
    let mut weights: Vec<Vec<f64>> = (0..full.len())
        .map(|v| {
            let mut w: Vec<f64> = (0..p.q).map(field).collect();
            if full.vertex_depth(v) == t_total {
                let kids = if v == 0 { p.d } else { p.d - 1 };
                let b = boundary_weight(boundary, p, kids)?;
                w.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            }
            Ok(w)
        })
        .collect::<Result<_>>()?;

    let mut depth = t_total;
    while depth > t_report && pow_sat(p.q, TreeIndex::new(p.d, depth)?.len()) > ENUM_CAP {
        // Sum each deepest vertex into its parent.
        for v in full.level(depth) {
            let parent = full.parent(v).unwrap();
            for s in 0..p.q {
                let terms: Vec<f64> = (0..p.q)
                    .map(|tau| weights[v][tau] + if tau == s { p.beta } else { 0.0 })
                    .collect();
                weights[parent][s] += log_sum_exp(&terms);
            }
        }
        depth -= 1;
    }
    let index = TreeIndex::new(p.d, depth)?;
    let dist = enumerate_potts_weighted(&index.graph(), p.q, p.beta, &weights[..index.len()])?;
    NeighborhoodLaw::new(p.d, depth, p.q, dist.probs)?.marginal(t_report)
}
