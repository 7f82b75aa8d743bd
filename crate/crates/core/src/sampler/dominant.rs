//! Dominant color, conditioning on it at zero field, and its local proxy.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::graphgen::tree_ball_order;
use crate::oracle::{enumerate_potts, for_each_coloring};
use crate::params::Params;
use rand::Rng;
use std::collections::VecDeque;

pub fn color_counts(colors: &[u8], q: usize) -> Vec<usize> {
    let mut counts = vec![0; q];
    for &c in colors {
        counts[c as usize] += 1;
    }
    counts
}

/// Indices attaining the maximum of `values`.
fn maximizers<T: PartialOrd + Copy>(values: &[T]) -> Vec<usize> {
    let mut best = Vec::new();
    for (k, &x) in values.iter().enumerate() {
        match best.first().map(|&b| values[b]) {
            None => best.push(k),
            Some(m) if x > m => {
                best.clear();
                best.push(k);
            }
            Some(m) if x == m => best.push(k),
            _ => {}
        }
    }
    best
}

fn break_tie<R: Rng>(tied: &[usize], tie: &mut R) -> u8 {
    if tied.len() == 1 {
        tied[0] as u8
    } else {
        tied[tie.gen_range(0..tied.len())] as u8
    }
}

/// Most frequent color; ties drawn uniformly from `tie`, which should be a
/// stream that the spin dynamics never touch.
pub fn dominant_color<R: Rng>(colors: &[u8], q: usize, tie: &mut R) -> u8 {
    break_tie(&maximizers(&color_counts(colors, q)), tie)
}

/// Applies the transposition (dominant, k) to the colors. At zero field this
/// maps a sample of the Potts measure to an exact sample of the measure
/// conditioned on dominant color k.
pub fn condition_on_dominant<R: Rng>(
    colors: &[u8],
    k: u8,
    p: &Params<f64>,
    tie: &mut R,
) -> Result<Vec<u8>> {
    if p.field != 0.0 {
        return Err(Error::InvalidParams("conditioning needs B = 0".into()));
    }
    if k as usize >= p.q {
        return Err(Error::InvalidParams(format!("color {k} with q = {}", p.q)));
    }
    let dom = dominant_color(colors, p.q, tie);
    Ok(colors.iter().map(|&c| swap(c, dom, k)).collect())
}

fn swap(c: u8, a: u8, b: u8) -> u8 {
    if c == a {
        b
    } else if c == b {
        a
    } else {
        c
    }
}

/// Total variation between the pushforward of the Potts law under
/// [`condition_on_dominant`] (tie-break integrated exactly) and
/// q mu(., dominant = k), on a graph small enough to enumerate.
pub fn conditioning_exactness_tv(g: &Graph, p: &Params<f64>, k: u8) -> Result<f64> {
    if p.field != 0.0 {
        return Err(Error::InvalidParams("conditioning needs B = 0".into()));
    }
    let mu = enumerate_potts(g, p)?;
    let q = p.q;
    let index = |c: &[u8]| c.iter().fold(0usize, |a, &x| a * q + x as usize);
    let mut pushed = vec![0.0; mu.len()];
    let mut target = vec![0.0; mu.len()];
    for_each_coloring(g.n(), q, |c| {
        let i = index(c);
        let tied = maximizers(&color_counts(c, q));
        let share = 1.0 / tied.len() as f64;
        for &dom in &tied {
            let image: Vec<u8> = c.iter().map(|&x| swap(x, dom as u8, k)).collect();
            pushed[index(&image)] += mu.probs[i] * share;
        }
        if tied.contains(&(k as usize)) {
            target[i] = q as f64 * mu.probs[i] * share;
        }
    });
    Ok(0.5
        * pushed
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// Local dominant color at u and the top two local frequencies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalDominant {
    pub color: u8,
    pub n1: f64,
    pub n2: f64,
}

/// Precomputed balls B_u(l) and the indicator of B_v(2l) being a tree ball.
#[derive(Clone, Debug)]
pub struct LocalDominance {
    q: usize,
    balls: Vec<Vec<u32>>,
    tree_like: Vec<bool>,
}

impl LocalDominance {
    pub fn new(g: &Graph, ell: usize, q: usize) -> Result<Self> {
        if ell == 0 {
            return Err(Error::InvalidParams("ell must be at least 1".into()));
        }
        let tree_like = (0..g.n())
            .map(|v| tree_ball_order(g, v, 2 * ell).is_some())
            .collect();
        let balls = (0..g.n()).map(|u| ball_vertices(g, u, ell)).collect();
        Ok(LocalDominance {
            q,
            balls,
            tree_like,
        })
    }

    pub fn at<R: Rng>(&self, colors: &[u8], u: usize, tie: &mut R) -> LocalDominant {
        let ball = &self.balls[u];
        let mut counts = vec![0usize; self.q];
        for &v in ball {
            if self.tree_like[v as usize] {
                counts[colors[v as usize] as usize] += 1;
            }
        }
        summarize(&counts, ball.len(), tie)
    }
}

fn summarize<R: Rng>(counts: &[usize], ball: usize, tie: &mut R) -> LocalDominant {
    let color = break_tie(&maximizers(counts), tie);
    let size = ball as f64;
    let n2 = (0..counts.len())
        .filter(|&k| k != color as usize)
        .map(|k| counts[k])
        .max()
        .unwrap_or(0);
    LocalDominant {
        color,
        n1: counts[color as usize] as f64 / size,
        n2: n2 as f64 / size,
    }
}

fn ball_vertices(g: &Graph, u: usize, ell: usize) -> Vec<u32> {
    let mut seen = std::collections::HashMap::new();
    seen.insert(u, 0usize);
    let mut queue = VecDeque::from([u]);
    let mut out = vec![u as u32];
    while let Some(x) = queue.pop_front() {
        let dx = seen[&x];
        if dx == ell {
            continue;
        }
        for &y in g.neighbors(x) {
            if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(y) {
                e.insert(dx + 1);
                out.push(y as u32);
                queue.push_back(y);
            }
        }
    }
    out
}

/// One-off [`LocalDominance::at`].
pub fn local_dominant<R: Rng>(
    g: &Graph,
    colors: &[u8],
    v: usize,
    ell: usize,
    q: usize,
    tie: &mut R,
) -> Result<LocalDominant> {
    if ell == 0 {
        return Err(Error::InvalidParams("ell must be at least 1".into()));
    }
    let ball = ball_vertices(g, v, ell);
    let mut counts = vec![0usize; q];
    for &w in &ball {
        if tree_ball_order(g, w as usize, 2 * ell).is_some() {
            counts[colors[w as usize] as usize] += 1;
        }
    }
    Ok(summarize(&counts, ball.len(), tie))
}
