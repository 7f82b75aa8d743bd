//! Random regular graphs, neighborhood balls, vertex surgery and a spectral
//! expansion certificate.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::tree::tree_size;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{HashSet, VecDeque};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Uniform pairing of half-edges, restarted on any loop or parallel edge.
    Configuration,
    /// Union of d/2 uniform permutations.
    Permutation,
}

impl std::str::FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "configuration" | "config" => Ok(Model::Configuration),
            "permutation" | "perm" => Ok(Model::Permutation),
            _ => Err(Error::Parse(format!("unknown graph model {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: usize,
    pub d: usize,
    pub model: Model,
    pub seed: u64,
}

/// Restarts allowed before giving up.
pub const RETRY_BUDGET: usize = 20_000;

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 || self.n <= self.d {
            return Err(Error::InvalidParams(format!(
                "no simple {}-regular graph on {} vertices",
                self.d, self.n
            )));
        }
        match self.model {
            Model::Configuration if !(self.n * self.d).is_multiple_of(2) => {
                Err(Error::InvalidParams("n d must be even".into()))
            }
            Model::Permutation if !self.d.is_multiple_of(2) => Err(Error::InvalidParams(
                "permutation model needs even d".into(),
            )),
            Model::Permutation if self.n < 3 => Err(Error::InvalidParams(
                "permutation model needs n >= 3".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Simple d-regular graph, deterministic in the seed.
pub fn random_regular(spec: &GenSpec) -> Result<Graph> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let edges = match spec.model {
        Model::Configuration => configuration(spec.n, spec.d, &mut rng)?,
        Model::Permutation => permutations(spec.n, spec.d, &mut rng)?,
    };
    let g = Graph::new(spec.n, edges)?;
    debug_assert_eq!(g.regular_degree(), Some(spec.d));
    Ok(g)
}

fn edge_key(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

fn configuration(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>> {
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    let mut seen = HashSet::with_capacity(n * d / 2);
    'attempt: for _ in 0..RETRY_BUDGET {
        stubs.shuffle(rng);
        seen.clear();
        let mut edges = Vec::with_capacity(n * d / 2);
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || !seen.insert(edge_key(u, v)) {
                continue 'attempt;
            }
            edges.push(edge_key(u, v));
        }
        return Ok(edges);
    }
    Err(Error::InvalidGraph(format!(
        "configuration model: no simple pairing in {RETRY_BUDGET} attempts"
    )))
}

fn permutations(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>> {
    let mut seen = HashSet::with_capacity(n * d / 2);
    let mut edges = Vec::with_capacity(n * d / 2);
    let mut perm: Vec<usize> = (0..n).collect();
    for _ in 0..d / 2 {
        let mut ok = false;
        for _ in 0..RETRY_BUDGET {
            perm.shuffle(rng);
            // A fixed point is a loop; a 2-cycle or a repeat is a parallel edge.
            let mut fresh = HashSet::with_capacity(n);
            ok = (0..n).all(|i| {
                let k = edge_key(i, perm[i]);
                i != perm[i] && !seen.contains(&k) && fresh.insert(k)
            });
            if ok {
                for i in 0..n {
                    let k = edge_key(i, perm[i]);
                    seen.insert(k);
                    edges.push(k);
                }
                break;
            }
        }
        if !ok {
            return Err(Error::InvalidGraph(format!(
                "permutation model: no compatible permutation in {RETRY_BUDGET} attempts"
            )));
        }
    }
    Ok(edges)
}

/// Depth-t neighborhood of a vertex.
#[derive(Clone, Debug)]
pub struct Ball {
    /// Vertices in breadth-first order from the root, neighbors visited in sorted order.
    pub vertices: Vec<usize>,
    pub depth: Vec<usize>,
    /// Induced subgraph on `vertices`, relabeled by position.
    pub graph: Graph,
    pub is_tree: bool,
}

/// Induced ball B_v(t) and whether it is isomorphic to T_d(t), d = deg(v).
pub fn ball(g: &Graph, v: usize, t: usize) -> Ball {
    let (vertices, depth) = bfs(g, v, t);
    let pos: std::collections::HashMap<usize, usize> =
        vertices.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let mut edges = Vec::new();
    for (i, &u) in vertices.iter().enumerate() {
        for &w in g.neighbors(u) {
            if let Some(&j) = pos.get(&w) {
                if i < j {
                    edges.push((i, j));
                }
            }
        }
    }
    let graph = Graph::new(vertices.len(), edges).expect("induced subgraph is simple");
    let d = g.degree(v);
    let is_tree = d >= 3
        && tree_size(d, t) == Some(vertices.len())
        && graph.m() + 1 == vertices.len()
        && (0..vertices.len()).all(|i| {
            let want = if depth[i] == t { usize::from(t > 0) } else { d };
            graph.degree(i) == want
        });
    Ball {
        vertices,
        depth,
        graph,
        is_tree,
    }
}

fn bfs(g: &Graph, v: usize, t: usize) -> (Vec<usize>, Vec<usize>) {
    let mut vertices = vec![v];
    let mut depth = vec![0];
    let mut seen = HashSet::from([v]);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        if depth[i] == t {
            continue;
        }
        for &w in g.neighbors(vertices[i]) {
            if seen.insert(w) {
                vertices.push(w);
                depth.push(depth[i] + 1);
                queue.push_back(vertices.len() - 1);
            }
        }
    }
    (vertices, depth)
}

/// Breadth-first vertex order of B_v(t) matching the canonical tree order,
/// or `None` when the ball is not a d-regular tree ball.
/// Cheaper than [`ball`]: no induced subgraph is built.
pub fn tree_ball_order(g: &Graph, v: usize, t: usize) -> Option<Vec<usize>> {
    let d = g.degree(v);
    let size = tree_size(d, t)?;
    let mut order = Vec::with_capacity(size);
    let mut parent = Vec::with_capacity(size);
    order.push(v);
    parent.push(usize::MAX);
    let mut level_start = 0;
    for _ in 0..t {
        let level_end = order.len();
        for i in level_start..level_end {
            let u = order[i];
            if g.degree(u) != d {
                return None;
            }
            for &w in g.neighbors(u) {
                if w != parent[i] {
                    order.push(w);
                    parent.push(u);
                }
            }
        }
        level_start = level_end;
    }
    // A repeated vertex means a cycle of length at most 2t.
    let mut uniq: Vec<usize> = order.clone();
    uniq.sort_unstable();
    uniq.dedup();
    if uniq.len() != order.len() {
        return None;
    }
    // Edges between depth-t vertices close a cycle of length 2t + 1.
    let leaves: HashSet<usize> = order[level_start..].iter().copied().collect();
    if t > 0
        && order[level_start..]
            .iter()
            .zip(&parent[level_start..])
            .any(|(&u, &pu)| {
                g.neighbors(u)
                    .iter()
                    .any(|w| *w != pu && leaves.contains(w))
            })
    {
        return None;
    }
    Some(order)
}

/// Fraction of vertices whose depth-t ball is tree-like.
pub fn tree_like_fraction(g: &Graph, t: usize) -> f64 {
    if g.n() == 0 {
        return 0.0;
    }
    let hits = (0..g.n())
        .filter(|&v| tree_ball_order(g, v, t).is_some())
        .count();
    hits as f64 / g.n() as f64
}

/// Graph with `w` and its edges deleted. `map[old]` is the new index, `None` for `w`.
pub fn remove_vertex(g: &Graph, w: usize) -> Result<(Graph, Vec<Option<usize>>)> {
    if w >= g.n() {
        return Err(Error::InvalidGraph(format!("vertex {w} out of range")));
    }
    let map: Vec<Option<usize>> = (0..g.n())
        .map(|v| match v.cmp(&w) {
            std::cmp::Ordering::Less => Some(v),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(v - 1),
        })
        .collect();
    let edges = g
        .edges()
        .iter()
        .filter_map(|&(u, v)| Some((map[u]?, map[v]?)))
        .collect();
    Ok((Graph::new(g.n() - 1, edges)?, map))
}

/// Removes `w` and pairs its neighbors x_1 < ... < x_d as
/// (x_{pi(1)}, x_{pi(2)}), (x_{pi(3)}, x_{pi(4)}), ...
pub fn rewire(g: &Graph, w: usize, pi: &[usize]) -> Result<(Graph, Vec<Option<usize>>)> {
    if w >= g.n() {
        return Err(Error::InvalidGraph(format!("vertex {w} out of range")));
    }
    let nb = g.neighbors(w).to_vec();
    if !nb.len().is_multiple_of(2) {
        return Err(Error::InvalidGraph(format!(
            "odd degree {} at {w}",
            nb.len()
        )));
    }
    let mut check = pi.to_vec();
    check.sort_unstable();
    if check != (0..nb.len()).collect::<Vec<_>>() {
        return Err(Error::InvalidParams(format!(
            "{pi:?} is not a permutation of 0..{}",
            nb.len()
        )));
    }
    let (removed, map) = remove_vertex(g, w)?;
    let mut edges = removed.edges().to_vec();
    for pair in pi.chunks_exact(2) {
        let (a, b) = (map[nb[pair[0]]].unwrap(), map[nb[pair[1]]].unwrap());
        if removed.has_edge(a, b) {
            return Err(Error::InvalidGraph(format!(
                "rewiring creates a parallel edge between {} and {}",
                nb[pair[0]], nb[pair[1]]
            )));
        }
        edges.push((a, b));
    }
    Ok((Graph::new(removed.n(), edges)?, map))
}

pub fn is_connected(g: &Graph) -> bool {
    g.n() == 0 || bfs(g, 0, usize::MAX).0.len() == g.n()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Expansion {
    /// Second-largest adjacency eigenvalue.
    pub lambda2: f64,
    /// (d - lambda2)/2.
    pub certificate: f64,
    pub iterations: usize,
}

/// Power iteration for lambda_2 on a connected regular graph.
pub fn expansion_estimate(g: &Graph, seed: u64) -> Result<Expansion> {
    let d = g
        .regular_degree()
        .ok_or_else(|| Error::InvalidGraph("expansion certificate needs a regular graph".into()))?;
    if g.n() < 2 || !is_connected(g) {
        return Err(Error::InvalidGraph(
            "expansion certificate needs a connected graph".into(),
        ));
    }
    let n = g.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n)
        .map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0))
        .collect();
    let project = |x: &mut Vec<f64>| {
        let mean = x.iter().sum::<f64>() / n as f64;
        x.iter_mut().for_each(|v| *v -= mean);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
    };
    project(&mut x);
    // Shift by d so the spectrum is nonnegative and lambda_2 dominates on 1-perp.
    let apply = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|v| d as f64 * x[v] + g.neighbors(v).iter().map(|&u| x[u]).sum::<f64>())
            .collect()
    };
    let mut rq = f64::NAN;
    let mut iterations = 0;
    for it in 1..=20_000 {
        let mut y = apply(&x);
        let next: f64 = y.iter().zip(&x).map(|(a, b)| a * b).sum();
        project(&mut y);
        x = y;
        iterations = it;
        if (next - rq).abs() < 1e-12 * next.abs().max(1.0) {
            rq = next;
            break;
        }
        rq = next;
    }
    let lambda2 = rq - d as f64;
    Ok(Expansion {
        lambda2,
        certificate: (d as f64 - lambda2) / 2.0,
        iterations,
    })
}
