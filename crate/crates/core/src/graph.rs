use crate::error::{Error, Result};
use std::fmt::Write as _;

/// Simple undirected graph with a stable edge list and CSR adjacency.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    nbrs: Vec<usize>,
    nbr_edges: Vec<usize>,
}

impl Graph {
    /// Builds a graph, rejecting self-loops, parallel edges and out-of-range endpoints.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut deg = vec![0usize; n];
        for &(u, v) in &edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!("edge ({u},{v}) with n = {n}")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at {u}")));
            }
            deg[u] += 1;
            deg[v] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + deg[v];
        }
        let mut fill = offsets.clone();
        let mut slots = vec![(0usize, 0usize); offsets[n]];
        for (e, &(u, v)) in edges.iter().enumerate() {
            slots[fill[u]] = (v, e);
            fill[u] += 1;
            slots[fill[v]] = (u, e);
            fill[v] += 1;
        }
        for v in 0..n {
            let s = &mut slots[offsets[v]..offsets[v + 1]];
            s.sort_unstable();
            if s.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidGraph(format!("parallel edge at {v}")));
            }
        }
        let (nbrs, nbr_edges) = slots.into_iter().unzip();
        Ok(Graph {
            n,
            edges,
            offsets,
            nbrs,
            nbr_edges,
        })
    }

    pub fn empty(n: usize) -> Self {
        Graph::new(n, Vec::new()).expect("empty graph")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    /// Sorted neighbor list of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.nbrs[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Edge ids aligned with [`Self::neighbors`].
    pub fn incident_edges(&self, v: usize) -> &[usize] {
        &self.nbr_edges[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// Common degree if the graph is regular.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = if self.n == 0 { 0 } else { self.degree(0) };
        (0..self.n).all(|v| self.degree(v) == d).then_some(d)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.neighbors(u)
            .binary_search(&v)
            .ok()
            .map(|i| self.incident_edges(u)[i])
    }

    /// Serializes as "n m" followed by one "u v" line per edge.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(12 * (self.m() + 1));
        let _ = writeln!(s, "{} {}", self.n, self.m());
        for &(u, v) in &self.edges {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty graph file".into()))?;
        let (n, m) = parse_pair(header)?;
        let mut edges = Vec::with_capacity(m);
        for line in lines {
            edges.push(parse_pair(line)?);
        }
        if edges.len() != m {
            return Err(Error::Parse(format!(
                "header says {m} edges, found {}",
                edges.len()
            )));
        }
        Graph::new(n, edges)
    }
}

fn parse_pair(line: &str) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace();
    let mut next = || -> Result<usize> {
        it.next()
            .ok_or_else(|| Error::Parse(format!("expected two integers: {line:?}")))?
            .parse()
            .map_err(|e| Error::Parse(format!("{line:?}: {e}")))
    };
    let a = next()?;
    let b = next()?;
    Ok((a, b))
}

/// Base graph plus the ghost vertex `n`, joined to every base vertex.
/// Ghost edge for vertex `v` has index `m + v`.
#[derive(Clone, Debug)]
pub struct GhostGraph {
    base: Graph,
}

impl GhostGraph {
    pub fn new(base: Graph) -> Self {
        GhostGraph { base }
    }

    pub fn base(&self) -> &Graph {
        &self.base
    }

    pub fn into_base(self) -> Graph {
        self.base
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn ghost(&self) -> usize {
        self.base.n()
    }

    pub fn n_base_edges(&self) -> usize {
        self.base.m()
    }

    pub fn n_edges(&self) -> usize {
        self.base.m() + self.base.n()
    }

    pub fn ghost_edge(&self, v: usize) -> usize {
        self.base.m() + v
    }

    pub fn is_ghost_edge(&self, e: usize) -> bool {
        e >= self.base.m()
    }

    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        if e < self.base.m() {
            self.base.edge(e)
        } else {
            (e - self.base.m(), self.ghost())
        }
    }
}

/// Coloring with 0-based colors; color 0 is the field-favored color.
/// A ghosted config carries one extra entry for the ghost, fixed to 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    pub colors: Vec<u8>,
    pub ghosted: bool,
}

impl SpinConfig {
    pub fn uniform_color(n: usize, color: u8, ghosted: bool) -> Self {
        let mut colors = vec![color; n];
        if ghosted {
            colors.push(0);
        }
        SpinConfig { colors, ghosted }
    }

    pub fn base(&self) -> &[u8] {
        if self.ghosted {
            &self.colors[..self.colors.len() - 1]
        } else {
            &self.colors
        }
    }

    pub fn n(&self) -> usize {
        self.base().len()
    }

    pub fn is_valid(&self, q: usize) -> bool {
        self.colors.iter().all(|&c| (c as usize) < q)
            && (!self.ghosted || self.colors.last() == Some(&0))
    }

    /// 1-based colors for output.
    pub fn external(&self) -> Vec<usize> {
        self.base().iter().map(|&c| c as usize + 1).collect()
    }
}

/// Open/closed bits, indexed like the ghost graph edge list.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BondConfig {
    words: Vec<u64>,
    len: usize,
}

impl BondConfig {
    pub fn closed(len: usize) -> Self {
        BondConfig {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_mask(len: usize, mask: u64) -> Self {
        assert!(len <= 64);
        let mut b = BondConfig::closed(len);
        if len > 0 {
            b.words[0] = if len == 64 {
                mask
            } else {
                mask & ((1u64 << len) - 1)
            };
        }
        b
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, e: usize) -> bool {
        (self.words[e >> 6] >> (e & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, e: usize, open: bool) {
        let w = &mut self.words[e >> 6];
        let bit = 1u64 << (e & 63);
        if open {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn count_open(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter_open(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&e| self.get(e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_simple() {
        assert!(Graph::new(2, vec![(0, 0)]).is_err());
        assert!(Graph::new(2, vec![(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(2, vec![(0, 2)]).is_err());
    }

    #[test]
    fn adjacency_matches_edges() {
        let g = Graph::new(4, vec![(0, 1), (2, 0), (3, 2)]).unwrap();
        assert_eq!(g.neighbors(0), &[1, 2]);
        assert_eq!(g.incident_edges(0), &[0, 1]);
        assert_eq!(g.edge_between(2, 3), Some(2));
        assert_eq!(g.edge_between(1, 3), None);
        assert_eq!(g.regular_degree(), None);
    }

    #[test]
    fn text_round_trip() {
        let g = Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let back = Graph::from_text(&g.to_text()).unwrap();
        assert_eq!(g, back);
        assert!(Graph::from_text("3 2\n0 1\n").is_err());
    }

    #[test]
    fn ghost_indexing() {
        let g = GhostGraph::new(Graph::new(3, vec![(0, 1), (1, 2)]).unwrap());
        assert_eq!(g.ghost(), 3);
        assert_eq!(g.n_edges(), 5);
        assert_eq!(g.endpoints(2), (0, 3));
        assert_eq!(g.endpoints(4), (2, 3));
        assert!(g.is_ghost_edge(3) && !g.is_ghost_edge(1));
    }

    #[test]
    fn bond_bits() {
        let mut b = BondConfig::closed(130);
        b.set(0, true);
        b.set(129, true);
        b.set(64, true);
        b.set(64, false);
        assert!(b.get(129) && b.get(0) && !b.get(64));
        assert_eq!(b.count_open(), 2);
        assert_eq!(b.iter_open().collect::<Vec<_>>(), vec![0, 129]);
        let m = BondConfig::from_mask(3, 0b1111);
        assert_eq!(m.count_open(), 3);
    }
}
