use crate::error::{Error, Result};

/// Default cap on the number of vertices of an indexed tree ball.
pub const TREE_VERTEX_CAP: usize = 1 << 24;

/// |V(T_d(t))| = 1 + d((d-1)^t - 1)/(d-2), or `None` on overflow.
pub fn tree_size(d: usize, t: usize) -> Option<usize> {
    let mut total: usize = 1;
    let mut level: usize = 1;
    for k in 0..t {
        level = level.checked_mul(if k == 0 { d } else { d - 1 })?;
        total = total.checked_add(level)?;
    }
    Some(total)
}

/// Breadth-first canonical ordering of the depth-t ball of the d-regular tree.
/// Children of each vertex are contiguous; edge `k` joins `parent(k+1)` and `k+1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeIndex {
    d: usize,
    t: usize,
    parent: Vec<usize>,
    first_child: Vec<usize>,
    depth: Vec<usize>,
    level_start: Vec<usize>,
}

impl TreeIndex {
    pub fn new(d: usize, t: usize) -> Result<Self> {
        Self::with_cap(d, t, TREE_VERTEX_CAP)
    }

    pub fn with_cap(d: usize, t: usize, cap: usize) -> Result<Self> {
        if d < 3 {
            return Err(Error::InvalidParams(format!("tree degree {d} < 3")));
        }
        let size = tree_size(d, t)
            .filter(|&s| s <= cap)
            .ok_or(Error::CapExceeded {
                what: "tree ball vertices",
                needed: tree_size(d, t).map_or(u128::MAX, |s| s as u128),
                cap: cap as u128,
            })?;
        let mut parent = vec![usize::MAX; size];
        let mut first_child = vec![size; size];
        let mut depth = vec![0; size];
        let mut level_start = vec![0, 1];
        let mut next = 1;
        for k in 0..t {
            let (lo, hi) = (level_start[k], level_start[k + 1]);
            for v in lo..hi {
                let kids = if v == 0 { d } else { d - 1 };
                first_child[v] = next;
                for c in next..next + kids {
                    parent[c] = v;
                    depth[c] = k + 1;
                }
                next += kids;
            }
            level_start.push(next);
        }
        debug_assert_eq!(next, size);
        Ok(TreeIndex {
            d,
            t,
            parent,
            first_child,
            depth,
            level_start,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn depth(&self) -> usize {
        self.t
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_edges(&self) -> usize {
        self.len() - 1
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        (v != 0).then(|| self.parent[v])
    }

    pub fn children(&self, v: usize) -> std::ops::Range<usize> {
        if self.depth[v] == self.t {
            return 0..0;
        }
        let kids = if v == 0 { self.d } else { self.d - 1 };
        self.first_child[v]..self.first_child[v] + kids
    }

    pub fn vertex_depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    /// Vertices at distance exactly `k` from the root.
    pub fn level(&self, k: usize) -> std::ops::Range<usize> {
        self.level_start[k]..self.level_start[k + 1]
    }

    pub fn leaves(&self) -> std::ops::Range<usize> {
        self.level(self.t)
    }

    /// Edges as (parent, child), edge `k` ending at vertex `k+1`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (1..self.len()).map(|c| (self.parent[c], c)).collect()
    }

    /// The ball as a [`crate::Graph`] with vertices in canonical order.
    pub fn graph(&self) -> crate::Graph {
        crate::Graph::new(self.len(), self.edges()).expect("tree is simple")
    }
}

/// Encodes 0-based colors as a base-q word, first vertex most significant.
pub fn encode_pattern(spins: &[u8], q: usize) -> u64 {
    spins.iter().fold(0u64, |acc, &s| acc * q as u64 + s as u64)
}

pub fn decode_pattern(mut index: u64, q: usize, len: usize) -> Vec<u8> {
    let mut out = vec![0u8; len];
    for slot in out.iter_mut().rev() {
        *slot = (index % q as u64) as u8;
        index /= q as u64;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        let t0 = TreeIndex::new(3, 0).unwrap();
        assert_eq!((t0.len(), t0.n_edges()), (1, 0));
        let t1 = TreeIndex::new(3, 1).unwrap();
        assert_eq!((t1.len(), t1.n_edges()), (4, 3));
        let t2 = TreeIndex::new(3, 2).unwrap();
        assert_eq!((t2.len(), t2.n_edges()), (10, 9));
        assert_eq!(tree_size(4, 2), Some(17));
        assert!(TreeIndex::new(3, 40).is_err());
        assert!(TreeIndex::new(2, 1).is_err());
    }

    #[test]
    fn structure() {
        let t = TreeIndex::new(3, 3).unwrap();
        assert_eq!(t.children(0), 1..4);
        assert_eq!(t.children(1), 4..6);
        assert_eq!(t.parent(5), Some(1));
        assert_eq!(t.parent(0), None);
        assert_eq!(t.leaves().len(), 3 * 2 * 2);
        for v in t.leaves() {
            assert!(t.children(v).is_empty());
            assert_eq!(t.vertex_depth(v), 3);
        }
        assert!(t.graph().regular_degree().is_none());
    }

    #[test]
    fn pattern_codes() {
        assert_eq!(encode_pattern(&[0, 0, 0, 0], 3), 0);
        assert_eq!(encode_pattern(&[0, 1, 2, 0], 3), 15);
        for i in 0..16 {
            assert_eq!(encode_pattern(&decode_pattern(i, 2, 4), 2), i);
        }
    }
}
