//! Swendsen-Wang dynamics on the ghost-augmented graph.

use crate::dsu::UnionFind;
use crate::error::{Error, Result};
use crate::graph::{BondConfig, GhostGraph, SpinConfig};
use crate::params::Params;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Sweep budget for one chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub burn_in: usize,
    /// Snapshots kept after burn-in.
    pub samples: usize,
    /// Sweeps between snapshots.
    pub thin: usize,
    pub batches: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            burn_in: 1000,
            samples: 400,
            thin: 10,
            batches: 20,
        }
    }
}

impl Budget {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.thin == 0 {
            return Err(Error::InvalidParams(
                "samples and thin must be positive".into(),
            ));
        }
        if self.batches < super::MIN_BATCHES || self.samples < self.batches {
            return Err(Error::InvalidParams(format!(
                "need at least {} batches and one sample per batch",
                super::MIN_BATCHES
            )));
        }
        Ok(())
    }

    /// Same budget with burn-in and samples multiplied by `k`.
    pub fn scaled(&self, k: usize) -> Self {
        Budget {
            burn_in: self.burn_in * k,
            samples: self.samples * k,
            ..*self
        }
    }
}

/// Initial spins of a chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainStart {
    /// iid uniform colors.
    Disordered,
    /// Every base vertex colored k (0-based).
    Color(u8),
}

/// Chain RNG for `stream` under the master seed. Streams are disjoint, so
/// chains can run on any thread in any order.
pub fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream of the sweep randomness of chain `index`.
pub fn sweep_stream(index: usize) -> u64 {
    2 * index as u64
}

/// Stream of the tie-break randomness of chain `index`.
pub fn tie_stream(index: usize) -> u64 {
    2 * index as u64 + 1
}

/// Opens each agreeing edge of G* independently, with p_edge on base edges
/// and p_ghost on ghost edges (the ghost has color 0).
pub fn bonds_given_spins<R: Rng>(
    spins: &SpinConfig,
    gg: &GhostGraph,
    p: &Params<f64>,
    rng: &mut R,
) -> BondConfig {
    let mut out = BondConfig::closed(gg.n_edges());
    fill_bonds(spins.base(), gg, p.p_edge(), p.p_ghost(), rng, &mut out);
    out
}

fn fill_bonds<R: Rng>(
    colors: &[u8],
    gg: &GhostGraph,
    pe: f64,
    pg: f64,
    rng: &mut R,
    out: &mut BondConfig,
) {
    out.clear();
    let g = gg.base();
    if pe > 0.0 {
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            if colors[u] == colors[v] && rng.gen::<f64>() < pe {
                out.set(e, true);
            }
        }
    }
    if pg > 0.0 {
        for (v, &c) in colors.iter().enumerate() {
            if c == 0 && rng.gen::<f64>() < pg {
                out.set(gg.ghost_edge(v), true);
            }
        }
    }
}

/// Uniform color per open cluster; the ghost cluster gets color 0.
pub fn spins_given_bonds<R: Rng>(
    bonds: &BondConfig,
    gg: &GhostGraph,
    p: &Params<f64>,
    rng: &mut R,
) -> SpinConfig {
    let mut spins = SpinConfig::uniform_color(gg.n(), 0, true);
    let mut uf = UnionFind::new(gg.n() + 1);
    let mut labels = vec![0; gg.n() + 1];
    let mut scratch = vec![u8::MAX; gg.n() + 1];
    fill_spins(
        bonds,
        gg,
        p.q,
        rng,
        &mut uf,
        &mut spins,
        &mut labels,
        &mut scratch,
    );
    spins
}

#[allow(clippy::too_many_arguments)]
fn fill_spins<R: Rng>(
    bonds: &BondConfig,
    gg: &GhostGraph,
    q: usize,
    rng: &mut R,
    uf: &mut UnionFind,
    spins: &mut SpinConfig,
    labels: &mut [u32],
    color_of: &mut [u8],
) {
    uf.reset();
    for e in bonds.iter_open() {
        let (u, v) = gg.endpoints(e);
        uf.union(u, v);
    }
    let ghost = gg.ghost();
    let gr = uf.find(ghost);
    color_of[gr] = 0;
    labels[ghost] = gr as u32;
    for v in 0..gg.n() {
        let r = uf.find(v);
        if color_of[r] == u8::MAX {
            color_of[r] = rng.gen_range(0..q as u8);
        }
        spins.colors[v] = color_of[r];
        labels[v] = r as u32;
    }
    for &r in labels.iter() {
        color_of[r as usize] = u8::MAX;
    }
}

/// Joint spin-bond state after a full sweep. Open bonds always join equal
/// spins, and `labels` holds the open-cluster representative of each vertex
/// of G* (ghost last).
#[derive(Clone, Debug)]
pub struct ChainState {
    pub spins: SpinConfig,
    pub bonds: BondConfig,
    pub step: u64,
    pub labels: Vec<u32>,
    pub rng: ChaCha8Rng,
}

impl ChainState {
    pub fn new(gg: &GhostGraph, q: usize, start: ChainStart, mut rng: ChaCha8Rng) -> Result<Self> {
        let n = gg.n();
        let spins = match start {
            ChainStart::Color(k) if (k as usize) < q => SpinConfig::uniform_color(n, k, true),
            ChainStart::Color(k) => {
                return Err(Error::InvalidParams(format!(
                    "start color {k} with q = {q}"
                )))
            }
            ChainStart::Disordered => {
                let mut s = SpinConfig::uniform_color(n, 0, true);
                for c in &mut s.colors[..n] {
                    *c = rng.gen_range(0..q as u8);
                }
                s
            }
        };
        Ok(ChainState {
            spins,
            bonds: BondConfig::closed(gg.n_edges()),
            step: 0,
            labels: (0..=n as u32).collect(),
            rng,
        })
    }

    pub fn colors(&self) -> &[u8] {
        self.spins.base()
    }

    pub fn in_ghost_cluster(&self, v: usize) -> bool {
        self.labels[v] == self.labels[self.labels.len() - 1]
    }
}

/// A chain bound to a graph and parameters. Parameters may change between
/// sweeps, which warm-starts annealing schedules.
pub struct Chain<'a> {
    gg: &'a GhostGraph,
    p: Params<f64>,
    pe: f64,
    pg: f64,
    state: ChainState,
    uf: UnionFind,
    scratch: Vec<u8>,
}

impl<'a> Chain<'a> {
    pub fn new(
        gg: &'a GhostGraph,
        p: &Params<f64>,
        start: ChainStart,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        p.validate()?;
        if p.q > u8::MAX as usize {
            return Err(Error::InvalidParams("q must fit in a byte".into()));
        }
        let state = ChainState::new(gg, p.q, start, rng)?;
        Ok(Chain {
            gg,
            p: *p,
            pe: p.p_edge(),
            pg: p.p_ghost(),
            state,
            uf: UnionFind::new(gg.n() + 1),
            scratch: vec![u8::MAX; gg.n() + 1],
        })
    }

    pub fn params(&self) -> &Params<f64> {
        &self.p
    }

    pub fn set_params(&mut self, p: &Params<f64>) -> Result<()> {
        p.validate()?;
        if p.q != self.p.q {
            return Err(Error::InvalidParams("q cannot change along a chain".into()));
        }
        self.p = *p;
        self.pe = p.p_edge();
        self.pg = p.p_ghost();
        Ok(())
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn into_state(self) -> ChainState {
        self.state
    }

    pub fn sweep(&mut self) {
        let s = &mut self.state;
        fill_bonds(
            s.spins.base(),
            self.gg,
            self.pe,
            self.pg,
            &mut s.rng,
            &mut s.bonds,
        );
        fill_spins(
            &s.bonds,
            self.gg,
            self.p.q,
            &mut s.rng,
            &mut self.uf,
            &mut s.spins,
            &mut s.labels,
            &mut self.scratch,
        );
        s.step += 1;
    }

    pub fn sweeps(&mut self, k: usize) {
        (0..k).for_each(|_| self.sweep());
    }

    /// Burn-in, then `budget.samples` snapshots `budget.thin` sweeps apart.
    pub fn run(&mut self, budget: &Budget, mut observe: impl FnMut(&ChainState)) -> Result<()> {
        budget.validate()?;
        self.sweeps(budget.burn_in);
        for _ in 0..budget.samples {
            self.sweeps(budget.thin);
            observe(&self.state);
        }
        Ok(())
    }
}

/// Runs one chain from `seed` (sweep stream 0) and hands each snapshot to `observe`.
pub fn run_chain(
    gg: &GhostGraph,
    p: &Params<f64>,
    budget: &Budget,
    seed: u64,
    start: ChainStart,
    observe: impl FnMut(&ChainState),
) -> Result<()> {
    let mut chain = Chain::new(gg, p, start, chain_rng(seed, sweep_stream(0)))?;
    chain.run(budget, observe)
}

/// [`run_chain`] keeping every snapshot.
pub fn collect_chain(
    gg: &GhostGraph,
    p: &Params<f64>,
    budget: &Budget,
    seed: u64,
    start: ChainStart,
) -> Result<Vec<ChainState>> {
    let mut out = Vec::with_capacity(budget.samples);
    run_chain(gg, p, budget, seed, start, |s| out.push(s.clone()))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn cycle(n: usize) -> GhostGraph {
        GhostGraph::new(Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)).collect()).unwrap())
    }

    #[test]
    fn zero_coupling_closes_everything() {
        let gg = cycle(6);
        let p = Params::f64(3, 3, 0.0, 0.0).unwrap();
        let mut rng = chain_rng(1, 0);
        let s = SpinConfig::uniform_color(6, 0, true);
        assert_eq!(bonds_given_spins(&s, &gg, &p, &mut rng).count_open(), 0);
    }

    #[test]
    fn strong_coupling_opens_monochromatic_edges() {
        let gg = cycle(6);
        let p = Params::f64(3, 3, 60.0, 0.0).unwrap();
        let mut rng = chain_rng(1, 0);
        let s = SpinConfig::uniform_color(6, 2, true);
        let b = bonds_given_spins(&s, &gg, &p, &mut rng);
        assert!((0..6).all(|e| b.get(e)));
        assert!((6..12).all(|e| !b.get(e)));
    }

    #[test]
    fn all_open_gives_color_zero() {
        let gg = cycle(5);
        let p = Params::f64(3, 3, 1.0, 1.0).unwrap();
        let mut rng = chain_rng(2, 0);
        let b = BondConfig::from_mask(10, (1 << 10) - 1);
        let s = spins_given_bonds(&b, &gg, &p, &mut rng);
        assert_eq!(s.base(), &[0; 5]);
        assert!(s.is_valid(3));
    }

    #[test]
    fn open_fraction_on_agreeing_edges() {
        let gg = cycle(1000);
        let p = Params::f64(2, 3, 0.7, 0.0).unwrap();
        let s = SpinConfig::uniform_color(1000, 1, true);
        let mut rng = chain_rng(3, 0);
        let reps = 200;
        let open: usize = (0..reps)
            .map(|_| bonds_given_spins(&s, &gg, &p, &mut rng).count_open())
            .sum();
        let trials = (reps * 1000) as f64;
        let pe = p.p_edge();
        let se = (pe * (1.0 - pe) / trials).sqrt();
        assert!((open as f64 / trials - pe).abs() < 3.0 * se);
    }

    #[test]
    fn bonds_join_equal_spins() {
        let gg = cycle(30);
        let p = Params::f64(3, 3, 1.2, 0.3).unwrap();
        let budget = Budget {
            burn_in: 5,
            samples: 20,
            thin: 1,
            batches: 20,
        };
        run_chain(&gg, &p, &budget, 9, ChainStart::Disordered, |s| {
            for e in s.bonds.iter_open() {
                let (u, v) = gg.endpoints(e);
                assert_eq!(s.spins.colors[u], s.spins.colors[v]);
                assert_eq!(s.labels[u], s.labels[v]);
            }
            assert_eq!(*s.spins.colors.last().unwrap(), 0);
        })
        .unwrap();
    }

    #[test]
    fn deterministic_in_seed() {
        let gg = cycle(50);
        let p = Params::f64(3, 3, 1.0, 0.1).unwrap();
        let budget = Budget {
            burn_in: 3,
            samples: 20,
            thin: 2,
            batches: 20,
        };
        let run = |seed| {
            collect_chain(&gg, &p, &budget, seed, ChainStart::Disordered)
                .unwrap()
                .into_iter()
                .map(|s| s.spins)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(4), run(4));
        assert_ne!(run(4), run(5));
    }

    #[test]
    fn budget_validation() {
        let mut b = Budget::default();
        assert!(b.validate().is_ok());
        b.batches = 5;
        assert!(b.validate().is_err());
    }
}
