//! Stochastic domination on a finite set of bit vectors, decided as a
//! transport problem: a monotone coupling exists iff the max flow through the
//! order-respecting bipartite graph carries all of the mass.

/// Slack on the flow value.
pub const FLOW_SLACK: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct OrderWitness {
    pub feasible: bool,
    /// Total mass moved; 1 when feasible.
    pub flow: f64,
    /// (i, j, mass) with states[i] <= states[j] coordinatewise.
    pub coupling: Vec<(usize, usize, f64)>,
}

impl OrderWitness {
    pub fn deficit(&self, total: f64) -> f64 {
        (total - self.flow).max(0.0)
    }
}

pub fn leq(x: u64, y: u64) -> bool {
    x & !y == 0
}

/// Is `a` stochastically dominated by `b`? Both are weights on `states`.
pub fn stochastic_order(a: &[f64], b: &[f64], states: &[u64]) -> OrderWitness {
    assert!(a.len() == states.len() && b.len() == states.len());
    let left: Vec<usize> = (0..states.len()).filter(|&i| a[i] > 0.0).collect();
    let right: Vec<usize> = (0..states.len()).filter(|&j| b[j] > 0.0).collect();
    let (src, sink) = (0, 1 + left.len() + right.len());
    let mut net = FlowNet::new(sink + 1);
    for (li, &i) in left.iter().enumerate() {
        net.add(src, 1 + li, a[i]);
    }
    for (rj, &j) in right.iter().enumerate() {
        net.add(1 + left.len() + rj, sink, b[j]);
    }
    let mut middle = Vec::new();
    for (li, &i) in left.iter().enumerate() {
        for (rj, &j) in right.iter().enumerate() {
            if leq(states[i], states[j]) {
                let e = net.add(1 + li, 1 + left.len() + rj, f64::INFINITY);
                middle.push((i, j, e));
            }
        }
    }
    let flow = net.max_flow(src, sink);
    let total: f64 = a.iter().sum();
    let coupling = middle
        .into_iter()
        .map(|(i, j, e)| (i, j, net.flow_on(e)))
        .filter(|&(_, _, f)| f > 0.0)
        .collect();
    OrderWitness {
        feasible: flow >= total - FLOW_SLACK,
        flow,
        coupling,
    }
}

/// Dinic's algorithm on floating capacities.
struct FlowNet {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
}

const EPS: f64 = 1e-15;

impl FlowNet {
    fn new(n: usize) -> Self {
        FlowNet {
            head: vec![Vec::new(); n],
            to: Vec::new(),
            cap: Vec::new(),
        }
    }

    fn add(&mut self, u: usize, v: usize, c: f64) -> usize {
        let e = self.to.len();
        self.head[u].push(e);
        self.to.push(v);
        self.cap.push(c);
        self.head[v].push(e + 1);
        self.to.push(u);
        self.cap.push(0.0);
        e
    }

    fn flow_on(&self, e: usize) -> f64 {
        self.cap[e ^ 1]
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let n = self.head.len();
        let mut total = 0.0;
        loop {
            let mut level = vec![usize::MAX; n];
            level[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &e in &self.head[u] {
                    let v = self.to[e];
                    if self.cap[e] > EPS && level[v] == usize::MAX {
                        level[v] = level[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            if level[t] == usize::MAX {
                return total;
            }
            let mut it = vec![0usize; n];
            loop {
                let pushed = self.augment(s, t, f64::INFINITY, &level, &mut it);
                if pushed <= EPS {
                    break;
                }
                total += pushed;
            }
        }
    }

    fn augment(
        &mut self,
        u: usize,
        t: usize,
        limit: f64,
        level: &[usize],
        it: &mut [usize],
    ) -> f64 {
        if u == t {
            return limit;
        }
        while it[u] < self.head[u].len() {
            let e = self.head[u][it[u]];
            let v = self.to[e];
            if self.cap[e] > EPS && level[v] == level[u] + 1 {
                let got = self.augment(v, t, limit.min(self.cap[e]), level, it);
                if got > EPS {
                    self.cap[e] -= got;
                    self.cap[e ^ 1] += got;
                    return got;
                }
            }
            it[u] += 1;
        }
        0.0
    }
}
