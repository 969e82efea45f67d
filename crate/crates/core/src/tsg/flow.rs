use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use super::TsgError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowEdge {
    pub from: usize,
    pub to: usize,
    pub lower: i64,
    pub cap: i64,
    pub cost: i64,
    pub flow: i64,
}

/// Directed multigraph with lower bounds, capacities and costs. Solvers
/// write their answer into [`FlowEdge::flow`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FlowNetwork {
    pub n: usize,
    pub edges: Vec<FlowEdge>,
}

impl FlowNetwork {
    pub fn new(n: usize) -> Self {
        FlowNetwork { n, edges: Vec::new() }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, lower: i64, cap: i64, cost: i64) -> usize {
        assert!(from < self.n && to < self.n, "edge endpoint out of range");
        self.edges.push(FlowEdge { from, to, lower, cap, cost, flow: 0 });
        self.edges.len() - 1
    }

    pub fn total_cost(&self) -> i64 {
        self.edges.iter().map(|e| e.cost * e.flow).sum()
    }

    /// Net inflow minus outflow at `v` under the current flow.
    pub fn imbalance(&self, v: usize) -> i64 {
        self.edges
            .iter()
            .map(|e| (e.to == v) as i64 * e.flow - (e.from == v) as i64 * e.flow)
            .sum()
    }

    /// True iff the current flow respects every bound and is conserved at
    /// every vertex.
    pub fn is_circulation(&self) -> bool {
        self.edges.iter().all(|e| e.lower <= e.flow && e.flow <= e.cap)
            && (0..self.n).all(|v| self.imbalance(v) == 0)
    }
}

/// Residual graph with paired arcs: arc `a ^ 1` is the reverse of `a`.
struct Residual {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<i64>,
}

impl Residual {
    fn new(n: usize) -> Self {
        Residual {
            adj: vec![Vec::new(); n],
            to: Vec::new(),
            cap: Vec::new(),
            cost: Vec::new(),
        }
    }

    fn n(&self) -> usize {
        self.adj.len()
    }

    fn add(&mut self, u: usize, v: usize, cap: i64, cost: i64) -> usize {
        let a = self.to.len();
        self.adj[u].push(a);
        self.to.push(v);
        self.cap.push(cap);
        self.cost.push(cost);
        self.adj[v].push(a + 1);
        self.to.push(u);
        self.cap.push(0);
        self.cost.push(-cost);
        a
    }

    fn from(&self, a: usize) -> usize {
        self.to[a ^ 1]
    }

    fn flow_on(&self, a: usize) -> i64 {
        self.cap[a ^ 1]
    }

    /// Dinic max flow over arcs accepted by `admissible`. Arcs are scanned
    /// in insertion order.
    fn dinic(&mut self, s: usize, t: usize, admissible: impl Fn(&Residual, usize) -> bool) -> i64 {
        let n = self.n();
        let mut total = 0;
        let mut level = vec![-1i64; n];
        let mut it = vec![0usize; n];
        loop {
            level.iter_mut().for_each(|l| *l = -1);
            level[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &a in &self.adj[u] {
                    let v = self.to[a];
                    if self.cap[a] > 0 && level[v] < 0 && admissible(self, a) {
                        level[v] = level[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            if level[t] < 0 {
                return total;
            }
            it.iter_mut().for_each(|i| *i = 0);
            total += self.blocking_flow(s, t, &mut level, &mut it, &admissible);
        }
    }

    fn blocking_flow(
        &mut self,
        s: usize,
        t: usize,
        level: &mut [i64],
        it: &mut [usize],
        admissible: &impl Fn(&Residual, usize) -> bool,
    ) -> i64 {
        let mut total = 0;
        let mut path: Vec<usize> = Vec::new();
        let mut u = s;
        loop {
            if u == t {
                let f = path.iter().map(|&a| self.cap[a]).min().unwrap_or(0);
                for &a in &path {
                    self.cap[a] -= f;
                    self.cap[a ^ 1] += f;
                }
                total += f;
                let k = path.iter().position(|&a| self.cap[a] == 0).unwrap_or(0);
                path.truncate(k);
                u = path.last().map_or(s, |&a| self.to[a]);
                continue;
            }
            let mut advanced = false;
            while it[u] < self.adj[u].len() {
                let a = self.adj[u][it[u]];
                let v = self.to[a];
                if self.cap[a] > 0 && level[v] == level[u] + 1 && admissible(self, a) {
                    path.push(a);
                    u = v;
                    advanced = true;
                    break;
                }
                it[u] += 1;
            }
            if !advanced {
                if u == s {
                    return total;
                }
                level[u] = -1;
                let a = path.pop().expect("non-source vertex is reached by an arc");
                u = self.from(a);
                it[u] += 1;
            }
        }
    }
}

/// Maximum `s`-`t` flow by Dinic's algorithm. Lower bounds are ignored; the
/// resulting flow is written into the network's edges.
pub fn max_flow(net: &mut FlowNetwork, s: usize, t: usize) -> i64 {
    let mut r = Residual::new(net.n);
    let arcs: Vec<usize> = net.edges.iter().map(|e| r.add(e.from, e.to, e.cap, 0)).collect();
    let value = if s == t { 0 } else { r.dinic(s, t, |_, _| true) };
    for (e, a) in net.edges.iter_mut().zip(arcs) {
        e.flow = r.flow_on(a);
    }
    value
}

/// Lower-bound elimination: every edge keeps `cap - lower` residual room and
/// the lower bounds become vertex demands served from a super source `S` and
/// drained into a super sink `T`.
struct Reduction {
    r: Residual,
    arcs: Vec<usize>,
    s: usize,
    t: usize,
    demand: i64,
}

fn reduce(net: &FlowNetwork) -> Result<Reduction, TsgError> {
    let n = net.n;
    let mut r = Residual::new(n + 2);
    let mut excess = vec![0i64; n];
    let mut arcs = Vec::with_capacity(net.edges.len());
    for (id, e) in net.edges.iter().enumerate() {
        if e.lower < 0 || e.lower > e.cap {
            return Err(TsgError::Infeasible(format!(
                "edge {id} has bounds [{}, {}]",
                e.lower, e.cap
            )));
        }
        arcs.push(r.add(e.from, e.to, e.cap - e.lower, e.cost));
        excess[e.to] += e.lower;
        excess[e.from] -= e.lower;
    }
    let (s, t) = (n, n + 1);
    let mut demand = 0;
    for (v, &x) in excess.iter().enumerate() {
        if x > 0 {
            r.add(s, v, x, 0);
            demand += x;
        } else if x < 0 {
            r.add(v, t, -x, 0);
        }
    }
    Ok(Reduction { r, arcs, s, t, demand })
}

fn write_back(net: &mut FlowNetwork, red: &Reduction) {
    for (e, &a) in net.edges.iter_mut().zip(&red.arcs) {
        e.flow = e.lower + red.r.flow_on(a);
    }
}

/// Finds a feasible circulation (any one) and writes it into `net`.
pub fn solve_circulation(net: &mut FlowNetwork) -> Result<(), TsgError> {
    let mut red = reduce(net)?;
    let (s, t) = (red.s, red.t);
    let pushed = red.r.dinic(s, t, |_, _| true);
    if pushed < red.demand {
        return Err(TsgError::Infeasible(format!(
            "routed {pushed} of {} demand units",
            red.demand
        )));
    }
    write_back(net, &red);
    Ok(())
}

/// Finds a feasible circulation of minimum total cost and writes it into
/// `net`; returns that cost. Costs must be non-negative.
///
/// Primal-dual successive shortest paths: each phase computes reduced-cost
/// distances from the super source with Dijkstra, lifts the potentials, and
/// saturates the zero-reduced-cost subgraph with a Dinic max flow.
pub fn min_cost_circulation(net: &mut FlowNetwork) -> Result<i64, TsgError> {
    if let Some(id) = net.edges.iter().position(|e| e.cost < 0) {
        return Err(TsgError::Infeasible(format!("edge {id} has negative cost")));
    }
    let mut red = reduce(net)?;
    let (s, t) = (red.s, red.t);
    let n = red.r.n();
    let mut h = vec![0i64; n];
    let mut pushed = 0;
    while pushed < red.demand {
        let dist = dijkstra(&red.r, s, &h);
        let Some(dt) = dist[t] else { break };
        for v in 0..n {
            h[v] += dist[v].map_or(dt, |d| d.min(dt));
        }
        let phase = red.r.dinic(s, t, |r, a| r.cost[a] + h[r.from(a)] - h[r.to[a]] == 0);
        if phase == 0 {
            break;
        }
        pushed += phase;
    }
    if pushed < red.demand {
        return Err(TsgError::Infeasible(format!(
            "routed {pushed} of {} demand units",
            red.demand
        )));
    }
    write_back(net, &red);
    Ok(net.total_cost())
}

fn dijkstra(r: &Residual, s: usize, h: &[i64]) -> Vec<Option<i64>> {
    let mut dist: Vec<Option<i64>> = vec![None; r.n()];
    let mut heap = BinaryHeap::new();
    dist[s] = Some(0);
    heap.push(Reverse((0i64, s)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if dist[u] != Some(d) {
            continue;
        }
        for &a in &r.adj[u] {
            if r.cap[a] <= 0 {
                continue;
            }
            let v = r.to[a];
            let nd = d + r.cost[a] + h[u] - h[v];
            if dist[v].is_none_or(|old| nd < old) {
                dist[v] = Some(nd);
                heap.push(Reverse((nd, v)));
            }
        }
    }
    dist
}
