//! Primal network simplex for the balanced transportation problem.
//!
//! Nodes `0..m` are sources, `m..m+n` are sinks and node `m+n` is an
//! artificial root. Real arcs run source to sink with the given costs and no
//! capacity. Every node is also joined to the root by an artificial arc of
//! big-M cost; those arcs form the initial spanning tree
//! (source to root carrying the supply, root to sink carrying the demand).
//! All supplies and demands are positive, so that tree is strongly feasible
//! and the leaving-arc rule below keeps it so, which rules out cycling on
//! degenerate pivots. Entering arcs are chosen by block search.
//!
//! The tree's parent pointers, depths and potentials are rebuilt from an
//! adjacency list after each pivot. That costs O(m + n) per pivot, which is
//! small next to pricing for the grid sizes this crate targets.

use std::collections::VecDeque;

use super::{OtError, Result};

const NONE: usize = usize::MAX;
const PIVOT_LIMIT_FACTOR: usize = 64;

pub(crate) struct NetworkSolution {
    /// `(row, col, mass)` for every positive flow.
    pub flows: Vec<(usize, usize, f64)>,
    /// `u` with reduced cost `c_ij - u_i - v_j`.
    pub row_potential: Vec<f64>,
    pub col_potential: Vec<f64>,
}

struct Network<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    art_cost: f64,
    flow: Vec<f64>,
    in_tree: Vec<bool>,
    adjacency: Vec<Vec<usize>>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    /// `pred[u]` is oriented from `u` towards its parent.
    pred_up: Vec<bool>,
    depth: Vec<usize>,
    pi: Vec<f64>,
    queue: VecDeque<usize>,
}

impl<'a> Network<'a> {
    fn root(&self) -> usize {
        self.m + self.n
    }

    fn real_arcs(&self) -> usize {
        self.m * self.n
    }

    fn endpoints(&self, arc: usize) -> (usize, usize) {
        let real = self.real_arcs();
        if arc < real {
            (arc / self.n, self.m + arc % self.n)
        } else {
            let u = arc - real;
            if u < self.m {
                (u, self.root())
            } else {
                (self.root(), u)
            }
        }
    }

    fn arc_cost(&self, arc: usize) -> f64 {
        if arc < self.real_arcs() {
            self.cost[arc]
        } else {
            self.art_cost
        }
    }

    fn reduced_cost(&self, arc: usize) -> f64 {
        let (s, t) = self.endpoints(arc);
        self.arc_cost(arc) + self.pi[s] - self.pi[t]
    }

    fn rebuild_tree(&mut self) {
        let root = self.root();
        self.parent[root] = NONE;
        self.pred[root] = NONE;
        self.depth[root] = 0;
        self.pi[root] = 0.0;
        self.queue.clear();
        self.queue.push_back(root);
        while let Some(u) = self.queue.pop_front() {
            for k in 0..self.adjacency[u].len() {
                let arc = self.adjacency[u][k];
                if arc == self.pred[u] {
                    continue;
                }
                let (s, t) = self.endpoints(arc);
                let (child, up) = if s == u { (t, false) } else { (s, true) };
                self.parent[child] = u;
                self.pred[child] = arc;
                self.pred_up[child] = up;
                self.depth[child] = self.depth[u] + 1;
                let c = self.arc_cost(arc);
                // Tree arcs have zero reduced cost: c + pi[s] - pi[t] = 0.
                self.pi[child] = if up { self.pi[u] - c } else { self.pi[u] + c };
                self.queue.push_back(child);
            }
        }
    }

    fn join(&self, mut a: usize, mut b: usize) -> usize {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a];
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b];
        }
        while a != b {
            a = self.parent[a];
            b = self.parent[b];
        }
        a
    }

    /// Pushes flow around the cycle closed by `entering` and swaps the
    /// last blocking arc (in cycle order from the join) out of the tree.
    fn pivot(&mut self, entering: usize) {
        let (first, second) = self.endpoints(entering);
        let join = self.join(first, second);

        let mut delta = f64::INFINITY;
        let mut leaving_node = NONE;
        let mut u = first;
        while u != join {
            if self.pred_up[u] {
                let d = self.flow[self.pred[u]];
                if d < delta {
                    delta = d;
                    leaving_node = u;
                }
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != join {
            if !self.pred_up[u] {
                let d = self.flow[self.pred[u]];
                if d <= delta {
                    delta = d;
                    leaving_node = u;
                }
            }
            u = self.parent[u];
        }
        debug_assert!(
            leaving_node != NONE,
            "transportation cycles are always blocked"
        );

        if delta > 0.0 {
            self.flow[entering] += delta;
            let mut u = first;
            while u != join {
                let arc = self.pred[u];
                if self.pred_up[u] {
                    self.flow[arc] -= delta;
                } else {
                    self.flow[arc] += delta;
                }
                u = self.parent[u];
            }
            let mut u = second;
            while u != join {
                let arc = self.pred[u];
                if self.pred_up[u] {
                    self.flow[arc] += delta;
                } else {
                    self.flow[arc] -= delta;
                }
                u = self.parent[u];
            }
        }

        let leaving = self.pred[leaving_node];
        self.flow[leaving] = 0.0;
        self.set_tree(leaving, false);
        self.set_tree(entering, true);
        self.rebuild_tree();
    }

    fn set_tree(&mut self, arc: usize, present: bool) {
        if arc < self.real_arcs() {
            self.in_tree[arc] = present;
        }
        let (s, t) = self.endpoints(arc);
        for node in [s, t] {
            let adj = &mut self.adjacency[node];
            if present {
                adj.push(arc);
            } else if let Some(pos) = adj.iter().position(|&a| a == arc) {
                adj.swap_remove(pos);
            }
        }
    }
}

/// Solves the transportation problem for strictly positive `supply` and
/// `demand` with row-major `cost` of shape `supply.len() x demand.len()`.
pub(crate) fn solve(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<NetworkSolution> {
    let (m, n) = (supply.len(), demand.len());
    debug_assert_eq!(cost.len(), m * n);
    debug_assert!(supply.iter().chain(demand).all(|w| *w > 0.0));
    if m == 0 || n == 0 {
        return Ok(NetworkSolution {
            flows: Vec::new(),
            row_potential: vec![0.0; m],
            col_potential: vec![0.0; n],
        });
    }

    // Absorb the rounding-level imbalance into the demand side.
    let supply_sum: f64 = supply.iter().sum();
    let demand_sum: f64 = demand.iter().sum();
    let demand_scale = supply_sum / demand_sum;

    let node_count = m + n + 1;
    let max_cost = cost.iter().copied().fold(0.0, f64::max);
    let art_cost = (max_cost + 1.0) * node_count as f64;
    let epsilon = 1e-12 * art_cost;

    let real = m * n;
    let total_arcs = real + m + n;
    let mut net = Network {
        m,
        n,
        cost,
        art_cost,
        flow: vec![0.0; total_arcs],
        in_tree: vec![false; real],
        adjacency: vec![Vec::new(); node_count],
        parent: vec![NONE; node_count],
        pred: vec![NONE; node_count],
        pred_up: vec![false; node_count],
        depth: vec![0; node_count],
        pi: vec![0.0; node_count],
        queue: VecDeque::with_capacity(node_count),
    };
    for (i, &s) in supply.iter().enumerate() {
        net.flow[real + i] = s;
        net.set_tree(real + i, true);
    }
    for (j, &d) in demand.iter().enumerate() {
        net.flow[real + m + j] = d * demand_scale;
        net.set_tree(real + m + j, true);
    }
    net.rebuild_tree();

    let block = ((real as f64).sqrt().ceil() as usize).max(10).min(real);
    let pivot_limit = PIVOT_LIMIT_FACTOR * (real + node_count);
    let mut next_arc = 0usize;
    let mut pivots = 0usize;
    while let Some(entering) = find_entering(&net, &mut next_arc, block, epsilon) {
        net.pivot(entering);
        pivots += 1;
        if pivots > pivot_limit {
            return Err(OtError::NoConvergence(pivots));
        }
    }

    let mut flows = Vec::with_capacity(m + n - 1);
    for arc in 0..real {
        if net.in_tree[arc] && net.flow[arc] > 0.0 {
            flows.push((arc / n, arc % n, net.flow[arc]));
        }
    }
    Ok(NetworkSolution {
        flows,
        row_potential: net.pi[..m].iter().map(|p| -p).collect(),
        col_potential: net.pi[m..m + n].to_vec(),
    })
}

/// Block search: scan arcs cyclically from `next_arc`, one block at a time,
/// and return the most negative reduced cost found in the first block that
/// has any. `None` once a full pass finds nothing below `-epsilon`.
fn find_entering(
    net: &Network<'_>,
    next_arc: &mut usize,
    block: usize,
    epsilon: f64,
) -> Option<usize> {
    let real = net.real_arcs();
    let n = net.n;
    let mut best = NONE;
    let mut best_rc = -epsilon;
    let mut scanned_in_block = 0usize;
    let mut arc = *next_arc;
    for _ in 0..real {
        if !net.in_tree[arc] {
            let i = arc / n;
            let j = net.m + arc % n;
            let rc = net.cost[arc] + net.pi[i] - net.pi[j];
            if rc < best_rc {
                best_rc = rc;
                best = arc;
            }
        }
        arc += 1;
        if arc == real {
            arc = 0;
        }
        scanned_in_block += 1;
        if scanned_in_block == block {
            if best != NONE {
                *next_arc = arc;
                return Some(best);
            }
            scanned_in_block = 0;
        }
    }
    if best != NONE {
        *next_arc = arc;
        Some(best)
    } else {
        debug_assert!((0..real).all(|a| net.in_tree[a] || net.reduced_cost(a) >= -epsilon));
        None
    }
}
