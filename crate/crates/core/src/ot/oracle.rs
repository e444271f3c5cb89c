//! Exhaustive basis enumeration for tiny transportation problems.
//!
//! Every vertex of the transportation polytope is a basic feasible solution
//! whose basis is a spanning tree of the complete bipartite graph on the
//! `m + n` row/column nodes. The oracle tries every `(m + n - 1)`-edge
//! subset of the `m x n` cells, keeps those forming a spanning tree, solves
//! the flows by peeling leaves, and returns the cheapest nonnegative one.
//! It shares nothing with the network simplex and exists to check it.

use super::{check_problem, GroundCost, OtError, Result, TransportEntry, TransportPlan};

/// Largest number of rows or columns the oracle accepts.
pub const ORACLE_MAX_SIDE: usize = 4;

const NEGATIVE_FLOW_TOL: f64 = 1e-12;

pub fn brute_force_ot(source: &[f64], target: &[f64], cost: &GroundCost) -> Result<TransportPlan> {
    let (m, n) = (source.len(), target.len());
    if m > ORACLE_MAX_SIDE || n > ORACLE_MAX_SIDE {
        return Err(OtError::TooLarge {
            rows: m,
            cols: n,
            max: ORACLE_MAX_SIDE,
        });
    }
    check_problem(source, target, cost)?;

    let cells = m * n;
    let basis_size = m + n - 1;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1u32 << cells) {
        if mask.count_ones() as usize != basis_size {
            continue;
        }
        let edges: Vec<(usize, usize)> = (0..cells)
            .filter(|k| mask & (1 << k) != 0)
            .map(|k| (k / n, k % n))
            .collect();
        if !is_spanning_tree(m, n, &edges) {
            continue;
        }
        let Some(flows) = tree_flows(source, target, &edges) else {
            continue;
        };
        let total: f64 = edges
            .iter()
            .zip(&flows)
            .map(|(&(i, j), f)| f * cost.get(i, j))
            .sum();
        if best.as_ref().is_none_or(|(c, _)| total < *c) {
            let mut dense = vec![0.0; cells];
            for (&(i, j), f) in edges.iter().zip(&flows) {
                dense[i * n + j] = *f;
            }
            best = Some((total, dense));
        }
    }

    let (_, dense) = best.expect("a balanced transportation problem always has a vertex");
    let entries = dense
        .iter()
        .enumerate()
        .filter(|(_, f)| **f > 0.0)
        .map(|(k, &mass)| TransportEntry {
            source: k / n,
            target: k % n,
            mass,
        })
        .collect();
    Ok(TransportPlan::from_entries(
        entries,
        cost,
        source.to_vec(),
        target.to_vec(),
    ))
}

fn is_spanning_tree(m: usize, n: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..m + n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(i, j) in edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, m + j));
        if a == b {
            return false;
        }
        parent[a] = b;
    }
    // m + n - 1 acyclic edges on m + n nodes form a spanning tree.
    true
}

/// Unique flows on a spanning-tree basis, or `None` if any is negative.
fn tree_flows(source: &[f64], target: &[f64], edges: &[(usize, usize)]) -> Option<Vec<f64>> {
    let m = source.len();
    let mut residual: Vec<f64> = source.iter().chain(target).copied().collect();
    let mut degree = vec![0usize; residual.len()];
    for &(i, j) in edges {
        degree[i] += 1;
        degree[m + j] += 1;
    }
    let mut flows = vec![f64::NAN; edges.len()];
    let mut done = vec![false; edges.len()];
    for _ in 0..edges.len() {
        let (k, leaf) = edges
            .iter()
            .enumerate()
            .filter(|(k, _)| !done[*k])
            .find_map(|(k, &(i, j))| {
                if degree[i] == 1 {
                    Some((k, i))
                } else if degree[m + j] == 1 {
                    Some((k, m + j))
                } else {
                    None
                }
            })?;
        let (i, j) = edges[k];
        let other = if leaf == i { m + j } else { i };
        let f = residual[leaf];
        flows[k] = f;
        residual[other] -= f;
        residual[leaf] = 0.0;
        degree[i] -= 1;
        degree[m + j] -= 1;
        done[k] = true;
    }
    if flows.iter().any(|f| *f < -NEGATIVE_FLOW_TOL) {
        return None;
    }
    Some(flows.into_iter().map(|f| f.max(0.0)).collect())
}
