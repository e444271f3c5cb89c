//! Exact discrete optimal transport between height-map distributions.
//!
//! [`solve_ot`] solves the balanced transportation problem
//!
//! ```text
//! min   sum_ij T_ij c_ij
//! s.t.  T >= 0,  sum_j T_ij = a_i,  sum_i T_ij = b_j
//! ```
//!
//! with a primal network simplex over the bipartite source/target graph.
//! Zero-weight cells are dropped before the solve. The returned
//! [`TransportPlan`] is a vertex of the transportation polytope, so it has at
//! most `N_S + N_T - 1` positive entries, and it carries a dual certificate.

mod oracle;
mod simplex;

pub use oracle::{brute_force_ot, ORACLE_MAX_SIDE};

use std::fmt::Write as _;

use thiserror::Error;

use crate::grid::{GridGeometry, NormalizedDistribution, NORMALIZATION_TOL};

/// Largest tolerated difference between the two distribution sums.
pub const BALANCE_TOL: f64 = 1e-6;
/// Feasibility and optimality tolerance for returned plans.
pub const PLAN_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum OtError {
    #[error("dimension mismatch: cost is {cost_rows}x{cost_cols}, distributions have {source_len} and {target_len} cells")]
    DimensionMismatch {
        cost_rows: usize,
        cost_cols: usize,
        source_len: usize,
        target_len: usize,
    },
    #[error("unbalanced mass: source sums to {source_sum}, target to {target_sum}")]
    UnbalancedMass { source_sum: f64, target_sum: f64 },
    #[error("ground cost exponent must be >= 1, got {0}")]
    InvalidExponent(f64),
    #[error("oracle supports at most {max}x{max} problems, got {rows}x{cols}")]
    TooLarge {
        rows: usize,
        cols: usize,
        max: usize,
    },
    #[error("distribution is empty or does not sum to one")]
    NotNormalized,
    #[error("network simplex did not converge after {0} pivots")]
    NoConvergence(usize),
}

pub type Result<T, E = OtError> = std::result::Result<T, E>;

/// Dense `N_S x N_T` matrix of per-unit transport costs.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundCost {
    source_geometry: GridGeometry,
    target_geometry: GridGeometry,
    rows: usize,
    cols: usize,
    p: f64,
    costs: Vec<f64>,
}

impl GroundCost {
    /// Builds a cost matrix from explicit values, for problems that do not
    /// come from cell-center distances. Geometries only record the shape.
    pub fn from_matrix(
        source_geometry: GridGeometry,
        target_geometry: GridGeometry,
        costs: Vec<f64>,
    ) -> Result<Self> {
        let (rows, cols) = (source_geometry.len(), target_geometry.len());
        if costs.len() != rows * cols {
            return Err(OtError::DimensionMismatch {
                cost_rows: costs.len() / cols.max(1),
                cost_cols: cols,
                source_len: rows,
                target_len: cols,
            });
        }
        Ok(Self {
            source_geometry,
            target_geometry,
            rows,
            cols,
            p: 1.0,
            costs,
        })
    }

    pub fn source_geometry(&self) -> &GridGeometry {
        &self.source_geometry
    }

    pub fn target_geometry(&self) -> &GridGeometry {
        &self.target_geometry
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.costs[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.costs
    }
}

/// `c_ij = |X_S,i - X_T,j|^p`.
///
/// The exponent sits on the distance, and [`emd`] takes the `1/p` root of
/// the optimal cost. For `p = 1` this is the Euclidean earth mover's cost.
pub fn ground_cost(source: &GridGeometry, target: &GridGeometry, p: f64) -> Result<GroundCost> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(OtError::InvalidExponent(p));
    }
    let (rows, cols) = (source.len(), target.len());
    let targets: Vec<_> = target.centers().collect();
    let mut costs = Vec::with_capacity(rows * cols);
    for xs in source.centers() {
        for &xt in &targets {
            let d = xs.distance(xt);
            costs.push(if p == 1.0 { d } else { d.powf(p) });
        }
    }
    Ok(GroundCost {
        source_geometry: *source,
        target_geometry: *target,
        rows,
        cols,
        p,
        costs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportEntry {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

/// Dual potentials `(u, v)` with `c_ij - u_i - v_j >= 0` everywhere and
/// equality on the plan's support.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPotentials {
    pub source: Vec<f64>,
    pub target: Vec<f64>,
}

/// Sparse coupling between a source and a target distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    entries: Vec<TransportEntry>,
    cost: f64,
    source_marginal: Vec<f64>,
    target_marginal: Vec<f64>,
    duals: Option<DualPotentials>,
}

impl TransportPlan {
    /// Builds a plan from explicit entries; zero-mass entries are dropped
    /// and the cost is recomputed from `cost`.
    pub fn from_entries(
        entries: Vec<TransportEntry>,
        cost: &GroundCost,
        source_marginal: Vec<f64>,
        target_marginal: Vec<f64>,
    ) -> Self {
        let entries: Vec<_> = entries.into_iter().filter(|e| e.mass > 0.0).collect();
        let total = entries
            .iter()
            .map(|e| e.mass * cost.get(e.source, e.target))
            .sum();
        Self {
            entries,
            cost: total,
            source_marginal,
            target_marginal,
            duals: None,
        }
    }

    pub fn entries(&self) -> &[TransportEntry] {
        &self.entries
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn source_marginal(&self) -> &[f64] {
        &self.source_marginal
    }

    pub fn target_marginal(&self) -> &[f64] {
        &self.target_marginal
    }

    pub fn duals(&self) -> Option<&DualPotentials> {
        self.duals.as_ref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.mass).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.source_marginal.len()];
        for e in &self.entries {
            sums[e.source] += e.mass;
        }
        sums
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.target_marginal.len()];
        for e in &self.entries {
            sums[e.target] += e.mass;
        }
        sums
    }

    /// Largest absolute violation of either marginal constraint.
    pub fn marginal_violation(&self) -> f64 {
        let rows = self
            .row_sums()
            .into_iter()
            .zip(&self.source_marginal)
            .map(|(s, a)| (s - a).abs());
        let cols = self
            .column_sums()
            .into_iter()
            .zip(&self.target_marginal)
            .map(|(s, b)| (s - b).abs());
        rows.chain(cols).fold(0.0, f64::max)
    }

    /// Every mass multiplied by `factor`; used to check scale invariance of
    /// downstream scoring. Marginals and cost scale along.
    pub fn scaled(&self, factor: f64) -> TransportPlan {
        TransportPlan {
            entries: self
                .entries
                .iter()
                .map(|e| TransportEntry {
                    mass: e.mass * factor,
                    ..*e
                })
                .collect(),
            cost: self.cost * factor,
            source_marginal: self.source_marginal.iter().map(|a| a * factor).collect(),
            target_marginal: self.target_marginal.iter().map(|b| b * factor).collect(),
            duals: None,
        }
    }

    /// `i,j,mass` rows, one per positive entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,mass\n");
        for e in &self.entries {
            let _ = writeln!(out, "{},{},{}", e.source, e.target, e.mass);
        }
        out
    }
}

/// Optimal transport plan between `source` and `target` under `cost`.
pub fn solve_ot(
    source: &NormalizedDistribution,
    target: &NormalizedDistribution,
    cost: &GroundCost,
) -> Result<TransportPlan> {
    solve_weights(source.weights(), target.weights(), cost)
}

/// [`solve_ot`] on raw weight vectors. Both must sum to one within the
/// normalization tolerance and to each other within [`BALANCE_TOL`].
pub fn solve_weights(source: &[f64], target: &[f64], cost: &GroundCost) -> Result<TransportPlan> {
    check_problem(source, target, cost)?;
    let rows: Vec<usize> = (0..source.len()).filter(|&i| source[i] > 0.0).collect();
    let cols: Vec<usize> = (0..target.len()).filter(|&j| target[j] > 0.0).collect();
    let supply: Vec<f64> = rows.iter().map(|&i| source[i]).collect();
    let demand: Vec<f64> = cols.iter().map(|&j| target[j]).collect();
    let mut sub_cost = Vec::with_capacity(rows.len() * cols.len());
    for &i in &rows {
        let row = &cost.costs[i * cost.cols..(i + 1) * cost.cols];
        sub_cost.extend(cols.iter().map(|&j| row[j]));
    }

    let solution = simplex::solve(&supply, &demand, &sub_cost)?;

    let mut entries: Vec<TransportEntry> = solution
        .flows
        .iter()
        .map(|&(r, c, mass)| TransportEntry {
            source: rows[r],
            target: cols[c],
            mass,
        })
        .collect();
    entries.sort_by_key(|e| (e.source, e.target));
    let total = entries
        .iter()
        .map(|e| e.mass * cost.get(e.source, e.target))
        .sum();
    let duals = complete_duals(
        cost,
        &rows,
        &cols,
        &solution.row_potential,
        &solution.col_potential,
    );

    Ok(TransportPlan {
        entries,
        cost: total,
        source_marginal: source.to_vec(),
        target_marginal: target.to_vec(),
        duals: Some(duals),
    })
}

/// `W_p = OT(source, target; C_p)^(1/p)`, in meters.
pub fn emd(
    source: &NormalizedDistribution,
    target: &NormalizedDistribution,
    p: f64,
) -> Result<f64> {
    let cost = ground_cost(source.geometry(), target.geometry(), p)?;
    let plan = solve_ot(source, target, &cost)?;
    Ok(wasserstein_from_cost(plan.cost(), p))
}

pub(crate) fn wasserstein_from_cost(cost: f64, p: f64) -> f64 {
    let c = cost.max(0.0);
    if p == 1.0 {
        c
    } else {
        c.powf(1.0 / p)
    }
}

pub(crate) fn check_problem(source: &[f64], target: &[f64], cost: &GroundCost) -> Result<()> {
    if cost.rows != source.len() || cost.cols != target.len() {
        return Err(OtError::DimensionMismatch {
            cost_rows: cost.rows,
            cost_cols: cost.cols,
            source_len: source.len(),
            target_len: target.len(),
        });
    }
    let source_sum: f64 = source.iter().sum();
    let target_sum: f64 = target.iter().sum();
    if source
        .iter()
        .chain(target)
        .any(|w| !w.is_finite() || *w < 0.0)
    {
        return Err(OtError::NotNormalized);
    }
    if (source_sum - target_sum).abs() > BALANCE_TOL {
        return Err(OtError::UnbalancedMass {
            source_sum,
            target_sum,
        });
    }
    // Balanced but not a probability vector.
    if (source_sum - 1.0).abs() > BALANCE_TOL.max(NORMALIZATION_TOL) {
        return Err(OtError::NotNormalized);
    }
    Ok(())
}

/// Extends the solver's potentials on the active sub-problem to every cell so
/// that `c_ij - u_i - v_j >= 0` holds on the full matrix.
fn complete_duals(
    cost: &GroundCost,
    rows: &[usize],
    cols: &[usize],
    row_pot: &[f64],
    col_pot: &[f64],
) -> DualPotentials {
    let mut u = vec![f64::NAN; cost.rows];
    let mut v = vec![f64::NAN; cost.cols];
    // Shift so the first active source carries u = 0.
    let shift = row_pot.first().copied().unwrap_or(0.0);
    for (k, &i) in rows.iter().enumerate() {
        u[i] = row_pot[k] - shift;
    }
    for (k, &j) in cols.iter().enumerate() {
        v[j] = col_pot[k] + shift;
    }
    for (i, ui) in u.iter_mut().enumerate() {
        if ui.is_nan() {
            *ui = cols
                .iter()
                .map(|&j| cost.get(i, j) - v[j])
                .fold(f64::INFINITY, f64::min);
        }
    }
    for (j, vj) in v.iter_mut().enumerate() {
        if vj.is_nan() {
            *vj = u
                .iter()
                .enumerate()
                .map(|(i, ui)| cost.get(i, j) - ui)
                .fold(f64::INFINITY, f64::min);
        }
    }
    DualPotentials {
        source: u,
        target: v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;

    fn line(n: usize, spacing: f64) -> GridGeometry {
        GridGeometry::new(n, 1, spacing, Vec2::ZERO).unwrap()
    }

    fn dist(g: GridGeometry, w: Vec<f64>) -> NormalizedDistribution {
        NormalizedDistribution::from_weights(g, w).unwrap()
    }

    #[test]
    fn ground_cost_examples() {
        let g = GridGeometry::square(3, 0.02).unwrap();
        let c1 = ground_cost(&g, &g, 1.0).unwrap();
        let c2 = ground_cost(&g, &g, 2.0).unwrap();
        for i in 0..g.len() {
            assert_eq!(c1.get(i, i), 0.0);
        }
        assert!((c1.get(0, 1) - 0.02).abs() < 1e-15);
        assert!((c2.get(0, 1) - 0.0004).abs() < 1e-15);
        assert!(matches!(
            ground_cost(&g, &g, 0.5),
            Err(OtError::InvalidExponent(_))
        ));
        for i in 0..g.len() {
            for j in 0..g.len() {
                assert_eq!(c1.get(i, j), c1.get(j, i));
                assert_eq!(c1.get(i, j) == 0.0, i == j);
            }
        }
    }

    #[test]
    fn identical_distributions_cost_nothing() {
        let g = GridGeometry::square(3, 0.1).unwrap();
        let a = dist(g, vec![0.1, 0.2, 0.0, 0.05, 0.15, 0.1, 0.1, 0.2, 0.1]);
        let plan = solve_ot(&a, &a, &ground_cost(&g, &g, 1.0).unwrap()).unwrap();
        assert!(plan.cost().abs() < 1e-12);
        assert_eq!(emd(&a, &a, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn single_feasible_plan() {
        let g = line(2, 0.1);
        let plan = solve_ot(
            &dist(g, vec![1.0, 0.0]),
            &dist(g, vec![0.0, 1.0]),
            &ground_cost(&g, &g, 1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(
            plan.entries(),
            &[TransportEntry {
                source: 0,
                target: 1,
                mass: 1.0
            }]
        );
        assert!((plan.cost() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn split_onto_collinear_cell() {
        // Vertex enumeration of the 3x3 polytope: target column 2 receives
        // all mass, so the only feasible plan is {(0,2): .5, (1,2): .5}.
        let g = line(3, 0.1);
        let a = dist(g, vec![0.5, 0.5, 0.0]);
        let b = dist(g, vec![0.0, 0.0, 1.0]);
        let plan = solve_ot(&a, &b, &ground_cost(&g, &g, 1.0).unwrap()).unwrap();
        assert!((plan.cost() - 0.15).abs() < 1e-12);
    }

    #[test]
    fn input_validation() {
        let g = line(2, 0.1);
        let g3 = line(3, 0.1);
        let a = dist(g, vec![0.5, 0.5]);
        let b3 = dist(g3, vec![0.2, 0.3, 0.5]);
        let c = ground_cost(&g, &g, 1.0).unwrap();
        assert!(matches!(
            solve_ot(&a, &b3, &c),
            Err(OtError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            solve_weights(&[0.5, 0.5], &[0.5, 0.49], &c),
            Err(OtError::UnbalancedMass { .. })
        ));
    }

    #[test]
    fn plan_csv_dump() {
        let g = line(2, 0.1);
        let plan = solve_ot(
            &dist(g, vec![1.0, 0.0]),
            &dist(g, vec![0.0, 1.0]),
            &ground_cost(&g, &g, 1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(plan.to_csv(), "i,j,mass\n0,1,1\n");
    }

    #[test]
    fn p2_takes_root_of_cost() {
        let g = line(2, 0.1);
        let w = emd(&dist(g, vec![1.0, 0.0]), &dist(g, vec![0.0, 1.0]), 2.0).unwrap();
        assert!((w - 0.1).abs() < 1e-12);
    }
}
