//! Primal transportation simplex with u-v potentials.
//!
//! Entering and leaving cells are chosen by Bland's rule (lowest row-major
//! index), so runs are deterministic and cannot cycle. The basis is a
//! spanning tree on `m + n` nodes; rows are nodes `0..m`, columns `m..m+n`.

use serde::Serialize;

use super::TransportError;
use crate::spaces::{DiscreteMeasure, TransportPlan};

/// Reduced costs above `-REDUCED_COST_TOLERANCE * max(1, max |c|)` count as
/// nonnegative.
pub const REDUCED_COST_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OTResult {
    pub plan: TransportPlan,
    /// `sum_ij q_ij c_ij`, summed in row-major order.
    pub cost: f64,
    /// `max(|primal - dual|, worst negative reduced cost) / max(1, max |c|)`.
    pub certificate: f64,
}

/// Solver state for fixed marginals. Flows of a basis depend only on the
/// marginals, so the optimal basis for one cost matrix is a feasible warm
/// start for the next.
#[derive(Debug, Clone)]
pub struct OtSolver {
    m: usize,
    n: usize,
    basis: Vec<(usize, usize)>,
    flow: Vec<f64>,
    pivots: usize,
}

impl OtSolver {
    pub fn new(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Self {
        let (basis, flow) = north_west_corner(mu.weights(), nu.weights());
        Self {
            m: mu.len(),
            n: nu.len(),
            basis,
            flow,
            pivots: 0,
        }
    }

    /// Total pivots over all solves so far.
    pub fn pivots(&self) -> usize {
        self.pivots
    }

    /// Solves for row-major `cost` of shape `m x n`, starting from the
    /// current basis.
    pub fn solve(&mut self, cost: &[f64]) -> Result<OTResult, TransportError> {
        let (m, n) = (self.m, self.n);
        if cost.len() != m * n {
            return Err(TransportError::Dimension {
                expected: (m, n),
                got: cost.len(),
            });
        }
        if let Some(k) = cost.iter().position(|c| !c.is_finite()) {
            return Err(TransportError::NonFiniteCost { i: k / n, j: k % n });
        }
        let scale = cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
        let eps = REDUCED_COST_TOLERANCE * scale;
        let limit = 50 * (m * n + m + n) + 1000;
        let mut u = vec![0.0; m];
        let mut v = vec![0.0; n];
        let mut tree = Tree::new(m + n);
        let mut steps = 0;
        loop {
            tree.rebuild(&self.basis, m);
            tree.potentials(&self.basis, cost, n, m, &mut u, &mut v);
            let entering = (0..m * n).find(|&k| {
                let (i, j) = (k / n, k % n);
                cost[k] - u[i] - v[j] < -eps
            });
            let Some(k) = entering else { break };
            if steps == limit {
                return Err(TransportError::Stalled { pivots: steps });
            }
            self.pivot(&tree, (k / n, k % n));
            steps += 1;
        }
        self.pivots += steps;

        let mut q = vec![0.0; m * n];
        for (&(i, j), &x) in self.basis.iter().zip(&self.flow) {
            q[i * n + j] = x;
        }
        let plan = TransportPlan::unchecked(m, n, q);
        let primal = plan.cost(cost);
        let dual: f64 = plan.row_marginal().iter().zip(&u).map(|(a, ui)| a * ui).sum::<f64>()
            + plan.col_marginal().iter().zip(&v).map(|(b, vj)| b * vj).sum::<f64>();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in 0..n {
                worst = worst.max(u[i] + v[j] - cost[i * n + j]);
            }
        }
        Ok(OTResult {
            plan,
            cost: primal,
            certificate: (primal - dual).abs().max(worst) / scale,
        })
    }

    fn pivot(&mut self, tree: &Tree, (ei, ej): (usize, usize)) {
        let m = self.m;
        // tree path from column node of the entering cell back to its row node
        let path = tree.path(m + ej, ei);
        // path[0] touches column ej and loses flow; signs then alternate
        let mut leave = usize::MAX;
        let mut theta = f64::INFINITY;
        let mut leave_key = usize::MAX;
        for (pos, &b) in path.iter().enumerate() {
            if pos % 2 == 0 {
                let x = self.flow[b];
                let (i, j) = self.basis[b];
                let key = i * self.n + j;
                if x < theta || (x == theta && key < leave_key) {
                    theta = x;
                    leave = b;
                    leave_key = key;
                }
            }
        }
        for (pos, &b) in path.iter().enumerate() {
            if pos % 2 == 0 {
                self.flow[b] = if b == leave { 0.0 } else { self.flow[b] - theta };
            } else {
                self.flow[b] += theta;
            }
        }
        self.basis[leave] = (ei, ej);
        self.flow[leave] = theta;
    }
}

/// Spanning-tree view of a basis, rebuilt before each pivot.
struct Tree {
    adj: Vec<Vec<(usize, usize)>>,
    parent: Vec<(usize, usize)>,
    order: Vec<usize>,
}

impl Tree {
    fn new(nodes: usize) -> Self {
        Self {
            adj: vec![Vec::new(); nodes],
            parent: vec![(usize::MAX, usize::MAX); nodes],
            order: Vec::with_capacity(nodes),
        }
    }

    fn rebuild(&mut self, basis: &[(usize, usize)], m: usize) {
        for a in &mut self.adj {
            a.clear();
        }
        for (b, &(i, j)) in basis.iter().enumerate() {
            self.adj[i].push((m + j, b));
            self.adj[m + j].push((i, b));
        }
        // rooted at row 0; parent[node] = (parent node, basis cell)
        self.parent.fill((usize::MAX, usize::MAX));
        self.order.clear();
        self.order.push(0);
        self.parent[0] = (0, usize::MAX);
        let mut head = 0;
        while head < self.order.len() {
            let x = self.order[head];
            head += 1;
            for &(y, b) in &self.adj[x] {
                if self.parent[y].0 == usize::MAX {
                    self.parent[y] = (x, b);
                    self.order.push(y);
                }
            }
        }
        debug_assert_eq!(self.order.len(), self.adj.len(), "basis is not a spanning tree");
    }

    fn potentials(&self, basis: &[(usize, usize)], cost: &[f64], n: usize, m: usize, u: &mut [f64], v: &mut [f64]) {
        u[0] = 0.0;
        for &x in &self.order[1..] {
            let (p, b) = self.parent[x];
            let (i, j) = basis[b];
            let c = cost[i * n + j];
            if x >= m {
                v[x - m] = c - u[p];
            } else {
                u[x] = c - v[p - m];
            }
        }
    }

    fn depth(&self, mut x: usize) -> usize {
        let mut d = 0;
        while x != 0 {
            x = self.parent[x].0;
            d += 1;
        }
        d
    }

    /// Basis cells on the tree path from node `a` to node `b`, in order.
    fn path(&self, a: usize, b: usize) -> Vec<usize> {
        let (mut x, mut y) = (a, b);
        let (mut dx, mut dy) = (self.depth(x), self.depth(y));
        let mut from_a = Vec::new();
        let mut from_b = Vec::new();
        while dx > dy {
            from_a.push(self.parent[x].1);
            x = self.parent[x].0;
            dx -= 1;
        }
        while dy > dx {
            from_b.push(self.parent[y].1);
            y = self.parent[y].0;
            dy -= 1;
        }
        while x != y {
            from_a.push(self.parent[x].1);
            x = self.parent[x].0;
            from_b.push(self.parent[y].1);
            y = self.parent[y].0;
        }
        from_a.extend(from_b.into_iter().rev());
        from_a
    }
}

/// Initial basic feasible solution with exactly `m + n - 1` basic cells.
fn north_west_corner(a: &[f64], b: &[f64]) -> (Vec<(usize, usize)>, Vec<f64>) {
    let (m, n) = (a.len(), b.len());
    let mut supply = a.to_vec();
    let mut demand = b.to_vec();
    let mut basis = Vec::with_capacity(m + n - 1);
    let mut flow = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        let x = if i == m - 1 && j == n - 1 {
            supply[i].max(0.0)
        } else {
            supply[i].min(demand[j]).max(0.0)
        };
        basis.push((i, j));
        flow.push(x);
        supply[i] -= x;
        demand[j] -= x;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if j == n - 1 || (i < m - 1 && supply[i] <= demand[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }
    (basis, flow)
}

/// Minimum-cost coupling of `mu` and `nu` for row-major `cost`.
pub fn solve_ot(cost: &[f64], mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<OTResult, TransportError> {
    OtSolver::new(mu, nu).solve(cost)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize) -> DiscreteMeasure {
        DiscreteMeasure::uniform(n)
    }

    #[test]
    fn north_west_corner_spans() {
        let (basis, flow) = north_west_corner(&[0.5, 0.0, 0.5], &[0.25, 0.75]);
        assert_eq!(basis.len(), 4);
        let total: f64 = flow.iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identical_measures_cost_nothing() {
        let mu = DiscreteMeasure::new(vec![0.2, 0.3, 0.5]).unwrap();
        let cost = [0.0, 4.0, 1.0, 2.0, 0.0, 3.0, 5.0, 1.0, 0.0];
        let r = solve_ot(&cost, &mu, &mu).unwrap();
        assert_eq!(r.cost, 0.0);
        assert_eq!(r.plan.get(2, 2), 0.5);
    }

    #[test]
    fn three_point_permutation() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let r = solve_ot(&cost, &uniform(3), &uniform(3)).unwrap();
        assert!((r.cost - 5.0 / 3.0).abs() < 1e-15);
        assert!(r.certificate <= 1e-12);
        let third = 1.0 / 3.0;
        assert_eq!((r.plan.get(0, 1), r.plan.get(1, 0), r.plan.get(2, 2)), (third, third, third));
    }

    #[test]
    fn warm_start_matches_cold_start() {
        let mu = DiscreteMeasure::new(vec![0.1, 0.4, 0.3, 0.2]).unwrap();
        let nu = DiscreteMeasure::new(vec![0.25, 0.25, 0.25, 0.25]).unwrap();
        let c1: Vec<f64> = (0..16).map(|k| ((k * 7) % 11) as f64).collect();
        let c2: Vec<f64> = (0..16).map(|k| ((k * 5) % 13) as f64).collect();
        let mut solver = OtSolver::new(&mu, &nu);
        solver.solve(&c1).unwrap();
        let warm = solver.solve(&c2).unwrap();
        let cold = solve_ot(&c2, &mu, &nu).unwrap();
        assert!((warm.cost - cold.cost).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_costs() {
        let u = uniform(2);
        assert!(matches!(
            solve_ot(&[0.0, f64::NAN, 1.0, 0.0], &u, &u),
            Err(TransportError::NonFiniteCost { i: 0, j: 1 })
        ));
        assert!(matches!(solve_ot(&[0.0; 3], &u, &u), Err(TransportError::Dimension { .. })));
    }
}
