//! Exact solver for the balanced transportation problem (transportation
//! simplex with u-v potentials on a spanning-tree basis).

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// An optimal transport plan and its total cost.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub cost: f64,
    /// Non-zero flows as (source, sink, mass).
    pub flows: Vec<(usize, usize, f64)>,
}

const BALANCE_TOL: f64 = 1e-9;

/// Minimises `Σ T_ij · cost[i][j]` subject to row sums `supply`, column sums
/// `demand` and `T ≥ 0`.
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> Result<TransportPlan> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 {
        return Err(Error::Empty("transport marginals"));
    }
    if cost.len() != m || cost.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidArgument(format!("cost matrix must be {m}×{n}")));
    }
    if supply.iter().chain(demand).any(|&w| !w.is_finite() || w < 0.0) {
        return Err(Error::InvalidArgument(
            "marginals must be finite and non-negative".into(),
        ));
    }
    let total_supply: f64 = supply.iter().sum();
    let total_demand: f64 = demand.iter().sum();
    if (total_supply - total_demand).abs() > BALANCE_TOL * total_supply.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "unbalanced marginals: {total_supply} vs {total_demand}"
        )));
    }

    let mut solver = Simplex::northwest_corner(supply, demand, cost);
    solver.optimise()?;
    Ok(solver.into_plan())
}

struct Simplex<'a> {
    m: usize,
    n: usize,
    cost: &'a [Vec<f64>],
    flow: Vec<f64>,
    basic: Vec<bool>,
}

impl<'a> Simplex<'a> {
    fn northwest_corner(supply: &[f64], demand: &[f64], cost: &'a [Vec<f64>]) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let mut flow = vec![0.0; m * n];
        let mut basic = vec![false; m * n];
        let mut row_left = supply.to_vec();
        let mut col_left = demand.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let q = row_left[i].min(col_left[j]).max(0.0);
            flow[i * n + j] = q;
            basic[i * n + j] = true;
            row_left[i] -= q;
            col_left[j] -= q;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || row_left[i] <= col_left[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        Simplex {
            m,
            n,
            cost,
            flow,
            basic,
        }
    }

    fn c(&self, i: usize, j: usize) -> f64 {
        self.cost[i][j]
    }

    /// Adjacency of the basis tree; rows are nodes `0..m`, columns `m..m+n`.
    fn tree(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for i in 0..self.m {
            for j in 0..self.n {
                if self.basic[i * self.n + j] {
                    adj[i].push(self.m + j);
                    adj[self.m + j].push(i);
                }
            }
        }
        adj
    }

    fn potentials(&self, adj: &[Vec<usize>]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (m, n) = (self.m, self.n);
        let mut pot = vec![f64::NAN; m + n];
        pot[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            for &next in &adj[node] {
                if !pot[next].is_nan() {
                    continue;
                }
                pot[next] = if node < m {
                    self.c(node, next - m) - pot[node]
                } else {
                    self.c(next, node - m) - pot[node]
                };
                queue.push_back(next);
            }
        }
        if pot.iter().any(|p| p.is_nan()) {
            return Err(Error::Internal("transport basis is not a spanning tree".into()));
        }
        let v = pot.split_off(m);
        Ok((pot, v))
    }

    /// Basis path from row node `i` to column node `m + j`, as cells.
    fn path(&self, adj: &[Vec<usize>], i: usize, j: usize) -> Result<Vec<(usize, usize)>> {
        let m = self.m;
        let mut parent = vec![usize::MAX; m + self.n];
        parent[i] = i;
        let mut queue = VecDeque::from([i]);
        while let Some(node) = queue.pop_front() {
            for &next in &adj[node] {
                if parent[next] == usize::MAX {
                    parent[next] = node;
                    queue.push_back(next);
                }
            }
        }
        let target = m + j;
        if parent[target] == usize::MAX {
            return Err(Error::Internal("no basis path for entering cell".into()));
        }
        let mut cells = Vec::new();
        let mut node = target;
        while node != i {
            let prev = parent[node];
            cells.push(if node < m { (node, prev - m) } else { (prev, node - m) });
            node = prev;
        }
        Ok(cells)
    }

    fn optimise(&mut self) -> Result<()> {
        let (m, n) = (self.m, self.n);
        let scale = self.cost.iter().flatten().fold(1.0f64, |acc, &c| acc.max(c.abs()));
        let tol = 1e-12 * scale;
        let max_iter = 100 * (m * n + m + n) + 1000;
        let mut degenerate_run = 0usize;

        for _ in 0..max_iter {
            let adj = self.tree();
            let (u, v) = self.potentials(&adj)?;
            // Dantzig pricing; Bland's rule once degenerate pivots pile up.
            let bland = degenerate_run > m * n;
            let mut entering: Option<(usize, usize, f64)> = None;
            'scan: for (i, ui) in u.iter().enumerate() {
                for (j, vj) in v.iter().enumerate() {
                    if self.basic[i * n + j] {
                        continue;
                    }
                    let reduced = self.c(i, j) - ui - vj;
                    if reduced < -tol && entering.is_none_or(|(_, _, r)| reduced < r) {
                        entering = Some((i, j, reduced));
                        if bland {
                            break 'scan;
                        }
                    }
                }
            }
            let Some((ei, ej, _)) = entering else {
                return Ok(());
            };

            // Cycle: entering cell gains, then alternate lose/gain along the path.
            let path = self.path(&adj, ei, ej)?;
            let mut leaving: Option<(usize, f64)> = None;
            for (k, &(i, j)) in path.iter().enumerate() {
                if k % 2 == 0 {
                    let x = self.flow[i * n + j];
                    let idx = i * n + j;
                    let better = match leaving {
                        None => true,
                        Some((li, lx)) => x < lx || (x == lx && idx < li),
                    };
                    if better {
                        leaving = Some((idx, x));
                    }
                }
            }
            let (leave_idx, theta) = leaving.ok_or_else(|| Error::Internal("empty pivot cycle".into()))?;
            self.flow[ei * n + ej] += theta;
            for (k, &(i, j)) in path.iter().enumerate() {
                let cell = &mut self.flow[i * n + j];
                if k % 2 == 0 {
                    *cell = (*cell - theta).max(0.0);
                } else {
                    *cell += theta;
                }
            }
            self.flow[leave_idx] = 0.0;
            self.basic[leave_idx] = false;
            self.basic[ei * n + ej] = true;
            degenerate_run = if theta == 0.0 { degenerate_run + 1 } else { 0 };
        }
        Err(Error::Internal("transport simplex did not converge".into()))
    }

    fn into_plan(self) -> TransportPlan {
        let n = self.n;
        let mut cost = 0.0;
        let mut flows = Vec::new();
        for (idx, &x) in self.flow.iter().enumerate() {
            if x > 0.0 {
                let (i, j) = (idx / n, idx % n);
                cost += x * self.cost[i][j];
                flows.push((i, j, x));
            }
        }
        TransportPlan { cost, flows }
    }
}
