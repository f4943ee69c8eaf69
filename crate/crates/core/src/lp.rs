//! Dense two-phase simplex for the small linear programs behind the
//! Dutch-book and core searches.
//!
//! Problems are `minimize c·x` subject to linear rows and `x >= 0`. Pivoting
//! uses Dantzig's rule and falls back to Bland's rule after a run of
//! degenerate pivots, so the method terminates. Results are deterministic for
//! a given input.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-9;
const MAX_ITERATIONS: usize = 200_000;
const DEGENERATE_STREAK: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

impl LinearProgram {
    /// New program minimizing `objective · x` over `x >= 0`.
    pub fn minimize(objective: Vec<f64>) -> Self {
        LinearProgram { objective, constraints: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.objective.len(), "row width must match the variable count");
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        Tableau::build(self).solve(&self.objective)
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_vars: usize,
    n_slack: usize,
    n_cols: usize,
    iterations: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let n_vars = lp.objective.len();
        let normalized: Vec<(Vec<f64>, Relation, f64)> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs < 0.0 {
                    let rel = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.coeffs.iter().map(|v| -v).collect(), rel, -c.rhs)
                } else {
                    (c.coeffs.clone(), c.relation, c.rhs)
                }
            })
            .collect();

        let n_slack = normalized.iter().filter(|c| c.1 != Relation::Eq).count();
        let n_art = normalized.iter().filter(|c| c.1 != Relation::Le).count();
        let n_cols = n_vars + n_slack + n_art;

        let mut rows = Vec::with_capacity(normalized.len());
        let mut basis = Vec::with_capacity(normalized.len());
        let (mut next_slack, mut next_art) = (n_vars, n_vars + n_slack);
        for (coeffs, rel, rhs) in normalized {
            let mut row = vec![0.0; n_cols + 1];
            row[..n_vars].copy_from_slice(&coeffs);
            row[n_cols] = rhs;
            match rel {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_slack += 1;
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
        }
        Tableau { rows, basis, n_vars, n_slack, n_cols, iterations: 0 }
    }

    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.n_cols]
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n_vars + self.n_slack
    }

    fn solve(mut self, objective: &[f64]) -> Result<LpOutcome> {
        let art_start = self.n_vars + self.n_slack;
        if self.basis.iter().any(|&b| b >= art_start) {
            let mut phase1 = vec![0.0; self.n_cols];
            for c in phase1.iter_mut().skip(art_start) {
                *c = 1.0;
            }
            self.run(&phase1, self.n_cols)?;
            let infeasibility: f64 = (0..self.rows.len())
                .filter(|&i| self.is_artificial(self.basis[i]))
                .map(|i| self.rhs(i))
                .sum();
            if infeasibility > FEAS_EPS {
                return Ok(LpOutcome::Infeasible);
            }
            self.drive_out_artificials();
        }

        let mut cost = vec![0.0; self.n_cols];
        cost[..self.n_vars].copy_from_slice(objective);
        match self.run(&cost, art_start)? {
            Phase::Unbounded => Ok(LpOutcome::Unbounded),
            Phase::Optimal => {
                let mut x = vec![0.0; self.n_vars];
                for (i, &b) in self.basis.iter().enumerate() {
                    if b < self.n_vars {
                        x[b] = self.rows[i][self.n_cols].max(0.0);
                    }
                }
                let value = x.iter().zip(objective).map(|(a, b)| a * b).sum();
                Ok(LpOutcome::Optimal(LpSolution { x, objective: value, iterations: self.iterations }))
            }
        }
    }

    /// Pivots every zero-valued artificial out of the basis; rows where no
    /// structural column can enter are redundant and dropped.
    fn drive_out_artificials(&mut self) {
        let art_start = self.n_vars + self.n_slack;
        let mut i = 0;
        while i < self.rows.len() {
            if self.is_artificial(self.basis[i]) {
                let entering = (0..art_start).find(|&j| self.rows[i][j].abs() > 1e-9);
                match entering {
                    Some(j) => self.pivot(i, j),
                    None => {
                        self.rows.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    fn run(&mut self, cost: &[f64], allowed: usize) -> Result<Phase> {
        let mut degenerate = 0usize;
        loop {
            if self.iterations >= MAX_ITERATIONS {
                return Err(Error::NumericalFailure(format!(
                    "simplex exceeded {MAX_ITERATIONS} pivots"
                )));
            }
            let reduced: Vec<f64> = (0..allowed)
                .map(|j| {
                    let z: f64 = self
                        .basis
                        .iter()
                        .zip(&self.rows)
                        .map(|(&b, row)| cost[b] * row[j])
                        .sum();
                    cost[j] - z
                })
                .collect();

            let bland = degenerate >= DEGENERATE_STREAK;
            let entering = if bland {
                (0..allowed).find(|&j| reduced[j] < -COST_EPS)
            } else {
                let mut best: Option<usize> = None;
                for j in 0..allowed {
                    if reduced[j] < -COST_EPS && best.is_none_or(|b| reduced[j] < reduced[b]) {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(col) = entering else {
                return Ok(Phase::Optimal);
            };

            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[col];
                if a > PIVOT_EPS {
                    let ratio = row[self.n_cols] / a;
                    let better = match leave {
                        None => true,
                        Some((k, r)) => {
                            ratio < r - 1e-12 || (ratio <= r + 1e-12 && self.basis[i] < self.basis[k])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((row, ratio)) = leave else {
                return Ok(Phase::Unbounded);
            };
            degenerate = if ratio.abs() <= 1e-12 { degenerate + 1 } else { 0 };
            self.pivot(row, col);
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        self.iterations += 1;
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                    if v.abs() < 1e-15 {
                        *v = 0.0;
                    }
                }
            }
        }
        self.basis[r] = c;
    }
}
