//! Two-phase bounded-variable revised simplex on dense data.
//!
//! Every row `i` is written as `aᵢ·x + sᵢ (+ σᵢ·artᵢ) = bᵢ` where the slack
//! `sᵢ` carries the row relation in its bounds: `[0, ∞)` for `≤`, `(−∞, 0]`
//! for `≥` and `[0, 0]` for `=`. Artificials are added only for rows whose
//! residual at the starting point cannot be absorbed by the slack.

use super::lu::Lu;
use super::{Certificate, LinearProgram, LpOptions, LpSolution, LpStatus, Relation};
use crate::error::{Error, Result};

/// Reduced costs smaller than this are treated as zero when pricing.
const OPTIMALITY_TOLERANCE: f64 = 1e-10;

enum Outcome {
    Optimal,
    Unbounded,
}

struct Tableau<'a> {
    m: usize,
    rhs: Vec<f64>,
    /// Columns of `[A | I | σ]`, one per variable.
    columns: Vec<Vec<f64>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    options: &'a LpOptions,
    pivots: usize,
}

pub(super) fn solve(lp: &LinearProgram, options: &LpOptions) -> Result<LpSolution> {
    let n = lp.num_vars();
    let m = lp.constraints.len();

    let mut columns: Vec<Vec<f64>> =
        (0..n).map(|j| lp.constraints.iter().map(|r| r.coefficients[j]).collect()).collect();
    let mut lo: Vec<f64> = lp.bounds.iter().map(|b| b.0).collect();
    let mut hi: Vec<f64> = lp.bounds.iter().map(|b| b.1).collect();
    let mut x: Vec<f64> = lp
        .bounds
        .iter()
        .map(|&(l, h)| if l.is_finite() { l } else if h.is_finite() { h } else { 0.0 })
        .collect();

    for (i, row) in lp.constraints.iter().enumerate() {
        let mut col = vec![0.0; m];
        col[i] = 1.0;
        columns.push(col);
        let (l, h) = match row.relation {
            Relation::Le => (0.0, f64::INFINITY),
            Relation::Ge => (f64::NEG_INFINITY, 0.0),
            Relation::Eq => (0.0, 0.0),
        };
        lo.push(l);
        hi.push(h);
        x.push(0.0);
    }

    let mut basis = Vec::with_capacity(m);
    let mut artificial = Vec::new();
    for (i, row) in lp.constraints.iter().enumerate() {
        let residual = row.rhs - row.activity(&x[..n]);
        let slack = n + i;
        if residual >= lo[slack] && residual <= hi[slack] {
            x[slack] = residual;
            basis.push(slack);
        } else {
            let mut col = vec![0.0; m];
            col[i] = if residual >= 0.0 { 1.0 } else { -1.0 };
            let a = columns.len();
            columns.push(col);
            lo.push(0.0);
            hi.push(f64::INFINITY);
            x.push(residual.abs());
            basis.push(a);
            artificial.push(a);
        }
    }

    let total = columns.len();
    let mut is_basic = vec![false; total];
    for &b in &basis {
        is_basic[b] = true;
    }
    let mut t = Tableau {
        m,
        rhs: lp.constraints.iter().map(|r| r.rhs).collect(),
        columns,
        lo,
        hi,
        x,
        basis,
        is_basic,
        options,
        pivots: 0,
    };

    if !artificial.is_empty() {
        let mut cost = vec![0.0; total];
        for &a in &artificial {
            cost[a] = 1.0;
        }
        t.run(&cost)?;
        let infeasibility: f64 = artificial.iter().map(|&a| t.x[a]).sum();
        let scale = 1f64.max(t.rhs.iter().fold(0.0, |acc, b| acc.max(b.abs())));
        if infeasibility > options.feasibility_tolerance * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective_value: f64::INFINITY,
                values: Vec::new(),
                certificate: None,
            });
        }
        for &a in &artificial {
            t.hi[a] = 0.0;
            if !t.is_basic[a] {
                t.x[a] = 0.0;
            }
        }
    }

    let mut cost = lp.objective.clone();
    cost.resize(total, 0.0);
    match t.run(&cost)? {
        Outcome::Unbounded => Ok(LpSolution {
            status: LpStatus::Unbounded,
            objective_value: f64::NEG_INFINITY,
            values: Vec::new(),
            certificate: None,
        }),
        Outcome::Optimal => {
            let lu = t.factor()?;
            t.update_basic(&lu);
            let duals = if m == 0 { Vec::new() } else { t.duals(&lu, &cost) };
            let values: Vec<f64> = t.x[..n]
                .iter()
                .zip(t.lo.iter().zip(&t.hi))
                .map(|(&v, (&l, &h))| v.clamp(l, h))
                .collect();
            let reduced_costs = (0..n).map(|j| cost[j] - dot(&duals, &t.columns[j])).collect();
            Ok(LpSolution {
                status: LpStatus::Optimal,
                objective_value: lp.objective_at(&values),
                values,
                certificate: Some(Certificate { basis: t.basis.clone(), duals, reduced_costs }),
            })
        }
    }
}

impl Tableau<'_> {
    fn factor(&self) -> Result<Lu> {
        let cols: Vec<&[f64]> = self.basis.iter().map(|&b| self.columns[b].as_slice()).collect();
        Lu::factor(&cols)
    }

    /// Recomputes basic values from the nonbasic ones.
    fn update_basic(&mut self, lu: &Lu) {
        if self.m == 0 {
            return;
        }
        let mut r = self.rhs.clone();
        for (j, col) in self.columns.iter().enumerate() {
            let v = self.x[j];
            if !self.is_basic[j] && v != 0.0 {
                for (ri, a) in r.iter_mut().zip(col) {
                    *ri -= a * v;
                }
            }
        }
        let xb = lu.solve(&r);
        for (&b, v) in self.basis.iter().zip(xb) {
            self.x[b] = v;
        }
    }

    fn duals(&self, lu: &Lu, cost: &[f64]) -> Vec<f64> {
        let cb: Vec<f64> = self.basis.iter().map(|&b| cost[b]).collect();
        lu.solve_transpose(&cb)
    }

    fn run(&mut self, cost: &[f64]) -> Result<Outcome> {
        let tol = self.options.pivot_tolerance;
        loop {
            if self.m == 0 {
                // Pure box problem: move every variable to its cheaper bound.
                for (j, &c) in cost.iter().enumerate().take(self.columns.len()) {
                    let target = if c < 0.0 { self.hi[j] } else if c > 0.0 { self.lo[j] } else { continue };
                    if !target.is_finite() {
                        return Ok(Outcome::Unbounded);
                    }
                    self.x[j] = target;
                }
                return Ok(Outcome::Optimal);
            }

            let lu = self.factor()?;
            self.update_basic(&lu);
            let y = self.duals(&lu, cost);

            let entering = (0..self.columns.len()).find_map(|j| {
                if self.is_basic[j] || self.lo[j] == self.hi[j] {
                    return None;
                }
                let d = cost[j] - dot(&y, &self.columns[j]);
                if d < -OPTIMALITY_TOLERANCE && self.x[j] < self.hi[j] {
                    Some((j, 1.0))
                } else if d > OPTIMALITY_TOLERANCE && self.x[j] > self.lo[j] {
                    Some((j, -1.0))
                } else {
                    None
                }
            });
            let Some((j, dir)) = entering else {
                return Ok(Outcome::Optimal);
            };

            self.pivots += 1;
            if self.pivots > self.options.max_pivots {
                return Err(Error::Solver(format!(
                    "no optimal basis after {} pivots",
                    self.options.max_pivots
                )));
            }

            // Basic values move as x_B(t) = x_B − dir·t·w.
            let w = lu.solve(&self.columns[j]);
            let mut step = f64::INFINITY;
            let mut leaving: Option<(usize, f64)> = None;
            for (pos, &b) in self.basis.iter().enumerate() {
                let rate = -dir * w[pos];
                if rate.abs() <= tol {
                    continue;
                }
                let (limit, bound) = if rate < 0.0 {
                    if !self.lo[b].is_finite() {
                        continue;
                    }
                    ((self.x[b] - self.lo[b]) / -rate, self.lo[b])
                } else {
                    if !self.hi[b].is_finite() {
                        continue;
                    }
                    ((self.hi[b] - self.x[b]) / rate, self.hi[b])
                };
                let limit = limit.max(0.0);
                let better = match leaving {
                    None => true,
                    Some((cur, _)) => {
                        let cur_var = self.basis[cur];
                        limit < step - tie(step) || (limit <= step + tie(step) && b < cur_var)
                    }
                };
                if better {
                    step = limit;
                    leaving = Some((pos, bound));
                }
            }

            let span = self.hi[j] - self.lo[j];
            if span.is_finite() && (leaving.is_none() || span <= step + tie(step)) {
                // Bound flip: the entering variable reaches its other bound first.
                self.x[j] = if dir > 0.0 { self.hi[j] } else { self.lo[j] };
                continue;
            }
            let Some((pos, bound)) = leaving else {
                return Ok(Outcome::Unbounded);
            };

            self.x[j] += dir * step;
            let out = self.basis[pos];
            self.x[out] = bound;
            self.is_basic[out] = false;
            self.is_basic[j] = true;
            self.basis[pos] = j;
        }
    }
}

fn tie(step: f64) -> f64 {
    1e-12 * (1.0 + step.abs())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
