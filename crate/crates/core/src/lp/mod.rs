//! Small dense linear programs and the cell sub-problem builder.

mod cell;
mod lu;
mod simplex;

pub use cell::{build_cell_lp, y_index, z_index, VACUUM_ERROR_RATE};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coefficients: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coefficients.iter().zip(x).map(|(a, v)| a * v).sum()
    }

    /// Amount by which `x` violates the row; zero when satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let r = self.activity(x) - self.rhs;
        match self.relation {
            Relation::Le => r.max(0.0),
            Relation::Ge => (-r).max(0.0),
            Relation::Eq => r.abs(),
        }
    }
}

/// `minimize c·x` subject to row constraints and per-variable bounds.
///
/// Bounds may be infinite; a variable with both bounds infinite is free.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>, bounds: Vec<(f64, f64)>) -> Self {
        Self { objective, constraints: Vec::new(), bounds }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coefficients: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint { coefficients, relation, rhs });
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(Error::config(format!("{} bounds for {n} variables", self.bounds.len())));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::config("objective coefficients must be finite"));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::config(format!("variable {j} has invalid bounds [{lo}, {hi}]")));
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if row.coefficients.len() != n {
                return Err(Error::config(format!(
                    "row {i} has {} coefficients for {n} variables",
                    row.coefficients.len()
                )));
            }
            if !row.rhs.is_finite() || row.coefficients.iter().any(|a| !a.is_finite()) {
                return Err(Error::config(format!("row {i} has non-finite data")));
            }
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest bound or row violation at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = self
            .bounds
            .iter()
            .zip(x)
            .map(|(&(lo, hi), &v)| (lo - v).max(v - hi).max(0.0));
        let rows = self.constraints.iter().map(|row| row.violation(x));
        bounds.chain(rows).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    pub feasibility_tolerance: f64,
    pub pivot_tolerance: f64,
    pub max_pivots: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self { feasibility_tolerance: 1e-9, pivot_tolerance: 1e-11, max_pivots: 100_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Optimal basis with row duals `y` and structural reduced costs `c − Aᵀy`.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// Basic columns; indices `≥ num_vars` are row slacks (`num_vars + row`).
    pub basis: Vec<usize>,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// `+∞` when infeasible, `−∞` when unbounded.
    pub objective_value: f64,
    pub values: Vec<f64>,
    pub certificate: Option<Certificate>,
}

/// Residuals of the optimality conditions at a returned solution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CertificateCheck {
    pub primal: f64,
    pub dual_sign: f64,
    pub complementary_slackness: f64,
}

impl CertificateCheck {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual_sign).max(self.complementary_slackness)
    }
}

impl LpSolution {
    /// Re-derives optimality from the certificate without trusting the solver:
    /// primal feasibility, dual sign conditions on rows and bounds, and
    /// complementary slackness.
    pub fn check_certificate(&self, lp: &LinearProgram) -> Option<CertificateCheck> {
        let cert = self.certificate.as_ref()?;
        let x = &self.values;
        let y = &cert.duals;
        let mut check = CertificateCheck { primal: lp.max_violation(x), ..Default::default() };

        for (i, row) in lp.constraints.iter().enumerate() {
            let slack = row.activity(x) - row.rhs;
            let sign = match row.relation {
                Relation::Le => y[i].max(0.0),
                Relation::Ge => (-y[i]).max(0.0),
                Relation::Eq => 0.0,
            };
            check.dual_sign = check.dual_sign.max(sign);
            check.complementary_slackness = check.complementary_slackness.max((y[i] * slack).abs());
        }
        for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
            let reduced = lp.objective[j]
                - lp.constraints.iter().zip(y).map(|(r, yi)| r.coefficients[j] * yi).sum::<f64>();
            // A positive reduced cost needs the variable held at its lower
            // bound, a negative one at its upper bound.
            let gap = if reduced > 0.0 { x[j] - lo } else { hi - x[j] };
            if gap.is_finite() {
                let r = reduced.abs() * gap.max(0.0);
                check.complementary_slackness = check.complementary_slackness.max(r);
            } else {
                // No bound on the side the reduced cost pushes towards.
                check.dual_sign = check.dual_sign.max(reduced.abs());
            }
        }
        Some(check)
    }
}

/// Solves `lp` with a two-phase bounded-variable primal simplex.
///
/// Pivoting follows Bland's smallest-index rule, so the result is a
/// deterministic function of the input.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    solve_lp_with(lp, &LpOptions::default())
}

pub fn solve_lp_with(lp: &LinearProgram, options: &LpOptions) -> Result<LpSolution> {
    lp.validate()?;
    simplex::solve(lp, options)
}
