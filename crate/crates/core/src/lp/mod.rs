//! A small LP toolkit for problems with variables in `[0,1]` and `<=` rows:
//! a bounded-variable revised simplex, exact repair of a few non-integer
//! variables, and randomized rounding.

mod integer;
mod rounding;
mod simplex;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use integer::{improve_integer, overlap_neighborhood, solve_residual_integer, IntegerSolution, BRANCH_AND_BOUND_CAP, ENUMERATION_CAP};
pub use rounding::{randomized_rounding, RoundingResult, DEFAULT_N_SAMPLE};
pub use simplex::{solve_relaxed, LpSolution, LpStatus};

use crate::error::{invalid, Result};

/// Values within this distance of 0 or 1 count as integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;
/// Allowed row violation for integer outputs.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// One constraint `sum coeffs[k].1 * x[coeffs[k].0] <= rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LpRow {
    pub fn new(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        LpRow { coeffs, rhs }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Rows with unit coefficients and rhs 1 (at most one variable selected).
    pub fn is_packing(&self) -> bool {
        self.rhs == 1.0 && self.coeffs.iter().all(|&(_, a)| a == 1.0)
    }
}

/// Maximize `objective . x` subject to `rows` and `0 <= x <= 1`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    /// Optional display names, one per variable.
    #[serde(default)]
    pub names: Vec<String>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>) -> Self {
        LpProblem { objective, rows: Vec::new(), names: Vec::new() }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(LpRow::new(coeffs, rhs));
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        if self.objective.iter().any(|c| !c.is_finite()) {
            return invalid("objective has non-finite coefficients");
        }
        if !self.names.is_empty() && self.names.len() != n {
            return invalid("names must be empty or one per variable");
        }
        for (i, r) in self.rows.iter().enumerate() {
            if !r.rhs.is_finite() {
                return invalid(format!("row {i} has a non-finite rhs"));
            }
            for &(j, a) in &r.coeffs {
                if j >= n {
                    return invalid(format!("row {i} references variable {j} of {n}"));
                }
                if !a.is_finite() {
                    return invalid(format!("row {i} has a non-finite coefficient"));
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest amount by which any row or bound is violated (0 if feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.activity(x) - r.rhs);
        let bounds = x.iter().map(|&v| (-v).max(v - 1.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.n_vars() && self.max_violation(x) <= tol
    }

    /// The problem in CPLEX LP text format, for cross-checking with
    /// external solvers.
    pub fn to_lp_format(&self) -> String {
        let name = |j: usize| self.names.get(j).cloned().unwrap_or_else(|| format!("x{j}"));
        let term = |a: f64, j: usize| format!("{} {:.17e} {}", if a < 0.0 { "-" } else { "+" }, a.abs(), name(j));
        let mut s = String::from("Maximize\n obj:");
        for (j, &c) in self.objective.iter().enumerate() {
            let _ = write!(s, " {}", term(c, j));
        }
        s.push_str("\nSubject To\n");
        for (i, r) in self.rows.iter().enumerate() {
            let _ = write!(s, " c{i}:");
            if r.coeffs.is_empty() {
                let _ = write!(s, " 0 {}", name(0));
            }
            for &(j, a) in &r.coeffs {
                let _ = write!(s, " {}", term(a, j));
            }
            let _ = writeln!(s, " <= {:.17e}", r.rhs);
        }
        s.push_str("Bounds\n");
        for j in 0..self.n_vars() {
            let _ = writeln!(s, " 0 <= {} <= 1", name(j));
        }
        s.push_str("End\n");
        s
    }
}

pub fn is_integral(v: f64) -> bool {
    v.abs() <= INTEGRALITY_TOL || (v - 1.0).abs() <= INTEGRALITY_TOL
}
