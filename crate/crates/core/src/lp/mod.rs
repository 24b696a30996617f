//! Linear programs with ranged rows and bounded variables.
//!
//! Problems have the form
//!
//! ```text
//! minimize    c^T x
//! subject to  row_lower <= A x <= row_upper
//!             col_lower <=  x  <= col_upper
//! ```
//!
//! where any bound may be infinite. Solvers implement [`LpSolver`]; the
//! crate ships [`SimplexSolver`].

mod simplex;

use serde::Serialize;
use thiserror::Error;

pub use simplex::{SimplexOptions, SimplexSolver};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("variable index {index} out of range for {n_vars} variables")]
    VariableOutOfRange { index: usize, n_vars: usize },
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("empty range [{lower}, {upper}] in {what}")]
    EmptyRange {
        what: &'static str,
        lower: f64,
        upper: f64,
    },
    #[error("basis matrix became singular")]
    SingularBasis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub terms: Vec<(usize, f64)>,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    col_lower: Vec<f64>,
    col_upper: Vec<f64>,
    rows: Vec<LpRow>,
}

impl LinearProgram {
    /// `n_vars` variables with zero cost and bounds `[0, inf)`.
    pub fn new(n_vars: usize) -> Self {
        Self {
            objective: vec![0.0; n_vars],
            col_lower: vec![0.0; n_vars],
            col_upper: vec![f64::INFINITY; n_vars],
            rows: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn col_lower(&self) -> &[f64] {
        &self.col_lower
    }

    pub fn col_upper(&self) -> &[f64] {
        &self.col_upper
    }

    pub fn rows(&self) -> &[LpRow] {
        &self.rows
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.objective[var] = cost;
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.col_lower[var] = lower;
        self.col_upper[var] = upper;
    }

    /// Adds `lower <= terms . x <= upper` and returns its row index.
    pub fn add_range_row(&mut self, terms: Vec<(usize, f64)>, lower: f64, upper: f64) -> usize {
        self.rows.push(LpRow {
            terms,
            lower,
            upper,
        });
        self.rows.len() - 1
    }

    pub fn add_le_row(&mut self, terms: Vec<(usize, f64)>, upper: f64) -> usize {
        self.add_range_row(terms, f64::NEG_INFINITY, upper)
    }

    pub fn add_ge_row(&mut self, terms: Vec<(usize, f64)>, lower: f64) -> usize {
        self.add_range_row(terms, lower, f64::INFINITY)
    }

    pub fn add_eq_row(&mut self, terms: Vec<(usize, f64)>, value: f64) -> usize {
        self.add_range_row(terms, value, value)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.terms.iter().map(|&(j, a)| a * x[j]).sum())
            .collect()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_infeasibility(&self, x: &[f64]) -> f64 {
        let cols =
            (0..self.n_vars()).map(|j| (self.col_lower[j] - x[j]).max(x[j] - self.col_upper[j]));
        let rows = self
            .rows
            .iter()
            .zip(self.row_activity(x))
            .map(|(r, a)| (r.lower - a).max(a - r.upper));
        cols.chain(rows).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        for j in 0..n {
            check_range("variable bounds", self.col_lower[j], self.col_upper[j])?;
        }
        for r in &self.rows {
            check_range("row bounds", r.lower, r.upper)?;
            for &(j, a) in &r.terms {
                if j >= n {
                    return Err(LpError::VariableOutOfRange {
                        index: j,
                        n_vars: n,
                    });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite("constraint matrix"));
                }
            }
        }
        Ok(())
    }
}

fn check_range(what: &'static str, lower: f64, upper: f64) -> Result<(), LpError> {
    if lower.is_nan() || upper.is_nan() || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
        return Err(LpError::NonFinite(what));
    }
    if lower > upper {
        return Err(LpError::EmptyRange { what, lower, upper });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row multipliers with `reduced_costs = c - A^T duals`.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

pub trait LpSolver {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution, LpError>;
}
