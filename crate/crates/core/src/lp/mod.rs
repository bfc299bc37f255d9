//! Sparse linear-programming kernel.
//!
//! Solves `min c'x  s.t.  A x {<=,=} b,  lb <= x <= ub` with a bounded-variable
//! revised simplex and returns primal values together with exact row duals and
//! reduced costs. Duals follow the shadow-price convention: the dual of a row
//! is the derivative of the optimal objective with respect to that row's
//! right-hand side, so duals of `<=` rows are nonpositive in a minimization.

mod lu;
mod scale;
pub mod sparse;
mod simplex;
pub mod writer;

pub use sparse::CscMat;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const INF: f64 = f64::INFINITY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Eq,
}

/// `min c'x  s.t.  A x (sense) b,  lb <= x <= ub`. Bounds may be infinite,
/// everything else must be finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardFormLp {
    pub objective: Vec<f64>,
    pub a: CscMat,
    pub rhs: Vec<f64>,
    pub senses: Vec<RowSense>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("inconsistent problem dimensions: {0}")]
    Dimensions(String),
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("lower bound exceeds upper bound on column {col}: {lower} > {upper}")]
    BoundOrder { col: usize, lower: f64, upper: f64 },
    #[error("pinned column {col} value {value} outside bounds [{lower}, {upper}]")]
    PinOutOfBounds {
        col: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("pinned column {0} out of range")]
    PinColumn(usize),
}

impl StandardFormLp {
    pub fn n_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.n_cols();
        let m = self.n_rows();
        if self.a.n_cols() != n || self.a.n_rows() != m {
            return Err(LpError::Dimensions(format!(
                "matrix is {}x{}, expected {}x{}",
                self.a.n_rows(),
                self.a.n_cols(),
                m,
                n
            )));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Dimensions(format!(
                "bounds have length {}/{}, expected {}",
                self.lower.len(),
                self.upper.len(),
                n
            )));
        }
        if self.senses.len() != m {
            return Err(LpError::Dimensions(format!(
                "senses have length {}, expected {}",
                self.senses.len(),
                m
            )));
        }
        if !self.objective.iter().all(|v| v.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        if !self.rhs.iter().all(|v| v.is_finite()) {
            return Err(LpError::NonFinite("rhs"));
        }
        if !self.a.values_finite() {
            return Err(LpError::NonFinite("matrix"));
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() {
                return Err(LpError::NonFinite("bounds"));
            }
            if self.lower[j] > self.upper[j] {
                return Err(LpError::BoundOrder {
                    col: j,
                    lower: self.lower[j],
                    upper: self.upper[j],
                });
            }
        }
        Ok(())
    }
}

/// Incremental constructor for [`StandardFormLp`].
#[derive(Debug, Clone, Default)]
pub struct LpBuilder {
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    senses: Vec<RowSense>,
    triplets: Vec<(usize, usize, f64)>,
}

impl LpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_col(&mut self, objective: f64, lower: f64, upper: f64) -> usize {
        let j = self.objective.len();
        self.objective.push(objective);
        self.lower.push(lower);
        self.upper.push(upper);
        j
    }

    pub fn add_row(&mut self, sense: RowSense, rhs: f64, coeffs: &[(usize, f64)]) -> usize {
        let i = self.rhs.len();
        self.rhs.push(rhs);
        self.senses.push(sense);
        for &(j, v) in coeffs {
            if v != 0.0 {
                self.triplets.push((i, j, v));
            }
        }
        i
    }

    /// Adds a single coefficient to an existing row.
    pub fn push_coeff(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.rhs.len());
        if value != 0.0 {
            self.triplets.push((row, col, value));
        }
    }

    pub fn set_objective(&mut self, col: usize, value: f64) {
        self.objective[col] = value;
    }

    pub fn n_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn build(self) -> StandardFormLp {
        let n = self.objective.len();
        let m = self.rhs.len();
        StandardFormLp {
            objective: self.objective,
            a: CscMat::from_triplets(m, n, &self.triplets),
            rhs: self.rhs,
            senses: self.senses,
            lower: self.lower,
            upper: self.upper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Result of a simplex run. Primal, duals and reduced costs are reported in
/// the original (unscaled) problem space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub objective: f64,
    /// One dual per row: derivative of the optimal objective w.r.t. the rhs.
    pub row_duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    /// Basic column per basis slot; indices >= n_cols denote row logicals.
    pub basis: Vec<usize>,
    /// Columns (including logicals) that ended nonbasic at their upper bound.
    pub at_upper: Vec<usize>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Basis snapshot usable to warm-start a related solve.
    pub fn warm_basis(&self) -> Basis {
        Basis {
            basic: self.basis.clone(),
            at_upper: self.at_upper.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Primal feasibility tolerance.
    pub tol_primal: f64,
    /// Dual feasibility (optimality) tolerance.
    pub tol_dual: f64,
    /// Smallest pivot magnitude accepted in the ratio test and LU.
    pub tol_pivot: f64,
    /// Iteration limit; 0 means an automatic limit from the problem size.
    pub max_iter: usize,
    /// Geometric row/column equilibration before solving.
    pub scale: bool,
    /// Basis refactorization interval (pivot count).
    pub refactor_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_primal: 1e-7,
            tol_dual: 1e-7,
            tol_pivot: 1e-9,
            max_iter: 0,
            scale: true,
            refactor_every: 64,
        }
    }
}

/// Warm-start basis: the set of basic columns plus nonbasic-at-upper marks,
/// as produced in [`LpSolution::basis`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Basis {
    pub basic: Vec<usize>,
    pub at_upper: Vec<usize>,
}

pub fn solve_lp(lp: &StandardFormLp, opts: &SolverOptions) -> Result<LpSolution, LpError> {
    lp.validate()?;
    Ok(simplex::Simplex::new(lp, opts, None).solve())
}

/// Like [`solve_lp`] but starting from a previously returned basis. Falls back
/// to the cold start when the basis does not fit the problem.
pub fn solve_lp_warm(
    lp: &StandardFormLp,
    opts: &SolverOptions,
    warm: Option<&Basis>,
) -> Result<LpSolution, LpError> {
    lp.validate()?;
    Ok(simplex::Simplex::new(lp, opts, warm).solve())
}

/// Why a pinned solve came out infeasible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PinInfeasibility {
    /// The LP is infeasible even without the pins.
    BaseInfeasible,
    /// The LP is feasible; the pin values made it infeasible.
    InducedByPins,
}

#[derive(Debug, Clone)]
pub struct PinnedSolution {
    pub solution: LpSolution,
    /// Sensitivity of the optimal objective to each pinned value, in pin order.
    pub pin_duals: Vec<f64>,
    pub infeasibility: Option<PinInfeasibility>,
}

/// Solves the LP with the listed columns fixed to the given values and
/// reports the dual of each pin (the derivative of the optimal objective
/// with respect to the pinned value).
///
/// Pins are applied by clamping the column bounds; the dual of the implied
/// equality is recovered as the fixed column's reduced cost.
pub fn solve_with_pins(
    lp: &StandardFormLp,
    pins: &[(usize, f64)],
    opts: &SolverOptions,
) -> Result<PinnedSolution, LpError> {
    solve_with_pins_warm(lp, pins, opts, None)
}

/// [`solve_with_pins`] with a warm-start basis from a previous pinned solve.
pub fn solve_with_pins_warm(
    lp: &StandardFormLp,
    pins: &[(usize, f64)],
    opts: &SolverOptions,
    warm: Option<&Basis>,
) -> Result<PinnedSolution, LpError> {
    lp.validate()?;
    let mut pinned = lp.clone();
    for &(col, value) in pins {
        if col >= lp.n_cols() {
            return Err(LpError::PinColumn(col));
        }
        if value < lp.lower[col] - 1e-9 || value > lp.upper[col] + 1e-9 {
            return Err(LpError::PinOutOfBounds {
                col,
                value,
                lower: lp.lower[col],
                upper: lp.upper[col],
            });
        }
        pinned.lower[col] = value;
        pinned.upper[col] = value;
    }
    let solution = simplex::Simplex::new(&pinned, opts, warm).solve();
    let mut infeasibility = None;
    if solution.status == LpStatus::Infeasible {
        let base = simplex::Simplex::new(lp, opts, None).solve();
        infeasibility = Some(if base.status == LpStatus::Infeasible {
            PinInfeasibility::BaseInfeasible
        } else {
            PinInfeasibility::InducedByPins
        });
    }
    let pin_duals = pins
        .iter()
        .map(|&(col, _)| solution.reduced_costs.get(col).copied().unwrap_or(0.0))
        .collect();
    Ok(PinnedSolution {
        solution,
        pin_duals,
        infeasibility,
    })
}

#[cfg(test)]
pub(crate) mod dense_oracle;
