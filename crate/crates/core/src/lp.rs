//! Linear and mixed-integer problem data and the backend contract.
//!
//! Every model in the crate is expressed as a [`LinearProblem`] in minimize
//! form. A backend implements [`LinearSolver`]; the engine never depends on a
//! particular solver. Dual values follow the convention
//! `reduced_cost = c - Aᵀy`, so a binding `≥` row in a minimization carries a
//! non-negative multiplier and a binding `≤` row a non-positive one.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::VarId;

/// Tolerance used by [`verify_farkas`].
pub const FARKAS_TOLERANCE: f64 = 1e-7;

/// Coefficients smaller than this are treated as zero when they multiply an
/// infinite bound.
const ZERO_COEF: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn new(terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) -> Self {
        Self { terms, sense, rhs }
    }

    pub fn activity(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * point[v]).sum()
    }

    /// Amount by which `point` violates the row; non-positive when satisfied.
    /// Equality rows report the absolute deviation.
    pub fn residual(&self, point: &[f64]) -> f64 {
        let a = self.activity(point);
        match self.sense {
            Sense::Le => a - self.rhs,
            Sense::Ge => self.rhs - a,
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
    pub integer: bool,
}

impl Variable {
    pub fn continuous(lower: f64, upper: f64, cost: f64) -> Self {
        Self {
            lower,
            upper,
            cost,
            integer: false,
        }
    }

    pub fn binary(cost: f64) -> Self {
        Self {
            lower: 0.0,
            upper: 1.0,
            cost,
            integer: true,
        }
    }
}

/// `min cᵀx + offset` subject to rows and variable bounds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearProblem {
    pub vars: Vec<Variable>,
    pub rows: Vec<Row>,
    pub offset: f64,
    /// Relative MIP gap target; the backend default applies when `None`.
    pub mip_gap: Option<f64>,
    /// Candidate solution handed to the backend as a starting point.
    pub warm_start: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("row {row} references variable {var} but only {vars} exist")]
    UnknownVariable { row: usize, var: VarId, vars: usize },
    #[error("variable {var} has lower bound {lower} above upper bound {upper}")]
    EmptyBounds { var: VarId, lower: f64, upper: f64 },
    #[error("integer variable {var} has an infinite bound")]
    UnboundedInteger { var: VarId },
    #[error("non-finite coefficient in row {row}")]
    NonFinite { row: usize },
    #[error("warm start has {got} entries for {vars} variables")]
    WarmStart { got: usize, vars: usize },
}

impl LinearProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, var: Variable) -> VarId {
        self.vars.push(var);
        self.vars.len() - 1
    }

    pub fn add_row(&mut self, row: Row) -> usize {
        self.rows.push(row);
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn has_integers(&self) -> bool {
        self.vars.iter().any(|v| v.integer)
    }

    pub fn check(&self) -> Result<(), ProblemError> {
        let n = self.vars.len();
        for (j, v) in self.vars.iter().enumerate() {
            if v.lower > v.upper {
                return Err(ProblemError::EmptyBounds {
                    var: j,
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            if v.integer && !(v.lower.is_finite() && v.upper.is_finite()) {
                return Err(ProblemError::UnboundedInteger { var: j });
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            if !r.rhs.is_finite() {
                return Err(ProblemError::NonFinite { row: i });
            }
            for &(v, c) in &r.terms {
                if v >= n {
                    return Err(ProblemError::UnknownVariable {
                        row: i,
                        var: v,
                        vars: n,
                    });
                }
                if !c.is_finite() {
                    return Err(ProblemError::NonFinite { row: i });
                }
            }
        }
        if let Some(w) = &self.warm_start {
            if w.len() != n {
                return Err(ProblemError::WarmStart {
                    got: w.len(),
                    vars: n,
                });
            }
        }
        Ok(())
    }

    /// Same problem with every integrality mark dropped.
    pub fn relaxation(&self) -> Self {
        let mut out = self.clone();
        for v in &mut out.vars {
            v.integer = false;
        }
        out
    }

    /// Same problem with integer variables fixed to the rounded values of
    /// `point`.
    pub fn fix_integers(&self, point: &[f64]) -> Self {
        let mut out = self.clone();
        for (j, v) in out.vars.iter_mut().enumerate() {
            if v.integer {
                let r = crate::math::round(point[j]).clamp(v.lower, v.upper);
                v.lower = r;
                v.upper = r;
                v.integer = false;
            }
        }
        out
    }

    pub fn objective_value(&self, point: &[f64]) -> f64 {
        self.offset
            + self
                .vars
                .iter()
                .zip(point)
                .map(|(v, x)| v.cost * x)
                .sum::<f64>()
    }

    /// Largest bound or row violation at `point`.
    pub fn max_violation(&self, point: &[f64]) -> f64 {
        let bounds = self
            .vars
            .iter()
            .zip(point)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper))
            .fold(0.0f64, f64::max);
        self.rows
            .iter()
            .map(|r| r.residual(point))
            .fold(bounds, f64::max)
    }

    /// `Aᵀy`.
    pub fn transpose_times(&self, y: &[f64]) -> Vec<f64> {
        let mut g = alloc::vec![0.0; self.vars.len()];
        for (r, &yi) in self.rows.iter().zip(y) {
            if yi != 0.0 {
                for &(v, c) in &r.terms {
                    g[v] += c * yi;
                }
            }
        }
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    FeasibleWithinGap,
    Infeasible,
    Unbounded,
    Limit,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::FeasibleWithinGap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    pub objective: f64,
    /// Best proven bound (MILP); equals `objective` for LPs.
    pub best_bound: f64,
    /// Row multipliers, LP only and only when optimal.
    pub duals: Option<Vec<f64>>,
    /// Infeasibility certificate, LP only and only when infeasible.
    pub farkas: Option<Vec<f64>>,
    /// Relative gap achieved.
    pub gap: f64,
    /// Seconds spent in the backend.
    pub wall_time: f64,
}

impl SolveOutcome {
    pub fn without_solution(status: SolveStatus) -> Self {
        Self {
            status,
            primal: Vec::new(),
            objective: f64::NAN,
            best_bound: f64::NAN,
            duals: None,
            farkas: None,
            gap: f64::NAN,
            wall_time: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid problem: {0}")]
    Problem(#[from] ProblemError),
    #[error("solve_lp called on a problem with integer variables")]
    NotLinear,
    #[error("backend failure: {message}")]
    Backend { message: String, log: String },
}

/// A linear / mixed-integer backend. Implementations may keep internal state
/// (logs, options) and therefore take `&mut self`.
pub trait LinearSolver {
    /// Solves a pure LP. Optimal outcomes carry duals; infeasible outcomes
    /// carry a Farkas certificate.
    fn solve_lp(&mut self, problem: &LinearProblem) -> Result<SolveOutcome, SolverError>;

    /// Solves a MILP to the gap in `problem.mip_gap`.
    fn solve_milp(&mut self, problem: &LinearProblem) -> Result<SolveOutcome, SolverError>;
}

impl<S: LinearSolver + ?Sized> LinearSolver for &mut S {
    fn solve_lp(&mut self, problem: &LinearProblem) -> Result<SolveOutcome, SolverError> {
        (**self).solve_lp(problem)
    }

    fn solve_milp(&mut self, problem: &LinearProblem) -> Result<SolveOutcome, SolverError> {
        (**self).solve_milp(problem)
    }
}

/// `min_{l ≤ x ≤ u} d·x`, which is `-∞` when `d` points at an infinite bound.
fn box_min(d: f64, lower: f64, upper: f64) -> f64 {
    if d.abs() <= ZERO_COEF {
        let m = lower.abs().max(upper.abs());
        return if m.is_finite() { -d.abs() * m } else { 0.0 };
    }
    if d > 0.0 {
        d * lower
    } else {
        d * upper
    }
}

/// Lagrangian dual value `bᵀy + Σ_j min_box (c - Aᵀy)_j x_j + offset`. Equals
/// the optimum for optimal duals and is a lower bound for any sign-feasible
/// `y`.
pub fn dual_objective(problem: &LinearProblem, duals: &[f64]) -> f64 {
    let g = problem.transpose_times(duals);
    let rows: f64 = problem.rows.iter().zip(duals).map(|(r, y)| r.rhs * y).sum();
    let boxes: f64 = problem
        .vars
        .iter()
        .zip(&g)
        .map(|(v, gj)| box_min(v.cost - gj, v.lower, v.upper))
        .sum();
    problem.offset + rows + boxes
}

/// `Σ_j min_box (c - Aᵀy)_j x_j`: the part of the dual objective that does
/// not depend on the right-hand side.
pub fn lagrangian_box(problem: &LinearProblem, duals: &[f64]) -> f64 {
    let g = problem.transpose_times(duals);
    problem
        .vars
        .iter()
        .zip(&g)
        .map(|(v, gj)| box_min(v.cost - gj, v.lower, v.upper))
        .sum()
}

/// `max_box (Aᵀy)ᵀx`, the right-hand-side-free part of a Farkas margin.
pub fn ray_box(problem: &LinearProblem, ray: &[f64]) -> f64 {
    let g = problem.transpose_times(ray);
    problem
        .vars
        .iter()
        .zip(&g)
        .map(|(v, &gj)| -box_min(-gj, v.lower, v.upper))
        .sum()
}

/// Clamps multipliers that carry the wrong sign for their row to zero.
pub fn project_duals(problem: &LinearProblem, duals: &[f64]) -> Vec<f64> {
    problem
        .rows
        .iter()
        .zip(duals)
        .map(|(r, &y)| match r.sense {
            Sense::Le => y.min(0.0),
            Sense::Ge => y.max(0.0),
            Sense::Eq => y,
        })
        .collect()
}

fn sign_ok(sense: Sense, y: f64, tol: f64) -> bool {
    match sense {
        Sense::Le => y <= tol,
        Sense::Ge => y >= -tol,
        Sense::Eq => true,
    }
}

/// Margin `yᵀb - max_box (Aᵀy)ᵀx` of a candidate certificate, after scaling
/// `y` to unit max-norm. `None` when the signs are wrong or the box maximum is
/// unbounded.
pub fn farkas_margin(problem: &LinearProblem, ray: &[f64]) -> Option<f64> {
    if ray.len() != problem.rows.len() {
        return None;
    }
    let scale = ray.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    let y: Vec<f64> = ray.iter().map(|v| v / scale).collect();
    if problem
        .rows
        .iter()
        .zip(&y)
        .any(|(r, &yi)| !sign_ok(r.sense, yi, ZERO_COEF))
    {
        return None;
    }
    let g = problem.transpose_times(&y);
    let mut max_box = 0.0;
    for (v, &gj) in problem.vars.iter().zip(&g) {
        let m = -box_min(-gj, v.lower, v.upper);
        if !m.is_finite() {
            return None;
        }
        max_box += m;
    }
    let yb: f64 = problem.rows.iter().zip(&y).map(|(r, yi)| r.rhs * yi).sum();
    Some(yb - max_box)
}

/// True iff `ray` proves `problem` has no point satisfying rows and bounds.
pub fn verify_farkas(problem: &LinearProblem, ray: &[f64]) -> bool {
    farkas_margin(problem, ray).is_some_and(|m| m > FARKAS_TOLERANCE)
}

/// Elastic phase-one model: one non-negative slack per row direction,
/// minimizing total infeasibility, with the original bounds kept.
pub fn phase_one(problem: &LinearProblem) -> LinearProblem {
    let mut p = LinearProblem::new();
    for v in &problem.vars {
        p.add_var(Variable::continuous(v.lower, v.upper, 0.0));
    }
    for r in &problem.rows {
        let mut terms = r.terms.clone();
        match r.sense {
            Sense::Le => {
                let s = p.add_var(Variable::continuous(0.0, f64::INFINITY, 1.0));
                terms.push((s, -1.0));
            }
            Sense::Ge => {
                let s = p.add_var(Variable::continuous(0.0, f64::INFINITY, 1.0));
                terms.push((s, 1.0));
            }
            Sense::Eq => {
                let s = p.add_var(Variable::continuous(0.0, f64::INFINITY, 1.0));
                let t = p.add_var(Variable::continuous(0.0, f64::INFINITY, 1.0));
                terms.push((s, 1.0));
                terms.push((t, -1.0));
            }
        }
        p.add_row(Row::new(terms, r.sense, r.rhs));
    }
    p
}

/// Certificate for an infeasible LP taken from the duals of its phase-one
/// model; those duals satisfy the sign rules of the original rows and their
/// dual objective equals the positive phase-one optimum. Returns `None` when
/// the phase-one optimum is not positive or the duals fail verification.
pub fn phase_one_certificate<S: LinearSolver + ?Sized>(
    solver: &mut S,
    problem: &LinearProblem,
) -> Result<Option<Vec<f64>>, SolverError> {
    let p1 = phase_one(problem);
    let out = solver.solve_lp(&p1)?;
    if out.status != SolveStatus::Optimal || !(out.objective > FARKAS_TOLERANCE) {
        return Ok(None);
    }
    Ok(out.duals.filter(|y| verify_farkas(problem, y)))
}
