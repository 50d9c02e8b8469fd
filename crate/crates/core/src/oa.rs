//! Sequential outer approximation of cone constraints.
//!
//! A model carrying cone constraints is solved as an LP or MILP; every cone
//! violated at the solution contributes its supporting hyperplane and the
//! model is re-solved. For MILPs each round first polishes the cut set on the
//! LP with the integers fixed, which is much cheaper than another branch and
//! bound, and only then returns to the MILP.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::lp::{LinearProblem, LinearSolver, Row, SolveOutcome, SolverError};
use crate::uncertainty::{check_chance_constraint, oa_cut, OaOutcome, SocConstraint, SocLabel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OaOptions {
    /// Residual (MW) accepted as satisfied.
    pub tolerance: f64,
    /// MILP rounds before giving up.
    pub max_milp_rounds: usize,
    /// LP rounds per fixed-integer polish, and for pure LPs.
    pub max_lp_rounds: usize,
}

impl Default for OaOptions {
    fn default() -> Self {
        Self {
            tolerance: crate::uncertainty::SOC_TOLERANCE,
            max_milp_rounds: 100,
            max_lp_rounds: 500,
        }
    }
}

/// One emitted supporting hyperplane and the cone it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OaCut {
    pub label: SocLabel,
    pub row: Row,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OaResult {
    /// All cones hold at `outcome.primal` within tolerance.
    Converged(SolveOutcome),
    /// The relaxation itself has no usable solution (infeasible, unbounded or
    /// limit); the outcome is passed through.
    NoSolution(SolveOutcome),
    /// Round cap reached with cones still violated.
    RoundLimit {
        outcome: SolveOutcome,
        max_residual: f64,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OaStats {
    pub milp_rounds: usize,
    pub lp_rounds: usize,
    pub cuts: usize,
}

/// Largest cone residual at `point`; `-∞` for an empty set.
pub fn max_residual(socs: &[SocConstraint], point: &[f64]) -> f64 {
    socs.iter()
        .map(|s| check_chance_constraint(s, point))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Cuts for every cone violated at `point`.
pub fn separate(socs: &[SocConstraint], point: &[f64], tolerance: f64) -> Vec<OaCut> {
    socs.iter()
        .filter_map(|s| match oa_cut(s, point, tolerance) {
            OaOutcome::Cut(row) => Some(OaCut {
                label: s.label,
                row,
            }),
            OaOutcome::Satisfied => None,
        })
        .collect()
}

/// Outer-approximation driver. Emitted cuts are appended to `problem.rows`
/// and reported through `sink` so callers can keep them across rebuilds.
pub fn solve_with_oa<S: LinearSolver + ?Sized>(
    solver: &mut S,
    problem: &mut LinearProblem,
    socs: &[SocConstraint],
    options: &OaOptions,
    stats: &mut OaStats,
    sink: &mut Vec<OaCut>,
) -> Result<OaResult, SolverError> {
    let integer = problem.has_integers();
    let rounds = if integer {
        options.max_milp_rounds
    } else {
        options.max_lp_rounds
    };
    let mut last = None;
    for _ in 0..rounds {
        let out = if integer {
            stats.milp_rounds += 1;
            solver.solve_milp(problem)?
        } else {
            stats.lp_rounds += 1;
            solver.solve_lp(problem)?
        };
        if !out.status.has_solution() {
            return Ok(OaResult::NoSolution(out));
        }
        let cuts = separate(socs, &out.primal, options.tolerance);
        if cuts.is_empty() {
            return Ok(OaResult::Converged(out));
        }
        push_cuts(problem, cuts, stats, sink);
        if integer {
            polish_fixed(solver, problem, &out.primal, socs, options, stats, sink)?;
        }
        last = Some(out);
    }
    let outcome = match last {
        Some(o) => o,
        None => {
            return Ok(OaResult::NoSolution(SolveOutcome::without_solution(
                crate::lp::SolveStatus::Limit,
            )))
        }
    };
    let max_residual = max_residual(socs, &outcome.primal);
    Ok(OaResult::RoundLimit {
        outcome,
        max_residual,
    })
}

fn push_cuts(
    problem: &mut LinearProblem,
    cuts: Vec<OaCut>,
    stats: &mut OaStats,
    sink: &mut Vec<OaCut>,
) {
    stats.cuts += cuts.len();
    for c in cuts {
        problem.rows.push(c.row.clone());
        sink.push(c);
    }
}

/// Adds cuts from the fixed-integer LP until its solution satisfies every
/// cone, the LP stops solving, or the round cap is hit.
fn polish_fixed<S: LinearSolver + ?Sized>(
    solver: &mut S,
    problem: &mut LinearProblem,
    point: &[f64],
    socs: &[SocConstraint],
    options: &OaOptions,
    stats: &mut OaStats,
    sink: &mut Vec<OaCut>,
) -> Result<(), SolverError> {
    let mut fixed = problem.fix_integers(point);
    for _ in 0..options.max_lp_rounds {
        stats.lp_rounds += 1;
        let out = solver.solve_lp(&fixed)?;
        if !out.status.has_solution() {
            return Ok(());
        }
        let cuts = separate(socs, &out.primal, options.tolerance);
        if cuts.is_empty() {
            return Ok(());
        }
        for c in &cuts {
            fixed.rows.push(c.row.clone());
        }
        push_cuts(problem, cuts, stats, sink);
    }
    Ok(())
}
