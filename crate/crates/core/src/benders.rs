//! Modified Benders decomposition.
//!
//! The inner loop alternates the master MILP (cones handled by outer
//! approximation) with one outage subproblem LP per hour, exchanging
//! optimality and feasibility cuts until the bounds meet. The outer loop
//! screens the relaxed line-contingency cones at the inner solution,
//! activates every violated one in the master and repeats.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulation::{
    all_contingency_keys, build_deterministic, build_extensive_form, build_master,
    build_subproblem, contingency_line_soc, extract_solution, ContingencyKey, FormulationError,
    HourAffine, HourPoint, Instance, ModelInstance, Subproblem, VariableCatalog,
};
use crate::lp::{
    farkas_margin, lagrangian_box, project_duals, ray_box, verify_farkas, LinearSolver, Row, Sense,
    SolveStatus, SolverError,
};
use crate::oa::{solve_with_oa, OaCut, OaOptions, OaResult, OaStats};
use crate::solution::{CommitmentSolution, Redispatch};
use crate::uncertainty::check_chance_constraint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BendersOptions {
    /// Relative gap `(UB - LB) / max(|UB|, 1)` that ends the inner loop.
    pub gap: f64,
    /// Relative MIP gap for master and monolithic solves.
    pub mip_gap: f64,
    pub oa: OaOptions,
    pub max_inner: usize,
    pub max_outer: usize,
    /// Tolerance of the final feasibility sweep (MW, relative to `1 + |rhs|`
    /// for rows).
    pub verify_tolerance: f64,
}

impl Default for BendersOptions {
    fn default() -> Self {
        Self {
            gap: 0.01,
            mip_gap: 0.01,
            oa: OaOptions::default(),
            max_inner: 200,
            max_outer: 25,
            verify_tolerance: 1e-5,
        }
    }
}

/// A cut on one hour's master quantities. Optimality cuts read
/// `η(t) ≥ rhs(x, p, r⁺)`, feasibility cuts `rhs(x, p, r⁺) ≤ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BendersCut {
    pub hour: usize,
    pub rhs: HourAffine,
    /// Master point the cut was generated at.
    pub origin: HourPoint,
    /// Subproblem optimum (optimality) or certificate margin (feasibility) at
    /// `origin`.
    pub origin_value: f64,
}

impl BendersCut {
    pub fn value(&self, point: &HourPoint) -> f64 {
        self.rhs.eval(point)
    }

    /// The cut as a master row.
    pub fn master_row(&self, catalog: &VariableCatalog, optimality: bool) -> Row {
        let e = self.rhs.to_expr(catalog, self.hour).compact();
        let mut terms: Vec<_> = e.terms.iter().map(|&(v, c)| (v, -c)).collect();
        if optimality {
            terms.push((catalog.eta[self.hour], 1.0));
        }
        Row::new(terms, Sense::Ge, e.constant)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub outer: usize,
    pub inner: usize,
    pub master_bound: f64,
    pub lower_bound: f64,
    pub upper_bound: Option<f64>,
    pub gap: Option<f64>,
    pub optimality_cuts: usize,
    pub feasibility_cuts: usize,
    pub oa_cuts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    pub outer: usize,
    pub objective: f64,
    pub inner_iterations: usize,
    pub violated_constraints: usize,
    pub violated_lines: usize,
    pub activated: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BendersState {
    pub optimality_cuts: Vec<BendersCut>,
    pub feasibility_cuts: Vec<BendersCut>,
    pub oa_cuts: Vec<OaCut>,
    pub activated: BTreeSet<ContingencyKey>,
    pub lower_bound: f64,
    pub upper_bound: Option<f64>,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
    pub log: Vec<IterationRecord>,
    pub outer_log: Vec<OuterRecord>,
    pub oa_stats: OaStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SccucResult {
    pub solution: CommitmentSolution,
    pub state: BendersState,
}

/// Row or cone of the monolithic model not met by a returned solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub what: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BendersError {
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("problem is infeasible")]
    Infeasible,
    #[error("master problem is unbounded")]
    Unbounded,
    #[error("solver stopped at a limit: {0}")]
    Limit(String),
    #[error("outer approximation did not converge (max residual {max_residual} MW)")]
    OaRoundLimit { max_residual: f64 },
    #[error("inner loop hit its cap of {iterations} iterations")]
    InnerLimit {
        iterations: usize,
        state: Box<BendersState>,
    },
    #[error("outer loop hit its cap of {iterations} iterations with {} activated constraints", .state.activated.len())]
    OuterLimit {
        iterations: usize,
        state: Box<BendersState>,
        incumbent: Option<Box<CommitmentSolution>>,
    },
    #[error("subproblem at hour {hour} reported infeasible without a valid certificate")]
    InvalidRay { hour: usize },
    #[error("subproblem at hour {hour} is unbounded")]
    UnboundedSubproblem { hour: usize },
    #[error("final solution fails {} checks, first: {}", .0.len(), .0.first().map(|f| f.what.as_str()).unwrap_or(""))]
    Verification(Vec<SweepFailure>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubproblemOutcome {
    Optimal {
        objective: f64,
        duals: Vec<f64>,
        primal: Vec<f64>,
    },
    Infeasible {
        ray: Vec<f64>,
    },
}

/// Builds and solves the hour-`t` outage subproblem at `point`.
pub fn solve_subproblem<S: LinearSolver + ?Sized>(
    solver: &mut S,
    inst: &Instance,
    t: usize,
    point: &HourPoint,
) -> Result<(Subproblem, SubproblemOutcome), BendersError> {
    let sp = build_subproblem(inst, t, point);
    let out = solver.solve_lp(&sp.problem)?;
    let outcome = match out.status {
        SolveStatus::Optimal | SolveStatus::FeasibleWithinGap => SubproblemOutcome::Optimal {
            objective: out.objective,
            duals: out.duals.unwrap_or_default(),
            primal: out.primal,
        },
        SolveStatus::Infeasible => {
            let ray = out.farkas.ok_or(BendersError::InvalidRay { hour: t })?;
            SubproblemOutcome::Infeasible { ray }
        }
        SolveStatus::Unbounded => return Err(BendersError::UnboundedSubproblem { hour: t }),
        SolveStatus::Limit => return Err(BendersError::Limit(format!("subproblem at hour {t}"))),
    };
    Ok((sp, outcome))
}

/// `η(t) ≥ γᵀb(x, p, r⁺) + min_box (c - Aᵀγ)ᵀv`, exact at the generating
/// point and a lower bound of the subproblem value everywhere.
pub fn make_optimality_cut(sp: &Subproblem, duals: &[f64], objective: f64) -> BendersCut {
    let gamma = project_duals(&sp.problem, duals);
    let n_g = sp.r_up.len();
    let mut rhs = HourAffine::zero(n_g);
    for (b, &y) in sp.rhs.iter().zip(&gamma) {
        if y != 0.0 {
            rhs.add_scaled(b, y);
        }
    }
    rhs.constant += lagrangian_box(&sp.problem, &gamma);
    BendersCut {
        hour: sp.hour,
        rhs,
        origin: sp.point.clone(),
        origin_value: objective,
    }
}

/// `βᵀb(x, p, r⁺) - max_box (Aᵀβ)ᵀv ≤ 0` for a verified certificate `β`,
/// scaled so that `‖β‖∞ = 1`.
pub fn make_feasibility_cut(sp: &Subproblem, ray: &[f64]) -> Result<BendersCut, BendersError> {
    if !verify_farkas(&sp.problem, ray) {
        return Err(BendersError::InvalidRay { hour: sp.hour });
    }
    let scale = ray.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let beta: Vec<f64> = ray.iter().map(|y| y / scale).collect();
    let n_g = sp.r_up.len();
    let mut rhs = HourAffine::zero(n_g);
    for (b, &y) in sp.rhs.iter().zip(&beta) {
        if y != 0.0 {
            rhs.add_scaled(b, y);
        }
    }
    rhs.constant -= ray_box(&sp.problem, &beta);
    Ok(BendersCut {
        hour: sp.hour,
        rhs,
        origin: sp.point.clone(),
        origin_value: farkas_margin(&sp.problem, &beta).unwrap_or(f64::NAN),
    })
}

/// `(UB - LB) / max(|UB|, 1)`.
pub fn relative_gap(lower: f64, upper: f64) -> f64 {
    (upper - lower) / upper.abs().max(1.0)
}

/// Value of the master objective without the surrogate terms.
fn cost_without_eta(master: &ModelInstance, primal: &[f64]) -> f64 {
    master.problem.objective_value(primal)
        - master.catalog.eta.iter().map(|&e| primal[e]).sum::<f64>()
}

fn solve_master<S: LinearSolver + ?Sized>(
    solver: &mut S,
    inst: &Instance,
    state: &mut BendersState,
    options: &BendersOptions,
) -> Result<(ModelInstance, crate::lp::SolveOutcome, usize), BendersError> {
    let master = build_master(inst, state)?;
    let mut problem = master.problem.clone();
    problem.mip_gap = Some(options.mip_gap);
    let mut sink = Vec::new();
    let result = solve_with_oa(
        solver,
        &mut problem,
        &master.socs,
        &options.oa,
        &mut state.oa_stats,
        &mut sink,
    )?;
    let added = sink.len();
    state.oa_cuts.extend(sink);
    match result {
        OaResult::Converged(out) => Ok((master, out, added)),
        OaResult::NoSolution(out) => Err(status_error(out.status, "master")),
        OaResult::RoundLimit { max_residual, .. } => {
            Err(BendersError::OaRoundLimit { max_residual })
        }
    }
}

fn status_error(status: SolveStatus, what: &str) -> BendersError {
    match status {
        SolveStatus::Infeasible => BendersError::Infeasible,
        SolveStatus::Unbounded => BendersError::Unbounded,
        _ => BendersError::Limit(String::from(what)),
    }
}

/// One inner loop: the relaxed problem with the currently activated
/// contingency cones, solved to the Benders gap. Cuts accumulate in `state`.
pub fn inner_benders<S: LinearSolver + ?Sized>(
    solver: &mut S,
    inst: &Instance,
    state: &mut BendersState,
    options: &BendersOptions,
) -> Result<CommitmentSolution, BendersError> {
    let outer = state.outer_iterations;
    state.upper_bound = None;
    let mut incumbent: Option<CommitmentSolution> = None;
    let decomposed = !inst.contingent_gens().is_empty();
    for inner in 1..=options.max_inner {
        state.inner_iterations += 1;
        let (master, out, oa_added) = solve_master(solver, inst, state, options)?;
        let bound = if out.best_bound.is_finite() {
            out.best_bound
        } else {
            out.objective
        };
        state.lower_bound = state.lower_bound.max(bound);

        let mut feasible = true;
        let mut tertiary = 0.0;
        let mut opt_added = 0;
        let mut feas_added = 0;
        let mut hours = Vec::new();
        if decomposed {
            for t in 0..inst.horizon() {
                let point = HourPoint::from_primal(&master.catalog, &out.primal, t);
                let (sp, res) = solve_subproblem(solver, inst, t, &point)?;
                match res {
                    SubproblemOutcome::Optimal {
                        objective,
                        duals,
                        primal,
                    } => {
                        tertiary += objective;
                        let eta = out.primal[master.catalog.eta[t]];
                        let cut = make_optimality_cut(&sp, &duals, objective);
                        if cut.value(&point) > eta + 1e-6 * objective.abs().max(1.0) {
                            state.optimality_cuts.push(cut);
                            opt_added += 1;
                        }
                        hours.push((sp, primal));
                    }
                    SubproblemOutcome::Infeasible { ray } => {
                        feasible = false;
                        let cut = make_feasibility_cut(&sp, &ray)?;
                        state.feasibility_cuts.push(cut);
                        feas_added += 1;
                    }
                }
            }
        }
        if feasible {
            let ub = cost_without_eta(&master, &out.primal) + tertiary;
            if state.upper_bound.is_none_or(|u| ub < u) {
                state.upper_bound = Some(ub);
                let mut sol = extract_solution(inst, &master, &out.primal, 0.0)?;
                apply_subproblems(inst, &mut sol, &hours);
                incumbent = Some(sol);
            }
        }
        let gap = state
            .upper_bound
            .map(|u| relative_gap(state.lower_bound, u));
        state.log.push(IterationRecord {
            outer,
            inner,
            master_bound: bound,
            lower_bound: state.lower_bound,
            upper_bound: state.upper_bound,
            gap,
            optimality_cuts: opt_added,
            feasibility_cuts: feas_added,
            oa_cuts: oa_added,
        });
        let done = gap.is_some_and(|g| g <= options.gap);
        let stalled = opt_added + feas_added == 0;
        if done || stalled {
            if let Some(mut sol) = incumbent {
                sol.gap = gap.unwrap_or(0.0).max(0.0);
                return Ok(sol);
            }
        }
    }
    Err(BendersError::InnerLimit {
        iterations: options.max_inner,
        state: Box::new(state.clone()),
    })
}

/// Replaces the master's tertiary proxy with the subproblem reserves and
/// records the per-outage redispatch.
fn apply_subproblems(
    inst: &Instance,
    sol: &mut CommitmentSolution,
    hours: &[(Subproblem, Vec<f64>)],
) {
    for r in &mut sol.r_up {
        r.iter_mut().for_each(|v| *v = 0.0);
    }
    sol.redispatch.clear();
    for (sp, primal) in hours {
        let t = sp.hour;
        for (i, &v) in sp.r_up.iter().enumerate() {
            sol.r_up[i][t] = snap(primal[v]);
        }
        for (ci, vars) in sp.delta.iter().enumerate() {
            sol.redispatch.push(Redispatch {
                hour: t,
                contingency: ci,
                generator: inst.case.generators[inst.contingent_gens()[ci]].id,
                delta: vars.iter().map(|&v| snap(primal[v])).collect(),
            });
        }
    }
    sol.recompute_costs(&inst.case);
}

fn snap(v: f64) -> f64 {
    if v.abs() < 1e-9 {
        0.0
    } else {
        v
    }
}

/// Column layout used to evaluate cones on a stored solution: for each hour
/// `p` occupies `[0, G)` and `α` occupies `[G, 2G)`.
fn compact_catalog(gens: usize, horizon: usize) -> VariableCatalog {
    VariableCatalog {
        p: (0..gens).map(|i| vec![i; horizon]).collect(),
        alpha: (0..gens).map(|i| vec![gens + i; horizon]).collect(),
        ..VariableCatalog::default()
    }
}

fn compact_point(sol: &CommitmentSolution, t: usize) -> Vec<f64> {
    sol.p
        .iter()
        .map(|p| p[t])
        .chain(sol.alpha.iter().map(|a| a[t]))
        .collect()
}

/// Residual of one contingency cone at a stored solution.
pub fn contingency_residual(
    inst: &Instance,
    sol: &CommitmentSolution,
    key: ContingencyKey,
) -> Result<f64, BendersError> {
    let cat = compact_catalog(inst.gens(), inst.horizon());
    let soc = contingency_line_soc(inst, &cat, key)?;
    Ok(check_chance_constraint(&soc, &compact_point(sol, key.hour)))
}

/// Every line-contingency cone violated by more than `tolerance` at `sol`.
pub fn screen_line_contingencies(
    inst: &Instance,
    sol: &CommitmentSolution,
    tolerance: f64,
) -> Result<BTreeSet<ContingencyKey>, BendersError> {
    let cat = compact_catalog(inst.gens(), inst.horizon());
    let points: Vec<Vec<f64>> = (0..inst.horizon()).map(|t| compact_point(sol, t)).collect();
    let mut out = BTreeSet::new();
    for key in all_contingency_keys(inst) {
        let soc = contingency_line_soc(inst, &cat, key)?;
        if check_chance_constraint(&soc, &points[key.hour]) > tolerance {
            out.insert(key);
        }
    }
    Ok(out)
}

/// Distinct lines among `keys`; a line violated in several hours or
/// outages counts once.
pub fn violated_line_count(keys: &BTreeSet<ContingencyKey>) -> usize {
    keys.iter().map(|k| k.line).collect::<BTreeSet<_>>().len()
}

/// Checks every row and cone of the monolithic model at `sol`.
pub fn verify_solution(
    inst: &Instance,
    sol: &CommitmentSolution,
    tolerance: f64,
) -> Result<Vec<SweepFailure>, BendersError> {
    let model = build_extensive_form(inst)?;
    Ok(sweep(&model, inst, sol, tolerance))
}

fn sweep(
    model: &ModelInstance,
    inst: &Instance,
    sol: &CommitmentSolution,
    tolerance: f64,
) -> Vec<SweepFailure> {
    let point = model.point_from_solution(&inst.case, sol);
    let mut failures = Vec::new();
    for (k, (row, fam)) in model.problem.rows.iter().zip(&model.families).enumerate() {
        let r = row.residual(&point);
        if r > tolerance * (1.0 + row.rhs.abs()) {
            failures.push(SweepFailure {
                what: format!("row {k} ({fam:?})"),
                residual: r,
            });
        }
    }
    for soc in &model.socs {
        let r = check_chance_constraint(soc, &point);
        if r > tolerance {
            failures.push(SweepFailure {
                what: format!("cone {:?}", soc.label),
                residual: r,
            });
        }
    }
    failures
}

/// Full algorithm: inner Benders loops wrapped in line-contingency screening.
pub fn solve_sccuc<S: LinearSolver + ?Sized>(
    solver: &mut S,
    inst: &Instance,
    options: &BendersOptions,
) -> Result<SccucResult, BendersError> {
    let mut state = BendersState::default();
    let mut incumbent = None;
    for outer in 1..=options.max_outer {
        state.outer_iterations = outer;
        let before = state.inner_iterations;
        let sol = inner_benders(solver, inst, &mut state, options)?;
        let violated = screen_line_contingencies(inst, &sol, options.oa.tolerance)?;
        let fresh: BTreeSet<ContingencyKey> =
            violated.difference(&state.activated).copied().collect();
        state.outer_log.push(OuterRecord {
            outer,
            objective: sol.objective,
            inner_iterations: state.inner_iterations - before,
            violated_constraints: violated.len(),
            violated_lines: violated_line_count(&violated),
            activated: state.activated.len() + fresh.len(),
        });
        if violated.is_empty() {
            let failures = verify_solution(inst, &sol, options.verify_tolerance)?;
            if !failures.is_empty() {
                return Err(BendersError::Verification(failures));
            }
            return Ok(SccucResult {
                solution: sol,
                state,
            });
        }
        if fresh.is_empty() {
            // activated cones are enforced by outer approximation, so this
            // only happens when screening and OA tolerances disagree
            return Err(BendersError::OaRoundLimit {
                max_residual: violated
                    .iter()
                    .map(|&k| contingency_residual(inst, &sol, k).unwrap_or(f64::NAN))
                    .fold(0.0, f64::max),
            });
        }
        state.activated.extend(fresh);
        incumbent = Some(sol);
    }
    Err(BendersError::OuterLimit {
        iterations: options.max_outer,
        incumbent: incumbent.map(Box::new),
        state: Box::new(state),
    })
}

/// Result of a monolithic solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonolithicResult {
    pub solution: CommitmentSolution,
    pub lower_bound: f64,
    pub oa_stats: OaStats,
    pub oa_cuts: usize,
}

fn solve_monolithic<S: LinearSolver + ?Sized>(
    solver: &mut S,
    inst: &Instance,
    model: ModelInstance,
    options: &BendersOptions,
) -> Result<MonolithicResult, BendersError> {
    let mut problem = model.problem.clone();
    problem.mip_gap = Some(options.mip_gap);
    let mut stats = OaStats::default();
    let mut sink = Vec::new();
    let out = match solve_with_oa(
        solver,
        &mut problem,
        &model.socs,
        &options.oa,
        &mut stats,
        &mut sink,
    )? {
        OaResult::Converged(out) => out,
        OaResult::NoSolution(out) => return Err(status_error(out.status, "monolithic model")),
        OaResult::RoundLimit { max_residual, .. } => {
            return Err(BendersError::OaRoundLimit { max_residual })
        }
    };
    let gap = if out.gap.is_finite() {
        out.gap.max(0.0)
    } else {
        0.0
    };
    let solution = extract_solution(inst, &model, &out.primal, gap)?;
    let failures = sweep(&model, inst, &solution, options.verify_tolerance);
    if !failures.is_empty() {
        return Err(BendersError::Verification(failures));
    }
    Ok(MonolithicResult {
        solution,
        lower_bound: out.best_bound,
        oa_stats: stats,
        oa_cuts: sink.len(),
    })
}

/// Solves the extensive form directly (the reference for the decomposition).
pub fn solve_extensive<S: LinearSolver + ?Sized>(
    solver: &mut S,
    inst: &Instance,
    options: &BendersOptions,
) -> Result<MonolithicResult, BendersError> {
    let model = build_extensive_form(inst)?;
    solve_monolithic(solver, inst, model, options)
}

/// Solves the deterministic counterpart with the nominal reserve rule.
pub fn solve_deterministic<S: LinearSolver + ?Sized>(
    solver: &mut S,
    inst: &Instance,
    reserve_fraction: f64,
    options: &BendersOptions,
) -> Result<MonolithicResult, BendersError> {
    let model = build_deterministic(inst, reserve_fraction)?;
    let det = inst.without_uncertainty();
    solve_monolithic(solver, &det, model, options)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_formula() {
        assert_eq!(relative_gap(99.0, 100.0), 0.01);
        assert_eq!(relative_gap(0.0, 0.5), 0.5);
        assert_eq!(relative_gap(-10.0, -10.0), 0.0);
    }

    #[test]
    fn line_count_dedups() {
        use crate::uncertainty::FlowSign;
        let mut s = BTreeSet::new();
        for hour in 0..2 {
            s.insert(ContingencyKey {
                line: 0,
                outage: 2,
                hour,
                sign: FlowSign::Upper,
            });
        }
        assert_eq!(s.len(), 2);
        assert_eq!(violated_line_count(&s), 1);
    }
}
