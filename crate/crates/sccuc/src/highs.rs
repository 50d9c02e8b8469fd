//! HiGHS backend for [`LinearSolver`], via the `highs-sys` C bindings.

use std::ffi::{c_void, CString};
use std::fmt::Write as _;
use std::os::raw::c_int;
use std::time::Instant;

use highs_sys::*;
use sccuc_core::lp::{phase_one_certificate, Sense, SolverError};
use sccuc_core::{LinearProblem, LinearSolver, SolveOutcome, SolveStatus};

const MODEL_OPTIMAL: c_int = 7;
const MODEL_INFEASIBLE: c_int = 8;
const MODEL_UNBOUNDED_OR_INFEASIBLE: c_int = 9;
const MODEL_UNBOUNDED: c_int = 10;
const MODEL_TIME_LIMIT: c_int = 13;
const MODEL_ITERATION_LIMIT: c_int = 14;
const MODEL_SOLUTION_LIMIT: c_int = 16;
const MODEL_INTERRUPT: c_int = 17;
const STATUS_ERROR: c_int = -1;
const ROWWISE: c_int = 2;
const MINIMIZE: c_int = 1;

/// Gaps below this are reported as proven optimal.
const OPTIMAL_GAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct HighsOptions {
    pub threads: Option<usize>,
    pub seed: u64,
    pub time_limit: Option<f64>,
    pub presolve: bool,
}

impl Default for HighsOptions {
    fn default() -> Self {
        Self {
            threads: None,
            seed: 0,
            time_limit: None,
            presolve: true,
        }
    }
}

/// One line per solve: size, status, objective and bound. No timings, so the
/// log is reproducible.
#[derive(Debug, Default, Clone)]
pub struct SolveLog {
    pub lines: Vec<String>,
}

#[derive(Debug, Default)]
pub struct HighsSolver {
    pub options: HighsOptions,
    pub log: SolveLog,
    solves: usize,
}

struct Handle(*mut c_void);

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { Highs_destroy(self.0) }
    }
}

fn backend(message: impl Into<String>) -> SolverError {
    SolverError::Backend {
        message: message.into(),
        log: String::new(),
    }
}

fn cstr(s: &str) -> CString {
    CString::new(s).expect("option names have no NUL")
}

impl Handle {
    fn new() -> Result<Self, SolverError> {
        let h = unsafe { Highs_create() };
        if h.is_null() {
            return Err(backend("Highs_create returned null"));
        }
        Ok(Self(h))
    }

    fn check(&self, status: c_int, what: &str) -> Result<(), SolverError> {
        if status == STATUS_ERROR {
            Err(backend(format!("HiGHS rejected {what}")))
        } else {
            Ok(())
        }
    }

    fn set_bool(&self, name: &str, v: bool) -> Result<(), SolverError> {
        let n = cstr(name);
        self.check(
            unsafe { Highs_setBoolOptionValue(self.0, n.as_ptr(), c_int::from(v)) },
            name,
        )
    }

    fn set_int(&self, name: &str, v: c_int) -> Result<(), SolverError> {
        let n = cstr(name);
        self.check(
            unsafe { Highs_setIntOptionValue(self.0, n.as_ptr(), v) },
            name,
        )
    }

    fn set_double(&self, name: &str, v: f64) -> Result<(), SolverError> {
        let n = cstr(name);
        self.check(
            unsafe { Highs_setDoubleOptionValue(self.0, n.as_ptr(), v) },
            name,
        )
    }

    fn set_string(&self, name: &str, v: &str) -> Result<(), SolverError> {
        let n = cstr(name);
        let v = cstr(v);
        self.check(
            unsafe { Highs_setStringOptionValue(self.0, n.as_ptr(), v.as_ptr()) },
            name,
        )
    }

    fn double_info(&self, name: &str) -> Option<f64> {
        let n = cstr(name);
        let mut v = 0.0;
        let s = unsafe { Highs_getDoubleInfoValue(self.0, n.as_ptr(), &mut v) };
        (s != STATUS_ERROR).then_some(v)
    }

    fn int_info(&self, name: &str) -> Option<c_int> {
        let n = cstr(name);
        let mut v: c_int = 0;
        let s = unsafe { Highs_getIntInfoValue(self.0, n.as_ptr(), &mut v) };
        (s != STATUS_ERROR).then_some(v)
    }
}

/// Column bounds, row bounds and a row-wise matrix with duplicate entries
/// merged and zeros dropped.
struct Arrays {
    cost: Vec<f64>,
    col_lower: Vec<f64>,
    col_upper: Vec<f64>,
    row_lower: Vec<f64>,
    row_upper: Vec<f64>,
    start: Vec<c_int>,
    index: Vec<c_int>,
    value: Vec<f64>,
    integrality: Vec<c_int>,
}

impl Arrays {
    fn new(problem: &LinearProblem) -> Self {
        let mut a = Arrays {
            cost: problem.vars.iter().map(|v| v.cost).collect(),
            col_lower: problem.vars.iter().map(|v| v.lower).collect(),
            col_upper: problem.vars.iter().map(|v| v.upper).collect(),
            row_lower: Vec::with_capacity(problem.rows.len()),
            row_upper: Vec::with_capacity(problem.rows.len()),
            start: Vec::with_capacity(problem.rows.len()),
            index: Vec::new(),
            value: Vec::new(),
            integrality: problem
                .vars
                .iter()
                .map(|v| c_int::from(v.integer))
                .collect(),
        };
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for row in &problem.rows {
            let (lo, hi) = match row.sense {
                Sense::Le => (f64::NEG_INFINITY, row.rhs),
                Sense::Ge => (row.rhs, f64::INFINITY),
                Sense::Eq => (row.rhs, row.rhs),
            };
            a.row_lower.push(lo);
            a.row_upper.push(hi);
            a.start.push(a.index.len() as c_int);
            terms.clear();
            terms.extend(row.terms.iter().copied());
            terms.sort_by_key(|t| t.0);
            let mut k = 0;
            while k < terms.len() {
                let (j, mut c) = terms[k];
                k += 1;
                while k < terms.len() && terms[k].0 == j {
                    c += terms[k].1;
                    k += 1;
                }
                if c != 0.0 {
                    a.index.push(j as c_int);
                    a.value.push(c);
                }
            }
        }
        a
    }
}

fn ratio_gap(objective: f64, bound: f64) -> f64 {
    let diff = (objective - bound).abs();
    if diff <= 1e-9 {
        0.0
    } else {
        diff / objective.abs().max(1e-10)
    }
}

impl HighsSolver {
    pub fn new(options: HighsOptions) -> Self {
        Self {
            options,
            log: SolveLog::default(),
            solves: 0,
        }
    }

    fn configure(&self, h: &Handle, presolve: bool) -> Result<(), SolverError> {
        h.set_bool("output_flag", false)?;
        h.set_string("presolve", if presolve { "on" } else { "off" })?;
        h.set_int(
            "random_seed",
            (self.options.seed % (i32::MAX as u64)) as c_int,
        )?;
        if let Some(n) = self.options.threads {
            h.set_int("threads", n as c_int)?;
        }
        if let Some(limit) = self.options.time_limit {
            h.set_double("time_limit", limit)?;
        }
        Ok(())
    }

    /// Loads and runs `problem`, returning the handle and the model status.
    fn run(
        &self,
        problem: &LinearProblem,
        integer: bool,
        presolve: bool,
    ) -> Result<(Handle, c_int), SolverError> {
        let h = Handle::new()?;
        self.configure(&h, presolve)?;
        let a = Arrays::new(problem);
        let nc = problem.vars.len() as c_int;
        let nr = problem.rows.len() as c_int;
        let nnz = a.index.len() as c_int;
        let status = unsafe {
            if integer {
                h.set_double("mip_rel_gap", problem.mip_gap.unwrap_or(0.0))?;
                Highs_passMip(
                    h.0,
                    nc,
                    nr,
                    nnz,
                    ROWWISE,
                    MINIMIZE,
                    problem.offset,
                    a.cost.as_ptr(),
                    a.col_lower.as_ptr(),
                    a.col_upper.as_ptr(),
                    a.row_lower.as_ptr(),
                    a.row_upper.as_ptr(),
                    a.start.as_ptr(),
                    a.index.as_ptr(),
                    a.value.as_ptr(),
                    a.integrality.as_ptr(),
                )
            } else {
                Highs_passLp(
                    h.0,
                    nc,
                    nr,
                    nnz,
                    ROWWISE,
                    MINIMIZE,
                    problem.offset,
                    a.cost.as_ptr(),
                    a.col_lower.as_ptr(),
                    a.col_upper.as_ptr(),
                    a.row_lower.as_ptr(),
                    a.row_upper.as_ptr(),
                    a.start.as_ptr(),
                    a.index.as_ptr(),
                    a.value.as_ptr(),
                )
            }
        };
        h.check(status, "the model")?;
        if integer {
            if let Some(ws) = problem
                .warm_start
                .as_ref()
                .filter(|w| w.len() == problem.vars.len())
            {
                // A rejected start is not an error; HiGHS just ignores it.
                unsafe {
                    Highs_setSolution(
                        h.0,
                        ws.as_ptr(),
                        std::ptr::null(),
                        std::ptr::null(),
                        std::ptr::null(),
                    );
                }
            }
        }
        h.check(unsafe { Highs_run(h.0) }, "the run")?;
        let model_status = unsafe { Highs_getModelStatus(h.0) };
        Ok((h, model_status))
    }

    fn values(h: &Handle, problem: &LinearProblem) -> (Vec<f64>, Vec<f64>) {
        let mut col = vec![0.0; problem.vars.len()];
        let mut col_dual = vec![0.0; problem.vars.len()];
        let mut row = vec![0.0; problem.rows.len()];
        let mut row_dual = vec![0.0; problem.rows.len()];
        unsafe {
            Highs_getSolution(
                h.0,
                col.as_mut_ptr(),
                col_dual.as_mut_ptr(),
                row.as_mut_ptr(),
                row_dual.as_mut_ptr(),
            );
        }
        (col, row_dual)
    }

    fn record(&mut self, kind: &str, problem: &LinearProblem, out: &SolveOutcome) {
        self.solves += 1;
        let mut line = String::new();
        let _ = write!(
            line,
            "solve {} {kind} cols={} rows={} status={:?}",
            self.solves,
            problem.vars.len(),
            problem.rows.len(),
            out.status
        );
        if out.status.has_solution() || out.status == SolveStatus::Limit && !out.primal.is_empty() {
            let _ = write!(
                line,
                " objective={:.9e} bound={:.9e} gap={:.3e}",
                out.objective, out.best_bound, out.gap
            );
        }
        self.log.lines.push(line);
    }

    /// Runs with presolve, then again without it when HiGHS cannot tell
    /// infeasible from unbounded.
    fn run_resolved(
        &self,
        problem: &LinearProblem,
        integer: bool,
    ) -> Result<(Handle, c_int), SolverError> {
        let (h, status) = self.run(problem, integer, self.options.presolve)?;
        if status == MODEL_UNBOUNDED_OR_INFEASIBLE && self.options.presolve {
            return self.run(problem, integer, false);
        }
        Ok((h, status))
    }
}

impl LinearSolver for HighsSolver {
    fn solve_lp(&mut self, problem: &LinearProblem) -> Result<SolveOutcome, SolverError> {
        if problem.has_integers() {
            return Err(SolverError::NotLinear);
        }
        problem.check()?;
        let clock = Instant::now();
        let (h, status) = self.run_resolved(problem, false)?;
        let mut out = match status {
            MODEL_OPTIMAL => {
                let (primal, duals) = Self::values(&h, problem);
                let objective = problem.objective_value(&primal);
                SolveOutcome {
                    status: SolveStatus::Optimal,
                    primal,
                    objective,
                    best_bound: objective,
                    duals: Some(duals),
                    farkas: None,
                    gap: 0.0,
                    wall_time: 0.0,
                }
            }
            MODEL_INFEASIBLE | MODEL_UNBOUNDED_OR_INFEASIBLE => {
                drop(h);
                let mut o = SolveOutcome::without_solution(SolveStatus::Infeasible);
                o.farkas = phase_one_certificate(self, problem)?;
                o
            }
            MODEL_UNBOUNDED => SolveOutcome::without_solution(SolveStatus::Unbounded),
            MODEL_TIME_LIMIT | MODEL_ITERATION_LIMIT | MODEL_INTERRUPT => {
                SolveOutcome::without_solution(SolveStatus::Limit)
            }
            other => return Err(backend(format!("HiGHS LP model status {other}"))),
        };
        out.wall_time = clock.elapsed().as_secs_f64();
        self.record("lp", problem, &out);
        Ok(out)
    }

    fn solve_milp(&mut self, problem: &LinearProblem) -> Result<SolveOutcome, SolverError> {
        problem.check()?;
        if !problem.has_integers() {
            return self.solve_lp(problem);
        }
        let clock = Instant::now();
        let (h, status) = self.run_resolved(problem, true)?;
        let feasible = h.int_info("primal_solution_status").unwrap_or(0) == 2;
        let mut out = match status {
            MODEL_OPTIMAL
            | MODEL_TIME_LIMIT
            | MODEL_ITERATION_LIMIT
            | MODEL_SOLUTION_LIMIT
            | MODEL_INTERRUPT
                if feasible =>
            {
                let (primal, _) = Self::values(&h, problem);
                let objective = problem.objective_value(&primal);
                let best_bound = h.double_info("mip_dual_bound").unwrap_or(objective);
                let gap = ratio_gap(objective, best_bound.min(objective));
                let status = if status != MODEL_OPTIMAL {
                    SolveStatus::Limit
                } else if gap <= OPTIMAL_GAP {
                    SolveStatus::Optimal
                } else {
                    SolveStatus::FeasibleWithinGap
                };
                SolveOutcome {
                    status,
                    primal,
                    objective,
                    best_bound: best_bound.min(objective),
                    duals: None,
                    farkas: None,
                    gap,
                    wall_time: 0.0,
                }
            }
            MODEL_INFEASIBLE | MODEL_UNBOUNDED_OR_INFEASIBLE => {
                SolveOutcome::without_solution(SolveStatus::Infeasible)
            }
            MODEL_UNBOUNDED => SolveOutcome::without_solution(SolveStatus::Unbounded),
            MODEL_TIME_LIMIT | MODEL_ITERATION_LIMIT | MODEL_SOLUTION_LIMIT | MODEL_INTERRUPT => {
                SolveOutcome::without_solution(SolveStatus::Limit)
            }
            other => return Err(backend(format!("HiGHS MILP model status {other}"))),
        };
        out.wall_time = clock.elapsed().as_secs_f64();
        self.record("milp", problem, &out);
        Ok(out)
    }
}
