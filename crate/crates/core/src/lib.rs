//! Core algorithms for N-1 secure, chance-constrained unit commitment on a
//! DC network.
//!
//! The crate is `no_std` (it needs `alloc`). Everything that touches files,
//! clocks or a concrete LP/MILP engine lives in the companion `sccuc` crate;
//! solver access goes through the [`lp::LinearSolver`] trait.
//!
//! Module map:
//!
//! * [`grid`]: case data, validation and shift-factor (PTDF) matrices.
//! * [`uncertainty`]: Gaussian wind model, chance-constraint reformulation and
//!   outer-approximation cuts.
//! * [`lp`]: the solver contract, duality checks and Farkas certificates.
//! * [`formulation`]: master, subproblem, extensive-form and deterministic
//!   model builders.
//! * [`benders`]: the decomposition engine and line-contingency screening.
//! * [`validation`]: out-of-sample Monte Carlo evaluation.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod benders;
pub mod expr;
pub mod formulation;
pub mod grid;
pub mod lp;
mod math;
pub mod oa;
pub mod solution;
pub mod uncertainty;
pub mod validation;

pub use benders::{solve_sccuc, BendersError, BendersOptions, BendersState, SccucResult};
pub use formulation::{Instance, ModelInstance};
pub use grid::{validate_case, GridCase, PtdfSet, SensitivityMatrix};
pub use lp::{LinearProblem, LinearSolver, SolveOutcome, SolveStatus};
pub use solution::CommitmentSolution;
pub use uncertainty::{ChanceSpec, SocConstraint, WindModel};
