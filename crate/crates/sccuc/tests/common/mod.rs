#![allow(dead_code)]

use sccuc::HighsSolver;
use sccuc_core::benders::BendersOptions;
use sccuc_core::{ChanceSpec, GridCase, Instance};

pub fn solver() -> HighsSolver {
    HighsSolver::default()
}

/// Benders gap 1e-6 and MIP gap 0.
pub fn exact() -> BendersOptions {
    BendersOptions {
        gap: 1e-6,
        mip_gap: 0.0,
        ..BendersOptions::default()
    }
}

pub fn instance(case: GridCase) -> Instance {
    Instance::new(case, ChanceSpec::default()).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
