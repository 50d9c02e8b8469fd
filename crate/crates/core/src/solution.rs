//! Commitment schedules, dispatch and their cost accounting.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::grid::GridCase;

/// Cost components in the layout of a deterministic-vs-chance-constrained
/// comparison table ($).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub no_load: f64,
    pub startup: f64,
    pub production: f64,
    pub generation_reserve: f64,
    pub tertiary_reserve: f64,
    pub total: f64,
}

impl CostBreakdown {
    fn add(&mut self, o: &CostBreakdown) {
        self.no_load += o.no_load;
        self.startup += o.startup;
        self.production += o.production;
        self.generation_reserve += o.generation_reserve;
        self.tertiary_reserve += o.tertiary_reserve;
        self.total += o.total;
    }

    pub fn component_sum(&self) -> f64 {
        self.no_load
            + self.startup
            + self.production
            + self.generation_reserve
            + self.tertiary_reserve
    }
}

/// Redispatch `δ` covering the outage of one contingent generator at one
/// hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Redispatch {
    pub hour: usize,
    /// Position in the case's generator-contingency list.
    pub contingency: usize,
    /// Id of the outaged generator.
    pub generator: u32,
    /// One entry per generator, fleet order.
    pub delta: Vec<f64>,
}

/// A unit-commitment solution. Per-unit series are indexed
/// `[generator][hour]` in fleet order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitmentSolution {
    pub case_name: String,
    pub generator_ids: Vec<u32>,
    pub horizon: usize,
    pub x: Vec<Vec<bool>>,
    pub y: Vec<Vec<bool>>,
    pub z: Vec<Vec<bool>>,
    /// Start-up block charged at each start, if any.
    pub startup_block: Vec<Vec<Option<usize>>>,
    pub p: Vec<Vec<f64>>,
    /// `[generator][hour][cost block]`
    pub g: Vec<Vec<Vec<f64>>>,
    pub startup_cost: Vec<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
    pub r_plus: Vec<Vec<f64>>,
    pub r_minus: Vec<Vec<f64>>,
    pub r_up: Vec<Vec<f64>>,
    pub redispatch: Vec<Redispatch>,
    pub costs: CostBreakdown,
    pub hourly_costs: Vec<CostBreakdown>,
    pub objective: f64,
    /// Relative optimality gap reported by the method that produced it.
    pub gap: f64,
}

impl CommitmentSolution {
    /// Recomputes the per-hour and total cost breakdown and the objective from
    /// the stored schedule.
    pub fn recompute_costs(&mut self, case: &GridCase) {
        let mut hourly = alloc::vec![CostBreakdown::default(); self.horizon];
        for (i, gen) in case.generators.iter().enumerate() {
            for (t, h) in hourly.iter_mut().enumerate() {
                if self.x[i][t] {
                    h.no_load += gen.no_load_cost;
                }
                h.startup += self.startup_cost[i][t];
                h.production += gen
                    .cost_blocks
                    .iter()
                    .zip(&self.g[i][t])
                    .map(|(b, v)| b.slope * v)
                    .sum::<f64>();
                h.generation_reserve +=
                    gen.reserve_price * (self.r_plus[i][t] + self.r_minus[i][t]);
                h.tertiary_reserve += gen.tertiary_price * self.r_up[i][t];
            }
        }
        let mut total = CostBreakdown::default();
        for h in &mut hourly {
            h.total = h.component_sum();
            total.add(h);
        }
        self.costs = total;
        self.hourly_costs = hourly;
        self.objective = total.total;
    }

    /// `Σ_i r⁺ + r⁻` over the horizon (MW).
    pub fn total_generation_reserve(&self) -> f64 {
        self.r_plus.iter().chain(&self.r_minus).flatten().sum()
    }

    pub fn total_tertiary_reserve(&self) -> f64 {
        self.r_up.iter().flatten().sum()
    }

    /// Largest `|Σ_i α_i(t) - 1|` over hours.
    pub fn participation_error(&self) -> f64 {
        (0..self.horizon)
            .map(|t| (self.alpha.iter().map(|a| a[t]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest absolute power-balance mismatch over hours (MW).
    pub fn balance_error(&self, case: &GridCase) -> f64 {
        (0..self.horizon)
            .map(|t| {
                let gen: f64 = self.p.iter().map(|p| p[t]).sum();
                (gen + case.total_wind_forecast(t) - case.total_demand(t)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// True when the solution's shape fits `case`.
    pub fn matches_case(&self, case: &GridCase) -> bool {
        let n = case.generators.len();
        let t = case.horizon;
        let ids: Vec<u32> = case.generators.iter().map(|g| g.id).collect();
        self.case_name == case.name
            && self.generator_ids == ids
            && self.horizon == t
            && [
                &self.p,
                &self.alpha,
                &self.r_plus,
                &self.r_minus,
                &self.r_up,
            ]
            .iter()
            .all(|v| v.len() == n && v.iter().all(|s| s.len() == t))
            && self.x.len() == n
            && self.x.iter().all(|s| s.len() == t)
    }
}
