//! Gaussian wind deviations and the chance-constraint algebra built on them.
//!
//! Deviations `ω_b(t)` are independent, zero mean, with standard deviation
//! `σ_b(t)`. Under the affine response `p_i - α_i Ω` a one-sided chance
//! constraint `Pr(ξᵀv ≤ b) ≥ 1 - ε` becomes the second-order cone
//! `μᵀv + Φ⁻¹(1-ε)·‖Σ^{1/2} v‖ ≤ b`; the reserve constraints collapse to a
//! single linear row because only the scalar `Ω(t)` enters them.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{LinExpr, VarId};
use crate::grid::{GridCase, GridError};
use crate::lp::{Row, Sense};
use crate::math;

/// Default absolute tolerance (MW) on cone residuals.
pub const SOC_TOLERANCE: f64 = 1e-6;

/// Perturbation applied to a degenerate linearization point.
const DEGENERATE_STEP: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UncertaintyError {
    #[error("probability {0} outside (0, 1)")]
    Probability(f64),
    #[error("violation probability {0} outside (0, 0.5)")]
    Epsilon(f64),
    #[error("negative standard deviation {0}")]
    NegativeStd(f64),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * math::erfc(-z / core::f64::consts::SQRT_2)
}

/// Standard normal quantile: Acklam's rational approximation polished with
/// two Halley steps against `erfc`.
pub fn inverse_normal_cdf(p: f64) -> Result<f64, UncertaintyError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(UncertaintyError::Probability(p));
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let mut x = if p < P_LOW {
        tail(math::sqrt(-2.0 * math::ln(p)))
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail(math::sqrt(-2.0 * math::ln(1.0 - p)))
    };
    if p == 0.5 {
        return Ok(0.0);
    }
    let sqrt_2pi = math::sqrt(2.0 * core::f64::consts::PI);
    for _ in 0..2 {
        let e = normal_cdf(x) - p;
        let u = e * sqrt_2pi * math::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    Ok(x)
}

/// `Φ⁻¹(1 - ε)` for a violation probability in `(0, 0.5)`; 0 at `ε = 0.5`.
pub fn safety_factor(epsilon: f64) -> Result<f64, UncertaintyError> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(UncertaintyError::Epsilon(epsilon));
    }
    inverse_normal_cdf(1.0 - epsilon)
}

/// Per-farm, per-hour deviation standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindModel {
    /// Bus index of each farm.
    pub buses: Vec<usize>,
    /// `sigma[w][t]` in MW.
    pub sigma: Vec<Vec<f64>>,
}

impl WindModel {
    pub fn from_case(case: &GridCase) -> Result<Self, UncertaintyError> {
        let buses = case.wind_buses()?;
        let sigma: Vec<Vec<f64>> = case.wind_farms.iter().map(|w| w.std_dev.clone()).collect();
        if let Some(&s) = sigma.iter().flatten().find(|s| !(**s >= 0.0)) {
            return Err(UncertaintyError::NegativeStd(s));
        }
        Ok(Self { buses, sigma })
    }

    /// Same farms with every deviation removed (the deterministic view).
    pub fn without_uncertainty(&self) -> Self {
        Self {
            buses: self.buses.clone(),
            sigma: self
                .sigma
                .iter()
                .map(|s| alloc::vec![0.0; s.len()])
                .collect(),
        }
    }

    pub fn farms(&self) -> usize {
        self.buses.len()
    }

    pub fn sigma(&self, farm: usize, t: usize) -> f64 {
        self.sigma[farm][t]
    }

    /// Standard deviation of the total deviation `Ω(t)`.
    pub fn total_sigma(&self, t: usize) -> f64 {
        math::sqrt(self.sigma.iter().map(|s| s[t] * s[t]).sum())
    }
}

/// Violation probabilities per constraint class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChanceSpec {
    /// Generator reserve constraints.
    pub eps_gen: f64,
    /// Optional per-generator override of `eps_gen`, in fleet order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_gen_per_unit: Option<Vec<f64>>,
    /// Base-case line limits.
    pub eps_line: f64,
    /// Post line-outage limits.
    pub eps_line_cont: f64,
}

impl Default for ChanceSpec {
    fn default() -> Self {
        Self {
            eps_gen: 0.01,
            eps_gen_per_unit: None,
            eps_line: 0.10,
            eps_line_cont: 0.20,
        }
    }
}

impl ChanceSpec {
    pub fn uniform(eps_gen: f64, eps_line: f64, eps_line_cont: f64) -> Self {
        Self {
            eps_gen,
            eps_gen_per_unit: None,
            eps_line,
            eps_line_cont,
        }
    }

    pub fn gen(&self, i: usize) -> f64 {
        self.eps_gen_per_unit
            .as_ref()
            .and_then(|v| v.get(i).copied())
            .unwrap_or(self.eps_gen)
    }

    /// Every ε must lie in `(0, 0.5]`; 0.5 is accepted as the median limit
    /// where the safety factor vanishes.
    pub fn validate(&self) -> Result<(), UncertaintyError> {
        let all = [self.eps_gen, self.eps_line, self.eps_line_cont]
            .into_iter()
            .chain(self.eps_gen_per_unit.iter().flatten().copied());
        for e in all {
            if !(e > 0.0 && e <= 0.5) {
                return Err(UncertaintyError::Epsilon(e));
            }
        }
        Ok(())
    }
}

/// Direction of a line limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FlowSign {
    /// `f ≤ f_max`
    Upper,
    /// `-f ≤ f_max`
    Lower,
}

impl FlowSign {
    pub fn factor(self) -> f64 {
        match self {
            FlowSign::Upper => 1.0,
            FlowSign::Lower => -1.0,
        }
    }

    pub const BOTH: [FlowSign; 2] = [FlowSign::Upper, FlowSign::Lower];
}

/// Identifies the chance constraint a cone stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SocLabel {
    BaseLine {
        line: usize,
        hour: usize,
        sign: FlowSign,
    },
    ContingencyLine {
        line: usize,
        outage: usize,
        hour: usize,
        sign: FlowSign,
    },
    Custom(usize),
}

/// `affine(v) + z·‖cone(v)‖₂ ≤ bound`, where every cone row is affine in `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocConstraint {
    pub affine: LinExpr,
    pub cone: Vec<LinExpr>,
    /// Standard deviation behind each cone row; used to pick a direction at a
    /// degenerate point.
    pub cone_sigma: Vec<f64>,
    pub z: f64,
    pub bound: f64,
    pub label: SocLabel,
}

/// Result of linearizing a cone at a point.
#[derive(Debug, Clone, PartialEq)]
pub enum OaOutcome {
    Satisfied,
    Cut(Row),
}

impl SocConstraint {
    pub fn cone_norm(&self, point: &[f64]) -> f64 {
        math::sqrt(
            self.cone
                .iter()
                .map(|r| {
                    let q = r.eval(point);
                    q * q
                })
                .sum(),
        )
    }

    /// True when every cone row is identically zero (no uncertainty).
    pub fn is_degenerate(&self) -> bool {
        self.cone.iter().all(LinExpr::is_zero)
    }

    /// The deterministic part `affine(v) ≤ bound` as a row. Valid for the
    /// cone because the norm is non-negative.
    pub fn seed_row(&self) -> Row {
        let e = self.affine.compact();
        Row::new(e.terms, Sense::Le, self.bound - e.constant)
    }
}

/// Builds the cone form of a Gaussian chance constraint. `cone` rows are the
/// coefficients of the independent unit-variance drivers.
pub fn gaussian_chance_soc(
    affine: LinExpr,
    cone: Vec<LinExpr>,
    cone_sigma: Vec<f64>,
    epsilon: f64,
    bound: f64,
    label: SocLabel,
) -> Result<SocConstraint, UncertaintyError> {
    Ok(SocConstraint {
        affine,
        cone,
        cone_sigma,
        z: safety_factor(epsilon)?,
        bound,
        label,
    })
}

/// `Φ⁻¹(1-ε)·σ_Ω·α - r ≤ 0`, the linear form of `Pr(r ≥ Ω α) ≥ 1 - ε` for a
/// zero-mean `Ω` and `α ≥ 0`. The same row serves both reserve directions.
pub fn reserve_cc_linear(
    alpha: VarId,
    reserve: VarId,
    epsilon: f64,
    sigma_omega: f64,
) -> Result<Row, UncertaintyError> {
    if !(sigma_omega >= 0.0) {
        return Err(UncertaintyError::NegativeStd(sigma_omega));
    }
    let z = safety_factor(epsilon)?;
    Ok(Row::new(
        alloc::vec![(alpha, z * sigma_omega), (reserve, -1.0)],
        Sense::Le,
        0.0,
    ))
}

/// Variables and data needed to express one line's random flow.
#[derive(Debug, Clone, Copy)]
pub struct FlowTerms<'a> {
    /// Shift factors of the line, one per bus.
    pub ptdf_row: &'a [f64],
    /// `(bus, p_i variable, α_i variable)` per generator.
    pub gens: &'a [(usize, VarId, VarId)],
    /// Forecast wind minus demand per bus.
    pub fixed_injection: &'a [f64],
    /// `(bus, σ_w)` per wind farm.
    pub wind: &'a [(usize, f64)],
}

/// `sign·f̄ + z·sqrt(Σ_w σ_w² (M_w - Σ_i M_bus(i) α_i)²) ≤ f_max`.
pub fn flow_soc(
    terms: FlowTerms<'_>,
    epsilon: f64,
    fmax: f64,
    sign: FlowSign,
    label: SocLabel,
) -> Result<SocConstraint, UncertaintyError> {
    let s = sign.factor();
    let m = terms.ptdf_row;
    let mut affine = LinExpr::constant(
        s * m
            .iter()
            .zip(terms.fixed_injection)
            .map(|(a, b)| a * b)
            .sum::<f64>(),
    );
    for &(bus, p, _) in terms.gens {
        affine.add_term(p, s * m[bus]);
    }
    let mut cone = Vec::with_capacity(terms.wind.len());
    let mut cone_sigma = Vec::with_capacity(terms.wind.len());
    for &(wbus, sigma) in terms.wind {
        let mut row = LinExpr::constant(sigma * m[wbus]);
        if sigma != 0.0 {
            for &(bus, _, alpha) in terms.gens {
                row.add_term(alpha, -sigma * m[bus]);
            }
        }
        cone.push(row);
        cone_sigma.push(sigma);
    }
    gaussian_chance_soc(affine, cone, cone_sigma, epsilon, fmax, label)
}

/// `lhs - bound` at `point`; non-positive means satisfied.
pub fn check_chance_constraint(soc: &SocConstraint, point: &[f64]) -> f64 {
    soc.affine.eval(point) + soc.z * soc.cone_norm(point) - soc.bound
}

/// Supporting-hyperplane cut of `soc` at `point`, or `Satisfied` when the
/// residual is within `tolerance`.
pub fn oa_cut(soc: &SocConstraint, point: &[f64], tolerance: f64) -> OaOutcome {
    let residual = check_chance_constraint(soc, point);
    if residual <= tolerance {
        return OaOutcome::Satisfied;
    }
    let mut q: Vec<f64> = soc.cone.iter().map(|r| r.eval(point)).collect();
    let mut norm = math::sqrt(q.iter().map(|v| v * v).sum());
    if norm <= 1e-12 && !q.is_empty() {
        let k = soc
            .cone_sigma
            .iter()
            .enumerate()
            .fold(
                0usize,
                |best, (k, &s)| if s > soc.cone_sigma[best] { k } else { best },
            );
        q[k] += DEGENERATE_STEP;
        norm = math::sqrt(q.iter().map(|v| v * v).sum());
    }
    let mut lhs = soc.affine.clone();
    if norm > 0.0 {
        for (row, qk) in soc.cone.iter().zip(&q) {
            lhs.add_scaled(row, soc.z * qk / norm);
        }
    }
    let lhs = lhs.compact();
    OaOutcome::Cut(Row::new(lhs.terms, Sense::Le, soc.bound - lhs.constant))
}
