//! Out-of-sample Monte Carlo evaluation of commitment solutions.
//!
//! Every distribution is standardized to zero mean and unit variance and then
//! scaled by the per-farm, per-hour σ. All distributions are driven by the
//! same stream of uniforms for a given seed (inverse-transform sampling), so
//! reports for different distributions differ only through the shape of the
//! tails.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulation::Instance;
use crate::math;
use crate::solution::{CommitmentSolution, CostBreakdown};
use crate::uncertainty::{inverse_normal_cdf, FlowSign};

/// Absolute slack (MW) before a sampled quantity counts as a violation.
pub const VIOLATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("Weibull shape must be positive, got {0}")]
    WeibullShape(f64),
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("solution does not belong to case {0}")]
    CaseMismatch(String),
    #[error("unknown distribution {0:?}")]
    UnknownDistribution(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Distribution {
    Normal,
    Laplace,
    Logistic,
    Weibull { shape: f64 },
}

impl Distribution {
    /// Normal and the four fat-tailed families of the out-of-sample study.
    pub const STUDY: [Distribution; 5] = [
        Distribution::Normal,
        Distribution::Logistic,
        Distribution::Laplace,
        Distribution::Weibull { shape: 2.0 },
        Distribution::Weibull { shape: 1.2 },
    ];

    /// File-friendly name, e.g. `weibull-1.2`.
    pub fn name(&self) -> String {
        match self {
            Distribution::Normal => String::from("normal"),
            Distribution::Laplace => String::from("laplace"),
            Distribution::Logistic => String::from("logistic"),
            Distribution::Weibull { shape } => format!("weibull-{shape}"),
        }
    }

    /// Parses `normal`, `laplace`, `logistic` or `weibull-<k>`.
    pub fn parse(s: &str) -> Result<Self, ValidationError> {
        match s {
            "normal" => Ok(Distribution::Normal),
            "laplace" => Ok(Distribution::Laplace),
            "logistic" => Ok(Distribution::Logistic),
            _ => {
                let k = s
                    .strip_prefix("weibull-")
                    .and_then(|k| k.parse::<f64>().ok())
                    .ok_or_else(|| ValidationError::UnknownDistribution(String::from(s)))?;
                let d = Distribution::Weibull { shape: k };
                d.check()?;
                Ok(d)
            }
        }
    }

    fn check(&self) -> Result<(), ValidationError> {
        match *self {
            Distribution::Weibull { shape } if !(shape > 0.0) => {
                Err(ValidationError::WeibullShape(shape))
            }
            _ => Ok(()),
        }
    }

    /// Quantile of the zero-mean, unit-variance member of the family.
    pub fn standard_quantile(&self, u: f64) -> f64 {
        match *self {
            Distribution::Normal => inverse_normal_cdf(u).unwrap_or(0.0),
            Distribution::Laplace => {
                let b = core::f64::consts::FRAC_1_SQRT_2;
                if u < 0.5 {
                    b * math::ln(2.0 * u)
                } else {
                    -b * math::ln(2.0 * (1.0 - u))
                }
            }
            Distribution::Logistic => {
                let s = math::sqrt(3.0) / core::f64::consts::PI;
                s * math::ln(u / (1.0 - u))
            }
            Distribution::Weibull { shape } => {
                let (scale, mean) = weibull_standardization(shape);
                scale * math::powf(-math::ln(1.0 - u), 1.0 / shape) - mean
            }
        }
    }
}

/// Scale `λ` giving unit variance for shape `k`, and the resulting mean.
pub fn weibull_standardization(shape: f64) -> (f64, f64) {
    let g1 = math::gamma(1.0 + 1.0 / shape);
    let g2 = math::gamma(1.0 + 2.0 / shape);
    let scale = 1.0 / math::sqrt(g2 - g1 * g1);
    (scale, scale * g1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSampler {
    pub distribution: Distribution,
    /// `sigma[farm][hour]` (MW).
    pub sigma: Vec<Vec<f64>>,
    pub seed: u64,
}

/// `n × farms × hours` deviations (MW), sample-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Samples {
    pub n: usize,
    pub farms: usize,
    pub horizon: usize,
    pub data: Vec<f64>,
}

impl Samples {
    pub fn get(&self, s: usize, w: usize, t: usize) -> f64 {
        self.data[(s * self.farms + w) * self.horizon + t]
    }

    pub fn zeros(n: usize, farms: usize, horizon: usize) -> Self {
        Self {
            n,
            farms,
            horizon,
            data: vec![0.0; n * farms * horizon],
        }
    }
}

/// Uniform on `(0, 1)` from the top 53 bits, never hitting either end.
fn open_uniform(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

pub fn sample_deviations(sampler: &ScenarioSampler, n: usize) -> Result<Samples, ValidationError> {
    if n == 0 {
        return Err(ValidationError::NoSamples);
    }
    sampler.distribution.check()?;
    let farms = sampler.sigma.len();
    let horizon = sampler.sigma.first().map_or(0, Vec::len);
    if sampler.sigma.iter().any(|s| s.len() != horizon) {
        return Err(ValidationError::Dimension(String::from(
            "ragged sigma table",
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let mut data = Vec::with_capacity(n * farms * horizon);
    for _ in 0..n {
        for sig in &sampler.sigma {
            for &sd in sig {
                let u = open_uniform(&mut rng);
                data.push(if sd == 0.0 {
                    0.0
                } else {
                    sd * sampler.distribution.standard_quantile(u)
                });
            }
        }
    }
    Ok(Samples {
        n,
        farms,
        horizon,
        data,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReserveDirection {
    /// Output must fall by `αΩ`; covered by `r⁻`.
    Down,
    /// Output must rise by `-αΩ`; covered by `r⁺`.
    Up,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorRecord {
    pub generator: u32,
    pub hour: usize,
    pub direction: ReserveDirection,
    pub probability: f64,
    pub exceeds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineRecord {
    pub line: u32,
    /// Outaged line id, `None` for the base topology.
    pub outage: Option<u32>,
    pub hour: usize,
    pub sign: FlowSign,
    pub probability: f64,
    pub exceeds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub case_name: String,
    pub distribution: String,
    pub samples: usize,
    pub seed: u64,
    pub eps_gen: f64,
    pub eps_line: f64,
    pub eps_line_cont: f64,
    pub generators: Vec<GeneratorRecord>,
    pub base_lines: Vec<LineRecord>,
    pub contingency_lines: Vec<LineRecord>,
    pub max_generator: f64,
    pub max_base_line: f64,
    pub max_contingency_line: f64,
    /// Samples with at least one violation of any class, per hour.
    pub hourly_violations: Vec<usize>,
    /// Records whose probability is above `ε + 3·sqrt(ε(1-ε)/n)`.
    pub exceedances: usize,
}

/// `ε + 3·sqrt(ε(1-ε)/n)`.
pub fn calibration_limit(epsilon: f64, n: usize) -> f64 {
    epsilon + 3.0 * math::sqrt(epsilon * (1.0 - epsilon) / n as f64)
}

struct LineTopology<'a> {
    outage: Option<usize>,
    rows: Vec<&'a [f64]>,
    epsilon: f64,
}

fn check_dims(
    inst: &Instance,
    sol: &CommitmentSolution,
    samples: &Samples,
) -> Result<(), ValidationError> {
    if !sol.matches_case(&inst.case) {
        return Err(ValidationError::CaseMismatch(inst.case.name.clone()));
    }
    if samples.farms != inst.wind.farms() || samples.horizon != inst.horizon() {
        return Err(ValidationError::Dimension(format!(
            "samples are {}×{}, case has {} farms and {} hours",
            samples.farms,
            samples.horizon,
            inst.wind.farms(),
            inst.horizon()
        )));
    }
    Ok(())
}

/// Empirical violation probabilities of every chance constraint of `sol`
/// under `samples`.
pub fn evaluate_solution(
    inst: &Instance,
    sol: &CommitmentSolution,
    samples: &Samples,
    distribution: &str,
    seed: u64,
) -> Result<ValidationReport, ValidationError> {
    check_dims(inst, sol, samples)?;
    let case = &inst.case;
    let n = samples.n;
    let n_g = inst.gens();
    let n_l = inst.lines();
    let n_t = inst.horizon();
    let chance = &inst.chance;

    let mut topologies = vec![LineTopology {
        outage: None,
        rows: (0..n_l).map(|l| inst.ptdf.base.row(l)).collect(),
        epsilon: chance.eps_line,
    }];
    for &lc in inst.contingent_lines() {
        let m = inst
            .ptdf
            .outage(lc)
            .expect("outage matrix built with the instance");
        topologies.push(LineTopology {
            outage: Some(lc),
            rows: (0..n_l).map(|l| m.row(l)).collect(),
            epsilon: chance.eps_line_cont,
        });
    }

    // counts[topology][line][hour][sign]
    let mut line_counts = vec![vec![vec![[0usize; 2]; n_t]; n_l]; topologies.len()];
    let mut gen_counts = vec![vec![[0usize; 2]; n_t]; n_g];
    let mut hourly = vec![0usize; n_t];

    let wind_bus = &inst.wind.buses;
    for t in 0..n_t {
        let mut inj = case.fixed_injection(t);
        for i in 0..n_g {
            inj[inst.gen_bus(i)] += sol.p[i][t];
        }
        // mean flow and the α-weighted shift factor per topology and line
        let pre: Vec<Vec<(f64, f64)>> = topologies
            .iter()
            .map(|top| {
                top.rows
                    .iter()
                    .map(|row| {
                        let mean: f64 = row.iter().zip(&inj).map(|(a, b)| a * b).sum();
                        let a: f64 = (0..n_g)
                            .map(|i| row[inst.gen_bus(i)] * sol.alpha[i][t])
                            .sum();
                        (mean, a)
                    })
                    .collect()
            })
            .collect();
        for s in 0..n {
            let omega: f64 = (0..samples.farms).map(|w| samples.get(s, w, t)).sum();
            let mut any = false;
            for i in 0..n_g {
                let response = sol.alpha[i][t] * omega;
                if response > sol.r_minus[i][t] + VIOLATION_TOLERANCE {
                    gen_counts[i][t][0] += 1;
                    any = true;
                }
                if -response > sol.r_plus[i][t] + VIOLATION_TOLERANCE {
                    gen_counts[i][t][1] += 1;
                    any = true;
                }
            }
            for (k, top) in topologies.iter().enumerate() {
                for (l, row) in top.rows.iter().enumerate() {
                    if top.outage == Some(l) {
                        continue;
                    }
                    let (mean, a) = pre[k][l];
                    let mut f = mean - omega * a;
                    for (w, &b) in wind_bus.iter().enumerate() {
                        f += row[b] * samples.get(s, w, t);
                    }
                    let cap = case.lines[l].capacity + VIOLATION_TOLERANCE;
                    if f > cap {
                        line_counts[k][l][t][0] += 1;
                        any = true;
                    }
                    if -f > cap {
                        line_counts[k][l][t][1] += 1;
                        any = true;
                    }
                }
            }
            if any {
                hourly[t] += 1;
            }
        }
    }

    let prob = |c: usize| c as f64 / n as f64;
    let mut exceedances = 0;
    let mut generators = Vec::with_capacity(n_g * n_t * 2);
    for i in 0..n_g {
        let limit = calibration_limit(chance.gen(i), n);
        for t in 0..n_t {
            for (d, direction) in [ReserveDirection::Down, ReserveDirection::Up]
                .into_iter()
                .enumerate()
            {
                let probability = prob(gen_counts[i][t][d]);
                let exceeds = probability > limit;
                exceedances += exceeds as usize;
                generators.push(GeneratorRecord {
                    generator: case.generators[i].id,
                    hour: t,
                    direction,
                    probability,
                    exceeds,
                });
            }
        }
    }
    let mut base_lines = Vec::new();
    let mut contingency_lines = Vec::new();
    for (k, top) in topologies.iter().enumerate() {
        let limit = calibration_limit(top.epsilon, n);
        for l in 0..n_l {
            if top.outage == Some(l) {
                continue;
            }
            for t in 0..n_t {
                for (si, sign) in FlowSign::BOTH.into_iter().enumerate() {
                    let probability = prob(line_counts[k][l][t][si]);
                    let exceeds = probability > limit;
                    exceedances += exceeds as usize;
                    let rec = LineRecord {
                        line: case.lines[l].id,
                        outage: top.outage.map(|o| case.lines[o].id),
                        hour: t,
                        sign,
                        probability,
                        exceeds,
                    };
                    if top.outage.is_none() {
                        base_lines.push(rec);
                    } else {
                        contingency_lines.push(rec);
                    }
                }
            }
        }
    }
    let max_of = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0f64, f64::max);
    Ok(ValidationReport {
        case_name: case.name.clone(),
        distribution: String::from(distribution),
        samples: n,
        seed,
        eps_gen: chance.eps_gen,
        eps_line: chance.eps_line,
        eps_line_cont: chance.eps_line_cont,
        max_generator: max_of(&mut generators.iter().map(|r| r.probability)),
        max_base_line: max_of(&mut base_lines.iter().map(|r| r.probability)),
        max_contingency_line: max_of(&mut contingency_lines.iter().map(|r| r.probability)),
        generators,
        base_lines,
        contingency_lines,
        hourly_violations: hourly,
        exceedances,
    })
}

/// One line of the cost comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub item: String,
    pub deterministic: f64,
    pub chance_constrained: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub case_name: String,
    pub distribution: String,
    pub samples: usize,
    pub seed: u64,
    /// Total, no-load, start-up, production, tertiary reserve and generation
    /// reserve costs ($), then reserve volumes (MW).
    pub rows: Vec<ComparisonRow>,
    pub hourly_violations_deterministic: Vec<usize>,
    pub hourly_violations_chance_constrained: Vec<usize>,
}

impl ComparisonReport {
    pub fn row(&self, item: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.item == item)
    }
}

/// Names of the comparison rows, in order.
pub const COMPARISON_ITEMS: [&str; 8] = [
    "total_cost",
    "no_load_cost",
    "startup_cost",
    "production_cost",
    "tertiary_reserve_cost",
    "generation_reserve_cost",
    "generation_reserve_mw",
    "tertiary_reserve_mw",
];

fn cost_values(c: &CostBreakdown, sol: &CommitmentSolution) -> [f64; 8] {
    [
        c.total,
        c.no_load,
        c.startup,
        c.production,
        c.tertiary_reserve,
        c.generation_reserve,
        sol.total_generation_reserve(),
        sol.total_tertiary_reserve(),
    ]
}

/// Side-by-side costs, reserves and hourly violation counts of a
/// deterministic and a chance-constrained solution on the same samples.
pub fn compare_solutions(
    inst: &Instance,
    det: &CommitmentSolution,
    cc: &CommitmentSolution,
    samples: &Samples,
    distribution: &str,
    seed: u64,
) -> Result<ComparisonReport, ValidationError> {
    let rd = evaluate_solution(inst, det, samples, distribution, seed)?;
    let rc = evaluate_solution(inst, cc, samples, distribution, seed)?;
    let dv = cost_values(&det.costs, det);
    let cv = cost_values(&cc.costs, cc);
    let rows = COMPARISON_ITEMS
        .iter()
        .zip(dv.iter().zip(&cv))
        .map(|(item, (&d, &c))| ComparisonRow {
            item: String::from(*item),
            deterministic: d,
            chance_constrained: c,
        })
        .collect();
    Ok(ComparisonReport {
        case_name: inst.case.name.clone(),
        distribution: String::from(distribution),
        samples: samples.n,
        seed,
        rows,
        hourly_violations_deterministic: rd.hourly_violations,
        hourly_violations_chance_constrained: rc.hourly_violations,
    })
}
