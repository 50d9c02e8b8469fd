//! Model builders: the decomposition master, the per-hour outage
//! subproblem, the monolithic extensive form and the deterministic
//! counterpart.
//!
//! Hours are 0-based internally; `t = 0` is the first period and the state
//! before it comes from the case's initial conditions.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benders::BendersState;
use crate::expr::{LinExpr, VarId};
use crate::grid::{validate_case, CaseViolation, GridCase, GridError, PtdfSet, SensitivityMatrix};
use crate::lp::{LinearProblem, Row, Sense, Variable};
use crate::solution::{CommitmentSolution, Redispatch};
use crate::uncertainty::{
    flow_soc, reserve_cc_linear, ChanceSpec, FlowSign, FlowTerms, SocConstraint, SocLabel,
    UncertaintyError, WindModel,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormulationError {
    #[error("case is invalid: {}", summarize(.0))]
    Invalid(Vec<CaseViolation>),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Uncertainty(#[from] UncertaintyError),
    #[error("wind model does not match the case: {0}")]
    WindShape(String),
    #[error("solution vector has {got} entries, model has {expected} variables")]
    Dimension { expected: usize, got: usize },
}

fn summarize(v: &[CaseViolation]) -> String {
    use core::fmt::Write;
    let mut s = String::new();
    for (k, e) in v.iter().enumerate() {
        if k > 0 {
            s.push_str("; ");
        }
        let _ = write!(s, "{e}");
    }
    s
}

/// A validated case together with its wind model, risk levels and shift
/// factors.
#[derive(Debug, Clone)]
pub struct Instance {
    pub case: GridCase,
    pub wind: WindModel,
    pub chance: ChanceSpec,
    pub ptdf: PtdfSet,
    gen_bus: Vec<usize>,
    contingent_gens: Vec<usize>,
    contingent_lines: Vec<usize>,
}

impl Instance {
    /// Validates `case`, reads its wind deviations and builds every shift
    /// factor matrix.
    pub fn new(case: GridCase, chance: ChanceSpec) -> Result<Self, FormulationError> {
        let violations = validate_case(&case);
        if !violations.is_empty() {
            return Err(FormulationError::Invalid(violations));
        }
        let wind = WindModel::from_case(&case)?;
        Self::with_wind(case, wind, chance)
    }

    pub fn with_wind(
        case: GridCase,
        wind: WindModel,
        chance: ChanceSpec,
    ) -> Result<Self, FormulationError> {
        chance.validate()?;
        if wind.farms() != case.wind_farms.len()
            || wind.sigma.iter().any(|s| s.len() != case.horizon)
        {
            return Err(FormulationError::WindShape(String::from(
                "one std-dev series of horizon length per wind farm",
            )));
        }
        let ptdf = PtdfSet::new(&case)?;
        let gen_bus = case.generator_buses()?;
        let contingent_gens = case.generator_contingency_indices();
        let contingent_lines = case.line_contingency_indices();
        Ok(Self {
            case,
            wind,
            chance,
            ptdf,
            gen_bus,
            contingent_gens,
            contingent_lines,
        })
    }

    /// The same instance with every wind deviation removed.
    pub fn without_uncertainty(&self) -> Self {
        let mut out = self.clone();
        out.wind = self.wind.without_uncertainty();
        out
    }

    pub fn with_chance(&self, chance: ChanceSpec) -> Result<Self, FormulationError> {
        chance.validate()?;
        let mut out = self.clone();
        out.chance = chance;
        Ok(out)
    }

    pub fn horizon(&self) -> usize {
        self.case.horizon
    }

    pub fn gens(&self) -> usize {
        self.case.generators.len()
    }

    pub fn lines(&self) -> usize {
        self.case.lines.len()
    }

    pub fn gen_bus(&self, i: usize) -> usize {
        self.gen_bus[i]
    }

    /// Fleet indices of the generator contingencies.
    pub fn contingent_gens(&self) -> &[usize] {
        &self.contingent_gens
    }

    /// Line indices of the line contingencies.
    pub fn contingent_lines(&self) -> &[usize] {
        &self.contingent_lines
    }

    fn wind_terms(&self, t: usize) -> Vec<(usize, f64)> {
        self.wind
            .buses
            .iter()
            .enumerate()
            .map(|(w, &b)| (b, self.wind.sigma(w, t)))
            .collect()
    }

    /// Net scheduled load to be covered by conventional units at hour `t`.
    pub fn net_load(&self, t: usize) -> f64 {
        self.case.total_demand(t) - self.case.total_wind_forecast(t)
    }
}

/// Hours, counted from the first period, for which a unit's status is pinned
/// by its initial up or down time.
pub fn initial_window(case: &GridCase, i: usize) -> (usize, usize) {
    let g = &case.generators[i];
    let t = case.horizon as i64;
    let on = g.initial_on as i64;
    let up = ((g.min_up as i64 - g.initial_up_hours as i64) * on).clamp(0, t);
    let down = ((g.min_down as i64 - g.initial_down_hours as i64) * (1 - on)).clamp(0, t);
    (up as usize, down as usize)
}

/// Which rows a model row belongs to; used for bookkeeping and the row-count
/// checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RowFamily {
    Logic,
    NoSimultaneous,
    ReserveBound,
    TertiaryAdequacy,
    OutputLower,
    OutputUpper,
    ReserveChance,
    Participation,
    ParticipationSum,
    BlockSum,
    BlockLimit,
    StartupSelect,
    StartupEligible,
    StartupCost,
    InitialWindow,
    MinUp,
    MinDown,
    RampUp,
    RampDown,
    Balance,
    /// Deterministic part of a registered base-line cone.
    LineSeed,
    /// Base-line limit whose cone vanished.
    LineLinear,
    ContingencyLineSeed,
    ContingencyLineLinear,
    RedispatchBound,
    OutageFix,
    RedispatchBalance,
    ContingencyFlow,
    OptimalityCut,
    FeasibilityCut,
    OuterApprox,
    NominalReserve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Master,
    Extensive,
    Deterministic,
}

/// Column handles, indexed `[generator][hour]` unless stated otherwise.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VariableCatalog {
    pub x: Vec<Vec<VarId>>,
    pub y: Vec<Vec<VarId>>,
    pub z: Vec<Vec<VarId>>,
    /// `[generator][hour][start-up block]`
    pub w: Vec<Vec<Vec<VarId>>>,
    pub p: Vec<Vec<VarId>>,
    /// `[generator][hour][cost block]`
    pub g: Vec<Vec<Vec<VarId>>>,
    pub sc: Vec<Vec<VarId>>,
    pub r_plus: Vec<Vec<VarId>>,
    pub r_minus: Vec<Vec<VarId>>,
    pub r_up: Vec<Vec<VarId>>,
    pub alpha: Vec<Vec<VarId>>,
    /// `[hour]`, master only.
    pub eta: Vec<VarId>,
    /// `[hour][contingency][generator]`, extensive and deterministic only.
    pub delta: Vec<Vec<Vec<VarId>>>,
}

/// Key of one line-contingency cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContingencyKey {
    pub line: usize,
    pub outage: usize,
    pub hour: usize,
    pub sign: FlowSign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelInstance {
    pub kind: ModelKind,
    pub catalog: VariableCatalog,
    pub problem: LinearProblem,
    /// Family of each row of `problem`, same order.
    pub families: Vec<RowFamily>,
    /// Cones handled by outer approximation.
    pub socs: Vec<SocConstraint>,
}

impl ModelInstance {
    fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            catalog: VariableCatalog::default(),
            problem: LinearProblem::new(),
            families: Vec::new(),
            socs: Vec::new(),
        }
    }

    pub fn add_row(&mut self, family: RowFamily, row: Row) {
        self.problem.rows.push(row);
        self.families.push(family);
    }

    fn row(&mut self, family: RowFamily, terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) {
        self.add_row(family, Row::new(terms, sense, rhs));
    }

    fn var(&mut self, lower: f64, upper: f64, cost: f64) -> VarId {
        self.problem
            .add_var(Variable::continuous(lower, upper, cost))
    }

    fn bin(&mut self, cost: f64) -> VarId {
        self.problem.add_var(Variable::binary(cost))
    }

    pub fn count(&self, family: RowFamily) -> usize {
        self.families.iter().filter(|&&f| f == family).count()
    }

    /// Registers a cone, or adds it as a plain row when it carries no
    /// uncertainty. The deterministic part is always added as a row.
    fn add_soc(&mut self, soc: SocConstraint, seed: RowFamily, linear: RowFamily) {
        if soc.is_degenerate() {
            let row = soc.seed_row();
            self.add_row(linear, row);
        } else {
            self.add_row(seed, soc.seed_row());
            self.socs.push(soc);
        }
    }

    /// Column vector for a solution in this model's layout. Values the model
    /// does not carry are ignored; `eta` is set to the per-hour tertiary
    /// cost.
    pub fn point_from_solution(&self, case: &GridCase, sol: &CommitmentSolution) -> Vec<f64> {
        let c = &self.catalog;
        let mut v = vec![0.0; self.problem.num_vars()];
        for i in 0..c.x.len() {
            for t in 0..c.x[i].len() {
                v[c.x[i][t]] = sol.x[i][t] as u8 as f64;
                v[c.y[i][t]] = sol.y[i][t] as u8 as f64;
                v[c.z[i][t]] = sol.z[i][t] as u8 as f64;
                for (s, &ws) in c.w[i][t].iter().enumerate() {
                    v[ws] = (sol.startup_block[i][t] == Some(s)) as u8 as f64;
                }
                v[c.p[i][t]] = sol.p[i][t];
                for (k, &gk) in c.g[i][t].iter().enumerate() {
                    v[gk] = sol.g[i][t][k];
                }
                v[c.sc[i][t]] = sol.startup_cost[i][t];
                v[c.r_plus[i][t]] = sol.r_plus[i][t];
                v[c.r_minus[i][t]] = sol.r_minus[i][t];
                v[c.r_up[i][t]] = sol.r_up[i][t];
                v[c.alpha[i][t]] = sol.alpha[i][t];
            }
        }
        for (t, &e) in c.eta.iter().enumerate() {
            v[e] = (0..case.generators.len())
                .map(|i| case.generators[i].tertiary_price * sol.r_up[i][t])
                .sum();
        }
        for (t, per_c) in c.delta.iter().enumerate() {
            for (ci, vars) in per_c.iter().enumerate() {
                if let Some(d) = sol
                    .redispatch
                    .iter()
                    .find(|d| d.hour == t && d.contingency == ci)
                {
                    for (i, &var) in vars.iter().enumerate() {
                        v[var] = d.delta[i];
                    }
                }
            }
        }
        v
    }
}

fn add_common_variables(m: &mut ModelInstance, inst: &Instance, tertiary_cost: bool) {
    let case = &inst.case;
    let n_t = case.horizon;
    for (i, g) in case.generators.iter().enumerate() {
        let r_cap = case.reserve_cap_of(i);
        let max_sc = g.startup_blocks.iter().fold(0.0f64, |m, s| m.max(s.cost));
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut z = Vec::new();
        let mut w = Vec::new();
        let mut p = Vec::new();
        let mut gk = Vec::new();
        let mut sc = Vec::new();
        let mut rp = Vec::new();
        let mut rm = Vec::new();
        let mut ru = Vec::new();
        let mut al = Vec::new();
        for _ in 0..n_t {
            x.push(m.bin(g.no_load_cost));
            y.push(m.bin(0.0));
            z.push(m.bin(0.0));
            w.push(g.startup_blocks.iter().map(|_| m.bin(0.0)).collect());
            p.push(m.var(0.0, g.p_max, 0.0));
            gk.push(
                g.cost_blocks
                    .iter()
                    .map(|b| m.var(0.0, b.width, b.slope))
                    .collect(),
            );
            sc.push(m.var(0.0, max_sc, 1.0));
            rp.push(m.var(0.0, r_cap, g.reserve_price));
            rm.push(m.var(0.0, r_cap, g.reserve_price));
            let a2 = if tertiary_cost { g.tertiary_price } else { 0.0 };
            ru.push(m.var(0.0, r_cap, a2));
            al.push(m.var(0.0, 1.0, 0.0));
        }
        let c = &mut m.catalog;
        c.x.push(x);
        c.y.push(y);
        c.z.push(z);
        c.w.push(w);
        c.p.push(p);
        c.g.push(gk);
        c.sc.push(sc);
        c.r_plus.push(rp);
        c.r_minus.push(rm);
        c.r_up.push(ru);
        c.alpha.push(al);
    }
}

/// Unit-commitment, reserve, production, start-up, ramping and balance rows
/// shared by every model.
fn add_common_rows(m: &mut ModelInstance, inst: &Instance) -> Result<(), FormulationError> {
    use RowFamily::*;
    let case = &inst.case;
    let n_t = case.horizon;
    let c = m.catalog.clone();
    for (i, g) in case.generators.iter().enumerate() {
        let r_cap = case.reserve_cap_of(i);
        let init = g.initial_on as u8 as f64;
        let (up_w, down_w) = initial_window(case, i);
        for t in 0..n_t {
            let (x, y, z) = (c.x[i][t], c.y[i][t], c.z[i][t]);
            let mut terms = vec![(y, 1.0), (z, -1.0), (x, -1.0)];
            let rhs = if t == 0 {
                -init
            } else {
                terms.push((c.x[i][t - 1], 1.0));
                0.0
            };
            m.row(Logic, terms, Sense::Eq, rhs);
            m.row(NoSimultaneous, vec![(y, 1.0), (z, 1.0)], Sense::Le, 1.0);

            for r in [c.r_plus[i][t], c.r_minus[i][t], c.r_up[i][t]] {
                m.row(ReserveBound, vec![(r, 1.0), (x, -r_cap)], Sense::Le, 0.0);
            }
            let p = c.p[i][t];
            m.row(
                OutputLower,
                vec![(p, 1.0), (c.r_minus[i][t], -1.0), (x, -g.p_min)],
                Sense::Ge,
                0.0,
            );
            m.row(
                OutputUpper,
                vec![
                    (p, 1.0),
                    (c.r_plus[i][t], 1.0),
                    (c.r_up[i][t], 1.0),
                    (x, -g.p_max),
                ],
                Sense::Le,
                0.0,
            );
            let sigma_omega = inst.wind.total_sigma(t);
            let eps = inst.chance.gen(i);
            for r in [c.r_minus[i][t], c.r_plus[i][t]] {
                let row = reserve_cc_linear(c.alpha[i][t], r, eps, sigma_omega)?;
                m.add_row(ReserveChance, row);
            }
            m.row(
                Participation,
                vec![(c.alpha[i][t], 1.0), (x, -1.0)],
                Sense::Le,
                0.0,
            );

            let mut sum = vec![(p, 1.0)];
            for (k, b) in g.cost_blocks.iter().enumerate() {
                let gk = c.g[i][t][k];
                sum.push((gk, -1.0));
                m.row(BlockLimit, vec![(gk, 1.0), (x, -b.width)], Sense::Le, 0.0);
            }
            m.row(BlockSum, sum, Sense::Eq, 0.0);

            let mut select: Vec<(VarId, f64)> = c.w[i][t].iter().map(|&w| (w, 1.0)).collect();
            select.push((y, -1.0));
            m.row(StartupSelect, select, Sense::Eq, 0.0);
            let last = g.startup_blocks.len().saturating_sub(1);
            let hour = t + 1;
            let mut cost = vec![(c.sc[i][t], 1.0)];
            for (s, b) in g.startup_blocks.iter().enumerate() {
                let lo = b.min_off as usize;
                let hi = if s == last {
                    usize::MAX
                } else {
                    b.max_off as usize
                };
                let mut terms = vec![(c.w[i][t][s], 1.0)];
                let mut n = lo;
                while n <= hi && n < hour {
                    terms.push((c.z[i][hour - n - 1], -1.0));
                    n += 1;
                }
                // an initially offline unit was shut down at hour
                // 1 - initial_down_hours
                let mut rhs = 0.0;
                if !g.initial_on {
                    let off = hour - 1 + g.initial_down_hours as usize;
                    if off >= lo && off <= hi {
                        rhs = 1.0;
                    }
                }
                m.row(StartupEligible, terms, Sense::Le, rhs);
                cost.push((c.w[i][t][s], -b.cost));
            }
            m.row(StartupCost, cost, Sense::Eq, 0.0);

            if hour <= up_w + down_w {
                m.row(InitialWindow, vec![(x, 1.0)], Sense::Eq, init);
            }
            if hour >= up_w.max(1) {
                let first = (hour as i64 - g.min_up.max(1) as i64 + 1).max(1) as usize;
                let mut terms: Vec<(VarId, f64)> =
                    (first..=hour).map(|n| (c.y[i][n - 1], 1.0)).collect();
                terms.push((x, -1.0));
                m.row(MinUp, terms, Sense::Le, 0.0);
            }
            if hour >= down_w.max(1) {
                let first = (hour as i64 - g.min_down.max(1) as i64 + 1).max(1) as usize;
                let mut terms: Vec<(VarId, f64)> =
                    (first..=hour).map(|n| (c.z[i][n - 1], 1.0)).collect();
                terms.push((x, 1.0));
                m.row(MinDown, terms, Sense::Le, 1.0);
            }

            // p(t) - p(t-1) ≤ RU + p_min·y(t), p(t-1) - p(t) ≤ RD + p_min·z(t)
            let (prev_terms, prev_const): (Vec<(VarId, f64)>, f64) = if t == 0 {
                (Vec::new(), g.initial_output)
            } else {
                (vec![(c.p[i][t - 1], 1.0)], 0.0)
            };
            let mut up = vec![(p, 1.0), (y, -g.p_min)];
            up.extend(prev_terms.iter().map(|&(v, a)| (v, -a)));
            m.row(RampUp, up, Sense::Le, g.ramp_up + prev_const);
            let mut down = vec![(p, -1.0), (z, -g.p_min)];
            down.extend(prev_terms.iter().copied());
            m.row(RampDown, down, Sense::Le, g.ramp_down - prev_const);
        }
    }
    for t in 0..n_t {
        for &gc in inst.contingent_gens() {
            let mut terms: Vec<(VarId, f64)> =
                (0..inst.gens()).map(|n| (c.r_up[n][t], 1.0)).collect();
            terms.push((c.p[gc][t], -1.0));
            m.row(TertiaryAdequacy, terms, Sense::Ge, 0.0);
        }
        let alpha: Vec<(VarId, f64)> = (0..inst.gens()).map(|i| (c.alpha[i][t], 1.0)).collect();
        m.row(ParticipationSum, alpha, Sense::Eq, 1.0);
        let p: Vec<(VarId, f64)> = (0..inst.gens()).map(|i| (c.p[i][t], 1.0)).collect();
        m.row(Balance, p, Sense::Eq, inst.net_load(t));
    }
    Ok(())
}

fn gen_terms(inst: &Instance, c: &VariableCatalog, t: usize) -> Vec<(usize, VarId, VarId)> {
    (0..inst.gens())
        .map(|i| (inst.gen_bus(i), c.p[i][t], c.alpha[i][t]))
        .collect()
}

/// Cone for base line `line` at hour `t`.
pub fn base_line_soc(
    inst: &Instance,
    catalog: &VariableCatalog,
    line: usize,
    t: usize,
    sign: FlowSign,
) -> Result<SocConstraint, FormulationError> {
    line_soc(
        inst,
        catalog,
        &inst.ptdf.base,
        inst.chance.eps_line,
        line,
        t,
        sign,
        SocLabel::BaseLine {
            line,
            hour: t,
            sign,
        },
    )
}

/// Cone for line `key.line` after the outage of `key.outage`.
pub fn contingency_line_soc(
    inst: &Instance,
    catalog: &VariableCatalog,
    key: ContingencyKey,
) -> Result<SocConstraint, FormulationError> {
    let m = inst
        .ptdf
        .outage(key.outage)
        .ok_or(GridError::UnknownLine(inst.case.lines[key.outage].id))?;
    let label = SocLabel::ContingencyLine {
        line: key.line,
        outage: key.outage,
        hour: key.hour,
        sign: key.sign,
    };
    line_soc(
        inst,
        catalog,
        m,
        inst.chance.eps_line_cont,
        key.line,
        key.hour,
        key.sign,
        label,
    )
}

#[allow(clippy::too_many_arguments)]
fn line_soc(
    inst: &Instance,
    catalog: &VariableCatalog,
    matrix: &SensitivityMatrix,
    epsilon: f64,
    line: usize,
    t: usize,
    sign: FlowSign,
    label: SocLabel,
) -> Result<SocConstraint, FormulationError> {
    let gens = gen_terms(inst, catalog, t);
    let fixed = inst.case.fixed_injection(t);
    let wind = inst.wind_terms(t);
    Ok(flow_soc(
        FlowTerms {
            ptdf_row: matrix.row(line),
            gens: &gens,
            fixed_injection: &fixed,
            wind: &wind,
        },
        epsilon,
        inst.case.lines[line].capacity,
        sign,
        label,
    )?)
}

fn add_base_lines(m: &mut ModelInstance, inst: &Instance) -> Result<(), FormulationError> {
    let catalog = m.catalog.clone();
    for t in 0..inst.horizon() {
        for line in 0..inst.lines() {
            for sign in FlowSign::BOTH {
                let soc = base_line_soc(inst, &catalog, line, t, sign)?;
                m.add_soc(soc, RowFamily::LineSeed, RowFamily::LineLinear);
            }
        }
    }
    Ok(())
}

fn add_contingency_lines(
    m: &mut ModelInstance,
    inst: &Instance,
    keys: impl IntoIterator<Item = ContingencyKey>,
) -> Result<(), FormulationError> {
    let catalog = m.catalog.clone();
    for key in keys {
        let soc = contingency_line_soc(inst, &catalog, key)?;
        m.add_soc(
            soc,
            RowFamily::ContingencyLineSeed,
            RowFamily::ContingencyLineLinear,
        );
    }
    Ok(())
}

/// Every (line, outage, hour, sign) combination for the instance's line
/// contingencies, skipping the outaged line itself.
pub fn all_contingency_keys(inst: &Instance) -> Vec<ContingencyKey> {
    let mut keys = Vec::new();
    for &outage in inst.contingent_lines() {
        for line in (0..inst.lines()).filter(|&l| l != outage) {
            for hour in 0..inst.horizon() {
                for sign in FlowSign::BOTH {
                    keys.push(ContingencyKey {
                        line,
                        outage,
                        hour,
                        sign,
                    });
                }
            }
        }
    }
    keys
}

fn add_generator_contingencies(m: &mut ModelInstance, inst: &Instance) {
    use RowFamily::*;
    let case = &inst.case;
    let n_g = inst.gens();
    let base = &inst.ptdf.base;
    let mut delta = Vec::with_capacity(case.horizon);
    for t in 0..case.horizon {
        let fixed = case.fixed_injection(t);
        let mut per_c = Vec::new();
        for &gc in inst.contingent_gens() {
            let d: Vec<VarId> = (0..n_g)
                .map(|i| {
                    if i == gc {
                        m.var(-case.generators[i].p_max, 0.0, 0.0)
                    } else {
                        m.var(0.0, case.reserve_cap_of(i), 0.0)
                    }
                })
                .collect();
            let c = m.catalog.clone();
            for i in 0..n_g {
                m.row(
                    RedispatchBound,
                    vec![(d[i], 1.0), (c.r_up[i][t], -1.0)],
                    Sense::Le,
                    0.0,
                );
            }
            m.row(
                OutageFix,
                vec![(d[gc], 1.0), (c.p[gc][t], 1.0)],
                Sense::Eq,
                0.0,
            );
            m.row(
                RedispatchBalance,
                d.iter().map(|&v| (v, 1.0)).collect(),
                Sense::Eq,
                0.0,
            );
            for line in 0..inst.lines() {
                let row = base.row(line);
                let constant: f64 = row.iter().zip(&fixed).map(|(a, b)| a * b).sum();
                let mut terms = Vec::with_capacity(2 * n_g);
                for i in 0..n_g {
                    let k = row[inst.gen_bus(i)];
                    if k != 0.0 {
                        terms.push((c.p[i][t], k));
                        terms.push((d[i], k));
                    }
                }
                let cap = case.lines[line].capacity;
                m.row(ContingencyFlow, terms.clone(), Sense::Le, cap - constant);
                m.row(ContingencyFlow, terms, Sense::Ge, -cap - constant);
            }
            per_c.push(d);
        }
        delta.push(per_c);
    }
    m.catalog.delta = delta;
}

/// Master problem: shared rows, surrogate `η(t)`, base-line cones and every
/// cut and activated contingency cone recorded in `state`.
pub fn build_master(
    inst: &Instance,
    state: &BendersState,
) -> Result<ModelInstance, FormulationError> {
    let mut m = ModelInstance::new(ModelKind::Master);
    add_common_variables(&mut m, inst, false);
    let eta_cap: f64 = (0..inst.gens())
        .map(|i| inst.case.generators[i].tertiary_price * inst.case.reserve_cap_of(i))
        .sum();
    m.catalog.eta = (0..inst.horizon())
        .map(|_| m.var(0.0, eta_cap, 1.0))
        .collect();
    add_common_rows(&mut m, inst)?;
    add_base_lines(&mut m, inst)?;
    add_contingency_lines(&mut m, inst, state.activated.iter().copied())?;
    let catalog = m.catalog.clone();
    for cut in &state.optimality_cuts {
        m.add_row(RowFamily::OptimalityCut, cut.master_row(&catalog, true));
    }
    for cut in &state.feasibility_cuts {
        m.add_row(RowFamily::FeasibilityCut, cut.master_row(&catalog, false));
    }
    for cut in &state.oa_cuts {
        m.add_row(RowFamily::OuterApprox, cut.row.clone());
    }
    Ok(m)
}

/// Monolithic model with every generator- and line-contingency constraint.
pub fn build_extensive_form(inst: &Instance) -> Result<ModelInstance, FormulationError> {
    let mut m = ModelInstance::new(ModelKind::Extensive);
    add_common_variables(&mut m, inst, true);
    add_common_rows(&mut m, inst)?;
    add_base_lines(&mut m, inst)?;
    add_contingency_lines(&mut m, inst, all_contingency_keys(inst))?;
    add_generator_contingencies(&mut m, inst);
    Ok(m)
}

/// Extensive form at zero wind deviation plus the nominal reserve rule
/// `Σ r±(t) ≥ fraction · Σ d(t)`.
pub fn build_deterministic(
    inst: &Instance,
    reserve_fraction: f64,
) -> Result<ModelInstance, FormulationError> {
    let det = inst.without_uncertainty();
    let mut m = build_extensive_form(&det)?;
    m.kind = ModelKind::Deterministic;
    let c = m.catalog.clone();
    for t in 0..inst.horizon() {
        let need = reserve_fraction * inst.case.total_demand(t);
        for r in [&c.r_plus, &c.r_minus] {
            let terms = (0..inst.gens()).map(|i| (r[i][t], 1.0)).collect();
            m.row(RowFamily::NominalReserve, terms, Sense::Ge, need);
        }
    }
    Ok(m)
}

/// Hour-`t` master quantities seen by the outage subproblem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourPoint {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub r_plus: Vec<f64>,
}

impl HourPoint {
    pub fn from_primal(catalog: &VariableCatalog, primal: &[f64], t: usize) -> Self {
        let n = catalog.x.len();
        Self {
            x: (0..n)
                .map(|i| crate::math::round(primal[catalog.x[i][t]]))
                .collect(),
            p: (0..n).map(|i| primal[catalog.p[i][t]]).collect(),
            r_plus: (0..n).map(|i| primal[catalog.r_plus[i][t]]).collect(),
        }
    }

    pub fn from_solution(sol: &CommitmentSolution, t: usize) -> Self {
        Self {
            x: sol.x.iter().map(|v| v[t] as u8 as f64).collect(),
            p: sol.p.iter().map(|v| v[t]).collect(),
            r_plus: sol.r_plus.iter().map(|v| v[t]).collect(),
        }
    }
}

/// `constant + Σ_i (x_i·a_i + p_i·b_i + r⁺_i·c_i)` over one hour's master
/// quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourAffine {
    pub constant: f64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub r_plus: Vec<f64>,
}

impl HourAffine {
    pub fn zero(gens: usize) -> Self {
        Self {
            constant: 0.0,
            x: vec![0.0; gens],
            p: vec![0.0; gens],
            r_plus: vec![0.0; gens],
        }
    }

    pub fn eval(&self, pt: &HourPoint) -> f64 {
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
        self.constant + dot(&self.x, &pt.x) + dot(&self.p, &pt.p) + dot(&self.r_plus, &pt.r_plus)
    }

    pub fn add_scaled(&mut self, other: &HourAffine, k: f64) {
        self.constant += k * other.constant;
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a += k * b;
        }
        for (a, b) in self.p.iter_mut().zip(&other.p) {
            *a += k * b;
        }
        for (a, b) in self.r_plus.iter_mut().zip(&other.r_plus) {
            *a += k * b;
        }
    }

    /// The same affine function over master columns for hour `t`.
    pub fn to_expr(&self, catalog: &VariableCatalog, t: usize) -> LinExpr {
        let mut e = LinExpr::constant(self.constant);
        for i in 0..self.x.len() {
            e.add_term(catalog.x[i][t], self.x[i]);
            e.add_term(catalog.p[i][t], self.p[i]);
            e.add_term(catalog.r_plus[i][t], self.r_plus[i]);
        }
        e
    }
}

/// One hour's outage subproblem with every right-hand side kept as an affine
/// function of the master quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct Subproblem {
    pub hour: usize,
    pub problem: LinearProblem,
    pub rhs: Vec<HourAffine>,
    pub r_up: Vec<VarId>,
    /// `[contingency][generator]`
    pub delta: Vec<Vec<VarId>>,
    /// Master quantities the right-hand sides were evaluated at.
    pub point: HourPoint,
}

impl Subproblem {
    /// Sets every right-hand side for `point`.
    pub fn set_point(&mut self, point: &HourPoint) {
        for (row, rhs) in self.problem.rows.iter_mut().zip(&self.rhs) {
            row.rhs = rhs.eval(point);
        }
        self.point = point.clone();
    }
}

/// Builds the hour-`t` subproblem: tertiary reserves and redispatch that cover
/// every generator contingency at least cost.
pub fn build_subproblem(inst: &Instance, t: usize, point: &HourPoint) -> Subproblem {
    let case = &inst.case;
    let n_g = inst.gens();
    let base = &inst.ptdf.base;
    let fixed = case.fixed_injection(t);
    let mut problem = LinearProblem::new();
    let mut rhs = Vec::new();
    let mut push = |problem: &mut LinearProblem, terms, sense, b: HourAffine| {
        problem.add_row(Row::new(terms, sense, 0.0));
        rhs.push(b);
    };
    let r_up: Vec<VarId> = (0..n_g)
        .map(|i| {
            problem.add_var(Variable::continuous(
                0.0,
                case.reserve_cap_of(i),
                case.generators[i].tertiary_price,
            ))
        })
        .collect();
    for i in 0..n_g {
        let mut b = HourAffine::zero(n_g);
        b.x[i] = case.reserve_cap_of(i);
        push(&mut problem, vec![(r_up[i], 1.0)], Sense::Le, b);
    }
    for i in 0..n_g {
        let mut b = HourAffine::zero(n_g);
        b.x[i] = case.generators[i].p_max;
        b.p[i] = -1.0;
        b.r_plus[i] = -1.0;
        push(&mut problem, vec![(r_up[i], 1.0)], Sense::Le, b);
    }
    for &gc in inst.contingent_gens() {
        let mut b = HourAffine::zero(n_g);
        b.p[gc] = 1.0;
        push(
            &mut problem,
            r_up.iter().map(|&v| (v, 1.0)).collect(),
            Sense::Ge,
            b,
        );
    }
    let mut delta = Vec::new();
    for &gc in inst.contingent_gens() {
        let d: Vec<VarId> = (0..n_g)
            .map(|i| {
                let v = if i == gc {
                    Variable::continuous(-case.generators[i].p_max, 0.0, 0.0)
                } else {
                    Variable::continuous(0.0, case.reserve_cap_of(i), 0.0)
                };
                problem.add_var(v)
            })
            .collect();
        for i in 0..n_g {
            push(
                &mut problem,
                vec![(d[i], 1.0), (r_up[i], -1.0)],
                Sense::Le,
                HourAffine::zero(n_g),
            );
        }
        let mut b = HourAffine::zero(n_g);
        b.p[gc] = -1.0;
        push(&mut problem, vec![(d[gc], 1.0)], Sense::Eq, b);
        push(
            &mut problem,
            d.iter().map(|&v| (v, 1.0)).collect(),
            Sense::Eq,
            HourAffine::zero(n_g),
        );
        for line in 0..inst.lines() {
            let row = base.row(line);
            let constant: f64 = row.iter().zip(&fixed).map(|(a, b)| a * b).sum();
            let cap = case.lines[line].capacity;
            let mut terms = Vec::new();
            let mut upper = HourAffine::zero(n_g);
            upper.constant = cap - constant;
            let mut lower = HourAffine::zero(n_g);
            lower.constant = -cap - constant;
            for i in 0..n_g {
                let k = row[inst.gen_bus(i)];
                if k != 0.0 {
                    terms.push((d[i], k));
                    upper.p[i] = -k;
                    lower.p[i] = -k;
                }
            }
            push(&mut problem, terms.clone(), Sense::Le, upper);
            push(&mut problem, terms, Sense::Ge, lower);
        }
        delta.push(d);
    }
    let mut sp = Subproblem {
        hour: t,
        problem,
        rhs,
        r_up,
        delta,
        point: point.clone(),
    };
    sp.set_point(point);
    sp
}

fn snap(v: f64) -> f64 {
    if v.abs() < 1e-9 {
        0.0
    } else {
        v
    }
}

/// Reads a [`CommitmentSolution`] out of a primal vector of `model`.
pub fn extract_solution(
    inst: &Instance,
    model: &ModelInstance,
    primal: &[f64],
    gap: f64,
) -> Result<CommitmentSolution, FormulationError> {
    if primal.len() != model.problem.num_vars() {
        return Err(FormulationError::Dimension {
            expected: model.problem.num_vars(),
            got: primal.len(),
        });
    }
    let c = &model.catalog;
    let get = |v: &Vec<Vec<VarId>>| -> Vec<Vec<f64>> {
        v.iter()
            .map(|row| row.iter().map(|&j| snap(primal[j])).collect())
            .collect()
    };
    let bit = |v: &Vec<Vec<VarId>>| -> Vec<Vec<bool>> {
        v.iter()
            .map(|row| row.iter().map(|&j| primal[j] > 0.5).collect())
            .collect()
    };
    let startup_block =
        c.w.iter()
            .map(|per_t| {
                per_t
                    .iter()
                    .map(|ws| ws.iter().position(|&j| primal[j] > 0.5))
                    .collect()
            })
            .collect();
    let g =
        c.g.iter()
            .map(|per_t| {
                per_t
                    .iter()
                    .map(|ks| ks.iter().map(|&j| snap(primal[j])).collect())
                    .collect()
            })
            .collect();
    let mut redispatch = Vec::new();
    for (t, per_c) in c.delta.iter().enumerate() {
        for (ci, vars) in per_c.iter().enumerate() {
            redispatch.push(Redispatch {
                hour: t,
                contingency: ci,
                generator: inst.case.generators[inst.contingent_gens()[ci]].id,
                delta: vars.iter().map(|&j| snap(primal[j])).collect(),
            });
        }
    }
    let mut sol = CommitmentSolution {
        case_name: inst.case.name.clone(),
        generator_ids: inst.case.generators.iter().map(|g| g.id).collect(),
        horizon: inst.horizon(),
        x: bit(&c.x),
        y: bit(&c.y),
        z: bit(&c.z),
        startup_block,
        p: get(&c.p),
        g,
        startup_cost: get(&c.sc),
        alpha: get(&c.alpha),
        r_plus: get(&c.r_plus),
        r_minus: get(&c.r_minus),
        r_up: get(&c.r_up),
        redispatch,
        costs: Default::default(),
        hourly_costs: Vec::new(),
        objective: 0.0,
        gap,
    };
    sol.recompute_costs(&inst.case);
    Ok(sol)
}

/// Every (ℓ, lc, t, sign) whose contingency cone is registered in `model`.
pub fn registered_contingencies(model: &ModelInstance) -> BTreeSet<ContingencyKey> {
    model
        .socs
        .iter()
        .filter_map(|s| match s.label {
            SocLabel::ContingencyLine {
                line,
                outage,
                hour,
                sign,
            } => Some(ContingencyKey {
                line,
                outage,
                hour,
                sign,
            }),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::tests::{ring3, unit};
    use crate::grid::{StartupBlock, WindFarm};

    fn inst(case: GridCase) -> Instance {
        Instance::new(case, ChanceSpec::default()).unwrap()
    }

    fn two_unit_ring(horizon: usize) -> GridCase {
        let mut c = ring3();
        c.horizon = horizon;
        c.loads[0].demand = vec![50.0; horizon];
        c.generators.push(unit(2, 2, 100.0));
        for g in &mut c.generators {
            g.startup_blocks = vec![
                StartupBlock {
                    cost: 10.0,
                    min_off: 1,
                    max_off: 2,
                },
                StartupBlock {
                    cost: 20.0,
                    min_off: 3,
                    max_off: 5,
                },
            ];
        }
        c.generator_contingencies = vec![1, 2];
        c.line_contingencies = vec![3];
        c.wind_farms = vec![WindFarm {
            bus: 1,
            forecast: vec![0.0; horizon],
            std_dev: vec![5.0; horizon],
        }];
        c
    }

    #[test]
    fn minimal_master_has_no_cuts() {
        let mut c = ring3();
        c.horizon = 1;
        c.loads[0].demand = vec![50.0];
        let i = inst(c);
        let m = build_master(&i, &BendersState::default()).unwrap();
        assert_eq!(m.catalog.x.len(), 1);
        assert_eq!(m.catalog.eta.len(), 1);
        assert_eq!(m.count(RowFamily::OptimalityCut), 0);
        assert_eq!(m.count(RowFamily::FeasibilityCut), 0);
        // no wind: every base-line limit is a plain row
        assert!(m.socs.is_empty());
        assert_eq!(m.count(RowFamily::LineLinear), 2 * 3);
        m.problem.check().unwrap();
    }

    #[test]
    fn median_risk_zeroes_reserve_coefficients() {
        let c = two_unit_ring(2);
        let i = Instance::new(c, ChanceSpec::uniform(0.5, 0.1, 0.2)).unwrap();
        let m = build_master(&i, &BendersState::default()).unwrap();
        for (row, f) in m.problem.rows.iter().zip(&m.families) {
            if *f == RowFamily::ReserveChance {
                assert_eq!(row.terms[0].1, 0.0);
            }
        }
    }

    #[test]
    fn closed_form_row_counts() {
        let c = two_unit_ring(2);
        let (n_g, n_t, n_l) = (2usize, 2usize, 3usize);
        let n_cg = 2usize;
        let n_cl = 1usize;
        let i = inst(c.clone());
        let e = build_extensive_form(&i).unwrap();
        let per = n_g * n_t;
        assert_eq!(e.count(RowFamily::Logic), per);
        assert_eq!(e.count(RowFamily::NoSimultaneous), per);
        assert_eq!(e.count(RowFamily::ReserveBound), 3 * per);
        assert_eq!(e.count(RowFamily::OutputLower), per);
        assert_eq!(e.count(RowFamily::OutputUpper), per);
        assert_eq!(e.count(RowFamily::ReserveChance), 2 * per);
        assert_eq!(e.count(RowFamily::Participation), per);
        assert_eq!(e.count(RowFamily::BlockLimit), per);
        assert_eq!(e.count(RowFamily::BlockSum), per);
        assert_eq!(e.count(RowFamily::StartupSelect), per);
        assert_eq!(e.count(RowFamily::StartupEligible), 2 * per);
        assert_eq!(e.count(RowFamily::StartupCost), per);
        assert_eq!(e.count(RowFamily::TertiaryAdequacy), n_cg * n_t);
        assert_eq!(e.count(RowFamily::ParticipationSum), n_t);
        assert_eq!(e.count(RowFamily::Balance), n_t);
        assert_eq!(e.count(RowFamily::RampUp), per);
        assert_eq!(e.count(RowFamily::RampDown), per);
        // generator contingency block
        let rows_per_gc = n_g + 2 + 2 * n_l;
        let gc_rows = e.count(RowFamily::RedispatchBound)
            + e.count(RowFamily::OutageFix)
            + e.count(RowFamily::RedispatchBalance)
            + e.count(RowFamily::ContingencyFlow);
        assert_eq!(gc_rows, n_cg * rows_per_gc * n_t);
        // line contingency cones skip the outaged line itself
        let cones =
            e.count(RowFamily::ContingencyLineSeed) + e.count(RowFamily::ContingencyLineLinear);
        assert_eq!(cones, 2 * (n_l - 1) * n_cl * n_t);
        assert_eq!(
            e.count(RowFamily::LineSeed) + e.count(RowFamily::LineLinear),
            2 * n_l * n_t
        );
        assert_eq!(
            e.socs.len(),
            e.count(RowFamily::LineSeed) + e.count(RowFamily::ContingencyLineSeed)
        );
        e.problem.check().unwrap();
    }

    #[test]
    fn no_contingencies_master_matches_extensive_rows() {
        let mut c = two_unit_ring(2);
        c.generator_contingencies.clear();
        c.line_contingencies.clear();
        let i = inst(c);
        let m = build_master(&i, &BendersState::default()).unwrap();
        let e = build_extensive_form(&i).unwrap();
        assert_eq!(m.problem.rows, e.problem.rows);
        assert_eq!(m.problem.num_vars(), e.problem.num_vars() + 2);
    }

    #[test]
    fn nominal_rule_rows() {
        let mut c = two_unit_ring(1);
        c.loads[0].demand = vec![1000.0];
        for g in &mut c.generators {
            g.p_max = 600.0;
            g.cost_blocks[0].width = 600.0;
        }
        let i = inst(c);
        let d = build_deterministic(&i, 0.005).unwrap();
        let rows: Vec<&Row> = d
            .problem
            .rows
            .iter()
            .zip(&d.families)
            .filter(|(_, f)| **f == RowFamily::NominalReserve)
            .map(|(r, _)| r)
            .collect();
        assert_eq!(rows.len(), 2);
        assert!(rows
            .iter()
            .all(|r| (r.rhs - 5.0).abs() < 1e-12 && r.sense == Sense::Ge));
        assert!(d.socs.is_empty());
        let zero = build_deterministic(&i, 0.0).unwrap();
        assert!(zero
            .problem
            .rows
            .iter()
            .zip(&zero.families)
            .filter(|(_, f)| **f == RowFamily::NominalReserve)
            .all(|(r, _)| r.rhs == 0.0));
    }

    #[test]
    fn initial_windows() {
        let mut c = two_unit_ring(6);
        let g = &mut c.generators[0];
        g.min_up = 4;
        g.initial_on = true;
        g.initial_up_hours = 1;
        g.initial_down_hours = 0;
        assert_eq!(initial_window(&c, 0), (3, 0));
        let g = &mut c.generators[1];
        g.min_down = 10;
        g.initial_on = false;
        g.initial_up_hours = 0;
        g.initial_down_hours = 2;
        g.initial_output = 0.0;
        assert_eq!(initial_window(&c, 1), (0, 6));
    }

    #[test]
    fn subproblem_rhs_tracks_point() {
        let c = two_unit_ring(1);
        let i = inst(c);
        let pt = HourPoint {
            x: vec![1.0, 1.0],
            p: vec![30.0, 20.0],
            r_plus: vec![5.0, 0.0],
        };
        let sp = build_subproblem(&i, 0, &pt);
        // R bound, headroom, adequacy, then per contingency
        assert_eq!(sp.problem.num_rows(), 2 + 2 + 2 + 2 * (2 + 2 + 6));
        assert_eq!(sp.problem.rows[2].rhs, 200.0 - 30.0 - 5.0);
        assert_eq!(sp.problem.rows[4].rhs, 30.0);
        let mut sp2 = sp.clone();
        sp2.set_point(&HourPoint {
            x: vec![0.0, 1.0],
            p: vec![0.0, 50.0],
            r_plus: vec![0.0, 0.0],
        });
        assert_eq!(sp2.problem.rows[0].rhs, 0.0);
        assert_eq!(sp2.problem.rows[5].rhs, 50.0);
    }
}
