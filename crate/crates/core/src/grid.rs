//! Static case data and DC network algebra.
//!
//! Shift factors are built from the reduced bus susceptance matrix (reference
//! row and column removed). Flows are positive in the `from_bus -> to_bus`
//! direction and the reference bus absorbs the balancing injection, so its
//! column of every [`SensitivityMatrix`] is zero.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Injections must balance to this many MW before flows are evaluated.
pub const BALANCE_TOLERANCE: f64 = 1e-6;

fn default_base_mva() -> f64 {
    100.0
}

/// Static network, fleet, load, wind and contingency data for one horizon.
/// All powers are in MW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCase {
    pub name: String,
    #[serde(default = "default_base_mva")]
    pub base_mva: f64,
    /// Number of hourly periods.
    pub horizon: usize,
    pub buses: Vec<u32>,
    pub reference_bus: u32,
    /// Uniform bound on any single reserve purchase (MW).
    pub reserve_cap: f64,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    #[serde(default)]
    pub loads: Vec<Load>,
    #[serde(default)]
    pub wind_farms: Vec<WindFarm>,
    /// Generator ids whose outage must be covered by tertiary reserves.
    #[serde(default)]
    pub generator_contingencies: Vec<u32>,
    /// Line ids whose outage is screened with chance constraints.
    #[serde(default)]
    pub line_contingencies: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: u32,
    pub from_bus: u32,
    pub to_bus: u32,
    pub susceptance: f64,
    pub capacity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBlock {
    /// $/MW
    pub slope: f64,
    /// MW
    pub width: f64,
}

/// Start-up cost paid when the unit has been off between `min_off` and
/// `max_off` hours (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartupBlock {
    pub cost: f64,
    pub min_off: u32,
    pub max_off: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: u32,
    pub bus: u32,
    pub p_min: f64,
    pub p_max: f64,
    pub cost_blocks: Vec<CostBlock>,
    pub no_load_cost: f64,
    /// Price of up/down generation reserve ($/MW).
    pub reserve_price: f64,
    /// Price of tertiary reserve ($/MW).
    pub tertiary_price: f64,
    pub startup_blocks: Vec<StartupBlock>,
    pub ramp_up: f64,
    pub ramp_down: f64,
    pub min_up: u32,
    pub min_down: u32,
    pub initial_on: bool,
    pub initial_up_hours: u32,
    pub initial_down_hours: u32,
    pub initial_output: f64,
    /// Per-unit override of [`GridCase::reserve_cap`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reserve_cap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Load {
    pub bus: u32,
    pub demand: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindFarm {
    pub bus: u32,
    pub forecast: Vec<f64>,
    pub std_dev: Vec<f64>,
}

/// One failed invariant found by [`validate_case`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseViolation {
    pub field: String,
    pub rule: String,
}

impl fmt::Display for CaseViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("unknown bus {0}")]
    UnknownBus(u32),
    #[error("unknown line {0}")]
    UnknownLine(u32),
    #[error("network is disconnected; components: {components:?}")]
    Disconnected { components: Vec<Vec<u32>> },
    #[error("outage of line {line} islands the network; components: {components:?}")]
    Islanding {
        line: u32,
        components: Vec<Vec<u32>>,
    },
    #[error("injections do not balance: residual {residual} MW")]
    Unbalanced { residual: f64 },
    #[error("expected {expected} injections, got {got}")]
    Dimension { expected: usize, got: usize },
}

impl GridCase {
    pub fn bus_index(&self, id: u32) -> Option<usize> {
        self.buses.iter().position(|&b| b == id)
    }

    pub fn line_index(&self, id: u32) -> Option<usize> {
        self.lines.iter().position(|l| l.id == id)
    }

    pub fn generator_index(&self, id: u32) -> Option<usize> {
        self.generators.iter().position(|g| g.id == id)
    }

    pub fn reference_index(&self) -> Result<usize, GridError> {
        self.bus_index(self.reference_bus)
            .ok_or(GridError::UnknownBus(self.reference_bus))
    }

    /// Bus index of every generator, in fleet order.
    pub fn generator_buses(&self) -> Result<Vec<usize>, GridError> {
        self.generators
            .iter()
            .map(|g| self.bus_index(g.bus).ok_or(GridError::UnknownBus(g.bus)))
            .collect()
    }

    /// Bus index of every wind farm.
    pub fn wind_buses(&self) -> Result<Vec<usize>, GridError> {
        self.wind_farms
            .iter()
            .map(|w| self.bus_index(w.bus).ok_or(GridError::UnknownBus(w.bus)))
            .collect()
    }

    /// Per-bus forecast wind minus demand at hour `t`.
    pub fn fixed_injection(&self, t: usize) -> Vec<f64> {
        let mut inj = vec![0.0; self.buses.len()];
        for w in &self.wind_farms {
            if let Some(b) = self.bus_index(w.bus) {
                inj[b] += w.forecast[t];
            }
        }
        for l in &self.loads {
            if let Some(b) = self.bus_index(l.bus) {
                inj[b] -= l.demand[t];
            }
        }
        inj
    }

    pub fn total_demand(&self, t: usize) -> f64 {
        self.loads.iter().map(|l| l.demand[t]).sum()
    }

    pub fn total_wind_forecast(&self, t: usize) -> f64 {
        self.wind_farms.iter().map(|w| w.forecast[t]).sum()
    }

    /// Reserve bound `R` for generator `i`.
    pub fn reserve_cap_of(&self, i: usize) -> f64 {
        self.generators[i].reserve_cap.unwrap_or(self.reserve_cap)
    }

    /// Generator contingencies as fleet indices (unknown ids are skipped;
    /// [`validate_case`] reports them).
    pub fn generator_contingency_indices(&self) -> Vec<usize> {
        self.generator_contingencies
            .iter()
            .filter_map(|&id| self.generator_index(id))
            .collect()
    }

    pub fn line_contingency_indices(&self) -> Vec<usize> {
        self.line_contingencies
            .iter()
            .filter_map(|&id| self.line_index(id))
            .collect()
    }

    /// Copy of the case with every line capacity multiplied by `factor`.
    pub fn with_line_capacity_scale(&self, factor: f64) -> GridCase {
        let mut out = self.clone();
        for l in &mut out.lines {
            l.capacity *= factor;
        }
        out
    }

    /// Connected components of the bus graph with the lines in `skip`
    /// removed, as sorted lists of bus ids.
    fn components(&self, skip: Option<usize>) -> Vec<Vec<u32>> {
        let n = self.buses.len();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (k, l) in self.lines.iter().enumerate() {
            if Some(k) == skip {
                continue;
            }
            if let (Some(a), Some(b)) = (self.bus_index(l.from_bus), self.bus_index(l.to_bus)) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut seen = vec![false; n];
        let mut comps = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(u) = stack.pop() {
                comp.push(self.buses[u]);
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }
}

/// Checks every case invariant and returns one entry per broken rule. An
/// empty list means the case is usable.
pub fn validate_case(case: &GridCase) -> Vec<CaseViolation> {
    let mut out = Vec::new();
    let mut bad = |field: String, rule: &str| {
        out.push(CaseViolation {
            field,
            rule: String::from(rule),
        })
    };
    let horizon = case.horizon;
    if horizon == 0 {
        bad("horizon".into(), "must be at least one hour");
    }
    if case.buses.is_empty() {
        bad("buses".into(), "at least one bus is required");
    }
    let bus_set: BTreeSet<u32> = case.buses.iter().copied().collect();
    if bus_set.len() != case.buses.len() {
        bad("buses".into(), "bus ids must be unique");
    }
    if !bus_set.contains(&case.reference_bus) {
        bad("reference_bus".into(), "reference bus does not exist");
    }
    if !(case.reserve_cap >= 0.0) {
        bad("reserve_cap".into(), "must be non-negative");
    }

    let mut line_ids = BTreeSet::new();
    for l in &case.lines {
        let f = format!("lines[{}]", l.id);
        if !line_ids.insert(l.id) {
            bad(f.clone(), "duplicate line id");
        }
        if !bus_set.contains(&l.from_bus) || !bus_set.contains(&l.to_bus) {
            bad(f.clone(), "endpoint bus does not exist");
        }
        if l.from_bus == l.to_bus {
            bad(f.clone(), "line must join two distinct buses");
        }
        if !(l.susceptance > 0.0) {
            bad(f.clone(), "susceptance must be positive");
        }
        if !(l.capacity > 0.0) {
            bad(f, "capacity must be positive");
        }
    }

    let mut gen_ids = BTreeSet::new();
    for g in &case.generators {
        let f = format!("generators[{}]", g.id);
        if !gen_ids.insert(g.id) {
            bad(f.clone(), "duplicate generator id");
        }
        if !bus_set.contains(&g.bus) {
            bad(f.clone(), "generator bus does not exist");
        }
        if !(g.p_min >= 0.0 && g.p_min <= g.p_max) {
            bad(f.clone(), "requires 0 <= p_min <= p_max");
        }
        let span: f64 = g.cost_blocks.iter().map(|b| b.width).sum();
        if g.cost_blocks.is_empty() || span + 1e-9 < g.p_max - g.p_min {
            bad(f.clone(), "cost blocks must span p_max - p_min");
        }
        if g.cost_blocks.iter().any(|b| !(b.width >= 0.0)) {
            bad(f.clone(), "cost block widths must be non-negative");
        }
        if !(g.no_load_cost >= 0.0 && g.reserve_price >= 0.0 && g.tertiary_price >= 0.0) {
            bad(f.clone(), "costs and reserve prices must be non-negative");
        }
        if !(g.ramp_up >= 0.0 && g.ramp_down >= 0.0) {
            bad(f.clone(), "ramp limits must be non-negative");
        }
        if let Some(r) = g.reserve_cap {
            if !(r >= 0.0) {
                bad(f.clone(), "reserve_cap override must be non-negative");
            }
        }
        if g.startup_blocks.is_empty() {
            bad(f.clone(), "at least one start-up block is required");
        } else {
            let ok_ranges = g
                .startup_blocks
                .iter()
                .all(|s| s.min_off >= 1 && s.min_off <= s.max_off);
            let contiguous = g
                .startup_blocks
                .windows(2)
                .all(|w| w[1].min_off == w[0].max_off + 1);
            let monotone = g.startup_blocks.windows(2).all(|w| w[1].cost >= w[0].cost);
            if !ok_ranges || !contiguous {
                bad(
                    f.clone(),
                    "start-up blocks must have contiguous, non-overlapping [min_off, max_off] ranges starting at >= 1",
                );
            }
            if !monotone || g.startup_blocks.iter().any(|s| !(s.cost >= 0.0)) {
                bad(
                    f.clone(),
                    "start-up costs must be non-negative and non-decreasing",
                );
            }
        }
        let up = g.initial_up_hours > 0;
        let down = g.initial_down_hours > 0;
        if up == down || up != g.initial_on {
            bad(
                f.clone(),
                "exactly one of initial_up_hours, initial_down_hours must be positive, matching initial_on",
            );
        }
        let p0_ok = if g.initial_on {
            g.initial_output >= g.p_min - 1e-9 && g.initial_output <= g.p_max + 1e-9
        } else {
            g.initial_output == 0.0
        };
        if !p0_ok {
            bad(
                f,
                "initial_output must lie in [p_min, p_max] when on and be 0 when off",
            );
        }
    }

    for (k, l) in case.loads.iter().enumerate() {
        let f = format!("loads[{k}]");
        if !bus_set.contains(&l.bus) {
            bad(f.clone(), "load bus does not exist");
        }
        if l.demand.len() != horizon {
            bad(f.clone(), "demand series length must equal horizon");
        }
        if l.demand.iter().any(|d| !(*d >= 0.0)) {
            bad(f, "demand must be non-negative");
        }
    }
    for (k, w) in case.wind_farms.iter().enumerate() {
        let f = format!("wind_farms[{k}]");
        if !bus_set.contains(&w.bus) {
            bad(f.clone(), "wind bus does not exist");
        }
        if w.forecast.len() != horizon || w.std_dev.len() != horizon {
            bad(
                f.clone(),
                "forecast and std_dev series lengths must equal horizon",
            );
        }
        if w.std_dev.iter().any(|s| !(*s >= 0.0)) {
            bad(f, "std_dev must be non-negative");
        }
    }

    let mut seen = BTreeSet::new();
    for &gc in &case.generator_contingencies {
        if !gen_ids.contains(&gc) {
            bad(
                format!("generator_contingencies[{gc}]"),
                "unknown generator id",
            );
        }
        if !seen.insert(gc) {
            bad(format!("generator_contingencies[{gc}]"), "duplicate entry");
        }
    }
    let mut seen = BTreeSet::new();
    for &lc in &case.line_contingencies {
        if !line_ids.contains(&lc) {
            bad(format!("line_contingencies[{lc}]"), "unknown line id");
        }
        if !seen.insert(lc) {
            bad(format!("line_contingencies[{lc}]"), "duplicate entry");
        }
    }

    if !case.buses.is_empty() {
        let comps = case.components(None);
        if comps.len() > 1 {
            bad(
                "lines".into(),
                &format!(
                    "network splits into {} components: {:?}",
                    comps.len(),
                    comps
                ),
            );
        } else {
            let islanding: Vec<u32> = case
                .line_contingencies
                .iter()
                .filter(|&&lc| {
                    case.line_index(lc)
                        .map(|k| case.components(Some(k)).len() > 1)
                        .unwrap_or(false)
                })
                .copied()
                .collect();
            if !islanding.is_empty() {
                bad(
                    "line_contingencies".into(),
                    &format!("outage islands the network for lines {islanding:?}"),
                );
            }
        }
    }
    out
}

/// Which topology a [`SensitivityMatrix`] was built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    Base,
    /// Index of the removed line.
    LineOutage(usize),
}

/// Dense `|L| x |B|` matrix of MW-per-MW shift factors.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMatrix {
    lines: usize,
    buses: usize,
    data: Vec<f64>,
    pub topology: Topology,
}

impl SensitivityMatrix {
    pub fn lines(&self) -> usize {
        self.lines
    }

    pub fn buses(&self) -> usize {
        self.buses
    }

    #[inline]
    pub fn get(&self, line: usize, bus: usize) -> f64 {
        self.data[line * self.buses + bus]
    }

    pub fn row(&self, line: usize) -> &[f64] {
        &self.data[line * self.buses..(line + 1) * self.buses]
    }

    /// `M · injections` without the balance check.
    pub fn apply(&self, injections: &[f64]) -> Vec<f64> {
        (0..self.lines)
            .map(|l| self.row(l).iter().zip(injections).map(|(m, p)| m * p).sum())
            .collect()
    }
}

fn build_sensitivity(
    case: &GridCase,
    removed: Option<usize>,
) -> Result<SensitivityMatrix, GridError> {
    let n = case.buses.len();
    let nl = case.lines.len();
    let r = case.reference_index()?;
    let ends: Vec<(usize, usize)> = case
        .lines
        .iter()
        .map(|l| {
            let a = case
                .bus_index(l.from_bus)
                .ok_or(GridError::UnknownBus(l.from_bus))?;
            let b = case
                .bus_index(l.to_bus)
                .ok_or(GridError::UnknownBus(l.to_bus))?;
            Ok((a, b))
        })
        .collect::<Result<_, GridError>>()?;

    let disconnected = |comps: Vec<Vec<u32>>| match removed {
        Some(k) => GridError::Islanding {
            line: case.lines[k].id,
            components: comps,
        },
        None => GridError::Disconnected { components: comps },
    };
    let comps = case.components(removed);
    if comps.len() > 1 {
        return Err(disconnected(comps));
    }

    // reduced position of each non-reference bus
    let reduced: Vec<Option<usize>> = (0..n)
        .scan(0usize, |next, b| {
            Some(if b == r {
                None
            } else {
                *next += 1;
                Some(*next - 1)
            })
        })
        .collect();
    let m = n - 1;
    let mut data = vec![0.0; nl * n];
    if m > 0 {
        let mut bred = DMatrix::<f64>::zeros(m, m);
        for (k, (l, &(a, b))) in case.lines.iter().zip(&ends).enumerate() {
            if Some(k) == removed {
                continue;
            }
            let s = l.susceptance;
            if let Some(ia) = reduced[a] {
                bred[(ia, ia)] += s;
            }
            if let Some(ib) = reduced[b] {
                bred[(ib, ib)] += s;
            }
            if let (Some(ia), Some(ib)) = (reduced[a], reduced[b]) {
                bred[(ia, ib)] -= s;
                bred[(ib, ia)] -= s;
            }
        }
        let lu = bred.lu();
        if !lu.is_invertible() {
            return Err(disconnected(case.components(removed)));
        }
        let mut rhs = DVector::<f64>::zeros(m);
        for bus in 0..n {
            let Some(ib) = reduced[bus] else { continue };
            rhs.fill(0.0);
            rhs[ib] = 1.0;
            let theta = lu
                .solve(&rhs)
                .ok_or_else(|| disconnected(case.components(removed)))?;
            let angle = |x: usize| reduced[x].map(|i| theta[i]).unwrap_or(0.0);
            for (k, (l, &(a, b))) in case.lines.iter().zip(&ends).enumerate() {
                if Some(k) == removed {
                    continue;
                }
                data[k * n + bus] = l.susceptance * (angle(a) - angle(b));
            }
        }
    }
    Ok(SensitivityMatrix {
        lines: nl,
        buses: n,
        data,
        topology: removed.map_or(Topology::Base, Topology::LineOutage),
    })
}

/// Base-topology shift factors.
pub fn build_ptdf(case: &GridCase) -> Result<SensitivityMatrix, GridError> {
    build_sensitivity(case, None)
}

/// Shift factors with line `line_id` removed; that line's row is zero.
pub fn outage_ptdf(case: &GridCase, line_id: u32) -> Result<SensitivityMatrix, GridError> {
    let k = case
        .line_index(line_id)
        .ok_or(GridError::UnknownLine(line_id))?;
    build_sensitivity(case, Some(k))
}

/// Line flows for a balanced injection vector.
pub fn dc_flows(m: &SensitivityMatrix, injections: &[f64]) -> Result<Vec<f64>, GridError> {
    if injections.len() != m.buses {
        return Err(GridError::Dimension {
            expected: m.buses,
            got: injections.len(),
        });
    }
    let residual: f64 = injections.iter().sum();
    if residual.abs() > BALANCE_TOLERANCE {
        return Err(GridError::Unbalanced { residual });
    }
    Ok(m.apply(injections))
}

/// Base matrix plus one outage matrix per line contingency, keyed by line
/// index.
#[derive(Debug, Clone)]
pub struct PtdfSet {
    pub base: SensitivityMatrix,
    pub outages: BTreeMap<usize, SensitivityMatrix>,
}

impl PtdfSet {
    pub fn new(case: &GridCase) -> Result<Self, GridError> {
        let base = build_ptdf(case)?;
        let mut outages = BTreeMap::new();
        for &lc in &case.line_contingencies {
            let k = case.line_index(lc).ok_or(GridError::UnknownLine(lc))?;
            outages.insert(k, outage_ptdf(case, lc)?);
        }
        Ok(Self { base, outages })
    }

    pub fn outage(&self, line: usize) -> Option<&SensitivityMatrix> {
        self.outages.get(&line)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use alloc::string::ToString;

    pub(crate) fn unit(id: u32, bus: u32, p_max: f64) -> Generator {
        Generator {
            id,
            bus,
            p_min: 0.0,
            p_max,
            cost_blocks: vec![CostBlock {
                slope: 10.0,
                width: p_max,
            }],
            no_load_cost: 0.0,
            reserve_price: 1.0,
            tertiary_price: 1.0,
            startup_blocks: vec![StartupBlock {
                cost: 0.0,
                min_off: 1,
                max_off: 1000,
            }],
            ramp_up: p_max,
            ramp_down: p_max,
            min_up: 1,
            min_down: 1,
            initial_on: true,
            initial_up_hours: 1,
            initial_down_hours: 0,
            initial_output: 0.0,
            reserve_cap: None,
        }
    }

    pub(crate) fn ring3() -> GridCase {
        let line = |id, a, b| Line {
            id,
            from_bus: a,
            to_bus: b,
            susceptance: 1.0,
            capacity: 100.0,
        };
        GridCase {
            name: "ring3".to_string(),
            base_mva: 100.0,
            horizon: 1,
            buses: vec![1, 2, 3],
            reference_bus: 3,
            reserve_cap: 100.0,
            lines: vec![line(1, 1, 2), line(2, 2, 3), line(3, 1, 3)],
            generators: vec![unit(1, 3, 200.0)],
            loads: vec![Load {
                bus: 1,
                demand: vec![50.0],
            }],
            wind_farms: vec![],
            generator_contingencies: vec![],
            line_contingencies: vec![],
        }
    }

    #[test]
    fn well_formed_ring_validates() {
        assert!(validate_case(&ring3()).is_empty());
    }

    #[test]
    fn zero_susceptance_is_named() {
        let mut c = ring3();
        c.lines[1].susceptance = 0.0;
        let v = validate_case(&c);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "lines[2]");
    }

    #[test]
    fn split_network_reports_one_connectivity_violation() {
        let mut c = ring3();
        c.buses.push(4);
        let v = validate_case(&c);
        assert_eq!(v.len(), 1);
        assert!(v[0].rule.contains("2 components"));
    }

    #[test]
    fn islanding_contingency_is_rejected() {
        let mut c = ring3();
        c.buses.push(4);
        c.lines.push(Line {
            id: 4,
            from_bus: 3,
            to_bus: 4,
            susceptance: 1.0,
            capacity: 10.0,
        });
        c.line_contingencies = vec![4];
        let v = validate_case(&c);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "line_contingencies");
    }

    #[test]
    fn inconsistent_initial_state() {
        let mut c = ring3();
        c.generators[0].initial_down_hours = 3;
        assert_eq!(validate_case(&c).len(), 1);
    }

    #[test]
    fn startup_blocks_must_be_contiguous() {
        let mut c = ring3();
        c.generators[0].startup_blocks = vec![
            StartupBlock {
                cost: 1.0,
                min_off: 1,
                max_off: 3,
            },
            StartupBlock {
                cost: 2.0,
                min_off: 5,
                max_off: 9,
            },
        ];
        assert_eq!(validate_case(&c).len(), 1);
    }

    #[test]
    fn ring_shift_factors() {
        let m = build_ptdf(&ring3()).unwrap();
        // lines: 0=(1,2) 1=(2,3) 2=(1,3); injection at bus 1 withdrawn at 3
        assert!((m.get(2, 0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.get(0, 0) - 1.0 / 3.0).abs() < 1e-12);
        for l in 0..3 {
            assert_eq!(m.get(l, 2), 0.0);
        }
    }

    #[test]
    fn two_bus_line_carries_everything() {
        let mut c = ring3();
        c.buses = vec![1, 2];
        c.reference_bus = 2;
        c.lines = vec![Line {
            id: 1,
            from_bus: 1,
            to_bus: 2,
            susceptance: 7.3,
            capacity: 10.0,
        }];
        c.generators[0].bus = 2;
        let m = build_ptdf(&c).unwrap();
        assert!((m.get(0, 0) - 1.0).abs() < 1e-12);
        c.line_contingencies = vec![1];
        assert!(matches!(
            outage_ptdf(&c, 1),
            Err(GridError::Islanding { line: 1, .. })
        ));
    }

    #[test]
    fn ring_outage_becomes_chain() {
        let m = outage_ptdf(&ring3(), 3).unwrap();
        assert!((m.get(0, 0) - 1.0).abs() < 1e-12);
        assert!(m.row(2).iter().all(|&v| v == 0.0));
        assert_eq!(m.topology, Topology::LineOutage(2));
    }

    #[test]
    fn flows_for_unit_transfer() {
        let m = build_ptdf(&ring3()).unwrap();
        let f = dc_flows(&m, &[1.0, 0.0, -1.0]).unwrap();
        assert!((f[2] - 2.0 / 3.0).abs() < 1e-12);
        assert!((f[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((f[1] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(dc_flows(&m, &[0.0; 3]).unwrap(), vec![0.0; 3]);
        assert!(matches!(
            dc_flows(&m, &[1.0, 0.0, 0.0]),
            Err(GridError::Unbalanced { .. })
        ));
    }
}
