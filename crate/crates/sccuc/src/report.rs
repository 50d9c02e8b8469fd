//! Artifact layouts: the solution file, CSV tables and the iteration log.

use std::path::Path;

use serde::{Deserialize, Serialize};

use sccuc_core::benders::{BendersState, IterationRecord, OuterRecord};
use sccuc_core::formulation::ContingencyKey;
use sccuc_core::solution::CostBreakdown;
use sccuc_core::uncertainty::FlowSign;
use sccuc_core::validation::{ComparisonReport, ReserveDirection, ValidationReport};
use sccuc_core::{ChanceSpec, CommitmentSolution, GridCase};

use crate::config::Mode;
use crate::io::{write_text, IoError};

/// A line-contingency chance constraint, by line ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivatedConstraint {
    pub line: u32,
    pub outage: u32,
    pub hour: usize,
    pub sign: FlowSign,
}

impl ActivatedConstraint {
    pub fn from_key(case: &GridCase, k: &ContingencyKey) -> Self {
        Self {
            line: case.lines[k.line].id,
            outage: case.lines[k.outage].id,
            hour: k.hour,
            sign: k.sign,
        }
    }
}

/// Contents of `solution.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub mode: Mode,
    pub case_name: String,
    pub case_fingerprint: String,
    pub chance: ChanceSpec,
    pub benders_gap: f64,
    pub mip_gap: f64,
    pub reserve_fraction: Option<f64>,
    pub lower_bound: f64,
    pub outer_iterations: Option<usize>,
    pub inner_iterations: Option<usize>,
    pub activated: Vec<ActivatedConstraint>,
    pub solution: CommitmentSolution,
}

/// One line of `iterations.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LogRecord {
    Inner(IterationRecord),
    Outer(OuterRecord),
}

/// Inner records in order, each outer record after the inner records of
/// its iteration.
pub fn iteration_records(state: &BendersState) -> Vec<LogRecord> {
    let mut out = Vec::new();
    for o in &state.outer_log {
        out.extend(
            state
                .log
                .iter()
                .filter(|r| r.outer == o.outer)
                .cloned()
                .map(LogRecord::Inner),
        );
        out.push(LogRecord::Outer(o.clone()));
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), IoError> {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("records serialize"));
        s.push('\n');
    }
    write_text(path, &s)
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), IoError> {
    let csv_err = |source| IoError::Csv {
        path: path.into(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| IoError::Write {
        path: path.into(),
        source,
    })?;
    check_csv(path, header.len(), rows.len())
}

/// Re-reads a CSV file and checks its shape.
fn check_csv(path: &Path, columns: usize, rows: usize) -> Result<(), IoError> {
    let schema = || IoError::Schema {
        path: path.into(),
        what: "a rectangular CSV table",
    };
    let mut r = csv::Reader::from_path(path).map_err(|_| schema())?;
    if r.headers().map_err(|_| schema())?.len() != columns {
        return Err(schema());
    }
    let mut n = 0;
    for rec in r.records() {
        if rec.map_err(|_| schema())?.len() != columns {
            return Err(schema());
        }
        n += 1;
    }
    if n != rows {
        return Err(schema());
    }
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn flag(b: bool) -> String {
    String::from(if b { "1" } else { "0" })
}

/// Unit × hour schedule: status, transitions, output and reserves (MW).
pub fn write_schedule_csv(path: &Path, sol: &CommitmentSolution) -> Result<(), IoError> {
    let mut rows = Vec::new();
    for (i, id) in sol.generator_ids.iter().enumerate() {
        for t in 0..sol.horizon {
            rows.push(vec![
                id.to_string(),
                (t + 1).to_string(),
                flag(sol.x[i][t]),
                flag(sol.y[i][t]),
                flag(sol.z[i][t]),
                num(sol.p[i][t]),
                num(sol.alpha[i][t]),
                num(sol.r_plus[i][t]),
                num(sol.r_minus[i][t]),
                num(sol.r_up[i][t]),
            ]);
        }
    }
    write_csv(
        path,
        &[
            "generator",
            "hour",
            "on",
            "startup",
            "shutdown",
            "output_mw",
            "participation",
            "reserve_up_mw",
            "reserve_down_mw",
            "tertiary_mw",
        ],
        &rows,
    )
}

/// Cost breakdown ($): one row per component, total and per hour.
pub fn write_costs_csv(path: &Path, sol: &CommitmentSolution) -> Result<(), IoError> {
    type Getter = fn(&CostBreakdown) -> f64;
    let items: [(&str, Getter); 6] = [
        ("total_cost", |c| c.total),
        ("no_load_cost", |c| c.no_load),
        ("startup_cost", |c| c.startup),
        ("production_cost", |c| c.production),
        ("tertiary_reserve_cost", |c| c.tertiary_reserve),
        ("generation_reserve_cost", |c| c.generation_reserve),
    ];
    let hours: Vec<String> = (1..=sol.horizon).map(|t| format!("hour_{t}")).collect();
    let mut header = vec!["item", "total"];
    header.extend(hours.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = items
        .iter()
        .map(|(name, get)| {
            let mut r = vec![String::from(*name), num(get(&sol.costs))];
            r.extend(sol.hourly_costs.iter().map(|h| num(get(h))));
            r
        })
        .collect();
    write_csv(path, &header, &rows)
}

/// Every record of a validation report, generators first.
pub fn write_validation_csv(path: &Path, report: &ValidationReport) -> Result<(), IoError> {
    let mut rows = Vec::new();
    for g in &report.generators {
        rows.push(vec![
            "generator".into(),
            g.generator.to_string(),
            String::new(),
            (g.hour + 1).to_string(),
            match g.direction {
                ReserveDirection::Down => "down".into(),
                ReserveDirection::Up => "up".into(),
            },
            num(g.probability),
            flag(g.exceeds),
        ]);
    }
    for (class, recs) in [
        ("line", &report.base_lines),
        ("contingency_line", &report.contingency_lines),
    ] {
        for l in recs {
            rows.push(vec![
                class.into(),
                l.line.to_string(),
                l.outage.map(|o| o.to_string()).unwrap_or_default(),
                (l.hour + 1).to_string(),
                match l.sign {
                    FlowSign::Upper => "upper".into(),
                    FlowSign::Lower => "lower".into(),
                },
                num(l.probability),
                flag(l.exceeds),
            ]);
        }
    }
    write_csv(
        path,
        &[
            "class",
            "element",
            "outage",
            "hour",
            "side",
            "probability",
            "exceeds",
        ],
        &rows,
    )
}

/// Per-hour counts of samples with at least one violation, one column per
/// series.
pub fn write_hourly_csv(path: &Path, series: &[(String, Vec<usize>)]) -> Result<(), IoError> {
    let horizon = series.first().map_or(0, |s| s.1.len());
    let mut header = vec!["hour"];
    header.extend(series.iter().map(|s| s.0.as_str()));
    let rows: Vec<Vec<String>> = (0..horizon)
        .map(|t| {
            let mut r = vec![(t + 1).to_string()];
            r.extend(series.iter().map(|s| s.1[t].to_string()));
            r
        })
        .collect();
    write_csv(path, &header, &rows)
}

pub fn write_comparison_csv(path: &Path, report: &ComparisonReport) -> Result<(), IoError> {
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.item.clone(),
                num(r.deterministic),
                num(r.chance_constrained),
                num(r.chance_constrained - r.deterministic),
            ]
        })
        .collect();
    write_csv(
        path,
        &["item", "deterministic", "chance_constrained", "difference"],
        &rows,
    )
}
