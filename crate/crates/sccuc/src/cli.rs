//! `sccuc solve | validate | compare`.
//!
//! Exit codes: 0 success, 1 bad input (malformed case, bad flag, missing or
//! mismatched file), 2 infeasible, 3 iteration or solver limit, 4 solver
//! failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use sccuc_core::benders::{solve_deterministic, solve_extensive, solve_sccuc, BendersError};
use sccuc_core::validation::{
    compare_solutions, evaluate_solution, sample_deviations, Distribution, ScenarioSampler,
    ValidationReport,
};
use sccuc_core::{GridCase, Instance};

use crate::config::{ConfigError, Mode, RunConfig};
use crate::highs::HighsSolver;
use crate::io::{case_fingerprint, load_case, read_json, write_json_checked, write_text, IoError};
use crate::report::{self, iteration_records, ActivatedConstraint, LogRecord, SolutionFile};

/// Environment variable naming the LP/MILP backend.
pub const BACKEND_VAR: &str = "SCCUC_BACKEND";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;
pub const EXIT_FAILURE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "sccuc",
    version,
    about = "Security- and chance-constrained unit commitment"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a case and write solution.json, schedule.csv, costs.csv,
    /// iterations.jsonl and solver.log.
    Solve(ConfigArgs),
    /// Monte Carlo evaluation of a solution: report_<dist>.json/.csv and
    /// hourly_violations.csv.
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
        /// solution.json written by `solve`.
        #[arg(long)]
        solution: PathBuf,
    },
    /// Deterministic vs chance-constrained comparison: comparison.json/.csv
    /// and hourly_violations.csv.
    Compare {
        #[command(flatten)]
        config: ConfigArgs,
        /// Deterministic solution.json.
        #[arg(long)]
        det: PathBuf,
        /// Chance-constrained solution.json.
        #[arg(long)]
        cc: PathBuf,
    },
}

fn defaults() -> RunConfig {
    RunConfig::default()
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Case file (JSON).
    #[arg(long)]
    pub case: PathBuf,
    #[arg(long, value_enum, default_value = "cc")]
    pub mode: Mode,
    #[arg(long, default_value_t = defaults().eps_gen)]
    pub eps_gen: f64,
    #[arg(long, default_value_t = defaults().eps_line)]
    pub eps_line: f64,
    #[arg(long, default_value_t = defaults().eps_line_cont)]
    pub eps_line_cont: f64,
    #[arg(long, default_value_t = defaults().benders_gap)]
    pub benders_gap: f64,
    #[arg(long, default_value_t = defaults().mip_gap)]
    pub mip_gap: f64,
    /// SOC feasibility tolerance (MW).
    #[arg(long, default_value_t = defaults().oa_tol)]
    pub oa_tol: f64,
    #[arg(long, default_value_t = defaults().max_inner)]
    pub max_inner: usize,
    #[arg(long, default_value_t = defaults().max_outer)]
    pub max_outer: usize,
    /// Nominal reserve requirement of the deterministic mode, as a fraction
    /// of load.
    #[arg(long, default_value_t = defaults().reserve_fraction)]
    pub reserve_fraction: f64,
    /// normal, laplace, logistic, weibull-<k>, or all. Repeat or separate
    /// with commas. Defaults to normal for `validate`, logistic for
    /// `compare`.
    #[arg(long, value_delimiter = ',')]
    pub dist: Vec<String>,
    #[arg(long, default_value_t = defaults().samples)]
    pub samples: usize,
    #[arg(long, default_value_t = defaults().seed)]
    pub seed: u64,
    #[arg(long, default_value_t = defaults().threads)]
    pub threads: usize,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

impl ConfigArgs {
    fn to_config(&self, default_dist: Distribution) -> Result<RunConfig, CliError> {
        let mut distributions = Vec::new();
        for d in &self.dist {
            if d == "all" {
                distributions.extend(Distribution::STUDY);
            } else {
                distributions
                    .push(Distribution::parse(d).map_err(|e| CliError::Input(e.to_string()))?);
            }
        }
        if distributions.is_empty() {
            distributions.push(default_dist);
        }
        let cfg = RunConfig {
            case: self.case.clone(),
            mode: self.mode,
            eps_gen: self.eps_gen,
            eps_line: self.eps_line,
            eps_line_cont: self.eps_line_cont,
            benders_gap: self.benders_gap,
            mip_gap: self.mip_gap,
            oa_tol: self.oa_tol,
            max_inner: self.max_inner,
            max_outer: self.max_outer,
            reserve_fraction: self.reserve_fraction,
            distributions,
            samples: self.samples,
            seed: self.seed,
            threads: self.threads,
            out: self.out.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Solve(#[from] BendersError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Input(_) => EXIT_INPUT,
            CliError::Solve(e) => match e {
                BendersError::Formulation(_) => EXIT_INPUT,
                BendersError::Infeasible => EXIT_INFEASIBLE,
                BendersError::Limit(_)
                | BendersError::OaRoundLimit { .. }
                | BendersError::InnerLimit { .. }
                | BendersError::OuterLimit { .. } => EXIT_LIMIT,
                _ => EXIT_FAILURE,
            },
        }
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit code. Messages go to stdout/stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(summary) => {
            println!("{summary}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Solve(args) => cmd_solve(&args.to_config(Distribution::Normal)?),
        Command::Validate { config, solution } => {
            cmd_validate(&config.to_config(Distribution::Normal)?, solution)
        }
        Command::Compare { config, det, cc } => {
            cmd_compare(&config.to_config(Distribution::Logistic)?, det, cc)
        }
    }
}

fn backend(cfg: &RunConfig) -> Result<HighsSolver, CliError> {
    match std::env::var(BACKEND_VAR) {
        Err(_) => Ok(HighsSolver::new(cfg.highs())),
        Ok(v) if v.is_empty() || v.eq_ignore_ascii_case("highs") => {
            Ok(HighsSolver::new(cfg.highs()))
        }
        Ok(v) => Err(CliError::Input(format!(
            "unknown backend {v:?} in {BACKEND_VAR}; available: highs"
        ))),
    }
}

fn out_dir(cfg: &RunConfig) -> Result<&Path, CliError> {
    fs::create_dir_all(&cfg.out).map_err(|source| IoError::Write {
        path: cfg.out.clone(),
        source,
    })?;
    Ok(&cfg.out)
}

fn instance(case: GridCase, cfg_chance: sccuc_core::ChanceSpec) -> Result<Instance, CliError> {
    Instance::new(case, cfg_chance).map_err(|e| CliError::Input(e.to_string()))
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<String, CliError> {
    let mut solver = backend(cfg)?;
    let case = load_case(&cfg.case)?;
    let fingerprint = case_fingerprint(&case);
    let inst = instance(case, cfg.chance())?;
    let dir = out_dir(cfg)?;
    let options = cfg.benders();

    let result = match cfg.mode {
        Mode::Cc => solve_sccuc(&mut solver, &inst, &options).map(|r| {
            let activated = r
                .state
                .activated
                .iter()
                .map(|k| ActivatedConstraint::from_key(&inst.case, k))
                .collect();
            (
                r.solution,
                r.state.lower_bound,
                Some(r.state.outer_iterations),
                Some(r.state.inner_iterations),
                activated,
                iteration_records(&r.state),
            )
        }),
        Mode::Deterministic => {
            solve_deterministic(&mut solver, &inst, cfg.reserve_fraction, &options).map(|r| {
                (
                    r.solution,
                    r.lower_bound,
                    None,
                    None,
                    Vec::new(),
                    Vec::new(),
                )
            })
        }
        Mode::ExtensiveOracle => solve_extensive(&mut solver, &inst, &options).map(|r| {
            (
                r.solution,
                r.lower_bound,
                None,
                None,
                Vec::new(),
                Vec::new(),
            )
        }),
    };
    let mut log = solver.log.lines.join("\n");
    log.push('\n');
    write_text(&dir.join("solver.log"), &log)?;
    let (solution, lower_bound, outer, inner, activated, records) = result?;

    let file = SolutionFile {
        mode: cfg.mode,
        case_name: inst.case.name.clone(),
        case_fingerprint: fingerprint,
        chance: cfg.chance(),
        benders_gap: cfg.benders_gap,
        mip_gap: cfg.mip_gap,
        reserve_fraction: (cfg.mode == Mode::Deterministic).then_some(cfg.reserve_fraction),
        lower_bound,
        outer_iterations: outer,
        inner_iterations: inner,
        activated,
        solution,
    };
    write_json_checked(&dir.join("solution.json"), &file, "a solution file")?;
    report::write_schedule_csv(&dir.join("schedule.csv"), &file.solution)?;
    report::write_costs_csv(&dir.join("costs.csv"), &file.solution)?;
    let log_path = dir.join("iterations.jsonl");
    report::write_jsonl(&log_path, &records)?;
    check_jsonl(&log_path, records.len())?;

    let mut summary = format!(
        "{}: objective {:.4} (gap {:.3e})",
        file.case_name, file.solution.objective, file.solution.gap
    );
    if let Some(o) = outer {
        summary.push_str(&format!(", {o} outer iterations"));
    }
    Ok(summary)
}

fn check_jsonl(path: &Path, expected: usize) -> Result<(), CliError> {
    let schema = || IoError::Schema {
        path: path.into(),
        what: "iteration records",
    };
    let text = fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.into(),
        source,
    })?;
    let mut n = 0;
    for line in text.lines() {
        serde_json::from_str::<LogRecord>(line).map_err(|_| schema())?;
        n += 1;
    }
    if n != expected {
        return Err(schema().into());
    }
    Ok(())
}

/// Reads a solution file and checks it belongs to `case`.
pub fn load_solution(path: &Path, case: &GridCase) -> Result<SolutionFile, CliError> {
    let file: SolutionFile = read_json(path)?;
    if file.case_fingerprint != case_fingerprint(case) || !file.solution.matches_case(case) {
        return Err(CliError::Input(format!(
            "{} was produced for case {:?}, not {:?}",
            path.display(),
            file.case_name,
            case.name
        )));
    }
    Ok(file)
}

fn samples_for(
    inst: &Instance,
    dist: Distribution,
    cfg: &RunConfig,
) -> Result<sccuc_core::validation::Samples, CliError> {
    let sampler = ScenarioSampler {
        distribution: dist,
        sigma: inst.wind.sigma.clone(),
        seed: cfg.seed,
    };
    sample_deviations(&sampler, cfg.samples).map_err(|e| CliError::Input(e.to_string()))
}

pub fn cmd_validate(cfg: &RunConfig, solution: &Path) -> Result<String, CliError> {
    let case = load_case(&cfg.case)?;
    let file = load_solution(solution, &case)?;
    let inst = instance(case, file.chance.clone())?;
    let dir = out_dir(cfg)?;
    let mut series = Vec::new();
    let mut summary = Vec::new();
    for &dist in &cfg.distributions {
        let name = dist.name();
        let samples = samples_for(&inst, dist, cfg)?;
        let report = evaluate_solution(&inst, &file.solution, &samples, &name, cfg.seed)
            .map_err(|e| CliError::Input(e.to_string()))?;
        write_json_checked::<ValidationReport>(
            &dir.join(format!("report_{name}.json")),
            &report,
            "a validation report",
        )?;
        report::write_validation_csv(&dir.join(format!("report_{name}.csv")), &report)?;
        summary.push(format!(
            "{name}: max generator {:.4}, line {:.4}, contingency line {:.4}, {} exceedances",
            report.max_generator,
            report.max_base_line,
            report.max_contingency_line,
            report.exceedances
        ));
        series.push((name, report.hourly_violations));
    }
    report::write_hourly_csv(&dir.join("hourly_violations.csv"), &series)?;
    Ok(summary.join("\n"))
}

pub fn cmd_compare(cfg: &RunConfig, det: &Path, cc: &Path) -> Result<String, CliError> {
    let [dist] = cfg.distributions[..] else {
        return Err(CliError::Input("compare takes exactly one --dist".into()));
    };
    let case = load_case(&cfg.case)?;
    let det = load_solution(det, &case)?;
    let cc = load_solution(cc, &case)?;
    let inst = instance(case, cc.chance.clone())?;
    let dir = out_dir(cfg)?;
    let name = dist.name();
    let samples = samples_for(&inst, dist, cfg)?;
    let report = compare_solutions(
        &inst,
        &det.solution,
        &cc.solution,
        &samples,
        &name,
        cfg.seed,
    )
    .map_err(|e| CliError::Input(e.to_string()))?;
    write_json_checked(&dir.join("comparison.json"), &report, "a comparison report")?;
    report::write_comparison_csv(&dir.join("comparison.csv"), &report)?;
    report::write_hourly_csv(
        &dir.join("hourly_violations.csv"),
        &[
            (
                "deterministic".into(),
                report.hourly_violations_deterministic.clone(),
            ),
            (
                "chance_constrained".into(),
                report.hourly_violations_chance_constrained.clone(),
            ),
        ],
    )?;
    let total = report.row("total_cost").expect("total row");
    let reserve = report.row("generation_reserve_mw").expect("reserve row");
    Ok(format!(
        "total cost {:.2} vs {:.2}, generation reserves {:.2} vs {:.2} MW (deterministic vs chance-constrained)",
        total.deterministic, total.chance_constrained, reserve.deterministic, reserve.chance_constrained
    ))
}
