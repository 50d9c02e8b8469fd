//! Run configuration shared by the command-line subcommands.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use sccuc_core::benders::BendersOptions;
use sccuc_core::oa::OaOptions;
use sccuc_core::validation::Distribution;
use sccuc_core::ChanceSpec;

use crate::highs::HighsOptions;

/// Which model a solve runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Chance-constrained SCCUC by Benders decomposition.
    Cc,
    /// Deterministic counterpart with the nominal reserve rule.
    Deterministic,
    /// Chance-constrained extensive form solved in one piece.
    ExtensiveOracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub case: PathBuf,
    pub mode: Mode,
    pub eps_gen: f64,
    pub eps_line: f64,
    pub eps_line_cont: f64,
    pub benders_gap: f64,
    pub mip_gap: f64,
    pub oa_tol: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    pub reserve_fraction: f64,
    pub distributions: Vec<Distribution>,
    pub samples: usize,
    pub seed: u64,
    pub threads: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let b = BendersOptions::default();
        let c = ChanceSpec::default();
        Self {
            case: PathBuf::new(),
            mode: Mode::Cc,
            eps_gen: c.eps_gen,
            eps_line: c.eps_line,
            eps_line_cont: c.eps_line_cont,
            benders_gap: b.gap,
            mip_gap: b.mip_gap,
            oa_tol: b.oa.tolerance,
            max_inner: b.max_inner,
            max_outer: b.max_outer,
            reserve_fraction: 0.005,
            distributions: vec![Distribution::Normal],
            samples: 1000,
            seed: 1,
            threads: 1,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, eps) in [
            ("eps-gen", self.eps_gen),
            ("eps-line", self.eps_line),
            ("eps-line-cont", self.eps_line_cont),
        ] {
            if !(eps > 0.0 && eps <= 0.5) {
                return Err(ConfigError(format!(
                    "{name} must lie in (0, 0.5], got {eps}"
                )));
            }
        }
        for (name, v) in [
            ("benders-gap", self.benders_gap),
            ("mip-gap", self.mip_gap),
            ("oa-tol", self.oa_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.reserve_fraction >= 0.0 && self.reserve_fraction.is_finite()) {
            return Err(ConfigError(format!(
                "reserve-fraction must be non-negative, got {}",
                self.reserve_fraction
            )));
        }
        if self.max_inner == 0 || self.max_outer == 0 {
            return Err(ConfigError("iteration caps must be at least 1".into()));
        }
        if self.samples == 0 {
            return Err(ConfigError("samples must be at least 1".into()));
        }
        if self.threads == 0 {
            return Err(ConfigError("threads must be at least 1".into()));
        }
        Ok(())
    }

    pub fn chance(&self) -> ChanceSpec {
        ChanceSpec::uniform(self.eps_gen, self.eps_line, self.eps_line_cont)
    }

    pub fn benders(&self) -> BendersOptions {
        BendersOptions {
            gap: self.benders_gap,
            mip_gap: self.mip_gap,
            oa: OaOptions {
                tolerance: self.oa_tol,
                ..OaOptions::default()
            },
            max_inner: self.max_inner,
            max_outer: self.max_outer,
            ..BendersOptions::default()
        }
    }

    pub fn highs(&self) -> HighsOptions {
        HighsOptions {
            threads: Some(self.threads),
            seed: self.seed,
            ..HighsOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.chance(), ChanceSpec::default());
        assert_eq!(c.benders(), BendersOptions::default());
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            RunConfig {
                eps_line: 0.0,
                ..RunConfig::default()
            },
            RunConfig {
                eps_gen: 0.7,
                ..RunConfig::default()
            },
            RunConfig {
                mip_gap: -1.0,
                ..RunConfig::default()
            },
            RunConfig {
                oa_tol: 0.0,
                ..RunConfig::default()
            },
            RunConfig {
                samples: 0,
                ..RunConfig::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
