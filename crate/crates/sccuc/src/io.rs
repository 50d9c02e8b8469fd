//! Case and artifact files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use sccuc_core::grid::CaseViolation;
use sccuc_core::{validate_case, GridCase};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: invalid case: {}", format_violations(.violations))]
    InvalidCase {
        path: PathBuf,
        violations: Vec<CaseViolation>,
    },
    #[error("{path}: written file does not read back as {what}")]
    Schema { path: PathBuf, what: &'static str },
}

fn format_violations(v: &[CaseViolation]) -> String {
    v.iter()
        .map(|c| format!("{}: {}", c.field, c.rule))
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.into(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.into(),
        source,
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact types serialize");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Write {
        path: path.into(),
        source,
    })
}

/// Writes `value` and checks that the file parses back to an equal value.
pub fn write_json_checked<T>(path: &Path, value: &T, what: &'static str) -> Result<(), IoError>
where
    T: Serialize + DeserializeOwned + PartialEq,
{
    write_text(path, &to_json(value))?;
    let back: T = read_json(path).map_err(|_| IoError::Schema {
        path: path.into(),
        what,
    })?;
    if &back != value {
        return Err(IoError::Schema {
            path: path.into(),
            what,
        });
    }
    Ok(())
}

/// Loads a case file and rejects it unless it passes `validate_case`.
pub fn load_case(path: &Path) -> Result<GridCase, IoError> {
    let case: GridCase = read_json(path)?;
    let violations = validate_case(&case);
    if !violations.is_empty() {
        return Err(IoError::InvalidCase {
            path: path.into(),
            violations,
        });
    }
    Ok(case)
}

/// SHA-256 of the compact JSON form of `case`, hex encoded.
pub fn case_fingerprint(case: &GridCase) -> String {
    let bytes = serde_json::to_vec(case).expect("cases serialize");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn case_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("case.json");
        let case = fixtures::oracle_six_bus();
        write_json_checked(&path, &case, "case").unwrap();
        let back = load_case(&path).unwrap();
        assert_eq!(back, case);
        assert_eq!(case_fingerprint(&back), case_fingerprint(&case));
    }

    #[test]
    fn invalid_case_lists_violations() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("case.json");
        let mut case = fixtures::oracle_ring3();
        case.lines[0].susceptance = 0.0;
        write_text(&path, &to_json(&case)).unwrap();
        match load_case(&path) {
            Err(IoError::InvalidCase { violations, .. }) => {
                assert_eq!(violations.len(), 1);
                assert_eq!(violations[0].field, "lines[1]");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = fixtures::oracle_ring3();
        let mut b = a.clone();
        b.lines[0].capacity += 1.0;
        assert_ne!(case_fingerprint(&a), case_fingerprint(&b));
        assert_eq!(case_fingerprint(&a).len(), 64);
    }
}
