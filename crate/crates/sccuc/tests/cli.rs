use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sccuc::report::SolutionFile;

fn case(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("cases")
        .join(format!("{name}.json"))
}

fn sccuc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sccuc"))
        .args(args)
        .env_remove("SCCUC_BACKEND")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn solve(case_name: &str, mode: &str, out: &Path) -> Output {
    let c = case(case_name);
    sccuc(&[
        "solve",
        "--case",
        s(&c),
        "--mode",
        mode,
        "--mip-gap",
        "1e-9",
        "--benders-gap",
        "1e-6",
        "--out",
        s(out),
    ])
}

fn read_solution(dir: &Path) -> SolutionFile {
    serde_json::from_str(&fs::read_to_string(dir.join("solution.json")).unwrap()).unwrap()
}

#[test]
fn solve_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = solve("oracle-ring4", "cc", dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "solution.json",
        "schedule.csv",
        "costs.csv",
        "iterations.jsonl",
        "solver.log",
    ] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let sol = read_solution(dir.path());
    assert_eq!(sol.case_name, "oracle-ring4");
    assert!(sol.outer_iterations.is_some());
    let schedule = fs::read_to_string(dir.path().join("schedule.csv")).unwrap();
    assert_eq!(schedule.lines().count(), 1 + 3 * 3);
}

#[test]
fn extensive_oracle_agrees_with_decomposition() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&solve("oracle-five-bus", "cc", a.path())), 0);
    assert_eq!(
        code(&solve("oracle-five-bus", "extensive-oracle", b.path())),
        0
    );
    let (x, y) = (
        read_solution(a.path()).solution.objective,
        read_solution(b.path()).solution.objective,
    );
    assert!((x - y).abs() <= 1e-4 * y.abs());
}

#[test]
fn infeasible_case_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = solve("overloaded", "cc", dir.path());
    assert_eq!(code(&out), 2);
    assert!(dir.path().join("solver.log").is_file());
    assert!(!dir.path().join("solution.json").exists());
}

#[test]
fn iteration_cap_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let c = case("single-line-contingency");
    let out = sccuc(&[
        "solve",
        "--case",
        s(&c),
        "--max-outer",
        "1",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn validate_writes_one_report_per_distribution() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&solve("oracle-ring3", "cc", dir.path())), 0);
    let c = case("oracle-ring3");
    let sol = dir.path().join("solution.json");
    let out = sccuc(&[
        "validate",
        "--case",
        s(&c),
        "--solution",
        s(&sol),
        "--dist",
        "logistic,laplace",
        "--dist",
        "weibull-2",
        "--dist",
        "weibull-1.2",
        "--samples",
        "200",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let reports: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("report_") && n.ends_with(".json"))
        .collect();
    assert_eq!(reports.len(), 4, "{reports:?}");
    let hourly = fs::read_to_string(dir.path().join("hourly_violations.csv")).unwrap();
    assert_eq!(hourly.lines().next().unwrap().split(',').count(), 5);
}

#[test]
fn compare_writes_both_series() {
    let det = tempfile::tempdir().unwrap();
    let cc = tempfile::tempdir().unwrap();
    assert_eq!(code(&solve("oracle-ring3", "deterministic", det.path())), 0);
    assert_eq!(code(&solve("oracle-ring3", "cc", cc.path())), 0);
    let c = case("oracle-ring3");
    let (d, k) = (
        det.path().join("solution.json"),
        cc.path().join("solution.json"),
    );
    let out = sccuc(&[
        "compare",
        "--case",
        s(&c),
        "--det",
        s(&d),
        "--cc",
        s(&k),
        "--samples",
        "100",
        "--out",
        s(cc.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let header = fs::read_to_string(cc.path().join("hourly_violations.csv")).unwrap();
    assert!(header.starts_with("hour,deterministic,chance_constrained"));
    assert!(cc.path().join("comparison.csv").is_file());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        assert_eq!(code(&solve("oracle-six-bus", "cc", dir)), 0);
        let c = case("oracle-six-bus");
        let sol = dir.join("solution.json");
        let out = sccuc(&[
            "validate",
            "--case",
            s(&c),
            "--solution",
            s(&sol),
            "--dist",
            "all",
            "--samples",
            "300",
            "--seed",
            "9",
            "--out",
            s(dir),
        ]);
        assert_eq!(code(&out), 0);
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 10);
    for n in names {
        assert_eq!(
            fs::read(a.path().join(&n)).unwrap(),
            fs::read(b.path().join(&n)).unwrap(),
            "{n:?} differs"
        );
    }
}

#[test]
fn bad_inputs_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(
        code(&sccuc(&[
            "solve",
            "--case",
            s(&missing),
            "--out",
            s(dir.path())
        ])),
        1
    );

    let malformed = dir.path().join("bad.json");
    fs::write(&malformed, "{\"name\": 3}").unwrap();
    assert_eq!(
        code(&sccuc(&[
            "solve",
            "--case",
            s(&malformed),
            "--out",
            s(dir.path())
        ])),
        1
    );

    let mut broken = sccuc::fixtures::oracle_ring3();
    broken.generators[0].bus = 42;
    fs::write(&malformed, sccuc::io::to_json(&broken)).unwrap();
    assert_eq!(
        code(&sccuc(&[
            "solve",
            "--case",
            s(&malformed),
            "--out",
            s(dir.path())
        ])),
        1
    );

    let c = case("oracle-ring3");
    assert_eq!(
        code(&sccuc(&[
            "solve",
            "--case",
            s(&c),
            "--eps-line",
            "0.9",
            "--out",
            s(dir.path())
        ])),
        1
    );
    assert_eq!(code(&sccuc(&["solve", "--case", s(&c), "--bogus"])), 1);
    assert_eq!(code(&sccuc(&["--help"])), 0);

    assert_eq!(code(&solve("oracle-ring4", "cc", dir.path())), 0);
    let sol = dir.path().join("solution.json");
    let out = sccuc(&[
        "validate",
        "--case",
        s(&c),
        "--solution",
        s(&sol),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 1);
    let out = sccuc(&[
        "validate",
        "--case",
        s(&case("oracle-ring4")),
        "--solution",
        s(&missing),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 1);
    let out = sccuc(&[
        "validate",
        "--case",
        s(&case("oracle-ring4")),
        "--solution",
        s(&sol),
        "--dist",
        "cauchy",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn unknown_backend_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let c = case("oracle-ring3");
    let out = Command::new(env!("CARGO_BIN_EXE_sccuc"))
        .args(["solve", "--case", s(&c), "--out", s(dir.path())])
        .env("SCCUC_BACKEND", "gurobi")
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("SCCUC_BACKEND"));
}
