use std::path::PathBuf;

use sccuc::fixtures;
use sccuc::io::{load_case, to_json};
use sccuc_core::GridCase;

fn shipped() -> Vec<GridCase> {
    let mut all = fixtures::oracle_cases();
    all.extend([
        fixtures::single_line_contingency(),
        fixtures::binding_base_line(),
        fixtures::six_bus_day(),
        fixtures::stressed_six_bus(),
        fixtures::overloaded(),
    ]);
    all
}

fn path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("cases")
        .join(format!("{name}.json"))
}

#[test]
fn case_files_match_the_fixtures() {
    for case in shipped() {
        let p = path(&case.name);
        let loaded = load_case(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(loaded, case, "{} is stale", p.display());
        assert_eq!(std::fs::read_to_string(&p).unwrap(), to_json(&case));
    }
}

#[test]
fn every_case_file_is_a_fixture() {
    let names: Vec<String> = shipped().into_iter().map(|c| c.name).collect();
    for entry in std::fs::read_dir(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("cases")).unwrap()
    {
        let stem = entry
            .unwrap()
            .path()
            .file_stem()
            .unwrap()
            .to_string_lossy()
            .into_owned();
        assert!(names.contains(&stem), "{stem} has no fixture");
    }
}
