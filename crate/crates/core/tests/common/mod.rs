#![allow(dead_code)]

use std::path::PathBuf;

use chc_precond::chc::{parse_conj, parse_program, Program};
use chc_precond::linarith::Dnf;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

/// Every corpus program, sorted by file name.
pub fn corpus() -> Vec<(String, Program)> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "chc"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|f| {
            let text = std::fs::read_to_string(&f).unwrap();
            let name = f.file_name().unwrap().to_string_lossy().into_owned();
            let p = parse_program(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
            (name, p)
        })
        .collect()
}

pub fn load(name: &str) -> Program {
    parse_program(&std::fs::read_to_string(corpus_dir().join(name)).unwrap()).unwrap()
}

pub fn dnf(parts: &[&str]) -> Dnf {
    Dnf::new(parts.iter().map(|s| parse_conj(s).unwrap()))
}

/// `B ≠ |2A − 200|`, split on the sign of `2A − 200` and on the side of
/// the disequality.
pub fn running_expected() -> Dnf {
    dnf(&[
        "A = 100, B < 0",
        "A = 100, B > 0",
        "A =< 99, B < 200 - 2*A",
        "A =< 99, B > 200 - 2*A",
        "A >= 101, B < 2*A - 200",
        "A >= 101, B > 2*A - 200",
    ])
}
