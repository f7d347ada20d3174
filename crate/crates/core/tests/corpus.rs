//! Every corpus specification is well-formed; every negative one is not.

use std::fs;
use std::path::{Path, PathBuf};

use bossl::logic::wf;
use bossl::parser::parse_spec;

fn dir(sub: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(sub)
}

fn specs(d: &Path) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = fs::read_dir(d)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "bossl"))
        .collect();
    out.sort();
    out
}

#[test]
fn corpus_specs_are_well_formed() {
    let files = specs(&dir(""));
    assert!(files.len() >= 10);
    for f in files {
        let spec = parse_spec(&fs::read_to_string(&f).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", f.display()));
        let ctx = spec.context();
        for p in &spec.predicates {
            assert!(wf::check_predicate(p).is_ok(), "{}", f.display());
        }
        assert!(wf::check_function(&spec.goal, &ctx).is_ok(), "{}", f.display());
    }
}

#[test]
fn negative_specs_are_rejected() {
    let files = specs(&dir("negative"));
    assert!(!files.is_empty());
    for f in files {
        let text = fs::read_to_string(&f).unwrap();
        assert!(parse_spec(&text).is_err(), "{} was accepted", f.display());
    }
}
