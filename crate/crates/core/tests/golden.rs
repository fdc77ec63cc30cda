use std::path::PathBuf;

use pomdp_shield::benchmarks::explicit::{emit_explicit, parse_explicit};
use pomdp_shield::benchmarks::{cheese, obstacle, Instance};

fn check_golden(name: &str, text: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, text).unwrap();
    }
    let stored = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(stored == text, "{name} differs from the golden file");
}

fn round_trip(name: &str, inst: &Instance) {
    let text = emit_explicit(&inst.pomdp, &inst.spec, None);
    check_golden(name, &text);
    let (p, spec) = parse_explicit(&text).unwrap();
    assert_eq!(p, inst.pomdp);
    assert_eq!(spec, inst.spec);
}

#[test]
fn cheese_model_file() {
    round_trip("cheese.pomdp", &cheese::generate());
}

#[test]
fn obstacle_model_file() {
    round_trip("obstacle6.pomdp", &obstacle::generate(6));
}
