use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pomdp-shield"))
        .current_dir(dir)
        .args(args)
        .env_remove("POMDP_SHIELD_SMT_CMD")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn with_cheese() -> TempDir {
    let dir = TempDir::new().unwrap();
    let o = bin(dir.path(), &["gen", "--family", "cheese", "-o", "cheese.pomdp"]);
    assert!(o.status.success(), "{o:?}");
    dir
}

#[test]
fn gen_then_solve_writes_a_region() {
    let dir = with_cheese();
    let o = bin(dir.path(), &["solve", "cheese.pomdp", "--mode", "incremental", "--goal", "fixpoint", "-o", "cheese.win"]);
    assert_eq!(o.status.code(), Some(0));
    let region = std::fs::read_to_string(dir.path().join("cheese.win")).unwrap();
    assert!(region.lines().all(|l| l.starts_with("win ")));
    assert!(!region.is_empty());
    let check = bin(dir.path(), &["check-region", "cheese.pomdp", "cheese.win"]);
    assert_eq!(check.status.code(), Some(0));
    assert!(stdout(&check).contains("maximal: true"));
}

#[test]
fn initial_goal_reports_winning() {
    let dir = with_cheese();
    let o = bin(dir.path(), &["solve", "cheese.pomdp", "--goal", "initial"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "winning");
}

#[test]
fn memoryless_oneshot_is_not_winning_from_the_shaft() {
    let dir = with_cheese();
    let o = bin(dir.path(), &["solve", "--mode", "oneshot", "-k", "11", "-m", "1", "cheese.pomdp"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("not winning"));
}

#[test]
fn exit_codes_for_usage_and_budget() {
    let dir = with_cheese();
    assert_eq!(bin(dir.path(), &["solve", "missing.pomdp"]).status.code(), Some(2));
    assert_eq!(bin(dir.path(), &["gen", "--family", "obstacle"]).status.code(), Some(2));
    assert_eq!(bin(dir.path(), &["solve", "cheese.pomdp", "--initial", "99"]).status.code(), Some(2));
    assert_eq!(bin(dir.path(), &["no-such-command"]).status.code(), Some(2));
    let o = bin(dir.path(), &["solve", "cheese.pomdp", "--budget", "0"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn shielded_simulation_is_safe() {
    let dir = with_cheese();
    let o = bin(dir.path(), &["shield-simulate", "cheese.pomdp", "--runs", "100", "--jobs", "2", "--traces", "t.jsonl"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("avoid violations              0"));
    let traces = std::fs::read_to_string(dir.path().join("t.jsonl")).unwrap();
    assert_eq!(traces.lines().count(), 100);
    let o = bin(dir.path(), &["shield-simulate", "cheese.pomdp", "--runs", "1", "--dump", "--family", "cheese"]);
    assert!(stdout(&o).contains("end: Reached"));
}

#[test]
fn outputs_are_deterministic() {
    let dir = with_cheese();
    let runs: [&[&str]; 4] = [
        &["gen", "--family", "obstacle", "--grid", "6", "-o", "OUT"],
        &["solve", "cheese.pomdp", "-o", "OUT"],
        &["export-jani", "cheese.pomdp", "-o", "OUT"],
        &["shield-simulate", "cheese.pomdp", "--runs", "50", "--jobs", "3", "--seed", "9", "--traces", "OUT"],
    ];
    for args in runs {
        let mut contents = Vec::new();
        for name in ["a.out", "b.out"] {
            let argv: Vec<&str> = args.iter().map(|a| if *a == "OUT" { name } else { a }).collect();
            let o = bin(dir.path(), &argv);
            assert!(o.status.success(), "{argv:?}: {o:?}");
            contents.push(std::fs::read(dir.path().join(name)).unwrap());
        }
        assert_eq!(contents[0], contents[1], "{args:?}");
    }
}

#[test]
fn oracle_and_random_models() {
    let dir = TempDir::new().unwrap();
    assert!(bin(dir.path(), &["gen", "--family", "random", "--seed", "4", "-o", "r.pomdp"]).status.success());
    let oracle = bin(dir.path(), &["oracle", "r.pomdp", "-o", "max.win"]);
    assert_eq!(oracle.status.code(), Some(0));
    let solve = bin(dir.path(), &["solve", "r.pomdp", "-o", "fix.win"]);
    assert!(solve.status.success());
    let read = |n: &str| std::fs::read_to_string(dir.path().join(n)).unwrap();
    assert_eq!(read("max.win"), read("fix.win"));
    let capped = bin(dir.path(), &["oracle", "r.pomdp", "--cap", "0"]);
    assert_eq!(capped.status.code(), Some(3));
}
