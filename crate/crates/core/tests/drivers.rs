mod common;

use std::time::{Duration, Instant};

use common::*;
use pomdp_shield::analysis::{maximal_winning_region, OracleScope, DEFAULT_NODE_CAP};
use pomdp_shield::benchmarks::random::corpus;
use pomdp_shield::benchmarks::{cheese, obstacle};
use pomdp_shield::region::WinningRegionStore;
use pomdp_shield::synthesis::{run, run_observed, DriverConfig, Goal, Mode};
use pomdp_shield::{BeliefSupport, Pomdp, Specification, StateSet};

fn oracle(p: &Pomdp, spec: &Specification) -> WinningRegionStore {
    maximal_winning_region(p, spec, DEFAULT_NODE_CAP, OracleScope::Full).unwrap()
}

fn configs() -> Vec<DriverConfig> {
    let mut out: Vec<DriverConfig> = [Mode::NaiveExplicit, Mode::NaiveIncremental, Mode::Incremental]
        .into_iter()
        .map(|m| DriverConfig::new(m, Goal::Fixpoint))
        .collect();
    for memory in [1, 2] {
        out.push(DriverConfig { memory, ..DriverConfig::new(Mode::Oneshot, Goal::Initial) });
    }
    out.push(DriverConfig::new(Mode::Incremental, Goal::Initial));
    out
}

/// Runs `cfg` and checks every intermediate store.
fn checked_run(p: &Pomdp, spec: &Specification, cfg: &DriverConfig, max: &WinningRegionStore, label: &str) -> WinningRegionStore {
    let mut previous = WinningRegionStore::for_pomdp(p);
    let out = run_observed(p, spec, cfg, &mut |w, r| {
        assert!(w.is_deadlock_free(p), "{label} iteration {}: deadlock", r.iteration);
        assert!(w.is_productive(p, spec), "{label} iteration {}: not productive", r.iteration);
        assert!(w.is_subregion_of(max), "{label} iteration {}: unsound", r.iteration);
        assert!(previous.is_subregion_of(w), "{label} iteration {}: shrank", r.iteration);
        previous = w.clone();
    })
    .unwrap();
    assert!(!out.partial, "{label}");
    assert!(out.store.is_subregion_of(max), "{label}");
    out.store
}

#[test]
fn every_mode_is_sound_and_productive_on_the_corpus() {
    for (seed, inst) in small_corpus(8) {
        let max = oracle(&inst.pomdp, &inst.spec);
        for cfg in configs() {
            checked_run(&inst.pomdp, &inst.spec, &cfg, &max, &format!("seed {seed} {} m={}", cfg.mode, cfg.memory));
        }
    }
}

#[test]
fn incremental_fixpoint_is_the_maximal_region() {
    for (seed, inst) in small_corpus(8) {
        let max = oracle(&inst.pomdp, &inst.spec);
        let out = run(&inst.pomdp, &inst.spec, &DriverConfig::default()).unwrap();
        assert!(out.store.covers_same(&max), "seed {seed}");
    }
}

#[test]
fn modes_agree_on_small_models() {
    for (seed, inst) in small_corpus(6) {
        let stores: Vec<_> = [Mode::NaiveExplicit, Mode::NaiveIncremental, Mode::Incremental]
            .into_iter()
            .map(|m| run(&inst.pomdp, &inst.spec, &DriverConfig::new(m, Goal::Fixpoint)).unwrap().store)
            .collect();
        assert!(stores[0].covers_same(&stores[2]), "seed {seed}: naive-explicit");
        assert!(stores[1].covers_same(&stores[2]), "seed {seed}: naive-incremental");
    }
}

#[test]
fn frequent_refresh_gives_the_same_region() {
    for (seed, inst) in small_corpus(8).into_iter().take(60) {
        let base = run(&inst.pomdp, &inst.spec, &DriverConfig::default()).unwrap();
        let cfg = DriverConfig { refresh_period: 1, ..DriverConfig::default() };
        let refreshed = run(&inst.pomdp, &inst.spec, &cfg).unwrap();
        assert!(refreshed.store.covers_same(&base.store), "seed {seed}");
    }
}

#[test]
fn second_memory_cell_wins_more_instances() {
    // strict gains are rare, so this sweep is longer than the shared corpus
    let mut one = 0;
    let mut two = 0;
    for (seed, inst) in corpus(1300).into_iter().enumerate() {
        let w = |memory| {
            let cfg = DriverConfig { memory, ..DriverConfig::new(Mode::Oneshot, Goal::Initial) };
            run(&inst.pomdp, &inst.spec, &cfg).unwrap().initial_winning
        };
        let (w1, w2) = (w(1), w(2));
        assert!(!w1 || w2, "seed {seed}: memory lost a win");
        one += w1 as usize;
        two += w2 as usize;
    }
    assert!(two > one, "m=1 wins {one}, m=2 wins {two}");
}

#[test]
fn initial_goal_region_is_inside_the_fixpoint() {
    for (seed, inst) in small_corpus(8) {
        let fix = run(&inst.pomdp, &inst.spec, &DriverConfig::default()).unwrap();
        let init = run(&inst.pomdp, &inst.spec, &DriverConfig::new(Mode::Incremental, Goal::Initial)).unwrap();
        assert_eq!(init.initial_winning, fix.initial_winning, "seed {seed}");
        assert!(init.store.is_subregion_of(&fix.store), "seed {seed}");
    }
}

#[test]
fn no_reach_states_means_nothing_is_won() {
    let inst = cheese::generate();
    let spec = Specification::new(StateSet::empty(11), inst.spec.avoid.clone());
    for cfg in configs() {
        let out = run(&inst.pomdp, &spec, &cfg).unwrap();
        assert!(out.store.is_empty(), "{}", cfg.mode);
        assert!(!out.initial_winning);
    }
}

#[test]
fn cheese_in_every_mode() {
    let inst = cheese::generate();
    let max = oracle(&inst.pomdp, &inst.spec);
    let init = BeliefSupport::new(&inst.pomdp, inst.pomdp.initial().clone()).unwrap();
    for cfg in configs() {
        let store = checked_run(&inst.pomdp, &inst.spec, &cfg, &max, &cfg.mode.to_string());
        let expect = cfg.mode != Mode::Oneshot || cfg.memory > 1;
        assert_eq!(store.is_winning(&init), expect, "{} m={}", cfg.mode, cfg.memory);
    }
}

#[test]
fn obstacle_fixpoint_is_productive_every_iteration() {
    let inst = obstacle::generate(6);
    let max = maximal_winning_region(&inst.pomdp, &inst.spec, DEFAULT_NODE_CAP, OracleScope::FromInitial).unwrap();
    let start = Instant::now();
    let mut previous = WinningRegionStore::for_pomdp(&inst.pomdp);
    let out = run_observed(&inst.pomdp, &inst.spec, &DriverConfig::default(), &mut |w, _| {
        assert!(w.is_deadlock_free(&inst.pomdp) && w.is_productive(&inst.pomdp, &inst.spec));
        assert!(previous.is_subregion_of(w));
        previous = w.clone();
    })
    .unwrap();
    assert!(!out.partial);
    assert!(out.initial_winning);
    assert!(start.elapsed() < Duration::from_secs(60));
    let init = BeliefSupport::new(&inst.pomdp, inst.pomdp.initial().clone()).unwrap();
    assert!(max.is_winning(&init));
}

#[test]
fn exhausted_budget_is_partial_and_sound() {
    let inst = obstacle::generate(6);
    let cfg = DriverConfig { max_iterations: Some(2), ..DriverConfig::default() };
    let out = run(&inst.pomdp, &inst.spec, &cfg).unwrap();
    assert!(out.partial);
    assert_eq!(out.stats.iterations, 2);
    assert!(out.store.is_productive(&inst.pomdp, &inst.spec));
    let cfg = DriverConfig { budget: Some(Duration::ZERO), ..DriverConfig::default() };
    let out = run(&inst.pomdp, &inst.spec, &cfg).unwrap();
    assert!(out.partial);
}
