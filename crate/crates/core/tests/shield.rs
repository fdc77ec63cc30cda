use pomdp_shield::benchmarks::cheese::{self, cell};
use pomdp_shield::benchmarks::{obstacle, Instance};
use pomdp_shield::sim::{evaluate, simulate, Agent, RunOutcome, SimConfig, Summary, Trace};
use pomdp_shield::synthesis::{run, DriverConfig};
use pomdp_shield::{BeliefSupport, Shield};
use proptest::prelude::*;

fn shielded(inst: &Instance, runs: u64) -> (Vec<Trace>, Summary) {
    let out = run(&inst.pomdp, &inst.spec, &DriverConfig::default()).unwrap();
    let shield = Shield::new(&out.store, &inst.pomdp);
    let traces: Vec<Trace> = (0..runs)
        .map(|seed| simulate(&inst.pomdp, &inst.spec, Some(&shield), &Agent::UniformRandom, seed, &SimConfig::default()).unwrap())
        .collect();
    let summary = evaluate(&traces);
    (traces, summary)
}

#[test]
fn shielded_cheese_always_reaches() {
    let (_, s) = shielded(&cheese::generate(), 1000);
    assert_eq!((s.avoid_violations, s.reached), (0, 1000), "{}", s.table());
}

#[test]
fn shielded_obstacle_always_reaches() {
    let (traces, s) = shielded(&obstacle::generate(6), 1000);
    assert_eq!((s.avoid_violations, s.reached), (0, 1000), "{}", s.table());
    assert!(traces.iter().all(|t| t.steps.iter().all(|st| !st.offered.is_empty())));
}

#[test]
fn unshielded_cheese_from_the_shaft_can_fall() {
    let inst = cheese::generate_with_initial(&[cell(6)]);
    let traces: Vec<Trace> = (0..200)
        .map(|seed| simulate(&inst.pomdp, &inst.spec, None, &Agent::UniformRandom, seed, &SimConfig::default()).unwrap())
        .collect();
    assert!(traces.iter().any(|t| t.outcome == RunOutcome::AvoidedViolation));
}

#[test]
fn traces_are_reproducible() {
    let (a, _) = shielded(&cheese::generate(), 20);
    let (b, _) = shielded(&cheese::generate(), 20);
    let text = |ts: &[Trace]| ts.iter().map(Trace::to_json).collect::<Vec<_>>().join("\n");
    assert_eq!(text(&a), text(&b));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tracked_support_follows_the_state(seed in any::<u64>()) {
        let inst = obstacle::generate(6);
        let cfg = SimConfig { max_steps: 200, ..SimConfig::default() };
        let t = simulate(&inst.pomdp, &inst.spec, None, &Agent::UniformRandom, seed, &cfg).unwrap();
        for w in t.steps.windows(2) {
            prop_assert!(w[0].support.contains(&w[0].state));
            let b = BeliefSupport::from_states(&inst.pomdp, &w[0].support).unwrap();
            let next = inst.pomdp.support_update(&b, w[0].action).unwrap();
            prop_assert!(next.iter().any(|n| n.members.iter().eq(w[1].support.iter().copied())));
        }
        prop_assert!(t.final_support.contains(&t.final_state));
    }
}
