mod common;

use common::*;
use pomdp_shield::encoding::{encode_fixed, encode_oneshot, pin_initial, VariableBook};
use pomdp_shield::smt::{Session, Term};
use pomdp_shield::{BeliefSupport, Pomdp, Specification, StateSet};
use proptest::prelude::*;

fn oneshot_sat(p: &Pomdp, spec: &Specification, b: &StateSet) -> bool {
    let mut session = Session::from_env().unwrap();
    let book = VariableBook::oneshot(&mut session, p, p.num_states()).unwrap();
    session.assert_all(encode_oneshot(p, spec, b, &book)).unwrap();
    session.check().unwrap().is_sat()
}

/// Fixed layer, an empty store (every hand-over index bounded by 0) and `b` pinned.
fn pinned_sat(p: &Pomdp, spec: &Specification, b: &StateSet) -> bool {
    let mut session = Session::from_env().unwrap();
    let book = VariableBook::incremental(&mut session, p).unwrap();
    session.assert_all(encode_fixed(p, spec, &StateSet::empty(p.num_states()), &book)).unwrap();
    session.assert_all(book.choice.iter().map(|&v| Term::int_le(v, 0))).unwrap();
    session.assert_all(pin_initial(&book, b)).unwrap();
    session.check().unwrap().is_sat()
}

fn supports(p: &Pomdp) -> Vec<BeliefSupport> {
    let mut out = vec![BeliefSupport::new(p, p.initial().clone()).unwrap()];
    out.extend((0..p.num_observations()).filter_map(|z| BeliefSupport::full_observation(p, z)));
    out
}

#[test]
fn oneshot_and_pinned_incremental_agree() {
    let mut checks = 0;
    let mut sat = 0;
    for (seed, inst) in small_corpus(6) {
        for b in supports(&inst.pomdp) {
            let one = oneshot_sat(&inst.pomdp, &inst.spec, &b.members);
            assert_eq!(one, pinned_sat(&inst.pomdp, &inst.spec, &b.members), "seed {seed} support {:?}", b.members);
            checks += 1;
            sat += one as usize;
        }
    }
    assert!(sat > 0 && sat < checks, "{sat} of {checks} satisfiable");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn agreement_on_random_seeds(seed in 1000u64..100_000) {
        let inst = pomdp_shield::benchmarks::random::random_instance(seed, &Default::default());
        prop_assume!(inst.pomdp.num_states() <= 6);
        for b in supports(&inst.pomdp) {
            prop_assert_eq!(oneshot_sat(&inst.pomdp, &inst.spec, &b.members), pinned_sat(&inst.pomdp, &inst.spec, &b.members));
        }
    }
}
