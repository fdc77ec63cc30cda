//! Seeded random POMDPs for differential testing.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Instance;
use crate::bits::StateSet;
use crate::pomdp::{make_absorbing, PomdpBuilder, Specification, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomParams {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_observations: usize,
    pub max_branching: usize,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            max_states: 8,
            max_actions: 3,
            max_observations: 4,
            max_branching: 3,
        }
    }
}

/// Draws one well-formed instance; equal seeds give equal instances.
pub fn random_instance(seed: u64, params: &RandomParams) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=params.max_states.max(2));
    let actions = rng.gen_range(1..=params.max_actions.max(1));
    let budget = rng.gen_range(1..=params.max_observations.min(n).max(1));

    let mut reach = StateSet::empty(n);
    let mut avoid = StateSet::empty(n);
    for s in 0..n {
        let roll: f64 = rng.gen();
        if roll < 0.2 {
            reach.insert(s);
        } else if roll < 0.4 {
            avoid.insert(s);
        }
    }
    // REACH gets an observation of its own so reaching it is visible
    let others: Vec<usize> = (0..n).filter(|&s| !reach.contains(s)).collect();
    let split = !reach.is_empty() && !others.is_empty();
    let free = if split { budget.saturating_sub(1).clamp(1, others.len()) } else { budget };
    let classes: Vec<usize> = if split { others } else { (0..n).collect() };
    let mut labels: Vec<usize> = (0..classes.len()).map(|i| if i < free { i } else { rng.gen_range(0..free) }).collect();
    labels.shuffle(&mut rng);
    let mut obs = vec![free; n];
    for (s, z) in classes.into_iter().zip(labels) {
        obs[s] = z;
    }
    let observations = if split { free + 1 } else { free };
    let enabled: Vec<Vec<usize>> = (0..observations)
        .map(|_| {
            let mut set: Vec<usize> = (0..actions).filter(|_| rng.gen_bool(0.6)).collect();
            if set.is_empty() {
                set.push(rng.gen_range(0..actions));
            }
            set
        })
        .collect();

    let mut b = PomdpBuilder::new(
        n,
        (0..actions).map(|a| format!("a{a}")).collect(),
        (0..observations).map(|z| format!("z{z}")).collect(),
    );
    for s in 0..n {
        b.set_observation(s, obs[s]).expect("in range");
        for &a in &enabled[obs[s]] {
            let k = rng.gen_range(1..=params.max_branching.min(n));
            let mut succ: Vec<usize> = (0..n).collect();
            succ.shuffle(&mut rng);
            succ.truncate(k);
            b.add_transition(s, a, Transition::uniform(succ)).expect("fresh pair");
        }
    }

    let anchor = rng.gen_range(0..n);
    let mut initial: Vec<usize> = (0..n)
        .filter(|&s| obs[s] == obs[anchor] && (s == anchor || rng.gen_bool(0.5)))
        .collect();
    initial.sort_unstable();
    b.set_initial(initial);

    let spec = Specification::new(reach, avoid);
    let pomdp = make_absorbing(&b.build(), &spec);
    Instance { pomdp, spec, layout: None }
}

/// The first `count` instances of the default corpus (seeds `0..count`).
pub fn corpus(count: usize) -> Vec<Instance> {
    let params = RandomParams::default();
    (0..count as u64).map(|seed| random_instance(seed, &params)).collect()
}
