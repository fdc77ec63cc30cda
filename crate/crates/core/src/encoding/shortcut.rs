//! Explicit shortcut actions that jump to a goal or a failure sink.

use crate::bits::StateSet;
use crate::pomdp::{Pomdp, PomdpBuilder, Specification, Transition};

/// A POMDP extended with a goal sink, a failure sink and shortcut actions.
#[derive(Debug, Clone)]
pub struct ShortcutPomdp {
    pub pomdp: Pomdp,
    pub spec: Specification,
    pub goal: usize,
    pub failure: usize,
    /// Size of the model the sinks were added to.
    pub original_states: usize,
    pub original_observations: usize,
    pub shortcut_actions: Vec<usize>,
}

fn rebuild(
    pomdp: &Pomdp,
    states: usize,
    actions: Vec<String>,
    observations: Vec<String>,
    mut extra: impl FnMut(&mut PomdpBuilder, usize),
) -> Pomdp {
    let mut b = PomdpBuilder::new(states, actions, observations);
    for s in 0..pomdp.num_states() {
        b.set_observation(s, pomdp.obs(s)).expect("in range");
        for &a in pomdp.enabled(s) {
            b.add_transition(s, a, pomdp.transition(s, a).expect("enabled").clone()).expect("fresh");
        }
    }
    for s in 0..states {
        extra(&mut b, s);
    }
    b.set_initial(pomdp.initial().iter());
    b.build()
}

impl ShortcutPomdp {
    /// Adds the two sinks; no shortcut yet.
    pub fn new(pomdp: &Pomdp, spec: &Specification) -> Self {
        let n = pomdp.num_states();
        let m = pomdp.num_observations();
        let (goal, failure) = (n, n + 1);
        let mut observations = pomdp.observation_names().to_vec();
        observations.push("goal_sink".into());
        observations.push("failure_sink".into());
        let actions = pomdp.num_actions();
        let extended = rebuild(pomdp, n + 2, pomdp.action_names().to_vec(), observations, |b, s| {
            if s >= n {
                b.set_observation(s, m + (s - n)).expect("in range");
                for a in 0..actions {
                    b.add_transition(s, a, Transition::dirac(s)).expect("fresh");
                }
            }
        });
        let mut reach = spec.reach.resized(n + 2);
        reach.insert(goal);
        let mut avoid = spec.avoid.resized(n + 2);
        avoid.insert(failure);
        ShortcutPomdp {
            pomdp: extended,
            spec: Specification::new(reach, avoid),
            goal,
            failure,
            original_states: n,
            original_observations: m,
            shortcut_actions: Vec::new(),
        }
    }

    /// Adds an action leading to the goal sink from `winning` and to the
    /// failure sink from everywhere else; spec states loop.
    pub fn with_shortcut(&self, winning: &StateSet) -> Self {
        let p = &self.pomdp;
        let n = p.num_states();
        let fresh = p.num_actions();
        let mut actions = p.action_names().to_vec();
        actions.push(format!("shortcut{}", self.shortcut_actions.len()));
        let spec = &self.spec;
        let pomdp = rebuild(p, n, actions, p.observation_names().to_vec(), |b, s| {
            let target = if spec.reach.contains(s) || spec.avoid.contains(s) {
                s
            } else if winning.contains(s) {
                self.goal
            } else {
                self.failure
            };
            b.add_transition(s, fresh, Transition::dirac(target)).expect("fresh action");
        });
        let mut shortcut_actions = self.shortcut_actions.clone();
        shortcut_actions.push(fresh);
        ShortcutPomdp {
            pomdp,
            shortcut_actions,
            ..self.clone()
        }
    }
}

/// One shortcut step: `winning` is the set of states from which the policy
/// behind the shortcut wins. Sinks are added on the first call.
pub fn add_shortcut(base: &ShortcutPomdp, winning: &StateSet) -> ShortcutPomdp {
    base.with_shortcut(winning)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{maximal_winning_region, OracleScope, DEFAULT_NODE_CAP};
    use crate::benchmarks::cheese;
    use crate::pomdp::{validate, BeliefSupport};

    fn restricted_region(sp: &ShortcutPomdp) -> std::collections::BTreeSet<(usize, StateSet)> {
        let w = maximal_winning_region(&sp.pomdp, &sp.spec, DEFAULT_NODE_CAP, OracleScope::Full).unwrap();
        w.maximal_supports()
            .into_iter()
            .filter(|(z, _)| *z < sp.original_observations)
            .map(|(z, s)| (z, s.resized(sp.original_states)))
            .collect()
    }

    #[test]
    fn sinks_and_empty_shortcut_keep_the_region() {
        let inst = cheese::generate();
        let base = ShortcutPomdp::new(&inst.pomdp, &inst.spec);
        assert!(validate(&base.pomdp, &base.spec).is_empty());
        let plain = maximal_winning_region(&inst.pomdp, &inst.spec, DEFAULT_NODE_CAP, OracleScope::Full).unwrap();
        let empty = add_shortcut(&base, &StateSet::empty(13));
        assert!(validate(&empty.pomdp, &empty.spec).is_empty());
        assert_eq!(restricted_region(&empty), plain.maximal_supports());
    }

    #[test]
    fn universal_shortcut_wins_everywhere() {
        let inst = cheese::generate();
        let all = add_shortcut(&ShortcutPomdp::new(&inst.pomdp, &inst.spec), &StateSet::full(13));
        let region = maximal_winning_region(&all.pomdp, &all.spec, DEFAULT_NODE_CAP, OracleScope::Full).unwrap();
        for z in 0..inst.pomdp.num_observations() {
            let full = BeliefSupport::full_observation(&all.pomdp, z).unwrap();
            let wins = region.is_winning(&full);
            // supports containing a trap are lost whatever the policy
            assert_eq!(wins, full.members.is_disjoint(&inst.spec.avoid.resized(13)), "obs {z}");
        }
    }
}
