//! POMDPs, reach-avoid specifications and belief supports.
//!
//! States, actions and observations are dense indices; names live in side
//! tables. Transition weights are exact rationals, but only their supports
//! matter for synthesis. The weights are used by the simulator.

use std::fmt;

use num_rational::Ratio;
use thiserror::Error;

use crate::bits::StateSet;

/// Exact positive transition weight.
pub type Prob = Ratio<u64>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("action {action} is not enabled in observation {observation}")]
    ActionNotEnabled { action: usize, observation: usize },
    #[error("duplicate transition for state {state} and action {action}")]
    DuplicateTransition { state: usize, action: usize },
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("belief support must be nonempty and observation-uniform")]
    NotObservationUniform,
    #[error("model has {0} state(s), the limit is {1}")]
    TooLarge(usize, usize),
}

/// Distribution support of one `(state, action)` pair together with its weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    succ: Vec<usize>,
    weights: Vec<Prob>,
}

impl Transition {
    /// Builds a transition from `(successor, weight)` pairs; merges repeated successors.
    pub fn new(mut pairs: Vec<(usize, Prob)>) -> Self {
        pairs.sort_by_key(|&(s, _)| s);
        let mut succ: Vec<usize> = Vec::with_capacity(pairs.len());
        let mut weights: Vec<Prob> = Vec::with_capacity(pairs.len());
        for (s, w) in pairs {
            if succ.last() == Some(&s) {
                let last = weights.last_mut().expect("parallel vectors");
                *last += w;
            } else {
                succ.push(s);
                weights.push(w);
            }
        }
        Transition { succ, weights }
    }

    pub fn dirac(target: usize) -> Self {
        Transition {
            succ: vec![target],
            weights: vec![Prob::from_integer(1)],
        }
    }

    /// Uniform distribution over the given successors.
    pub fn uniform<I: IntoIterator<Item = usize>>(targets: I) -> Self {
        let mut t: Vec<usize> = targets.into_iter().collect();
        t.sort_unstable();
        t.dedup();
        let n = t.len() as u64;
        Transition::new(t.into_iter().map(|s| (s, Prob::new(1, n))).collect())
    }

    pub fn successors(&self) -> &[usize] {
        &self.succ
    }

    pub fn weights(&self) -> &[Prob] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Prob)> + '_ {
        self.succ.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Incrementally assembles a [`Pomdp`]. Consistency is checked by [`validate`].
#[derive(Debug, Clone)]
pub struct PomdpBuilder {
    state_count: usize,
    action_names: Vec<String>,
    observation_names: Vec<String>,
    obs: Vec<usize>,
    transitions: Vec<Vec<Option<Transition>>>,
    initial: Vec<usize>,
}

impl PomdpBuilder {
    pub fn new(state_count: usize, action_names: Vec<String>, observation_names: Vec<String>) -> Self {
        let actions = action_names.len();
        PomdpBuilder {
            state_count,
            action_names,
            observation_names,
            obs: vec![0; state_count],
            transitions: vec![vec![None; actions]; state_count],
            initial: Vec::new(),
        }
    }

    pub fn set_observation(&mut self, state: usize, observation: usize) -> Result<(), ModelError> {
        if state >= self.state_count || observation >= self.observation_names.len() {
            return Err(ModelError::OutOfRange(format!("obs {state} {observation}")));
        }
        self.obs[state] = observation;
        Ok(())
    }

    pub fn add_transition(&mut self, state: usize, action: usize, t: Transition) -> Result<(), ModelError> {
        if state >= self.state_count || action >= self.action_names.len() {
            return Err(ModelError::OutOfRange(format!("tr {state} {action}")));
        }
        if let Some(&bad) = t.succ.iter().find(|&&s| s >= self.state_count) {
            return Err(ModelError::OutOfRange(format!("successor {bad}")));
        }
        let slot = &mut self.transitions[state][action];
        if slot.is_some() {
            return Err(ModelError::DuplicateTransition { state, action });
        }
        *slot = Some(t);
        Ok(())
    }

    pub fn set_initial<I: IntoIterator<Item = usize>>(&mut self, states: I) {
        self.initial = states.into_iter().collect();
    }

    pub fn build(self) -> Pomdp {
        Pomdp::from_parts(
            self.action_names,
            self.observation_names,
            self.obs,
            self.transitions,
            StateSet::from_iter_with_width(self.state_count, self.initial),
        )
    }
}

/// A finite POMDP with deterministic observation labelling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pomdp {
    action_names: Vec<String>,
    observation_names: Vec<String>,
    obs: Vec<usize>,
    transitions: Vec<Vec<Option<Transition>>>,
    initial: StateSet,
    enabled: Vec<Vec<usize>>,
    by_obs: Vec<StateSet>,
}

impl Pomdp {
    fn from_parts(
        action_names: Vec<String>,
        observation_names: Vec<String>,
        obs: Vec<usize>,
        transitions: Vec<Vec<Option<Transition>>>,
        initial: StateSet,
    ) -> Self {
        let n = obs.len();
        let enabled = transitions
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, t)| t.as_ref().is_some_and(|t| !t.succ.is_empty()))
                    .map(|(a, _)| a)
                    .collect()
            })
            .collect();
        let mut by_obs = vec![StateSet::empty(n); observation_names.len()];
        for (s, &z) in obs.iter().enumerate() {
            by_obs[z].insert(s);
        }
        Pomdp {
            action_names,
            observation_names,
            obs,
            transitions,
            initial,
            enabled,
            by_obs,
        }
    }

    pub fn num_states(&self) -> usize {
        self.obs.len()
    }

    pub fn num_actions(&self) -> usize {
        self.action_names.len()
    }

    pub fn num_observations(&self) -> usize {
        self.observation_names.len()
    }

    /// Number of `(state, action, successor)` triples with positive probability.
    pub fn num_transitions(&self) -> usize {
        self.transitions
            .iter()
            .flatten()
            .flatten()
            .map(|t| t.succ.len())
            .sum()
    }

    pub fn action_name(&self, a: usize) -> &str {
        &self.action_names[a]
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    pub fn observation_name(&self, z: usize) -> &str {
        &self.observation_names[z]
    }

    pub fn observation_names(&self) -> &[String] {
        &self.observation_names
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.action_names.iter().position(|n| n == name)
    }

    pub fn observation_index(&self, name: &str) -> Option<usize> {
        self.observation_names.iter().position(|n| n == name)
    }

    #[inline]
    pub fn obs(&self, s: usize) -> usize {
        self.obs[s]
    }

    /// All states carrying observation `z`.
    pub fn states_with_obs(&self, z: usize) -> &StateSet {
        &self.by_obs[z]
    }

    pub fn enabled(&self, s: usize) -> &[usize] {
        &self.enabled[s]
    }

    /// Enabled actions of an observation (those of its first state).
    pub fn enabled_obs(&self, z: usize) -> &[usize] {
        match self.by_obs[z].first() {
            Some(s) => &self.enabled[s],
            None => &[],
        }
    }

    pub fn is_enabled(&self, s: usize, a: usize) -> bool {
        self.enabled[s].contains(&a)
    }

    pub fn transition(&self, s: usize, a: usize) -> Option<&Transition> {
        self.transitions[s][a].as_ref()
    }

    /// Support of `P(s, a)`; empty when `a` is not enabled in `s`.
    pub fn post(&self, s: usize, a: usize) -> &[usize] {
        self.transitions[s][a].as_ref().map_or(&[], |t| &t.succ)
    }

    pub fn initial(&self) -> &StateSet {
        &self.initial
    }

    pub fn with_initial(&self, initial: StateSet) -> Pomdp {
        let mut p = self.clone();
        p.initial = initial;
        p
    }

    pub fn is_absorbing(&self, s: usize) -> bool {
        self.enabled[s].iter().all(|&a| self.post(s, a) == [s])
    }

    /// Union of `post(s, a)` over the members of `states`.
    pub fn successor_set(&self, states: &StateSet, a: usize) -> StateSet {
        let mut out = StateSet::empty(self.num_states());
        for s in states {
            for &t in self.post(s, a) {
                out.insert(t);
            }
        }
        out
    }

    /// Successor supports of `b` under `a`, one per observation, ordered by observation.
    pub fn support_update(&self, b: &BeliefSupport, a: usize) -> Result<Vec<BeliefSupport>, ModelError> {
        if !self.enabled_obs(b.observation).contains(&a) {
            return Err(ModelError::ActionNotEnabled {
                action: a,
                observation: b.observation,
            });
        }
        Ok(self.split_by_observation(&self.successor_set(&b.members, a)))
    }

    /// Partitions a state set into observation-uniform supports.
    pub fn split_by_observation(&self, states: &StateSet) -> Vec<BeliefSupport> {
        let mut out: Vec<BeliefSupport> = Vec::new();
        for z in 0..self.num_observations() {
            let part = states.intersection(&self.by_obs[z]);
            if !part.is_empty() {
                out.push(BeliefSupport {
                    members: part,
                    observation: z,
                });
            }
        }
        out
    }
}

/// A reach-avoid objective `⟨REACH, AVOID⟩`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Specification {
    pub reach: StateSet,
    pub avoid: StateSet,
}

impl Specification {
    pub fn new(reach: StateSet, avoid: StateSet) -> Self {
        Specification { reach, avoid }
    }

    pub fn from_states(width: usize, reach: &[usize], avoid: &[usize]) -> Self {
        Specification {
            reach: StateSet::from_iter_with_width(width, reach.iter().copied()),
            avoid: StateSet::from_iter_with_width(width, avoid.iter().copied()),
        }
    }

    /// States in neither REACH nor AVOID.
    pub fn undecided(&self) -> StateSet {
        self.reach.union(&self.avoid).complement()
    }

    /// The union of the observation classes that lie inside REACH. Reaching
    /// one of these states puts the belief support inside REACH.
    pub fn observable_reach(&self, pomdp: &Pomdp) -> StateSet {
        let mut out = StateSet::empty(self.reach.width());
        for z in 0..pomdp.num_observations() {
            let class = pomdp.states_with_obs(z);
            if !class.is_empty() && class.is_subset(&self.reach) {
                out.union_with(class);
            }
        }
        out
    }

    /// The same objective with REACH cut down to [`Self::observable_reach`].
    pub fn with_observable_reach(&self, pomdp: &Pomdp) -> Specification {
        Specification::new(self.observable_reach(pomdp), self.avoid.clone())
    }

    pub fn lifted(&self) -> LiftedSpecification<'_> {
        LiftedSpecification { spec: self }
    }
}

/// The specification lifted to belief supports.
#[derive(Debug, Clone, Copy)]
pub struct LiftedSpecification<'a> {
    spec: &'a Specification,
}

impl LiftedSpecification<'_> {
    /// `b ∩ AVOID ≠ ∅`
    pub fn avoid(&self, b: &StateSet) -> bool {
        !b.is_disjoint(&self.spec.avoid)
    }

    /// `b ⊆ REACH`
    pub fn reach(&self, b: &StateSet) -> bool {
        b.is_subset(&self.spec.reach)
    }
}

/// A nonempty, observation-uniform set of states.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BeliefSupport {
    pub observation: usize,
    pub members: StateSet,
}

impl BeliefSupport {
    /// Checked constructor; `None` for empty or mixed-observation sets.
    pub fn new(pomdp: &Pomdp, members: StateSet) -> Option<Self> {
        let first = members.first()?;
        let observation = pomdp.obs(first);
        members
            .is_subset(pomdp.states_with_obs(observation))
            .then_some(BeliefSupport { observation, members })
    }

    pub fn from_states(pomdp: &Pomdp, states: &[usize]) -> Option<Self> {
        Self::new(
            pomdp,
            StateSet::from_iter_with_width(pomdp.num_states(), states.iter().copied()),
        )
    }

    /// The support `{ s | obs(s) = z }`; `None` if the observation labels nothing.
    pub fn full_observation(pomdp: &Pomdp, z: usize) -> Option<Self> {
        let members = pomdp.states_with_obs(z).clone();
        (!members.is_empty()).then_some(BeliefSupport { observation: z, members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_subset(&self, other: &BeliefSupport) -> bool {
        self.observation == other.observation && self.members.is_subset(&other.members)
    }
}

impl fmt::Debug for BeliefSupport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z{}:{:?}", self.observation, self.members)
    }
}

/// A violated model or specification invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    SizeMismatch,
    DeadState { state: usize },
    ActionMismatch { observation: usize, first: usize, other: usize },
    EmptyInitial,
    MixedInitialObservation,
    BadWeights { state: usize, action: usize },
    OverlappingSpec { states: Vec<usize> },
    NotAbsorbing { state: usize },
}

impl Diagnostic {
    pub fn is_absorbing_violation(&self) -> bool {
        matches!(self, Diagnostic::NotAbsorbing { .. })
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::SizeMismatch => write!(f, "specification width differs from state count"),
            Diagnostic::DeadState { state } => write!(f, "dead state: {state} has no enabled action"),
            Diagnostic::ActionMismatch { observation, first, other } => write!(
                f,
                "action mismatch: states {first} and {other} share observation {observation} but not their enabled actions"
            ),
            Diagnostic::EmptyInitial => write!(f, "empty initial support"),
            Diagnostic::MixedInitialObservation => {
                write!(f, "initial support spans several observations")
            }
            Diagnostic::BadWeights { state, action } => write!(
                f,
                "weights of state {state} action {action} are not a positive distribution"
            ),
            Diagnostic::OverlappingSpec { states } => {
                write!(f, "overlapping spec: {states:?} in both REACH and AVOID")
            }
            Diagnostic::NotAbsorbing { state } => {
                write!(f, "specification state {state} is not absorbing")
            }
        }
    }
}

/// Lists every violated invariant; an empty list means the pair is well formed.
pub fn validate(pomdp: &Pomdp, spec: &Specification) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let n = pomdp.num_states();
    if spec.reach.width() != n || spec.avoid.width() != n || pomdp.initial.width() != n {
        out.push(Diagnostic::SizeMismatch);
        return out;
    }
    for s in 0..n {
        if pomdp.enabled(s).is_empty() {
            out.push(Diagnostic::DeadState { state: s });
        }
        for &a in pomdp.enabled(s) {
            let t = pomdp.transition(s, a).expect("enabled action");
            let zero = Prob::from_integer(0);
            let total: Prob = t.weights.iter().copied().fold(zero, |acc, w| acc + w);
            if t.weights.contains(&zero) || total != Prob::from_integer(1) {
                out.push(Diagnostic::BadWeights { state: s, action: a });
            }
        }
    }
    for z in 0..pomdp.num_observations() {
        let mut members = pomdp.states_with_obs(z).iter();
        if let Some(first) = members.next() {
            for other in members {
                if pomdp.enabled(first) != pomdp.enabled(other) {
                    out.push(Diagnostic::ActionMismatch { observation: z, first, other });
                }
            }
        }
    }
    match pomdp.initial.first() {
        None => out.push(Diagnostic::EmptyInitial),
        Some(first) => {
            if !pomdp.initial.is_subset(pomdp.states_with_obs(pomdp.obs(first))) {
                out.push(Diagnostic::MixedInitialObservation);
            }
        }
    }
    let overlap = spec.reach.intersection(&spec.avoid);
    if !overlap.is_empty() {
        out.push(Diagnostic::OverlappingSpec {
            states: overlap.iter().collect(),
        });
    }
    for s in spec.reach.union(&spec.avoid).iter() {
        if !pomdp.is_absorbing(s) {
            out.push(Diagnostic::NotAbsorbing { state: s });
        }
    }
    out
}

/// Redirects every enabled action of every REACH or AVOID state to a self-loop.
pub fn make_absorbing(pomdp: &Pomdp, spec: &Specification) -> Pomdp {
    let targets = spec.reach.union(&spec.avoid);
    if targets.iter().all(|s| pomdp.is_absorbing(s)) {
        return pomdp.clone();
    }
    let mut p = pomdp.clone();
    for s in targets.iter() {
        for a in p.enabled[s].clone() {
            p.transitions[s][a] = Some(Transition::dirac(s));
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::cheese;

    fn two_state() -> (Pomdp, Specification) {
        let mut b = PomdpBuilder::new(2, vec!["a".into(), "b".into()], vec!["z".into(), "t".into()]);
        b.set_observation(1, 1).unwrap();
        b.add_transition(0, 0, Transition::dirac(0)).unwrap();
        b.add_transition(0, 1, Transition::dirac(1)).unwrap();
        b.add_transition(1, 0, Transition::uniform([0, 1])).unwrap();
        b.add_transition(1, 1, Transition::dirac(1)).unwrap();
        b.set_initial([0]);
        (b.build(), Specification::from_states(2, &[], &[1]))
    }

    #[test]
    fn cheese_is_well_formed() {
        let inst = cheese::generate();
        assert!(validate(&inst.pomdp, &inst.spec).is_empty());
    }

    #[test]
    fn overlapping_spec_reported() {
        let (p, _) = two_state();
        let spec = Specification::from_states(2, &[1], &[1]);
        let diags = validate(&make_absorbing(&p, &spec), &spec);
        assert!(diags.iter().any(|d| d.to_string().contains("overlapping spec")));
    }

    #[test]
    fn action_mismatch_reported() {
        let mut b = PomdpBuilder::new(2, vec!["a".into(), "b".into()], vec!["z".into()]);
        b.add_transition(0, 0, Transition::dirac(0)).unwrap();
        b.add_transition(1, 0, Transition::dirac(1)).unwrap();
        b.add_transition(1, 1, Transition::dirac(0)).unwrap();
        b.set_initial([0]);
        let p = b.build();
        let diags = validate(&p, &Specification::from_states(2, &[], &[]));
        assert!(diags.iter().any(|d| d.to_string().contains("action mismatch")));
    }

    #[test]
    fn duplicate_transition_rejected() {
        let mut b = PomdpBuilder::new(1, vec!["a".into()], vec!["z".into()]);
        b.add_transition(0, 0, Transition::dirac(0)).unwrap();
        assert_eq!(
            b.add_transition(0, 0, Transition::dirac(0)),
            Err(ModelError::DuplicateTransition { state: 0, action: 0 })
        );
    }

    #[test]
    fn make_absorbing_redirects_and_is_idempotent() {
        let (p, spec) = two_state();
        let q = make_absorbing(&p, &spec);
        assert_eq!(q.enabled(1), p.enabled(1));
        for &a in q.enabled(1) {
            assert_eq!(q.post(1, a), &[1]);
        }
        assert_eq!(q.post(0, 1), p.post(0, 1));
        assert_eq!(make_absorbing(&q, &spec), q);
        assert!(validate(&q, &spec).is_empty());
    }

    #[test]
    fn cheese_goal_self_loops_after_normalization() {
        let inst = cheese::generate();
        let goal = cheese::cell(10);
        for &a in inst.pomdp.enabled(goal) {
            assert_eq!(inst.pomdp.post(goal, a), &[goal]);
        }
    }

    #[test]
    fn cheese_support_updates() {
        let inst = cheese::generate();
        let p = &inst.pomdp;
        let north = p.action_index("north").unwrap();
        let south = p.action_index("south").unwrap();
        let b = BeliefSupport::from_states(p, &[cheese::cell(6), cheese::cell(8)]).unwrap();
        let next = p.support_update(&b, north).unwrap();
        let sets: Vec<Vec<usize>> = next.iter().map(|b| b.members.iter().collect()).collect();
        assert_eq!(sets.len(), 2);
        assert!(sets.contains(&vec![cheese::cell(1)]));
        assert!(sets.contains(&vec![cheese::cell(5)]));

        let b7 = BeliefSupport::from_states(p, &[cheese::cell(7)]).unwrap();
        let next = p.support_update(&b7, south).unwrap();
        assert_eq!(next.len(), 1);
        assert_eq!(next[0].members.iter().collect::<Vec<_>>(), vec![cheese::cell(10)]);

        let b1 = BeliefSupport::from_states(p, &[cheese::cell(1)]).unwrap();
        assert!(matches!(
            p.support_update(&b1, north),
            Err(ModelError::ActionNotEnabled { .. })
        ));
    }

    #[test]
    fn self_loop_support_update() {
        let inst = cheese::generate();
        let p = &inst.pomdp;
        let b = BeliefSupport::from_states(p, &[cheese::cell(9)]).unwrap();
        for &a in p.enabled(cheese::cell(9)) {
            let next = p.support_update(&b, a).unwrap();
            assert_eq!(next, vec![b.clone()]);
        }
    }
}
