//! Qualitative analysis on MDPs: safe sets, almost-sure reachability, the
//! explicit belief-support MDP and the winning-observation preprocessing.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::bits::StateSet;
use crate::pomdp::{BeliefSupport, Pomdp, Specification};
use crate::region::WinningRegionStore;

/// Default node cap for the explicit belief-support MDP.
pub const DEFAULT_NODE_CAP: usize = 1 << 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("belief-support MDP exceeds the node budget of {0}")]
    BudgetExceeded(usize),
}

/// A finite MDP seen through its graph: nodes, choices, successor lists.
pub trait MdpView {
    fn node_count(&self) -> usize;
    fn choice_count(&self, node: usize) -> usize;
    fn successors(&self, node: usize, choice: usize) -> &[usize];
}

impl MdpView for Pomdp {
    fn node_count(&self) -> usize {
        self.num_states()
    }

    fn choice_count(&self, node: usize) -> usize {
        self.enabled(node).len()
    }

    fn successors(&self, node: usize, choice: usize) -> &[usize] {
        self.post(node, self.enabled(node)[choice])
    }
}

/// A view in which the given nodes only have a self-loop.
pub struct WithAbsorbing<'a, V: MdpView> {
    inner: &'a V,
    absorbing: &'a StateSet,
    loops: Vec<[usize; 1]>,
}

impl<'a, V: MdpView> WithAbsorbing<'a, V> {
    pub fn new(inner: &'a V, absorbing: &'a StateSet) -> Self {
        WithAbsorbing {
            inner,
            absorbing,
            loops: (0..inner.node_count()).map(|s| [s]).collect(),
        }
    }
}

impl<V: MdpView> MdpView for WithAbsorbing<'_, V> {
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn choice_count(&self, node: usize) -> usize {
        if self.absorbing.contains(node) {
            1
        } else {
            self.inner.choice_count(node)
        }
    }

    fn successors(&self, node: usize, choice: usize) -> &[usize] {
        if self.absorbing.contains(node) {
            &self.loops[node]
        } else {
            self.inner.successors(node, choice)
        }
    }
}

fn all_inside(view: &impl MdpView, node: usize, choice: usize, set: &StateSet) -> bool {
    view.successors(node, choice).iter().all(|&t| set.contains(t))
}

/// Greatest set disjoint from `avoid` where every member has a choice staying inside.
pub fn mdp_safe_states(view: &impl MdpView, avoid: &StateSet) -> StateSet {
    let mut safe = avoid.complement();
    loop {
        let next = StateSet::from_iter_with_width(
            safe.width(),
            safe.iter()
                .filter(|&s| (0..view.choice_count(s)).any(|c| all_inside(view, s, c, &safe))),
        );
        if next == safe {
            return safe;
        }
        safe = next;
    }
}

/// States reaching `target` with positive probability under some policy while staying in `within`.
fn positive_reach_within(view: &impl MdpView, target: &StateSet, within: &StateSet, through: impl Fn(usize, usize, &StateSet) -> bool) -> StateSet {
    let mut reach = target.intersection(within);
    loop {
        let mut grew = false;
        for s in within.iter() {
            if reach.contains(s) {
                continue;
            }
            if (0..view.choice_count(s)).any(|c| through(s, c, &reach)) {
                reach.insert(s);
                grew = true;
            }
        }
        if !grew {
            return reach;
        }
    }
}

/// Almost-sure reach-avoid for some policy: the classical double fixpoint
/// restricted to nodes outside `avoid`.
pub fn almost_sure_reach_avoid(view: &impl MdpView, target: &StateSet, avoid: &StateSet) -> StateSet {
    let mut candidate = avoid.complement();
    loop {
        let inside = candidate.clone();
        let next = positive_reach_within(view, target, &inside, |s, c, reach| {
            let succ = view.successors(s, c);
            succ.iter().all(|&t| inside.contains(t)) && succ.iter().any(|&t| reach.contains(t))
        });
        if next == candidate {
            return candidate;
        }
        candidate = next;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    ExistsPolicy,
    ForAllPolicies,
}

/// Almost-sure reachability of `target`, for some or for every policy.
pub fn mdp_almost_sure_reach(view: &impl MdpView, target: &StateSet, quantifier: Quantifier) -> StateSet {
    match quantifier {
        Quantifier::ExistsPolicy => almost_sure_reach_avoid(view, target, &StateSet::empty(target.width())),
        Quantifier::ForAllPolicies => {
            // some policy avoids `target` with positive probability iff it can
            // reach, outside `target`, a set where it can stay outside forever
            let escape = mdp_safe_states(view, target);
            let outside = target.complement();
            let bad = positive_reach_within(view, &escape, &outside, |s, c, reach| {
                view.successors(s, c).iter().any(|&t| reach.contains(t))
            });
            bad.complement()
        }
    }
}

/// The belief-support MDP, explored breadth-first from seed supports.
#[derive(Debug, Clone)]
pub struct ExplicitBeliefSupportMdp {
    nodes: Vec<BeliefSupport>,
    index: HashMap<BeliefSupport, usize>,
    actions: Vec<Vec<usize>>,
    edges: Vec<Vec<Vec<usize>>>,
    reach: StateSet,
    avoid: StateSet,
}

impl ExplicitBeliefSupportMdp {
    pub fn explore(
        pomdp: &Pomdp,
        spec: &Specification,
        seeds: impl IntoIterator<Item = BeliefSupport>,
        cap: usize,
    ) -> Result<Self, AnalysisError> {
        let mut nodes: Vec<BeliefSupport> = Vec::new();
        let mut index: HashMap<BeliefSupport, usize> = HashMap::new();
        let mut queue = VecDeque::new();
        let mut intern = |b: BeliefSupport, nodes: &mut Vec<BeliefSupport>, queue: &mut VecDeque<usize>| -> Result<usize, AnalysisError> {
            if let Some(&i) = index.get(&b) {
                return Ok(i);
            }
            if nodes.len() >= cap {
                return Err(AnalysisError::BudgetExceeded(cap));
            }
            let i = nodes.len();
            index.insert(b.clone(), i);
            nodes.push(b);
            queue.push_back(i);
            Ok(i)
        };
        for b in seeds {
            intern(b, &mut nodes, &mut queue)?;
        }
        let mut actions = Vec::new();
        let mut edges = Vec::new();
        while let Some(i) = queue.pop_front() {
            let b = nodes[i].clone();
            let acts = pomdp.enabled_obs(b.observation).to_vec();
            let mut row = Vec::with_capacity(acts.len());
            for &a in &acts {
                let mut succ = Vec::new();
                for next in pomdp.support_update(&b, a).expect("enabled action") {
                    succ.push(intern(next, &mut nodes, &mut queue)?);
                }
                succ.sort_unstable();
                row.push(succ);
            }
            debug_assert_eq!(actions.len(), i);
            actions.push(acts);
            edges.push(row);
        }
        let lifted = spec.lifted();
        let n = nodes.len();
        let reach = StateSet::from_iter_with_width(n, (0..n).filter(|&i| lifted.reach(&nodes[i].members)));
        let avoid = StateSet::from_iter_with_width(n, (0..n).filter(|&i| lifted.avoid(&nodes[i].members)));
        Ok(ExplicitBeliefSupportMdp {
            nodes,
            index,
            actions,
            edges,
            reach,
            avoid,
        })
    }

    /// Every nonempty observation-uniform support as a seed.
    pub fn full(pomdp: &Pomdp, spec: &Specification, cap: usize) -> Result<Self, AnalysisError> {
        let mut total: u128 = 0;
        for z in 0..pomdp.num_observations() {
            let k = pomdp.states_with_obs(z).len() as u32;
            total = total.saturating_add(if k >= 127 { u128::MAX } else { (1u128 << k) - 1 });
        }
        if total > cap as u128 {
            return Err(AnalysisError::BudgetExceeded(cap));
        }
        let mut seeds = Vec::new();
        for z in 0..pomdp.num_observations() {
            let members: Vec<usize> = pomdp.states_with_obs(z).iter().collect();
            for mask in 1u64..(1u64 << members.len()) {
                let set = StateSet::from_iter_with_width(
                    pomdp.num_states(),
                    members.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &s)| s),
                );
                seeds.push(BeliefSupport { observation: z, members: set });
            }
        }
        Self::explore(pomdp, spec, seeds, cap)
    }

    pub fn from_initial(pomdp: &Pomdp, spec: &Specification, cap: usize) -> Result<Self, AnalysisError> {
        let init = BeliefSupport::new(pomdp, pomdp.initial().clone())
            .expect("validated model has an observation-uniform initial support");
        Self::explore(pomdp, spec, [init], cap)
    }

    pub fn nodes(&self) -> &[BeliefSupport] {
        &self.nodes
    }

    pub fn node_index(&self, b: &BeliefSupport) -> Option<usize> {
        self.index.get(b).copied()
    }

    /// Actions available at a node, parallel to its choices.
    pub fn actions(&self, node: usize) -> &[usize] {
        &self.actions[node]
    }

    pub fn reach_nodes(&self) -> &StateSet {
        &self.reach
    }

    pub fn avoid_nodes(&self) -> &StateSet {
        &self.avoid
    }

    /// Total number of `(node, action, successor)` edges.
    pub fn edge_count(&self) -> usize {
        self.edges.iter().flatten().map(Vec::len).sum()
    }

    /// Nodes that win the lifted objective when the support graph is read as
    /// an MDP. This over-approximates: a support may keep a state that can
    /// never leave while the support graph still moves on.
    pub fn support_graph_winning_nodes(&self) -> StateSet {
        almost_sure_reach_avoid(self, &self.reach, &self.avoid)
    }

    /// Nodes from which some observation-based policy reaches REACH with
    /// probability one and never visits AVOID, from every member state.
    ///
    /// Greatest fixpoint over `(node, state)` pairs: keep the actions whose
    /// successor supports are all alive, then drop every node holding a state
    /// that cannot reach REACH along kept actions.
    pub fn winning_nodes(&self, pomdp: &Pomdp, spec: &Specification) -> StateSet {
        let n = self.nodes.len();
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        let mut members: Vec<Vec<usize>> = Vec::with_capacity(n);
        for b in &self.nodes {
            let m: Vec<usize> = b.members.iter().collect();
            offset.push(offset.last().unwrap() + m.len());
            members.push(m);
        }
        let pair = |node: usize, s: usize, members: &[Vec<usize>]| {
            offset[node] + members[node].binary_search(&s).expect("member state")
        };
        let total = offset[n];
        let mut alive = self.avoid.complement();
        loop {
            let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); total];
            for i in alive.iter() {
                for (c, &a) in self.actions[i].iter().enumerate() {
                    let succ = &self.edges[i][c];
                    if !succ.iter().all(|&j| alive.contains(j)) {
                        continue;
                    }
                    for &s in &members[i] {
                        for &t in pomdp.post(s, a) {
                            let z = pomdp.obs(t);
                            let j = *succ.iter().find(|&&j| self.nodes[j].observation == z).expect("successor support");
                            reverse[pair(j, t, &members)].push(pair(i, s, &members));
                        }
                    }
                }
            }
            let mut good = vec![false; total];
            let mut queue = VecDeque::new();
            for i in alive.iter() {
                for &s in &members[i] {
                    if spec.reach.contains(s) {
                        let p = pair(i, s, &members);
                        good[p] = true;
                        queue.push_back(p);
                    }
                }
            }
            while let Some(p) = queue.pop_front() {
                for &q in &reverse[p] {
                    if !good[q] {
                        good[q] = true;
                        queue.push_back(q);
                    }
                }
            }
            let dead: Vec<usize> = alive.iter().filter(|&i| !(offset[i]..offset[i + 1]).all(|p| good[p])).collect();
            if dead.is_empty() {
                return alive;
            }
            for i in dead {
                alive.remove(i);
            }
        }
    }

    /// The winning nodes as a store of maximal supports.
    pub fn winning_region(&self, pomdp: &Pomdp, spec: &Specification) -> WinningRegionStore {
        let mut store = WinningRegionStore::for_pomdp(pomdp);
        let win = self.winning_nodes(pomdp, spec);
        let mut order: Vec<usize> = win.iter().collect();
        // larger supports first keeps the tombstone count at zero
        order.sort_by_key(|&i| std::cmp::Reverse(self.nodes[i].len()));
        for i in order {
            store.insert(&self.nodes[i]);
        }
        store
    }
}

impl MdpView for ExplicitBeliefSupportMdp {
    fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn choice_count(&self, node: usize) -> usize {
        self.edges[node].len()
    }

    fn successors(&self, node: usize, choice: usize) -> &[usize] {
        &self.edges[node][choice]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleScope {
    /// Every observation-uniform support; solves the maximal-region problem.
    Full,
    /// Supports reachable from the initial support.
    FromInitial,
}

/// The maximal winning region among the explored supports.
pub fn maximal_winning_region(
    pomdp: &Pomdp,
    spec: &Specification,
    cap: usize,
    scope: OracleScope,
) -> Result<WinningRegionStore, AnalysisError> {
    let mdp = match scope {
        OracleScope::Full => ExplicitBeliefSupportMdp::full(pomdp, spec, cap)?,
        OracleScope::FromInitial => ExplicitBeliefSupportMdp::from_initial(pomdp, spec, cap)?,
    };
    Ok(mdp.winning_region(pomdp, spec))
}

/// Result of one round of graph preprocessing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preprocessed {
    /// States from which every policy risks AVOID.
    pub unsafe_states: StateSet,
    pub added: usize,
}

/// Extends `win` with supports found by graph reasoning, until nothing changes:
/// supports of states that reach a winning observation class almost surely
/// under every policy, and full observations with an action whose successors
/// are all winning.
pub fn graph_preprocessing(pomdp: &Pomdp, spec: &Specification, win: &mut WinningRegionStore) -> Preprocessed {
    let safe = mdp_safe_states(pomdp, &spec.avoid);
    let unsafe_states = safe.complement();
    let view = WithAbsorbing::new(pomdp, &unsafe_states);
    let mut added = 0;
    loop {
        let mut changed = false;
        // only whole observation classes: the support must land inside the
        // target at the moment the true state does
        let mut target = StateSet::empty(pomdp.num_states());
        for z in 0..pomdp.num_observations() {
            let all = pomdp.states_with_obs(z);
            if !all.is_empty() && (all.is_subset(&spec.reach) || win.is_winning_set(z, all)) {
                target.union_with(all);
            }
        }
        let sure = mdp_almost_sure_reach(&view, &target, Quantifier::ForAllPolicies);
        for b in pomdp.split_by_observation(&sure) {
            if win.insert(&b).changed() {
                added += 1;
                changed = true;
            }
        }
        for z in 0..pomdp.num_observations() {
            let Some(full) = BeliefSupport::full_observation(pomdp, z) else { continue };
            if win.is_winning(&full) || !full.members.is_subset(&safe) {
                continue;
            }
            if !win.safe_actions(pomdp, &full).is_empty() {
                win.insert(&full);
                added += 1;
                changed = true;
            }
        }
        if !changed {
            return Preprocessed { unsafe_states, added };
        }
    }
}

/// [`graph_preprocessing`] on a copy of `win`.
pub fn winning_observations_fixpoint(pomdp: &Pomdp, spec: &Specification, win: &WinningRegionStore) -> WinningRegionStore {
    let mut out = win.clone();
    graph_preprocessing(pomdp, spec, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::cheese::{self, cell};
    use crate::pomdp::{PomdpBuilder, Transition};
    use crate::Prob;

    fn set(width: usize, items: &[usize]) -> StateSet {
        StateSet::from_iter_with_width(width, items.iter().copied())
    }

    fn model(n: usize, moves: &[(usize, usize, &[usize])], actions: usize) -> Pomdp {
        let mut b = PomdpBuilder::new(n, (0..actions).map(|a| format!("a{a}")).collect(), vec!["z".into()]);
        for &(s, a, succ) in moves {
            b.add_transition(s, a, Transition::uniform(succ.iter().copied())).unwrap();
        }
        b.set_initial([0]);
        b.build()
    }

    #[test]
    fn safe_states_examples() {
        let p = model(2, &[(0, 0, &[0]), (0, 1, &[1]), (1, 0, &[1])], 2);
        assert_eq!(mdp_safe_states(&p, &set(2, &[1])), set(2, &[0]));
        assert_eq!(mdp_safe_states(&p, &set(2, &[])), set(2, &[0, 1]));
        let inst = cheese::generate();
        let safe = mdp_safe_states(&inst.pomdp, &inst.spec.avoid);
        assert_eq!(safe, inst.spec.avoid.complement());
    }

    #[test]
    fn almost_sure_examples() {
        let chain = model(3, &[(0, 0, &[1]), (1, 0, &[2]), (2, 0, &[2])], 1);
        let t = set(3, &[2]);
        for q in [Quantifier::ExistsPolicy, Quantifier::ForAllPolicies] {
            assert_eq!(mdp_almost_sure_reach(&chain, &t, q), set(3, &[0, 1, 2]));
            assert_eq!(mdp_almost_sure_reach(&chain, &set(3, &[0, 1, 2]), q), set(3, &[0, 1, 2]));
        }
        // 0 flips a coin between target 1 and sink 2
        let coin = model(3, &[(0, 0, &[1, 2]), (1, 0, &[1]), (2, 0, &[2])], 1);
        let got = mdp_almost_sure_reach(&coin, &set(3, &[1]), Quantifier::ExistsPolicy);
        assert_eq!(got, set(3, &[1]));
    }

    #[test]
    fn for_all_differs_from_exists() {
        // 0 can go to the target 1 or loop
        let p = model(2, &[(0, 0, &[1]), (0, 1, &[0]), (1, 0, &[1]), (1, 1, &[1])], 2);
        let t = set(2, &[1]);
        assert_eq!(mdp_almost_sure_reach(&p, &t, Quantifier::ExistsPolicy), set(2, &[0, 1]));
        assert_eq!(mdp_almost_sure_reach(&p, &t, Quantifier::ForAllPolicies), set(2, &[1]));
    }

    #[test]
    fn retry_loop_is_almost_sure() {
        // 0 reaches 1 with probability 1/2 per try and otherwise stays
        let mut b = PomdpBuilder::new(2, vec!["a".into()], vec!["z".into()]);
        let half = Prob::new(1, 2);
        b.add_transition(0, 0, Transition::new(vec![(0, half), (1, half)])).unwrap();
        b.add_transition(1, 0, Transition::dirac(1)).unwrap();
        b.set_initial([0]);
        let p = b.build();
        let t = set(2, &[1]);
        assert_eq!(mdp_almost_sure_reach(&p, &t, Quantifier::ForAllPolicies), set(2, &[0, 1]));
    }

    #[test]
    fn cheese_oracle() {
        let inst = cheese::generate();
        let p = &inst.pomdp;
        let w = maximal_winning_region(p, &inst.spec, DEFAULT_NODE_CAP, OracleScope::Full).unwrap();
        let b68 = BeliefSupport::from_states(p, &[cell(6), cell(8)]).unwrap();
        assert!(w.is_winning(&b68));
        for k in 1..=11 {
            let b = BeliefSupport::from_states(p, &[cell(k)]).unwrap();
            assert_eq!(w.is_winning(&b), k != 9 && k != 11, "cell {k}");
        }
        let all = BeliefSupport::full_observation(p, p.obs(cell(6))).unwrap();
        assert!(w.is_winning(&all));
        let init = maximal_winning_region(p, &inst.spec, DEFAULT_NODE_CAP, OracleScope::FromInitial).unwrap();
        assert!(init.is_winning(&b68));
        assert!(init.is_subregion_of(&w));
        assert!(matches!(
            maximal_winning_region(p, &inst.spec, 3, OracleScope::Full),
            Err(AnalysisError::BudgetExceeded(3))
        ));
    }

    #[test]
    fn everything_wins_when_reach_is_everything() {
        let inst = cheese::generate();
        let spec = Specification::new(StateSet::full(11), StateSet::empty(11));
        let w = maximal_winning_region(&inst.pomdp, &spec, DEFAULT_NODE_CAP, OracleScope::Full).unwrap();
        for z in 0..inst.pomdp.num_observations() {
            assert!(w.is_winning(&BeliefSupport::full_observation(&inst.pomdp, z).unwrap()));
        }
    }

    #[test]
    fn preprocessing_on_cheese_is_sound_and_idempotent() {
        let inst = cheese::generate();
        let (p, spec) = (&inst.pomdp, &inst.spec);
        let oracle = maximal_winning_region(p, spec, DEFAULT_NODE_CAP, OracleScope::Full).unwrap();
        let start = WinningRegionStore::from_reach(p, spec);
        let once = winning_observations_fixpoint(p, spec, &start);
        assert!(start.is_subregion_of(&once));
        assert!(once.is_subregion_of(&oracle));
        assert!(once.is_productive(p, spec));
        let twice = winning_observations_fixpoint(p, spec, &once);
        assert_eq!(twice, once);
    }

    #[test]
    fn one_step_observation_gets_added() {
        // observation {0, 1} steps into REACH state 2 under `a0`
        let mut b = PomdpBuilder::new(3, vec!["a0".into(), "a1".into()], vec!["x".into(), "g".into()]);
        b.set_observation(2, 1).unwrap();
        b.add_transition(0, 0, Transition::dirac(2)).unwrap();
        b.add_transition(0, 1, Transition::dirac(0)).unwrap();
        b.add_transition(1, 0, Transition::dirac(2)).unwrap();
        b.add_transition(1, 1, Transition::dirac(1)).unwrap();
        for a in 0..2 {
            b.add_transition(2, a, Transition::dirac(2)).unwrap();
        }
        b.set_initial([0, 1]);
        let p = b.build();
        let spec = Specification::from_states(3, &[2], &[]);
        let w = winning_observations_fixpoint(&p, &spec, &WinningRegionStore::from_reach(&p, &spec));
        assert!(w.is_winning_set(0, &set(3, &[0, 1])));
    }

    #[test]
    fn preprocessing_stays_inside_oracle_on_random_models() {
        for (seed, inst) in crate::benchmarks::random::corpus(300).iter().enumerate() {
            let (p, spec) = (&inst.pomdp, &inst.spec);
            let oracle = maximal_winning_region(p, spec, DEFAULT_NODE_CAP, OracleScope::Full).unwrap();
            let pre = winning_observations_fixpoint(p, spec, &WinningRegionStore::from_reach(p, spec));
            assert!(pre.is_subregion_of(&oracle), "seed {seed}");
        }
    }
}
