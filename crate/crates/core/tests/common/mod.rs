#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use pomdp_shield::analysis::{ExplicitBeliefSupportMdp, MdpView};
use pomdp_shield::benchmarks::random::corpus;
use pomdp_shield::benchmarks::Instance;
use pomdp_shield::jani::interpret::{Interpreter, Val, Valuation};
use pomdp_shield::jani::JaniDocument;
use pomdp_shield::{BeliefSupport, Pomdp, Specification, StateSet};

pub const CORPUS_SIZE: usize = 150;

/// Random instances with at most `max_states` states.
pub fn small_corpus(max_states: usize) -> Vec<(usize, Instance)> {
    corpus(CORPUS_SIZE)
        .into_iter()
        .enumerate()
        .filter(|(_, inst)| inst.pomdp.num_states() <= max_states)
        .collect()
}

/// Supports that win under some support-based policy, found by trying every
/// choice of a nonempty action subset per support, played uniformly. `None`
/// if there are more than `limit` such policies.
pub fn enumerate_policies(pomdp: &Pomdp, spec: &Specification, nodes: &[BeliefSupport], limit: u64) -> Option<BTreeSet<BeliefSupport>> {
    let choices: Vec<Vec<Vec<usize>>> = nodes
        .iter()
        .map(|b| {
            let acts = pomdp.enabled_obs(b.observation);
            (1u32..(1 << acts.len()))
                .map(|mask| (0..acts.len()).filter(|i| mask >> i & 1 == 1).map(|i| acts[i]).collect())
                .collect()
        })
        .collect();
    let mut count: u64 = 1;
    for c in &choices {
        count = count.checked_mul(c.len() as u64)?;
        if count > limit {
            return None;
        }
    }
    let index: BTreeMap<&BeliefSupport, usize> = nodes.iter().enumerate().map(|(i, b)| (b, i)).collect();
    let mut pick = vec![0usize; nodes.len()];
    let mut winning = BTreeSet::new();
    loop {
        let policy: Vec<&Vec<usize>> = pick.iter().enumerate().map(|(i, &k)| &choices[i][k]).collect();
        for i in winners(pomdp, spec, nodes, &index, &policy) {
            winning.insert(nodes[i].clone());
        }
        let mut i = 0;
        loop {
            if i == pick.len() {
                return Some(winning);
            }
            pick[i] += 1;
            if pick[i] < choices[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

fn winners(
    pomdp: &Pomdp,
    spec: &Specification,
    nodes: &[BeliefSupport],
    index: &BTreeMap<&BeliefSupport, usize>,
    policy: &[&Vec<usize>],
) -> Vec<usize> {
    // pair graph under the policy; REACH states stop the run
    let mut succ: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for (i, b) in nodes.iter().enumerate() {
        for s in b.members.iter() {
            let mut out = Vec::new();
            if !spec.reach.contains(s) && !spec.avoid.contains(s) {
                for &a in policy[i] {
                    let all = pomdp.successor_set(&b.members, a);
                    for &t in pomdp.post(s, a) {
                        let next = BeliefSupport { observation: pomdp.obs(t), members: all.intersection(pomdp.states_with_obs(pomdp.obs(t))) };
                        out.push((index[&next], t));
                    }
                }
            }
            succ.insert((i, s), out);
        }
    }
    let mut pred: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for (&p, out) in &succ {
        for &q in out {
            pred.entry(q).or_default().push(p);
        }
    }
    let closure = |seeds: Vec<(usize, usize)>| {
        let mut seen: BTreeSet<(usize, usize)> = seeds.iter().copied().collect();
        let mut queue: VecDeque<(usize, usize)> = seeds.into();
        while let Some(p) = queue.pop_front() {
            for &q in pred.get(&p).into_iter().flatten() {
                if seen.insert(q) {
                    queue.push_back(q);
                }
            }
        }
        seen
    };
    let reaching = closure(succ.keys().filter(|(_, s)| spec.reach.contains(*s)).copied().collect());
    let bad: Vec<(usize, usize)> = succ.keys().filter(|p| !reaching.contains(p) || spec.avoid.contains(p.1)).copied().collect();
    let losing = closure(bad);
    (0..nodes.len()).filter(|&i| nodes[i].members.iter().all(|s| !losing.contains(&(i, s)))).collect()
}

/// The settled part of the JANI semantics as `support -> action -> successor supports`.
pub type SupportGraph = BTreeMap<(usize, StateSet), BTreeMap<String, BTreeSet<(usize, StateSet)>>>;

fn support_of(v: &Valuation, belsup: &[usize], pomdp: &Pomdp) -> (usize, StateSet) {
    let members = StateSet::from_iter_with_width(pomdp.num_states(), (0..belsup.len()).filter(|&s| v[belsup[s]] == Val::Bool(true)));
    let z = members.iter().next().map_or(usize::MAX, |s| pomdp.obs(s));
    (z, members)
}

/// Interprets `doc` from every node of `mdp`, contracting the update steps.
pub fn jani_support_graph(doc: &JaniDocument, pomdp: &Pomdp, mdp: &ExplicitBeliefSupportMdp) -> SupportGraph {
    let interp = Interpreter::from_text(&doc.text, 0.5).expect("exported document parses");
    let belsup: Vec<usize> = doc.metadata.belsup.iter().map(|n| interp.variable(n).unwrap()).collect();
    let mut graph = SupportGraph::new();
    for b in mdp.nodes() {
        let mut v = interp.initial().clone();
        for (s, &i) in belsup.iter().enumerate() {
            v[i] = Val::Bool(b.members.contains(s));
        }
        let mut row = BTreeMap::new();
        for (action, settled) in interp.contracted(&v, &doc.metadata.update_action).unwrap() {
            row.insert(action, settled.iter().map(|s| support_of(s, &belsup, pomdp)).collect());
        }
        graph.insert((b.observation, b.members.clone()), row);
    }
    graph
}

/// The same map read off the explicit belief-support MDP.
pub fn explicit_support_graph(pomdp: &Pomdp, mdp: &ExplicitBeliefSupportMdp) -> SupportGraph {
    let mut graph = SupportGraph::new();
    for (i, b) in mdp.nodes().iter().enumerate() {
        let mut row = BTreeMap::new();
        for (c, &a) in mdp.actions(i).iter().enumerate() {
            let next = mdp.successors(i, c).iter().map(|&j| &mdp.nodes()[j]);
            row.insert(pomdp.action_name(a).to_string(), next.map(|n| (n.observation, n.members.clone())).collect());
        }
        graph.insert((b.observation, b.members.clone()), row);
    }
    graph
}
