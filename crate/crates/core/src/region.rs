//! The winning-region store, region predicates and shields.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::bits::StateSet;
use crate::pomdp::{BeliefSupport, Pomdp, Specification};

/// One stored support. Indices start at 1 and are never reused.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub index: usize,
    pub support: StateSet,
    pub live: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InsertOutcome {
    Added { index: usize },
    Subsumed,
    Replaced { index: usize, tombstoned: Vec<usize> },
}

impl InsertOutcome {
    pub fn changed(&self) -> bool {
        !matches!(self, InsertOutcome::Subsumed)
    }
}

/// Per-observation antichains of maximal winning supports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WinningRegionStore {
    width: usize,
    entries: Vec<Vec<Entry>>,
}

/// Overlap-ignoring size estimate reported with the number of live entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSize {
    pub live_entries: usize,
    pub estimate: f64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegionError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("the belief support is not in the winning region")]
    NotWinning,
}

impl WinningRegionStore {
    pub fn new(num_observations: usize, width: usize) -> Self {
        WinningRegionStore {
            width,
            entries: vec![Vec::new(); num_observations],
        }
    }

    pub fn for_pomdp(pomdp: &Pomdp) -> Self {
        Self::new(pomdp.num_observations(), pomdp.num_states())
    }

    /// The store holding `{ s ∈ REACH | obs(s) = z }` for every observation.
    pub fn from_reach(pomdp: &Pomdp, spec: &Specification) -> Self {
        let mut store = Self::for_pomdp(pomdp);
        for b in pomdp.split_by_observation(&spec.reach) {
            store.insert(&b);
        }
        store
    }

    pub fn num_observations(&self) -> usize {
        self.entries.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn insert(&mut self, b: &BeliefSupport) -> InsertOutcome {
        self.insert_set(b.observation, &b.members)
    }

    pub fn insert_set(&mut self, z: usize, members: &StateSet) -> InsertOutcome {
        debug_assert!(!members.is_empty());
        let list = &mut self.entries[z];
        if list.iter().any(|e| e.live && members.is_subset(&e.support)) {
            return InsertOutcome::Subsumed;
        }
        let mut tombstoned = Vec::new();
        for e in list.iter_mut().filter(|e| e.live) {
            if e.support.is_subset(members) {
                e.live = false;
                tombstoned.push(e.index);
            }
        }
        let index = list.len() + 1;
        list.push(Entry {
            index,
            support: members.clone(),
            live: true,
        });
        if tombstoned.is_empty() {
            InsertOutcome::Added { index }
        } else {
            InsertOutcome::Replaced { index, tombstoned }
        }
    }

    /// All entries of `Win(z)`, tombstoned ones included, in index order.
    pub fn entries(&self, z: usize) -> &[Entry] {
        &self.entries[z]
    }

    pub fn live(&self, z: usize) -> impl Iterator<Item = &Entry> + '_ {
        self.entries[z].iter().filter(|e| e.live)
    }

    /// `|Win(z)|`: the highest index handed out for `z`.
    pub fn index_bound(&self, z: usize) -> usize {
        self.entries[z].len()
    }

    pub fn live_count(&self) -> usize {
        self.entries.iter().flatten().filter(|e| e.live).count()
    }

    pub fn tombstone_count(&self) -> usize {
        self.entries.iter().flatten().filter(|e| !e.live).count()
    }

    pub fn is_empty(&self) -> bool {
        self.live_count() == 0
    }

    pub fn is_winning(&self, b: &BeliefSupport) -> bool {
        self.is_winning_set(b.observation, &b.members)
    }

    pub fn is_winning_set(&self, z: usize, members: &StateSet) -> bool {
        self.entries[z]
            .iter()
            .any(|e| e.live && members.is_subset(&e.support))
    }

    /// Live entries as `(observation, support)` pairs, a canonical form of the covered region.
    pub fn maximal_supports(&self) -> BTreeSet<(usize, StateSet)> {
        self.entries
            .iter()
            .enumerate()
            .flat_map(|(z, list)| list.iter().filter(|e| e.live).map(move |e| (z, e.support.clone())))
            .collect()
    }

    pub fn live_supports(&self) -> Vec<BeliefSupport> {
        self.maximal_supports()
            .into_iter()
            .map(|(observation, members)| BeliefSupport { observation, members })
            .collect()
    }

    /// True iff both stores make exactly the same supports winning.
    pub fn covers_same(&self, other: &WinningRegionStore) -> bool {
        self.maximal_supports() == other.maximal_supports()
    }

    /// True iff every support winning here is also winning in `other`.
    pub fn is_subregion_of(&self, other: &WinningRegionStore) -> bool {
        self.maximal_supports()
            .iter()
            .all(|(z, x)| other.is_winning_set(*z, x))
    }

    pub fn region_size(&self) -> RegionSize {
        let mut estimate = 0.0;
        let mut live_entries = 0;
        for e in self.entries.iter().flatten().filter(|e| e.live) {
            live_entries += 1;
            estimate += 2f64.powi(e.support.len() as i32) - 1.0;
        }
        RegionSize { live_entries, estimate }
    }

    /// Actions of `b` whose successor supports are all winning.
    pub fn safe_actions(&self, pomdp: &Pomdp, b: &BeliefSupport) -> Vec<usize> {
        pomdp
            .enabled_obs(b.observation)
            .iter()
            .copied()
            .filter(|&a| {
                pomdp
                    .support_update(b, a)
                    .expect("action taken from EnAct")
                    .iter()
                    .all(|next| self.is_winning(next))
            })
            .collect()
    }

    pub fn is_deadlock_free(&self, pomdp: &Pomdp) -> bool {
        self.live_supports()
            .iter()
            .all(|b| !self.safe_actions(pomdp, b).is_empty())
    }

    /// Whether every live entry has a path to a support inside REACH that only
    /// uses actions keeping all successors winning. `None` if more than
    /// `cap` supports would have to be explored.
    pub fn check_productive(&self, pomdp: &Pomdp, spec: &Specification, cap: usize) -> Option<bool> {
        let lifted = spec.lifted();
        let mut index: HashMap<BeliefSupport, usize> = HashMap::new();
        let mut nodes: Vec<BeliefSupport> = Vec::new();
        let mut preds: Vec<Vec<usize>> = Vec::new();
        let roots = self.live_supports();
        let mut queue: VecDeque<usize> = VecDeque::new();
        for b in &roots {
            if !index.contains_key(b) {
                index.insert(b.clone(), nodes.len());
                queue.push_back(nodes.len());
                nodes.push(b.clone());
                preds.push(Vec::new());
            }
        }
        while let Some(i) = queue.pop_front() {
            let b = nodes[i].clone();
            if lifted.reach(&b.members) {
                continue;
            }
            for a in self.safe_actions(pomdp, &b) {
                for next in pomdp.support_update(&b, a).expect("enabled") {
                    let j = match index.get(&next) {
                        Some(&j) => j,
                        None => {
                            if nodes.len() >= cap {
                                return None;
                            }
                            let j = nodes.len();
                            index.insert(next.clone(), j);
                            nodes.push(next);
                            preds.push(Vec::new());
                            queue.push_back(j);
                            j
                        }
                    };
                    preds[j].push(i);
                }
            }
        }
        let mut good = vec![false; nodes.len()];
        let mut stack: Vec<usize> = (0..nodes.len()).filter(|&i| lifted.reach(&nodes[i].members)).collect();
        for &i in &stack {
            good[i] = true;
        }
        while let Some(j) = stack.pop() {
            for &i in &preds[j] {
                if !good[i] {
                    good[i] = true;
                    stack.push(i);
                }
            }
        }
        Some(roots.iter().all(|b| good[index[b]]))
    }

    /// [`check_productive`](Self::check_productive) with the default cap of 2^20 supports;
    /// an exceeded cap counts as not productive.
    pub fn is_productive(&self, pomdp: &Pomdp, spec: &Specification) -> bool {
        self.check_productive(pomdp, spec, 1 << 20).unwrap_or(false)
    }

    /// The live entries only, renumbered from 1.
    pub fn compacted(&self) -> Self {
        let mut out = Self::new(self.num_observations(), self.width);
        for (z, x) in self.maximal_supports() {
            out.insert_set(z, &x);
        }
        out
    }

    /// The store cut down to the first `observations` observations and `width` states.
    pub fn restricted(&self, observations: usize, width: usize) -> Self {
        let mut out = Self::new(observations, width);
        for (z, x) in self.maximal_supports() {
            if z < observations {
                out.insert_set(z, &x.resized(width));
            }
        }
        out
    }

    /// One `win <observation> <state>...` line per live entry.
    pub fn to_text(&self, pomdp: &Pomdp) -> String {
        let mut out = String::new();
        for (z, x) in self.maximal_supports() {
            let _ = write!(out, "win {}", pomdp.observation_name(z));
            for s in &x {
                let _ = write!(out, " {s}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str, pomdp: &Pomdp) -> Result<Self, RegionError> {
        let mut store = Self::for_pomdp(pomdp);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| RegionError::Parse { line, message };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let words: Vec<&str> = content.split_whitespace().collect();
            if words[0] != "win" || words.len() < 3 {
                return Err(err("expected `win <observation> <state>...`".into()));
            }
            let z = pomdp
                .observation_index(words[1])
                .ok_or_else(|| err(format!("unknown observation `{}`", words[1])))?;
            let mut members = StateSet::empty(pomdp.num_states());
            for w in &words[2..] {
                let s: usize = w.parse().map_err(|_| err(format!("bad state `{w}`")))?;
                if s >= pomdp.num_states() || pomdp.obs(s) != z {
                    return Err(err(format!("state {s} does not carry observation {}", words[1])));
                }
                members.insert(s);
            }
            store.insert_set(z, &members);
        }
        Ok(store)
    }
}

/// Maximally permissive shield derived from a winning region.
#[derive(Debug, Clone, Copy)]
pub struct Shield<'a> {
    pub store: &'a WinningRegionStore,
    pub pomdp: &'a Pomdp,
}

impl<'a> Shield<'a> {
    pub fn new(store: &'a WinningRegionStore, pomdp: &'a Pomdp) -> Self {
        Shield { store, pomdp }
    }

    pub fn allowed(&self, b: &BeliefSupport) -> Result<Vec<usize>, RegionError> {
        if !self.store.is_winning(b) {
            return Err(RegionError::NotWinning);
        }
        Ok(self.store.safe_actions(self.pomdp, b))
    }
}
