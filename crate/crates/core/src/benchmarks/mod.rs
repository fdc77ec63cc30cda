//! Benchmark families and the explicit text format.
//!
//! The gridworld dynamics are reconstructions. Each generator module
//! describes its model at the top of the file.

pub mod avoid;
pub mod cheese;
pub mod evade;
pub mod explicit;
pub mod intercept;
pub mod obstacle;
pub mod random;
pub mod refuel;
pub mod rocks;

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use thiserror::Error;

use crate::pomdp::{make_absorbing, Pomdp, PomdpBuilder, Prob, Specification, Transition};

pub use explicit::{emit_explicit, parse_explicit, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Rocks,
    Refuel,
    Evade,
    Intercept,
    Avoid,
    Obstacle,
    Cheese,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Rocks,
        Family::Refuel,
        Family::Evade,
        Family::Intercept,
        Family::Avoid,
        Family::Obstacle,
        Family::Cheese,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Rocks => "rocks",
            Family::Refuel => "refuel",
            Family::Evade => "evade",
            Family::Intercept => "intercept",
            Family::Avoid => "avoid",
            Family::Obstacle => "obstacle",
            Family::Cheese => "cheese",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = BenchmarkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| BenchmarkError::UnknownFamily(s.to_string()))
    }
}

/// Family plus size parameters: grid size, battery capacity, view radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BenchmarkParams {
    pub family: Family,
    pub grid: Option<usize>,
    pub battery: Option<usize>,
    pub radius: Option<usize>,
}

impl BenchmarkParams {
    pub fn new(family: Family) -> Self {
        BenchmarkParams {
            family,
            grid: None,
            battery: None,
            radius: None,
        }
    }

    pub fn cheese() -> Self {
        Self::new(Family::Cheese)
    }

    pub fn obstacle(n: usize) -> Self {
        BenchmarkParams { grid: Some(n), ..Self::new(Family::Obstacle) }
    }

    pub fn rocks(n: usize) -> Self {
        BenchmarkParams { grid: Some(n), ..Self::new(Family::Rocks) }
    }

    pub fn refuel(n: usize, battery: usize) -> Self {
        BenchmarkParams {
            grid: Some(n),
            battery: Some(battery),
            ..Self::new(Family::Refuel)
        }
    }

    pub fn evade(n: usize, radius: usize) -> Self {
        BenchmarkParams {
            grid: Some(n),
            radius: Some(radius),
            ..Self::new(Family::Evade)
        }
    }

    pub fn intercept(n: usize, radius: usize) -> Self {
        BenchmarkParams {
            grid: Some(n),
            radius: Some(radius),
            ..Self::new(Family::Intercept)
        }
    }

    pub fn avoid(n: usize, radius: usize) -> Self {
        BenchmarkParams {
            grid: Some(n),
            radius: Some(radius),
            ..Self::new(Family::Avoid)
        }
    }

    fn require(&self, value: Option<usize>, what: &'static str, min: usize) -> Result<usize, BenchmarkError> {
        match value {
            None => Err(BenchmarkError::MissingParameter { family: self.family, what }),
            Some(v) if v < min => Err(BenchmarkError::BadParameter {
                family: self.family,
                what,
                value: v,
                min,
            }),
            Some(v) => Ok(v),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BenchmarkError {
    #[error("unknown benchmark family `{0}`")]
    UnknownFamily(String),
    #[error("{family} needs parameter {what}")]
    MissingParameter { family: Family, what: &'static str },
    #[error("{family}: {what}={value} is below the minimum {min}")]
    BadParameter {
        family: Family,
        what: &'static str,
        value: usize,
        min: usize,
    },
    #[error("model too large: {0} states")]
    TooLarge(usize),
    #[error("parameters leave no initial state")]
    NoInitialStates,
}

/// Grid coordinates of states, used for the ASCII dump during simulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridLayout {
    pub width: usize,
    pub height: usize,
    /// `(column, row)` of each state, row 0 at the top.
    pub cells: Vec<Option<(usize, usize)>>,
}

impl GridLayout {
    /// Renders the grid, marking cells of `support` with `+` and `current` with `@`.
    pub fn render(&self, support: &crate::bits::StateSet, current: Option<usize>) -> String {
        let mut grid = vec![vec!['.'; self.width]; self.height];
        for s in support {
            if let Some(Some((x, y))) = self.cells.get(s) {
                grid[*y][*x] = '+';
            }
        }
        if let Some(Some((x, y))) = current.and_then(|s| self.cells.get(s)) {
            grid[*y][*x] = '@';
        }
        let mut out = String::new();
        for row in grid {
            out.extend(row);
            out.push('\n');
        }
        out
    }
}

/// A generated model with its specification.
#[derive(Debug, Clone)]
pub struct Instance {
    pub pomdp: Pomdp,
    pub spec: Specification,
    pub layout: Option<GridLayout>,
}

/// Upper bound on generated state counts.
pub const MAX_GENERATED_STATES: usize = 1 << 20;

pub fn generate(params: &BenchmarkParams) -> Result<Instance, BenchmarkError> {
    match params.family {
        Family::Cheese => Ok(cheese::generate()),
        Family::Obstacle => Ok(obstacle::generate(params.require(params.grid, "N", 4)?)),
        Family::Rocks => Ok(rocks::generate(params.require(params.grid, "N", 3)?)),
        Family::Refuel => refuel::generate(
            params.require(params.grid, "N", 4)?,
            params.require(params.battery, "E", 1)?,
        ),
        Family::Evade => evade::generate(
            params.require(params.grid, "N", 3)?,
            params.require(params.radius, "R", 1)?,
        ),
        Family::Intercept => intercept::generate(
            params.require(params.grid, "N", 3)?,
            params.require(params.radius, "R", 1)?,
        ),
        Family::Avoid => avoid::generate(
            params.require(params.grid, "N", 4)?,
            params.require(params.radius, "R", 1)?,
        ),
    }
}

/// Role of an explored state in the specification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Role {
    Plain,
    Reach,
    Avoid,
}

/// `(action index, weighted successors)` per enabled action.
pub(crate) type Moves<K> = Vec<(usize, Vec<(K, Prob)>)>;

/// What an explored state looks like: its observation, role and moves.
pub(crate) struct Expansion<K> {
    pub observation: String,
    pub role: Role,
    /// `(action index, weighted successors)`; repeated successors are merged.
    pub moves: Moves<K>,
    pub cell: Option<(usize, usize)>,
}

/// Breadth-first construction of the reachable part of a model given by a successor function.
///
/// State indices follow discovery order; observations are indexed by first appearance.
pub(crate) fn explore<K, F>(
    actions: &[&str],
    initial: Vec<K>,
    grid: Option<(usize, usize)>,
    mut expand: F,
) -> Result<Instance, BenchmarkError>
where
    K: Clone + Eq + Hash,
    F: FnMut(&K) -> Expansion<K>,
{
    if initial.is_empty() {
        return Err(BenchmarkError::NoInitialStates);
    }
    let mut index: HashMap<K, usize> = HashMap::new();
    let mut queue: Vec<K> = Vec::new();
    for k in &initial {
        if !index.contains_key(k) {
            index.insert(k.clone(), queue.len());
            queue.push(k.clone());
        }
    }
    let mut obs_index: HashMap<String, usize> = HashMap::new();
    let mut obs_names: Vec<String> = Vec::new();
    let mut obs_of: Vec<usize> = Vec::new();
    let mut roles: Vec<Role> = Vec::new();
    let mut cells: Vec<Option<(usize, usize)>> = Vec::new();
    let mut rows: Vec<Moves<usize>> = Vec::new();
    let mut head = 0;
    while head < queue.len() {
        if queue.len() > MAX_GENERATED_STATES {
            return Err(BenchmarkError::TooLarge(queue.len()));
        }
        let key = queue[head].clone();
        head += 1;
        let exp = expand(&key);
        let z = *obs_index.entry(exp.observation.clone()).or_insert_with(|| {
            obs_names.push(exp.observation.clone());
            obs_names.len() - 1
        });
        obs_of.push(z);
        roles.push(exp.role);
        cells.push(exp.cell);
        let mut row = Vec::with_capacity(exp.moves.len());
        for (a, succ) in exp.moves {
            let mut targets = Vec::with_capacity(succ.len());
            for (k, p) in succ {
                let next = match index.get(&k) {
                    Some(&i) => i,
                    None => {
                        let i = queue.len();
                        index.insert(k.clone(), i);
                        queue.push(k);
                        i
                    }
                };
                targets.push((next, p));
            }
            row.push((a, targets));
        }
        rows.push(row);
    }
    let n = queue.len();
    let mut builder = PomdpBuilder::new(
        n,
        actions.iter().map(|a| a.to_string()).collect(),
        obs_names,
    );
    for (s, row) in rows.into_iter().enumerate() {
        builder.set_observation(s, obs_of[s]).expect("index in range");
        for (a, targets) in row {
            builder
                .add_transition(s, a, Transition::new(targets))
                .expect("generator emits each action once");
        }
    }
    builder.set_initial(initial.iter().map(|k| index[k]));
    let pomdp = builder.build();
    let pick = |role: Role| {
        crate::bits::StateSet::from_iter_with_width(
            n,
            roles.iter().enumerate().filter(|(_, r)| **r == role).map(|(s, _)| s),
        )
    };
    let spec = Specification::new(pick(Role::Reach), pick(Role::Avoid));
    let pomdp = make_absorbing(&pomdp, &spec);
    let layout = grid.map(|(width, height)| GridLayout { width, height, cells });
    Ok(Instance { pomdp, spec, layout })
}

/// Uniform weights over a list of successor keys (duplicates merge later).
pub(crate) fn uniform<K>(succ: Vec<K>) -> Vec<(K, Prob)> {
    let n = succ.len() as u64;
    succ.into_iter().map(|k| (k, Prob::new(1, n))).collect()
}

pub(crate) const MOVES: [&str; 4] = ["north", "east", "south", "west"];

/// Grid step in direction `dir` (0=north, 1=east, 2=south, 3=west); `None` if it leaves the grid.
pub(crate) fn step(n: usize, (x, y): (usize, usize), dir: usize) -> Option<(usize, usize)> {
    match dir {
        0 if y > 0 => Some((x, y - 1)),
        1 if x + 1 < n => Some((x + 1, y)),
        2 if y + 1 < n => Some((x, y + 1)),
        3 if x > 0 => Some((x - 1, y)),
        _ => None,
    }
}

/// Grid step clipped at the border.
pub(crate) fn step_clipped(n: usize, pos: (usize, usize), dir: usize) -> (usize, usize) {
    step(n, pos, dir).unwrap_or(pos)
}
