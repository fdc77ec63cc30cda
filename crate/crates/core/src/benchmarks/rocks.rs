//! Rocks: a small rock-sample variant on an N×N grid.
//!
//! Reconstruction:
//! - two rocks with hidden type (valuable or dangerous), all four type
//!   combinations equally likely after the initial `start` action;
//! - moves succeed or leave the rover in place with equal probability;
//! - `sample` on or next to a rock reveals its type, and the last sample
//!   result stays visible until the next sample;
//! - `collect` on a rock picks it up; a dangerous rock is a violation;
//! - `drop` at the drop-off corner with a valuable rock wins. With empty
//!   hands it reports that both rocks are dangerous, which wins if true
//!   and is a violation otherwise;
//! - the rover observes its position and either the last sample result or
//!   that it carries a rock.
//!
//! For N=4 this gives 323 states, 3218 transitions and 66 observations.

use super::{explore, step_clipped, uniform, Expansion, Instance, Role, MOVES};
use crate::pomdp::Prob;

const SAMPLE: usize = 4;
const COLLECT: usize = 5;
const DROP: usize = 6;
const START: usize = 7;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Info {
    Nothing,
    Valuable,
    Dangerous,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Start,
    Rover {
        pos: (usize, usize),
        types: [bool; 2],
        info: Info,
        carrying: Option<usize>,
    },
    Delivered,
    Broken,
}

pub fn generate(n: usize) -> Instance {
    let actions = [MOVES[0], MOVES[1], MOVES[2], MOVES[3], "sample", "collect", "drop", "start"];
    let rocks = [(0, n / 2), (n / 2, (n / 4).max(1))];
    let drop_off = (n - 1, n - 1);
    let one = Prob::from_integer(1);
    let near = |p: (usize, usize), r: (usize, usize)| p.0.abs_diff(r.0) + p.1.abs_diff(r.1) <= 1;
    explore(&actions, vec![Key::Start], Some((n, n)), |key| {
        let stay_all = |k: Key| (0..START).map(|a| (a, vec![(k, one)])).collect();
        match *key {
            Key::Start => Expansion {
                observation: "init".into(),
                role: Role::Plain,
                moves: vec![(
                    START,
                    uniform(
                        [[false, false], [false, true], [true, false], [true, true]]
                            .into_iter()
                            .map(|types| Key::Rover {
                                pos: (0, 0),
                                types,
                                info: Info::Nothing,
                                carrying: None,
                            })
                            .collect(),
                    ),
                )],
                cell: None,
            },
            Key::Delivered => Expansion {
                observation: "done".into(),
                role: Role::Reach,
                moves: stay_all(Key::Delivered),
                cell: None,
            },
            Key::Broken => Expansion {
                observation: "done".into(),
                role: Role::Avoid,
                moves: stay_all(Key::Broken),
                cell: None,
            },
            Key::Rover { pos, types, info, carrying } => {
                let me = *key;
                let at = |p: (usize, usize)| Key::Rover { pos: p, types, info, carrying };
                let mut moves: Vec<(usize, Vec<(Key, Prob)>)> = (0..4)
                    .map(|dir| (dir, uniform(vec![at(step_clipped(n, pos, dir)), me])))
                    .collect();
                let sampled = match rocks.iter().position(|&r| near(pos, r)) {
                    Some(i) => Key::Rover {
                        pos,
                        types,
                        info: if types[i] { Info::Valuable } else { Info::Dangerous },
                        carrying,
                    },
                    None => me,
                };
                moves.push((SAMPLE, vec![(sampled, one)]));
                let collected = match rocks.iter().position(|&r| r == pos) {
                    Some(i) if carrying.is_none() => {
                        if types[i] {
                            Key::Rover { pos, types, info, carrying: Some(i) }
                        } else {
                            Key::Broken
                        }
                    }
                    _ => me,
                };
                moves.push((COLLECT, vec![(collected, one)]));
                let dropped = match (pos == drop_off, carrying) {
                    (true, Some(_)) => Key::Delivered,
                    (true, None) if types == [false, false] => Key::Delivered,
                    (true, None) => Key::Broken,
                    _ => me,
                };
                moves.push((DROP, vec![(dropped, one)]));
                let shown = match (carrying, info) {
                    (Some(_), _) => "carry",
                    (None, Info::Nothing) => "none",
                    (None, Info::Valuable) => "valuable",
                    (None, Info::Dangerous) => "dangerous",
                };
                Expansion {
                    observation: format!("x{}y{}_{shown}", pos.0, pos.1),
                    role: Role::Plain,
                    moves,
                    cell: Some(pos),
                }
            }
        }
    })
    .expect("rock grids stay far below the state limit")
}
