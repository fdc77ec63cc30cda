//! Evade: reach the bottom-right corner without being caught by a chaser.
//!
//! Reconstruction:
//! - the chaser moves every step to a uniformly chosen cell among staying
//!   and its four neighbours, never entering the safe area;
//! - the safe area is the rightmost column, the robot's goal its bottom cell;
//! - the robot sees the chaser when it is within Chebyshev distance R, and
//!   anywhere right after `scan` (which replaces a move);
//! - sharing a cell with the chaser is a violation.
//!
//! The chaser starts uniformly on any non-safe cell out of view.

use super::{explore, step, step_clipped, uniform, BenchmarkError, Expansion, Instance, Role, MOVES};
use crate::pomdp::Prob;

const SCAN: usize = 4;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Play {
        robot: (usize, usize),
        chaser: (usize, usize),
        scanned: bool,
    },
    Goal,
    Caught,
}

pub(crate) fn chebyshev(a: (usize, usize), b: (usize, usize)) -> usize {
    a.0.abs_diff(b.0).max(a.1.abs_diff(b.1))
}

pub fn generate(n: usize, radius: usize) -> Result<Instance, BenchmarkError> {
    let actions = [MOVES[0], MOVES[1], MOVES[2], MOVES[3], "scan"];
    let safe = |c: (usize, usize)| c.0 == n - 1;
    let goal = (n - 1, n - 1);
    let start = (0, 0);
    let chaser_moves = move |c: (usize, usize)| -> Vec<(usize, usize)> {
        let mut out = vec![c];
        out.extend((0..4).filter_map(|d| step(n, c, d)).filter(|&c| !safe(c)));
        out
    };
    let initial: Vec<Key> = (0..n)
        .flat_map(|y| (0..n).map(move |x| (x, y)))
        .filter(|&c| !safe(c) && chebyshev(c, start) > radius)
        .map(|chaser| Key::Play { robot: start, chaser, scanned: false })
        .collect();
    let one = Prob::from_integer(1);
    explore(&actions, initial, Some((n, n)), |key| match *key {
        Key::Goal | Key::Caught => Expansion {
            observation: "over".into(),
            role: if *key == Key::Goal { Role::Reach } else { Role::Avoid },
            moves: (0..actions.len()).map(|a| (a, vec![(*key, one)])).collect(),
            cell: None,
        },
        Key::Play { robot, chaser, scanned } => {
            let next = |robot: (usize, usize), scanned: bool| -> Vec<Key> {
                chaser_moves(chaser)
                    .into_iter()
                    .map(|c| {
                        if c == robot {
                            Key::Caught
                        } else if robot == goal {
                            Key::Goal
                        } else {
                            Key::Play { robot, chaser: c, scanned }
                        }
                    })
                    .collect()
            };
            let mut moves: Vec<(usize, Vec<(Key, Prob)>)> = (0..4)
                .map(|dir| (dir, uniform(next(step_clipped(n, robot, dir), false))))
                .collect();
            moves.push((SCAN, uniform(next(robot, true))));
            let seen = scanned || chebyshev(robot, chaser) <= radius;
            let observation = if seen {
                format!("r{}_{}_c{}_{}", robot.0, robot.1, chaser.0, chaser.1)
            } else {
                format!("r{}_{}_none", robot.0, robot.1)
            };
            Expansion {
                observation,
                role: Role::Plain,
                moves,
                cell: Some(robot),
            }
        }
    })
}
