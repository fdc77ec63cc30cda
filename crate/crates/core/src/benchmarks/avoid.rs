//! Avoid: cross the grid while keeping away from a patrolling agent.
//!
//! Reconstruction:
//! - the patrol walks a fixed loop along the ring one cell inside the
//!   border, advancing zero, one or two cells per step uniformly;
//! - the robot goes from the top-left to the bottom-right corner, sees the
//!   patrol within Chebyshev distance R, and knows the route;
//! - being within Chebyshev distance 0 (same cell) is a violation.

use super::evade::chebyshev;
use super::{explore, step_clipped, uniform, BenchmarkError, Expansion, Instance, Role, MOVES};
use crate::pomdp::Prob;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Play { robot: (usize, usize), patrol: usize },
    Goal,
    Hit,
}

fn route(n: usize) -> Vec<(usize, usize)> {
    let (lo, hi) = (1, n - 2);
    let mut r = Vec::new();
    for x in lo..hi {
        r.push((x, lo));
    }
    for y in lo..hi {
        r.push((hi, y));
    }
    for x in (lo + 1..=hi).rev() {
        r.push((x, hi));
    }
    for y in (lo + 1..=hi).rev() {
        r.push((lo, y));
    }
    r
}

pub fn generate(n: usize, radius: usize) -> Result<Instance, BenchmarkError> {
    let ring = route(n);
    let len = ring.len();
    let start = (0, 0);
    let goal = (n - 1, n - 1);
    let initial: Vec<Key> = (0..len)
        .filter(|&i| chebyshev(ring[i], start) > radius)
        .map(|patrol| Key::Play { robot: start, patrol })
        .collect();
    let one = Prob::from_integer(1);
    explore(&MOVES, initial, Some((n, n)), |key| match *key {
        Key::Goal | Key::Hit => Expansion {
            observation: "over".into(),
            role: if *key == Key::Goal { Role::Reach } else { Role::Avoid },
            moves: (0..4).map(|a| (a, vec![(*key, one)])).collect(),
            cell: None,
        },
        Key::Play { robot, patrol } => {
            let moves = (0..4)
                .map(|dir| {
                    let r = step_clipped(n, robot, dir);
                    let succ = (0..3)
                        .map(|adv| {
                            let p = (patrol + adv) % len;
                            if ring[p] == r {
                                Key::Hit
                            } else if r == goal {
                                Key::Goal
                            } else {
                                Key::Play { robot: r, patrol: p }
                            }
                        })
                        .collect();
                    (dir, uniform(succ))
                })
                .collect();
            let observation = if chebyshev(robot, ring[patrol]) <= radius {
                format!("r{}_{}_p{patrol}", robot.0, robot.1)
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
