//! Intercept: catch an agent before it leaves through one of two exits.
//!
//! Reconstruction:
//! - the exits are the two bottom corners; the agent starts in the top row
//!   and each step either stays or moves to a neighbour that brings it
//!   closer to some exit, uniformly;
//! - the robot starts in the centre of the bottom row and sees the agent
//!   within Chebyshev distance R or whenever the agent is in the central
//!   column;
//! - meeting the agent (same cell after the robot's move or after the
//!   agent's) wins; the agent reaching an exit is a violation.

use super::evade::chebyshev;
use super::{explore, step, step_clipped, uniform, BenchmarkError, Expansion, Instance, Role, MOVES};
use crate::pomdp::Prob;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Play { robot: (usize, usize), agent: (usize, usize) },
    Caught,
    Escaped,
}

pub fn generate(n: usize, radius: usize) -> Result<Instance, BenchmarkError> {
    let exits = [(0, n - 1), (n - 1, n - 1)];
    let to_exit = move |c: (usize, usize)| exits.iter().map(|&e| c.0.abs_diff(e.0) + c.1.abs_diff(e.1)).min().unwrap_or(0);
    let agent_moves = move |c: (usize, usize)| -> Vec<(usize, usize)> {
        let mut out = vec![c];
        out.extend((0..4).filter_map(|d| step(n, c, d)).filter(|&d| to_exit(d) < to_exit(c)));
        out
    };
    let robot_start = (n / 2, n - 1);
    let initial: Vec<Key> = (0..n)
        .filter(|&x| x != n / 2 && chebyshev((x, 0), robot_start) > radius)
        .map(|x| Key::Play { robot: robot_start, agent: (x, 0) })
        .collect();
    let one = Prob::from_integer(1);
    explore(&MOVES, initial, Some((n, n)), |key| match *key {
        Key::Caught | Key::Escaped => Expansion {
            observation: "over".into(),
            role: if *key == Key::Caught { Role::Reach } else { Role::Avoid },
            moves: (0..4).map(|a| (a, vec![(*key, one)])).collect(),
            cell: None,
        },
        Key::Play { robot, agent } => {
            let moves = (0..4)
                .map(|dir| {
                    let r = step_clipped(n, robot, dir);
                    let succ = if r == agent {
                        vec![Key::Caught]
                    } else {
                        agent_moves(agent)
                            .into_iter()
                            .map(|a| {
                                if a == r {
                                    Key::Caught
                                } else if exits.contains(&a) {
                                    Key::Escaped
                                } else {
                                    Key::Play { robot: r, agent: a }
                                }
                            })
                            .collect()
                    };
                    (dir, uniform(succ))
                })
                .collect();
            let seen = agent.0 == n / 2 || chebyshev(robot, agent) <= radius;
            let observation = if seen {
                format!("r{}_{}_a{}_{}", robot.0, robot.1, agent.0, agent.1)
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
