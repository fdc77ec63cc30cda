//! Benchmark fixtures shared by the criterion benches.

use pomdp_shield::benchmarks::random::corpus;
use pomdp_shield::benchmarks::{cheese, generate, BenchmarkParams, Instance};

/// Cheese, obstacle(6) and refuel(6,8).
pub fn quick_instances() -> Vec<(&'static str, Instance)> {
    let mut out = vec![("cheese", cheese::generate())];
    for (name, params) in [("obstacle6", BenchmarkParams::obstacle(6)), ("refuel6_8", BenchmarkParams::refuel(6, 8))] {
        out.push((name, generate(&params).expect("valid parameters")));
    }
    out
}

/// The first `count` random corpus models.
pub fn random_models(count: usize) -> Vec<Instance> {
    corpus(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        assert_eq!(quick_instances().len(), 3);
        assert_eq!(random_models(5).len(), 5);
    }
}
