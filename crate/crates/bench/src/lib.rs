//! Fixtures shared by the benchmarks.

use ddfl_core::instgen::{generate, GeneratorParams};
use ddfl_core::{DemandType, Problem};

/// A generated problem with configuration 1 and its scenarios sampled lazily.
pub fn problem(facilities: usize, customers: usize, zones: usize, scenarios: usize, seed: u64) -> Problem {
    let params = GeneratorParams::new(facilities, customers, zones, scenarios, DemandType::A, 1, seed);
    Problem::new(generate(&params).expect("benchmark parameters are valid"))
}

/// Every other facility open.
pub fn alternating_decision(facilities: usize) -> Vec<bool> {
    (0..facilities).map(|i| i % 2 == 0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_consistent() {
        let p = problem(6, 8, 2, 5, 1);
        let x = alternating_decision(6);
        assert!(p.expected_revenue(&x).unwrap() > 0.0);
    }
}
