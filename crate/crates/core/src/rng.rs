//! Seeded random streams. Every consumer draws from its own ChaCha stream so
//! that changing one part of the generator never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::RngCore;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Coordinates = 1,
    Demands = 2,
    Clustering = 3,
    Scenarios = 4,
}

/// A generator for one named stream of `seed`.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Maps 52 random bits to the open interval (0, 1).
pub fn open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) / (1u64 << 52) as f64
}

/// Random-access uniforms for common random numbers: the value for
/// `(customer, scenario)` depends only on the seed and those two indices.
#[derive(Debug, Clone)]
pub struct ScenarioUniforms {
    rng: ChaCha12Rng,
}

impl ScenarioUniforms {
    pub fn new(seed: u64) -> Self {
        ScenarioUniforms { rng: stream_rng(seed, Stream::Scenarios) }
    }

    pub fn get(&mut self, customer: usize, scenario: usize) -> f64 {
        let index = ((customer as u128) << 32) | scenario as u128;
        self.rng.set_word_pos(index * 2);
        open_unit(self.rng.next_u64())
    }

    /// Uniforms in `[s * n_customers + j]` order.
    pub fn table(seed: u64, n_customers: usize, n_scenarios: usize) -> Vec<f64> {
        let mut u = ScenarioUniforms::new(seed);
        let mut out = Vec::with_capacity(n_customers * n_scenarios);
        for s in 0..n_scenarios {
            for j in 0..n_customers {
                out.push(u.get(j, s));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn open_unit_bounds() {
        assert!(open_unit(0) > 0.0);
        assert!(open_unit(u64::MAX) < 1.0);
    }

    #[test]
    fn uniforms_are_random_access() {
        let mut a = ScenarioUniforms::new(11);
        let mut b = ScenarioUniforms::new(11);
        let v = a.get(3, 7);
        b.get(0, 0);
        b.get(5, 2);
        assert_eq!(b.get(3, 7), v);
        assert_ne!(a.get(3, 8), v);
        assert_ne!(ScenarioUniforms::new(12).get(3, 7), v);
    }

    #[test]
    fn table_prefix_is_stable_in_scenario_count() {
        let small = ScenarioUniforms::table(5, 4, 3);
        let big = ScenarioUniforms::table(5, 4, 6);
        assert_eq!(&big[..12], &small[..]);
    }

    #[test]
    fn streams_differ() {
        let mut a = stream_rng(1, Stream::Coordinates);
        let mut b = stream_rng(1, Stream::Demands);
        assert_ne!(a.next_u64(), b.next_u64());
    }
}
