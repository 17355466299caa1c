//! Decision-dependent demand: which distribution a decision enforces, the
//! shifted demand parameters, and sampled scenario sets.

mod scenarios;
pub mod truncnorm;

pub use scenarios::{FixedScenarios, SampledScenarios, ScenarioProvider, ScenarioSet, DEFAULT_CACHE_CAPACITY};
pub use truncnorm::{norm_cdf, norm_ppf, norm_sf, truncated_normal_quantile};

use crate::types::{DemandType, DistributionId, Instance};

/// The distribution enforced by opening decisions `x`: zone `z` is active iff it
/// contains an open facility.
pub fn identify_distribution(instance: &Instance, x: &[bool]) -> DistributionId {
    debug_assert_eq!(x.len(), instance.n_facilities());
    let mut mask = 0u32;
    for (i, &open) in x.iter().enumerate() {
        if open {
            mask |= 1 << instance.zone_of(i);
        }
    }
    DistributionId(mask)
}

/// Active-zone indicator per zone for `d`.
pub fn zone_activation(d: DistributionId, n_zones: usize) -> Vec<bool> {
    (0..n_zones).map(|z| d.is_active(z)).collect()
}

/// Demand mean and standard deviation of a customer with base parameters
/// `(mu, sigma)` and zone ranking `zone_rank` under distribution `d`.
pub fn dist_params(dt: DemandType, mu: f64, sigma: f64, zone_rank: &[usize], d: DistributionId) -> (f64, f64) {
    let active = |n: usize| d.is_active(zone_rank[n - 1]);
    let (mut m, mut s) = (1.0, 1.0);
    match dt {
        DemandType::A => {
            for n in 1..=zone_rank.len() {
                if active(n) {
                    m += 0.5f64.powi(n as i32);
                    s -= 0.4f64.powi(n as i32);
                }
            }
        }
        DemandType::B => {
            if !zone_rank.is_empty() && active(1) {
                m += 0.5;
                s -= 0.4;
            }
        }
        DemandType::C => {
            if let Some(n) = (1..=zone_rank.len()).find(|&n| active(n)) {
                m += 0.5f64.powi(n as i32);
                s -= 0.4f64.powi(n as i32);
            }
        }
        DemandType::D => {
            for n in 1..=zone_rank.len() {
                if active(n) {
                    let sign = if n == 1 { 1.0 } else { -1.0 };
                    m += sign * 0.5f64.powi(n as i32);
                    s -= sign * 0.4f64.powi(n as i32);
                }
            }
        }
    }
    (mu * m, sigma * s)
}

/// [`dist_params`] for customer `j` of `instance`.
pub fn customer_params(instance: &Instance, j: usize, d: DistributionId) -> (f64, f64) {
    let c = &instance.customers()[j];
    dist_params(instance.demand_type(), c.mu, c.sigma, &c.zone_rank, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instgen::{generate, GeneratorParams};

    fn close(a: (f64, f64), b: (f64, f64)) -> bool {
        (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12
    }

    const RANK: [usize; 3] = [0, 1, 2];

    #[test]
    fn empty_mask_keeps_base_parameters() {
        for dt in DemandType::ALL {
            assert!(close(dist_params(dt, 40.0, 8.0, &RANK, DistributionId(0)), (40.0, 8.0)));
        }
    }

    #[test]
    fn hand_evaluated_parameters() {
        let all = DistributionId(0b111);
        assert!(close(dist_params(DemandType::A, 40.0, 8.0, &RANK, all), (75.0, 3.008)));
        assert!(close(dist_params(DemandType::B, 40.0, 8.0, &RANK, all), (60.0, 4.8)));
        // Closest open zone is the second ranked one.
        assert!(close(dist_params(DemandType::C, 40.0, 8.0, &RANK, DistributionId(0b110)), (50.0, 6.72)));
        // Closest zone closed, second open.
        assert!(close(dist_params(DemandType::D, 40.0, 8.0, &RANK, DistributionId(0b010)), (30.0, 9.28)));
    }

    #[test]
    fn rank_order_is_respected() {
        // Zone 2 is the closest one.
        let rank = [2, 0, 1];
        let (m, _) = dist_params(DemandType::B, 40.0, 8.0, &rank, DistributionId(0b100));
        assert_eq!(m, 60.0);
        let (m, _) = dist_params(DemandType::B, 40.0, 8.0, &rank, DistributionId(0b011));
        assert_eq!(m, 40.0);
    }

    #[test]
    fn parameters_stay_positive_over_all_masks() {
        for dt in DemandType::ALL {
            let inst = generate(&GeneratorParams::new(12, 6, 10, 5, dt, 1, 3)).unwrap();
            for mask in 0..1u32 << inst.n_zones() {
                for j in 0..inst.n_customers() {
                    let (m, s) = customer_params(&inst, j, DistributionId(mask));
                    assert!(m > 0.0 && s > 0.0);
                }
            }
        }
    }

    #[test]
    fn exactly_one_distribution_per_decision() {
        let inst = generate(&GeneratorParams::new(4, 5, 2, 3, DemandType::A, 1, 9)).unwrap();
        let mut hits = vec![0usize; 1 << inst.n_zones()];
        for bits in 0..16u32 {
            let x: Vec<bool> = (0..4).map(|i| bits >> i & 1 == 1).collect();
            let d = identify_distribution(&inst, &x);
            hits[d.mask() as usize] += 1;
            for z in 0..inst.n_zones() {
                let open_in_zone = inst.zones()[z].iter().any(|&i| x[i]);
                assert_eq!(d.is_active(z), open_in_zone);
            }
        }
        assert_eq!(hits.iter().sum::<usize>(), 16);
        assert_eq!(hits[0], 1);
    }
}
