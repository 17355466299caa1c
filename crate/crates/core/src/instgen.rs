//! Seeded random instance generation.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::types::{CustomerSpec, DemandType, FacilitySpec, Instance, InstanceData, SQUARE_SIDE};

const KMEANS_MAX_ITER: usize = 100;
const KMEANS_TOL: f64 = 1e-9;

/// Capacity factor, fixed-cost factor and unit revenue of a configuration.
pub fn config_parameters(config: u8) -> Result<(f64, f64, f64)> {
    Ok(match config {
        1 => (15.0, 500.0, 400.0),
        2 => (12.5, 500.0, 400.0),
        3 => (17.5, 500.0, 400.0),
        4 => (15.0, 250.0, 400.0),
        5 => (15.0, 750.0, 400.0),
        6 => (15.0, 500.0, 200.0),
        7 => (15.0, 500.0, 600.0),
        other => return Err(Error::InvalidParams(format!("config {other} is not in 1..=7"))),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorParams {
    pub n_facilities: usize,
    pub n_customers: usize,
    pub n_zones: usize,
    pub n_scenarios: usize,
    pub demand_type: DemandType,
    pub config: u8,
    pub seed: u64,
}

impl GeneratorParams {
    pub fn new(
        n_facilities: usize,
        n_customers: usize,
        n_zones: usize,
        n_scenarios: usize,
        demand_type: DemandType,
        config: u8,
        seed: u64,
    ) -> Self {
        GeneratorParams { n_facilities, n_customers, n_zones, n_scenarios, demand_type, config, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_facilities < 3 {
            return Err(Error::InvalidParams("at least 3 facilities are required".into()));
        }
        if self.n_customers == 0 {
            return Err(Error::InvalidParams("at least one customer is required".into()));
        }
        if self.n_zones == 0 || self.n_zones > self.n_facilities {
            return Err(Error::InvalidParams(format!(
                "zone count {} must lie in 1..={}",
                self.n_zones, self.n_facilities
            )));
        }
        if self.n_zones > 31 {
            return Err(Error::InvalidParams("at most 31 zones are supported".into()));
        }
        if self.n_scenarios == 0 {
            return Err(Error::InvalidParams("at least one scenario is required".into()));
        }
        config_parameters(self.config).map(|_| ())
    }
}

pub type Point = (f64, f64);

fn dist2(a: Point, b: Point) -> f64 {
    (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
}

fn nearest(p: Point, centroids: &[Point]) -> usize {
    let mut best = 0;
    for (c, &q) in centroids.iter().enumerate().skip(1) {
        if dist2(p, q) < dist2(p, centroids[best]) {
            best = c;
        }
    }
    best
}

fn kmeans_pp_seeds(points: &[Point], k: usize, rng: &mut ChaCha12Rng) -> Vec<Point> {
    let mut centroids = vec![points[rng.gen_range(0..points.len())]];
    while centroids.len() < k {
        let weights: Vec<f64> = points
            .iter()
            .map(|&p| centroids.iter().map(|&c| dist2(p, c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = weights.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = weights.iter().rposition(|&w| w > 0.0).unwrap();
            for (i, &w) in weights.iter().enumerate() {
                if w > 0.0 && target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.gen_range(0..points.len())
        };
        centroids.push(points[next]);
    }
    centroids
}

fn centroids_of(points: &[Point], assign: &[usize], k: usize) -> Vec<Option<Point>> {
    let mut sums = vec![(0.0, 0.0, 0usize); k];
    for (p, &z) in points.iter().zip(assign) {
        sums[z].0 += p.0;
        sums[z].1 += p.1;
        sums[z].2 += 1;
    }
    sums.into_iter()
        .map(|(x, y, n)| (n > 0).then(|| (x / n as f64, y / n as f64)))
        .collect()
}

/// Partitions `points` into `k` nonempty clusters by k-means with k-means++
/// seeding. Clusters are numbered in order of their smallest member index.
pub fn cluster_zones(points: &[Point], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidParams(format!("cannot form {k} clusters from {} points", points.len())));
    }
    let mut rng = stream_rng(seed, Stream::Clustering);
    let mut centroids = kmeans_pp_seeds(points, k, &mut rng);
    let mut assign: Vec<usize> = points.iter().map(|&p| nearest(p, &centroids)).collect();

    for _ in 0..KMEANS_MAX_ITER {
        // Repair empty clusters with the point farthest from its centroid.
        loop {
            let current = centroids_of(points, &assign, k);
            let Some(empty) = current.iter().position(Option::is_none) else {
                centroids = current.into_iter().map(Option::unwrap).collect();
                break;
            };
            let mut sizes = vec![0usize; k];
            assign.iter().for_each(|&z| sizes[z] += 1);
            let donor = (0..points.len())
                .filter(|&i| sizes[assign[i]] > 1)
                .max_by(|&a, &b| {
                    let da = dist2(points[a], current[assign[a]].unwrap());
                    let db = dist2(points[b], current[assign[b]].unwrap());
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .expect("k <= number of points leaves a cluster with two members");
            assign[donor] = empty;
        }
        let next: Vec<usize> = points.iter().map(|&p| nearest(p, &centroids)).collect();
        let moved = points
            .iter()
            .zip(next.iter().zip(&assign))
            .filter(|(_, (n, a))| n != a)
            .any(|(&p, (&n, &a))| dist2(p, centroids[n]) < dist2(p, centroids[a]) - KMEANS_TOL);
        if !moved {
            break;
        }
        assign = next;
    }

    let mut order: Vec<usize> = Vec::with_capacity(k);
    for &z in &assign {
        if !order.contains(&z) {
            order.push(z);
        }
    }
    let mut relabel = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        relabel[old] = new;
    }
    Ok(assign.into_iter().map(|z| relabel[z]).collect())
}

/// Zone indices sorted by distance from `point`, ties to the lower index.
pub fn rank_zones(point: Point, centroids: &[Point]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..centroids.len()).collect();
    order.sort_by(|&a, &b| dist2(point, centroids[a]).total_cmp(&dist2(point, centroids[b])).then(a.cmp(&b)));
    order
}

fn uniform_in(rng: &mut ChaCha12Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// Builds a random instance; equal parameters give identical instances.
pub fn generate(params: &GeneratorParams) -> Result<Instance> {
    params.validate()?;
    let (cap, open, rev) = config_parameters(params.config)?;
    let n_cust = params.n_customers;
    let mut coords = stream_rng(params.seed, Stream::Coordinates);
    let mut demands = stream_rng(params.seed, Stream::Demands);

    let customer_xy: Vec<Point> = (0..n_cust)
        .map(|_| (uniform_in(&mut coords, 0.0, SQUARE_SIDE), uniform_in(&mut coords, 0.0, SQUARE_SIDE)))
        .collect();
    let mu: Vec<f64> = (0..n_cust).map(|_| uniform_in(&mut demands, 10.0, 50.0)).collect();
    let sigma: Vec<f64> = mu.iter().map(|m| m * uniform_in(&mut demands, 0.05, 0.35)).collect();

    let mut by_demand: Vec<usize> = (0..n_cust).collect();
    by_demand.sort_by(|&a, &b| mu[b].total_cmp(&mu[a]).then(a.cmp(&b)));

    let mut facility_xy = Vec::with_capacity(params.n_facilities);
    for &j in by_demand.iter().cycle().take(3) {
        let (cx, cy) = customer_xy[j];
        let x = uniform_in(&mut coords, (cx - 5.0).max(0.0), (cx + 5.0).min(SQUARE_SIDE));
        let y = uniform_in(&mut coords, (cy - 5.0).max(0.0), (cy + 5.0).min(SQUARE_SIDE));
        facility_xy.push((x, y));
    }
    while facility_xy.len() < params.n_facilities {
        facility_xy.push((uniform_in(&mut coords, 20.0, 80.0), uniform_in(&mut coords, 20.0, 80.0)));
    }

    let zone_of = cluster_zones(&facility_xy, params.n_zones, params.seed)?;
    let centroids: Vec<Point> = centroids_of(&facility_xy, &zone_of, params.n_zones)
        .into_iter()
        .map(|c| c.expect("clusters are nonempty"))
        .collect();

    let facilities = facility_xy
        .iter()
        .zip(&zone_of)
        .map(|(&(x, y), &zone)| FacilitySpec { x, y, zone })
        .collect();
    let customers = (0..n_cust)
        .map(|j| CustomerSpec {
            x: customer_xy[j].0,
            y: customer_xy[j].1,
            mu: mu[j],
            sigma: sigma[j],
            zone_rank: rank_zones(customer_xy[j], &centroids),
        })
        .collect();

    let n_fac = params.n_facilities;
    Instance::try_from(InstanceData {
        facilities,
        customers,
        fixed_cost: vec![open * n_cust as f64; n_fac],
        capacity: vec![cap * n_cust as f64; n_fac],
        revenue: vec![vec![rev; n_cust]; n_fac],
        demand_type: params.demand_type,
        scenarios_per_distribution: params.n_scenarios,
        seed: params.seed,
        config: params.config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn configuration_table() {
        assert_eq!(config_parameters(1).unwrap(), (15.0, 500.0, 400.0));
        assert_eq!(config_parameters(4).unwrap(), (15.0, 250.0, 400.0));
        assert!(config_parameters(0).is_err());
        assert!(config_parameters(8).is_err());
    }

    #[test]
    fn generated_costs_follow_configuration() {
        let inst = generate(&GeneratorParams::new(6, 20, 2, 5, DemandType::A, 5, 1)).unwrap();
        assert!(inst.fixed_cost().iter().all(|&f| f == 750.0 * 20.0));
        assert!(inst.capacity().iter().all(|&c| c == 15.0 * 20.0));
        assert!(inst.revenue().iter().flatten().all(|&r| r == 400.0));
    }

    #[test]
    fn deterministic_in_seed() {
        let p = GeneratorParams::new(10, 30, 5, 10, DemandType::C, 2, 77);
        assert_eq!(generate(&p).unwrap(), generate(&p).unwrap());
        let q = GeneratorParams { seed: 78, ..p };
        assert_ne!(generate(&q).unwrap().facilities(), generate(&p).unwrap().facilities());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(generate(&GeneratorParams::new(2, 5, 1, 5, DemandType::A, 1, 0)).is_err());
        assert!(generate(&GeneratorParams::new(5, 5, 6, 5, DemandType::A, 1, 0)).is_err());
        assert!(generate(&GeneratorParams::new(5, 5, 2, 0, DemandType::A, 1, 0)).is_err());
        assert!(generate(&GeneratorParams::new(5, 5, 2, 5, DemandType::A, 9, 0)).is_err());
    }

    #[test]
    fn demand_ranges_over_many_instances() {
        for seed in 0..1000 {
            let inst = generate(&GeneratorParams::new(4, 5, 2, 1, DemandType::B, 1, seed)).unwrap();
            for c in inst.customers() {
                assert!((10.0..=50.0).contains(&c.mu));
                let ratio = c.sigma / c.mu;
                assert!((0.05 - 1e-12..=0.35 + 1e-12).contains(&ratio));
                assert!((0.0..=100.0).contains(&c.x) && (0.0..=100.0).contains(&c.y));
            }
        }
    }

    #[test]
    fn collinear_points_split_in_half() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (10.0, 0.0), (11.0, 0.0)];
        for seed in 0..20 {
            assert_eq!(cluster_zones(&pts, 2, seed).unwrap(), vec![0, 0, 1, 1]);
        }
    }

    #[test]
    fn trivial_cluster_counts() {
        let pts = [(3.0, 4.0), (50.0, 50.0), (90.0, 10.0), (3.0, 5.0)];
        assert_eq!(cluster_zones(&pts, 1, 5).unwrap(), vec![0; 4]);
        assert_eq!(cluster_zones(&pts, 4, 5).unwrap(), vec![0, 1, 2, 3]);
        assert!(cluster_zones(&pts, 5, 5).is_err());
    }

    #[test]
    fn duplicate_points_still_fill_every_cluster() {
        let pts = [(1.0, 1.0); 5];
        let z = cluster_zones(&pts, 3, 2).unwrap();
        for k in 0..3 {
            assert!(z.contains(&k));
        }
    }

    #[test]
    fn zone_ranking() {
        assert_eq!(rank_zones((0.0, 0.0), &[(1.0, 0.0), (2.0, 0.0)]), vec![0, 1]);
        assert_eq!(rank_zones((0.0, 0.0), &[(2.0, 0.0), (1.0, 0.0)]), vec![1, 0]);
        assert_eq!(rank_zones((0.0, 0.0), &[(0.0, 1.0), (1.0, 0.0), (-1.0, 0.0)]), vec![0, 1, 2]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn generated_instances_satisfy_invariants(
            n_fac in 3usize..16,
            n_cust in 1usize..40,
            zone_frac in 0.0f64..1.0,
            seed in any::<u64>(),
        ) {
            let n_zones = 1 + ((n_fac - 1) as f64 * zone_frac) as usize;
            let inst = generate(&GeneratorParams::new(n_fac, n_cust, n_zones, 3, DemandType::A, 1, seed)).unwrap();
            prop_assert_eq!(inst.n_zones(), n_zones);

            // Zones are a fixed point of the clustering.
            let centroids = inst.zone_centroids();
            for f in inst.facilities() {
                let own = dist2((f.x, f.y), centroids[f.zone]);
                for &c in &centroids {
                    prop_assert!(dist2((f.x, f.y), c) >= own - 1e-9);
                }
            }

            // Ranks reproduce centroid distances.
            for c in inst.customers() {
                prop_assert_eq!(&c.zone_rank, &rank_zones((c.x, c.y), &centroids));
            }

            // Each of the three largest-demand customers has a nearby facility.
            let mut by_mu: Vec<&CustomerSpec> = inst.customers().iter().collect();
            by_mu.sort_by(|a, b| b.mu.total_cmp(&a.mu));
            for c in by_mu.iter().take(3) {
                let near = inst
                    .facilities()
                    .iter()
                    .any(|f| (f.x - c.x).abs().max((f.y - c.y).abs()) <= 5.0 + 1e-12);
                prop_assert!(near);
            }
        }
    }
}
