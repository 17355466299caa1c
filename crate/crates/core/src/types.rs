//! Shared domain records: the instance model and its JSON file format,
//! distribution identifiers and solve reports.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side length of the square in which customers and facilities are placed.
pub const SQUARE_SIDE: f64 = 100.0;

/// A candidate facility location and the zone it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacilitySpec {
    pub x: f64,
    pub y: f64,
    pub zone: usize,
}

/// A customer with its base demand parameters.
///
/// `zone_rank[n]` is the index of the `(n+1)`-th closest zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomerSpec {
    pub x: f64,
    pub y: f64,
    pub mu: f64,
    pub sigma: f64,
    pub zone_rank: Vec<usize>,
}

/// How the open zones shift a customer's demand distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DemandType {
    /// Every open zone contributes, geometrically decaying with its rank.
    A,
    /// Only the closest zone matters.
    B,
    /// Only the closest *open* zone matters.
    C,
    /// The closest zone raises demand, farther open zones lower it.
    D,
}

impl DemandType {
    pub const ALL: [DemandType; 4] = [DemandType::A, DemandType::B, DemandType::C, DemandType::D];
}

impl fmt::Display for DemandType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DemandType::A => "A",
            DemandType::B => "B",
            DemandType::C => "C",
            DemandType::D => "D",
        };
        f.write_str(s)
    }
}

impl FromStr for DemandType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(DemandType::A),
            "B" | "b" => Ok(DemandType::B),
            "C" | "c" => Ok(DemandType::C),
            "D" | "d" => Ok(DemandType::D),
            other => Err(Error::InvalidParams(format!("unknown demand type `{other}`"))),
        }
    }
}

/// The on-disk representation of an instance. Field names are part of the file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceData {
    pub facilities: Vec<FacilitySpec>,
    pub customers: Vec<CustomerSpec>,
    #[serde(rename = "F")]
    pub fixed_cost: Vec<f64>,
    #[serde(rename = "C")]
    pub capacity: Vec<f64>,
    #[serde(rename = "R")]
    pub revenue: Vec<Vec<f64>>,
    pub demand_type: DemandType,
    pub scenarios_per_distribution: usize,
    pub seed: u64,
    pub config: u8,
}

/// A validated, immutable problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    data: InstanceData,
    zones: Vec<Vec<usize>>,
}

/// Checks that `zones` partitions `0..n_facilities` into nonempty, disjoint sets.
pub fn validate_partition(n_facilities: usize, zones: &[Vec<usize>]) -> Result<()> {
    if zones.is_empty() {
        return Err(Error::invalid("zones", "zones not a partition: no zones"));
    }
    let mut seen = vec![false; n_facilities];
    for (z, members) in zones.iter().enumerate() {
        if members.is_empty() {
            return Err(Error::invalid(
                format!("zones[{z}]"),
                format!("zones not a partition: zone {z} is empty"),
            ));
        }
        for &i in members {
            if i >= n_facilities {
                return Err(Error::invalid(
                    format!("zones[{z}]"),
                    format!("zones not a partition: facility {i} does not exist"),
                ));
            }
            if seen[i] {
                return Err(Error::invalid(
                    format!("zones[{z}]"),
                    format!("zones not a partition: facility {i} appears twice"),
                ));
            }
            seen[i] = true;
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::invalid(
            format!("facilities[{i}]"),
            format!("zones not a partition: facility {i} has no zone"),
        ));
    }
    Ok(())
}

fn is_permutation(v: &[usize], n: usize) -> bool {
    if v.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    v.iter().all(|&z| z < n && !std::mem::replace(&mut seen[z], true))
}

impl InstanceData {
    /// Rewrites the facility zone fields from explicit membership sets.
    pub fn assign_zones(&mut self, zones: &[Vec<usize>]) -> Result<()> {
        validate_partition(self.facilities.len(), zones)?;
        for (z, members) in zones.iter().enumerate() {
            for &i in members {
                self.facilities[i].zone = z;
            }
        }
        Ok(())
    }
}

impl TryFrom<InstanceData> for Instance {
    type Error = Error;

    fn try_from(data: InstanceData) -> Result<Self> {
        let n_fac = data.facilities.len();
        let n_cust = data.customers.len();
        if n_fac == 0 {
            return Err(Error::invalid("facilities", "at least one facility is required"));
        }
        if n_cust == 0 {
            return Err(Error::invalid("customers", "at least one customer is required"));
        }

        let n_zones = data.facilities.iter().map(|f| f.zone).max().unwrap_or(0) + 1;
        let mut zones = vec![Vec::new(); n_zones];
        for (i, f) in data.facilities.iter().enumerate() {
            if !(f.x.is_finite() && f.y.is_finite()) {
                return Err(Error::invalid(format!("facilities[{i}]"), "non-finite coordinate"));
            }
            zones[f.zone].push(i);
        }
        validate_partition(n_fac, &zones)?;

        for (j, c) in data.customers.iter().enumerate() {
            if !(c.mu.is_finite() && c.mu > 0.0) {
                return Err(Error::invalid(format!("customers[{j}].mu"), "must be positive"));
            }
            if !(c.sigma.is_finite() && c.sigma > 0.0) {
                return Err(Error::invalid(format!("customers[{j}].sigma"), "must be positive"));
            }
            if !is_permutation(&c.zone_rank, n_zones) {
                return Err(Error::invalid(
                    format!("customers[{j}].zone_rank"),
                    format!("not a permutation of 0..{n_zones}"),
                ));
            }
        }

        let check_len = |name: &str, len: usize| {
            if len != n_fac {
                Err(Error::invalid(name, format!("expected {n_fac} entries, found {len}")))
            } else {
                Ok(())
            }
        };
        check_len("F", data.fixed_cost.len())?;
        check_len("C", data.capacity.len())?;
        check_len("R", data.revenue.len())?;
        for (i, &f) in data.fixed_cost.iter().enumerate() {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::invalid(format!("F[{i}]"), "fixed cost must be positive"));
            }
        }
        for (i, &c) in data.capacity.iter().enumerate() {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::invalid(format!("C[{i}]"), "capacity must be positive"));
            }
        }
        for (i, row) in data.revenue.iter().enumerate() {
            if row.len() != n_cust {
                return Err(Error::invalid(
                    format!("R[{i}]"),
                    format!("expected {n_cust} entries, found {}", row.len()),
                ));
            }
            if let Some(j) = row.iter().position(|r| !(r.is_finite() && *r >= 0.0)) {
                return Err(Error::invalid(format!("R[{i}][{j}]"), "revenue must be nonnegative"));
            }
        }
        if data.scenarios_per_distribution == 0 {
            return Err(Error::invalid("scenarios_per_distribution", "must be positive"));
        }
        if !(1..=7).contains(&data.config) {
            return Err(Error::invalid("config", "must be in 1..=7"));
        }
        Ok(Instance { data, zones })
    }
}

impl Instance {
    pub fn data(&self) -> &InstanceData {
        &self.data
    }

    pub fn into_data(self) -> InstanceData {
        self.data
    }

    pub fn n_facilities(&self) -> usize {
        self.data.facilities.len()
    }

    pub fn n_customers(&self) -> usize {
        self.data.customers.len()
    }

    pub fn n_zones(&self) -> usize {
        self.zones.len()
    }

    /// Number of distributions that opening decisions can enforce.
    pub fn n_distributions(&self) -> u64 {
        1u64 << self.n_zones()
    }

    pub fn zones(&self) -> &[Vec<usize>] {
        &self.zones
    }

    pub fn facilities(&self) -> &[FacilitySpec] {
        &self.data.facilities
    }

    pub fn customers(&self) -> &[CustomerSpec] {
        &self.data.customers
    }

    pub fn fixed_cost(&self) -> &[f64] {
        &self.data.fixed_cost
    }

    pub fn capacity(&self) -> &[f64] {
        &self.data.capacity
    }

    pub fn revenue(&self) -> &[Vec<f64>] {
        &self.data.revenue
    }

    pub fn demand_type(&self) -> DemandType {
        self.data.demand_type
    }

    pub fn scenarios_per_distribution(&self) -> usize {
        self.data.scenarios_per_distribution
    }

    pub fn seed(&self) -> u64 {
        self.data.seed
    }

    pub fn config(&self) -> u8 {
        self.data.config
    }

    /// Zone of every facility.
    pub fn zone_of(&self, facility: usize) -> usize {
        self.data.facilities[facility].zone
    }

    /// Mean position of the facilities in each zone.
    pub fn zone_centroids(&self) -> Vec<(f64, f64)> {
        self.zones
            .iter()
            .map(|members| {
                let n = members.len() as f64;
                let (sx, sy) = members.iter().fold((0.0, 0.0), |(sx, sy), &i| {
                    (sx + self.data.facilities[i].x, sy + self.data.facilities[i].y)
                });
                (sx / n, sy / n)
            })
            .collect()
    }

    /// Largest revenue any facility earns per unit delivered to `customer`.
    pub fn max_revenue(&self, customer: usize) -> f64 {
        self.data
            .revenue
            .iter()
            .map(|row| row[customer])
            .fold(0.0, f64::max)
    }

    /// Sum of fixed costs of the open facilities.
    pub fn opening_cost(&self, x: &[bool]) -> f64 {
        x.iter()
            .zip(&self.data.fixed_cost)
            .filter(|(open, _)| **open)
            .map(|(_, f)| f)
            .sum()
    }

    /// Same data with the zone structure replaced; ranks are recomputed by the caller.
    pub fn with_data(data: InstanceData) -> Result<Instance> {
        Instance::try_from(data)
    }
}

/// Reads and validates an instance file.
pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_instance(&text)
}

/// Parses and validates instance JSON.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let data: InstanceData = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Instance::try_from(data)
}

pub fn instance_to_json(instance: &Instance) -> String {
    serde_json::to_string_pretty(instance.data()).expect("instance data is always serializable")
}

pub fn save_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = instance_to_json(instance);
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Identifies one of the `2^|Z|` distributions: bit `z` is set iff zone `z` is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DistributionId(pub u32);

impl DistributionId {
    pub const EMPTY: DistributionId = DistributionId(0);

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn is_active(self, zone: usize) -> bool {
        self.0 >> zone & 1 == 1
    }

    pub fn active_count(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Renders zone 0 first, e.g. `"100"` when only zone 0 is active out of three.
    pub fn zone_string(self, n_zones: usize) -> String {
        (0..n_zones)
            .map(|z| if self.is_active(z) { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Display for DistributionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    TimeLimit,
    Infeasible,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::TimeLimit => "TimeLimit",
            SolveStatus::Infeasible => "Infeasible",
        };
        f.write_str(s)
    }
}

/// Relative optimality gap in percent.
pub fn gap_percent(bound: f64, incumbent: f64) -> f64 {
    100.0 * (bound - incumbent).abs() / (1e-10 + incumbent.abs())
}

/// Outcome of any of the solvers, in minimization orientation
/// (`objective = opening cost - expected revenue`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub incumbent_x: Option<Vec<bool>>,
    pub objective: f64,
    pub best_bound: f64,
    pub gap_percent: f64,
    pub wall_time: f64,
    pub iterations: usize,
    pub cuts_total: usize,
    /// Number of optimality cuts per distribution mask.
    pub cuts_per_distribution: BTreeMap<u32, usize>,
    pub bnb_nodes: usize,
    pub status: SolveStatus,
}

pub const REPORT_CSV_HEADER: &str = "instance,method,vi,status,objective,bound,gap_pct,time_s,iters,cuts,nodes";

impl SolveReport {
    /// One CSV row matching [`REPORT_CSV_HEADER`].
    pub fn csv_row(&self, instance: &str, method: &str, vi: bool) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.3},{},{},{}",
            instance,
            method,
            vi,
            self.status,
            self.objective,
            self.best_bound,
            self.gap_percent,
            self.wall_time,
            self.iterations,
            self.cuts_total,
            self.bnb_nodes
        )
    }

    /// Mode of the cuts-per-visited-distribution histogram, ties to the smaller count.
    pub fn cuts_per_distribution_mode(&self) -> Option<usize> {
        let mut freq: BTreeMap<usize, usize> = BTreeMap::new();
        for &c in self.cuts_per_distribution.values().filter(|&&c| c > 0) {
            *freq.entry(c).or_default() += 1;
        }
        freq.into_iter()
            .fold(None, |best: Option<(usize, usize)>, (count, f)| match best {
                Some((_, bf)) if bf >= f => best,
                _ => Some((count, f)),
            })
            .map(|(count, _)| count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn minimal_json() -> &'static str {
        r#"{
            "facilities": [{"x": 10.0, "y": 20.0, "zone": 0}, {"x": 30.0, "y": 40.0, "zone": 0}],
            "customers": [{"x": 50.0, "y": 50.0, "mu": 30.0, "sigma": 3.0, "zone_rank": [0]}],
            "F": [1000.0, 1000.0],
            "C": [100.0, 100.0],
            "R": [[400.0], [400.0]],
            "demand_type": "A",
            "scenarios_per_distribution": 4,
            "seed": 7,
            "config": 1
        }"#
    }

    #[test]
    fn minimal_file_loads() {
        let inst = parse_instance(minimal_json()).unwrap();
        assert_eq!(inst.n_facilities(), 2);
        assert_eq!(inst.n_zones(), 1);
        assert_eq!(inst.n_customers(), 1);
        assert_eq!(inst.zones(), &[vec![0, 1]]);
    }

    #[test]
    fn overlapping_zones_rejected() {
        let mut data = parse_instance(minimal_json()).unwrap().into_data();
        let err = data.assign_zones(&[vec![0, 1], vec![1]]).unwrap_err();
        assert!(err.to_string().contains("zones not a partition"), "{err}");
    }

    #[test]
    fn empty_zone_in_file_rejected() {
        let text = minimal_json().replace(r#""y": 40.0, "zone": 0"#, r#""y": 40.0, "zone": 2"#);
        let err = parse_instance(&text).unwrap_err();
        assert!(err.to_string().contains("zones not a partition"), "{err}");
    }

    #[test]
    fn bad_rank_reports_field_path() {
        let text = minimal_json().replace(r#""zone_rank": [0]"#, r#""zone_rank": [1]"#);
        let err = parse_instance(&text).unwrap_err();
        assert!(err.to_string().contains("customers[0].zone_rank"), "{err}");
    }

    #[test]
    fn negative_revenue_rejected() {
        let text = minimal_json().replace("[[400.0], [400.0]]", "[[400.0], [-1.0]]");
        let err = parse_instance(&text).unwrap_err();
        assert!(err.to_string().contains("R[1][0]"), "{err}");
    }

    #[test]
    fn save_then_load_is_identity() {
        let inst = parse_instance(minimal_json()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.json");
        save_instance(&inst, &path).unwrap();
        assert_eq!(load_instance(&path).unwrap(), inst);
        let again = dir.path().join("again.json");
        save_instance(&load_instance(&path).unwrap(), &again).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
    }

    #[test]
    fn save_to_missing_directory_fails() {
        let inst = parse_instance(minimal_json()).unwrap();
        let err = save_instance(&inst, "/nonexistent-dir/sub/inst.json").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn gap_formula() {
        assert_eq!(gap_percent(-100.0, -100.0), 0.0);
        let g = gap_percent(-101.0, -100.0);
        assert!((g - 100.0 / (1e-10 + 100.0)).abs() < 1e-15);
    }

    #[test]
    fn distribution_string_lists_zone_zero_first() {
        assert_eq!(DistributionId(0b001).zone_string(3), "100");
        assert_eq!(DistributionId(0b111).zone_string(3), "111");
        assert_eq!(DistributionId(0).zone_string(3), "000");
    }

    #[test]
    fn cut_mode() {
        let mut r = SolveReport {
            incumbent_x: None,
            objective: 0.0,
            best_bound: 0.0,
            gap_percent: 0.0,
            wall_time: 0.0,
            iterations: 0,
            cuts_total: 0,
            cuts_per_distribution: BTreeMap::new(),
            bnb_nodes: 0,
            status: SolveStatus::Optimal,
        };
        assert_eq!(r.cuts_per_distribution_mode(), None);
        r.cuts_per_distribution = [(0, 1), (1, 2), (3, 1), (5, 2)].into_iter().collect();
        assert_eq!(r.cuts_per_distribution_mode(), Some(1));
        r.cuts_per_distribution.insert(6, 2);
        assert_eq!(r.cuts_per_distribution_mode(), Some(2));
    }
}
