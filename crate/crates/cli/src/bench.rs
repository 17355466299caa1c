//! Batch runs aggregated by instance size and demand type.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use ddfl_core::{load_instance, DemandType, Problem, SolveReport, SolveStatus};

use crate::{output_err, solve_with, BenchArgs, CliError, Method, Result};

pub const BENCH_CSV_HEADER: &str = "group,size,demand_type,method,runs,feasible,avg_gap_pct,below_0_5_pct,\
avg_time_s,avg_time_solved_s,solved,avg_cuts_per_dist,std_cuts_per_dist,mode_cuts_per_dist,avg_nodes";

/// One finished run with the attributes used for grouping.
#[derive(Debug, Clone)]
pub struct BenchRun {
    pub facilities: usize,
    pub zones: usize,
    pub demand_type: DemandType,
    pub method: Method,
    pub report: SolveReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Group {
    Facilities,
    Zones,
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

/// Aggregated rows, first by facility count then by zone count.
pub fn aggregate(runs: &[BenchRun]) -> Vec<String> {
    let mut groups: BTreeMap<(Group, usize, DemandType, &'static str), Vec<&BenchRun>> = BTreeMap::new();
    for r in runs {
        groups.entry((Group::Facilities, r.facilities, r.demand_type, r.method.name())).or_default().push(r);
        groups.entry((Group::Zones, r.zones, r.demand_type, r.method.name())).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((group, size, dt, method), rs)| {
            let feasible: Vec<&SolveReport> =
                rs.iter().map(|r| &r.report).filter(|r| r.incumbent_x.is_some() && r.objective.is_finite()).collect();
            let avg_gap = mean(feasible.iter().map(|r| r.gap_percent));
            let below = feasible.iter().filter(|r| r.gap_percent < 0.5).count();
            let avg_time = mean(rs.iter().map(|r| r.report.wall_time));
            let solved: Vec<&SolveReport> =
                rs.iter().map(|r| &r.report).filter(|r| r.status == SolveStatus::Optimal).collect();
            let avg_time_solved = mean(solved.iter().map(|r| r.wall_time));
            let counts: Vec<f64> = rs
                .iter()
                .flat_map(|r| r.report.cuts_per_distribution.values())
                .filter(|&&c| c > 0)
                .map(|&c| c as f64)
                .collect();
            let avg_cuts = mean(counts.iter().copied());
            let std_cuts = avg_cuts.map(|m| mean(counts.iter().map(|c| (c - m).powi(2))).unwrap_or(0.0).sqrt());
            let mode_cuts = cuts_mode(&counts);
            let avg_nodes = mean(rs.iter().map(|r| r.report.bnb_nodes as f64));
            let group = match group {
                Group::Facilities => "facilities",
                Group::Zones => "zones",
            };
            format!(
                "{group},{size},{dt},{method},{},{},{},{below},{},{},{},{},{},{},{}",
                rs.len(),
                feasible.len(),
                fmt_opt(avg_gap),
                fmt_opt(avg_time),
                fmt_opt(avg_time_solved),
                solved.len(),
                fmt_opt(avg_cuts),
                fmt_opt(std_cuts),
                mode_cuts.map_or_else(String::new, |m| m.to_string()),
                fmt_opt(avg_nodes),
            )
        })
        .collect()
}

fn cuts_mode(counts: &[f64]) -> Option<usize> {
    let mut freq: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in counts {
        *freq.entry(c as usize).or_default() += 1;
    }
    freq.into_iter().fold(None, |best: Option<(usize, usize)>, (c, f)| match best {
        Some((_, bf)) if bf >= f => best,
        _ => Some((c, f)),
    })
    .map(|(c, _)| c)
}

/// Instance files of `dir` in name order.
pub fn instance_files(dir: &std::path::Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Core(ddfl_core::Error::Io { path: dir.into(), source: e }))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn cmd_bench(args: &BenchArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut runs = Vec::new();
    for path in instance_files(&args.dir)? {
        let inst = match load_instance(&path) {
            Ok(inst) => inst,
            Err(e) => {
                eprintln!("skipping {}: {e}", path.display());
                continue;
            }
        };
        let (facilities, zones, demand_type) = (inst.n_facilities(), inst.n_zones(), inst.demand_type());
        let problem = Problem::new(inst);
        for &method in &args.method {
            match solve_with(&problem, method, &args.solver, None) {
                Ok(report) => {
                    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                    eprintln!("{}", report.csv_row(&name, method.name(), args.solver.vi));
                    runs.push(BenchRun { facilities, zones, demand_type, method, report });
                }
                Err(e @ CliError::Usage(_)) => return Err(e),
                Err(e) => eprintln!("{} with {}: {e}", path.display(), method.name()),
            }
        }
    }
    let mut text = String::from(BENCH_CSV_HEADER);
    text.push('\n');
    for row in aggregate(&runs) {
        text.push_str(&row);
        text.push('\n');
    }
    match &args.out {
        Some(p) => fs::write(p, text).map_err(output_err(p)),
        None => stdout.write_all(text.as_bytes()).map_err(output_err("stdout")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn run(gap: f64, status: SolveStatus, time: f64) -> BenchRun {
        BenchRun {
            facilities: 10,
            zones: 5,
            demand_type: DemandType::A,
            method: Method::Lshaped,
            report: SolveReport {
                incumbent_x: Some(vec![true]),
                objective: -100.0,
                best_bound: -100.0,
                gap_percent: gap,
                wall_time: time,
                iterations: 3,
                cuts_total: 2,
                cuts_per_distribution: BTreeMap::from([(1, 1), (3, 1)]),
                bnb_nodes: 4,
                status,
            },
        }
    }

    #[test]
    fn gap_average_and_threshold_count() {
        let rows = aggregate(&[run(0.0, SolveStatus::Optimal, 1.0), run(1.0, SolveStatus::TimeLimit, 3.0)]);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0], "facilities,10,A,lshaped,2,2,0.5,1,2,1,1,1,0,1,4");
        assert!(rows[1].starts_with("zones,5,A,lshaped,2,2,0.5,1,"));
    }

    #[test]
    fn no_runs_no_rows() {
        assert!(aggregate(&[]).is_empty());
    }
}
