//! Command-line front end for the ddfl solver suite.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ddfl_core::compare::compare;
use ddfl_core::extensive::{exhaustive_oracle, solve_extensive, ExtensiveOptions};
use ddfl_core::instgen::{generate, GeneratorParams};
use ddfl_core::lshaped::{self, LShapedOptions, Mode};
use ddfl_core::{
    load_instance, save_instance, DemandType, DistributionId, Instance, Problem, SolveReport, REPORT_CSV_HEADER,
};

pub mod bench;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] ddfl_core::Error),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// Process exit code: 2 for invalid input, 3 for internal faults.
    pub fn exit_code(&self) -> u8 {
        use ddfl_core::Error as E;
        match self {
            CliError::Core(E::Solver(_)) | CliError::Output { .. } => 3,
            CliError::Core(_) | CliError::Usage(_) => 2,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

fn output_err(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Output { path, source }
}

#[derive(Debug, Parser)]
#[command(name = "ddfl", version, about = "Facility location with decision-dependent demand")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a batch of random instances.
    Generate(GenerateArgs),
    /// Solve one instance and append a CSV row.
    Solve(SolveArgs),
    /// Compare the single-zone plan with the decision-dependent optimum.
    Compare(CompareArgs),
    /// Solve every instance in a directory and aggregate the results.
    Bench(BenchArgs),
    /// Print sampled scenarios as CSV.
    DumpScenarios(DumpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Lshaped,
    Extensive,
    Oracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Lshaped => "lshaped",
            Method::Extensive => "extensive",
            Method::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub facilities: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub customers: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub zones: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "50")]
    pub scenarios: Vec<usize>,
    #[arg(long = "demand-type", value_delimiter = ',', default_value = "A")]
    pub demand_type: Vec<DemandType>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub config: Vec<u8>,
    /// Seed of the first instance; later instances use consecutive seeds.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Instances per grid point.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Add the valid inequality to the master problem.
    #[arg(long)]
    pub vi: bool,
    #[arg(long, default_value = "single-tree")]
    pub mode: Mode,
    /// Wall-clock limit in seconds.
    #[arg(long = "time-limit")]
    pub time_limit: Option<f64>,
    #[arg(long = "gap-tol", default_value_t = 1e-4)]
    pub gap_tol: f64,
}

impl SolverArgs {
    fn time_limit(&self) -> Result<Option<Duration>> {
        match self.time_limit {
            None => Ok(None),
            Some(t) if t.is_finite() && t > 0.0 => Ok(Some(Duration::from_secs_f64(t))),
            Some(t) => Err(CliError::Usage(format!("--time-limit must be positive, got {t}"))),
        }
    }

    pub fn lshaped(&self) -> Result<LShapedOptions> {
        if self.gap_tol.is_nan() || self.gap_tol < 0.0 {
            return Err(CliError::Usage(format!("--gap-tol must be nonnegative, got {}", self.gap_tol)));
        }
        Ok(LShapedOptions {
            vi: self.vi,
            mode: self.mode,
            time_limit: self.time_limit()?,
            gap_tol: self.gap_tol,
            initial_x: None,
        })
    }

    pub fn extensive(&self) -> Result<ExtensiveOptions> {
        let l = self.lshaped()?;
        Ok(ExtensiveOptions { time_limit: l.time_limit, gap_tol: l.gap_tol, ..Default::default() })
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "lshaped")]
    pub method: Method,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write per-iteration JSONL records here (lshaped only).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// CSV file to append the result row to; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub instance: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// JSON report destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Directory of instance files.
    pub dir: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "lshaped")]
    pub method: Vec<Method>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Aggregated CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    pub instance: PathBuf,
    /// Distribution masks to dump; all of them when omitted.
    pub masks: Vec<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a, stdout),
        Command::Solve(a) => cmd_solve(&a, stdout),
        Command::Compare(a) => cmd_compare(&a, stdout),
        Command::Bench(a) => bench::cmd_bench(&a, stdout),
        Command::DumpScenarios(a) => cmd_dump(&a, stdout),
    }
}

fn instance_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn cmd_generate(args: &GenerateArgs, stdout: &mut dyn Write) -> Result<()> {
    fs::create_dir_all(&args.out).map_err(output_err(&args.out))?;
    let mut seed = args.seed;
    for &ni in &args.facilities {
        for &nj in &args.customers {
            for &nz in &args.zones {
                for &ns in &args.scenarios {
                    for &dt in &args.demand_type {
                        for &config in &args.config {
                            for _ in 0..args.count {
                                let inst = generate(&GeneratorParams::new(ni, nj, nz, ns, dt, config, seed))?;
                                let path = args.out.join(format!("inst_{seed}.json"));
                                save_instance(&inst, &path)?;
                                writeln!(stdout, "{}", path.display()).map_err(output_err("stdout"))?;
                                seed += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Runs one method; lshaped trace records go to `trace` as JSON lines.
pub fn solve_with(
    problem: &Problem,
    method: Method,
    solver: &SolverArgs,
    trace: Option<&mut dyn Write>,
) -> Result<SolveReport> {
    match method {
        Method::Lshaped => {
            let out = lshaped::solve(problem, &solver.lshaped()?)?;
            if let Some(w) = trace {
                for e in &out.trace {
                    let line = serde_json::to_string(e).expect("trace records serialize");
                    writeln!(w, "{line}").map_err(output_err("trace"))?;
                }
            }
            Ok(out.report)
        }
        Method::Extensive => Ok(solve_extensive(problem, &solver.extensive()?)?),
        Method::Oracle => Ok(exhaustive_oracle(problem)?),
    }
}

/// Appends `row` to a CSV file, writing the header first if the file is new or empty.
pub fn append_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(output_err(path))?;
    let empty = f.metadata().map_err(output_err(path))?.len() == 0;
    if empty {
        writeln!(f, "{header}").map_err(output_err(path))?;
    }
    for row in rows {
        writeln!(f, "{row}").map_err(output_err(path))?;
    }
    Ok(())
}

pub fn cmd_solve(args: &SolveArgs, stdout: &mut dyn Write) -> Result<()> {
    let problem = Problem::new(load_instance(&args.instance)?);
    let mut trace_file = match &args.trace {
        Some(p) => Some(BufWriter::new(File::create(p).map_err(output_err(p))?)),
        None => None,
    };
    let report = solve_with(&problem, args.method, &args.solver, trace_file.as_mut().map(|w| w as &mut dyn Write))?;
    if let (Some(mut w), Some(p)) = (trace_file, &args.trace) {
        w.flush().map_err(output_err(p))?;
    }
    let row = report.csv_row(&instance_name(&args.instance), args.method.name(), args.solver.vi);
    match &args.out {
        Some(p) => append_csv(p, REPORT_CSV_HEADER, &[row]),
        None => writeln!(stdout, "{REPORT_CSV_HEADER}\n{row}").map_err(output_err("stdout")),
    }
}

pub fn cmd_compare(args: &CompareArgs, stdout: &mut dyn Write) -> Result<()> {
    let inst = load_instance(&args.instance)?;
    let c = compare(&inst, &args.solver.lshaped()?)?;
    let text = serde_json::to_string_pretty(&c).expect("comparison serializes");
    match &args.out {
        Some(p) => fs::write(p, text + "\n").map_err(output_err(p)),
        None => writeln!(stdout, "{text}").map_err(output_err("stdout")),
    }
}

pub const SCENARIO_CSV_HEADER: &str = "d_mask,j,s,xi";

pub fn scenario_rows(inst: &Instance, masks: &[u32]) -> Result<Vec<String>> {
    let problem = Problem::new(inst.clone());
    let limit = 1u64 << inst.n_zones();
    let masks: Vec<u32> = if masks.is_empty() { (0..limit as u32).collect() } else { masks.to_vec() };
    let mut rows = Vec::new();
    for &m in &masks {
        if u64::from(m) >= limit {
            return Err(CliError::Usage(format!("mask {m} is out of range for {} zones", inst.n_zones())));
        }
        let set = problem.scenarios().scenarios(DistributionId(m));
        for s in 0..set.n_scenarios() {
            for j in 0..set.n_customers() {
                rows.push(format!("{m},{j},{s},{}", set.xi(j, s)));
            }
        }
    }
    Ok(rows)
}

pub fn cmd_dump(args: &DumpArgs, stdout: &mut dyn Write) -> Result<()> {
    let inst = load_instance(&args.instance)?;
    let rows = scenario_rows(&inst, &args.masks)?;
    let mut text = String::from(SCENARIO_CSV_HEADER);
    text.push('\n');
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    match &args.out {
        Some(p) => fs::write(p, text).map_err(output_err(p)),
        None => stdout.write_all(text.as_bytes()).map_err(output_err("stdout")),
    }
}
