//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 truncated or ambiguous result,
//! 3 validation failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::chart::{LineChart, Series};
use crate::coverage::{
    self, bias_range, crossover_bias, sweep_bias, CoverageQuery, DEFAULT_CROSSOVER_TOLERANCE,
};
use crate::error::Error;
use crate::grid::{Topology, TorusGrid};
use crate::markov::build_transition_matrix;
use crate::movement::MovementModel;
use crate::oracle::{compare_with_macro, empirical_trace, SimulationConfig};
use crate::report::{self, fmt_float, SizeRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_VALIDATION_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "walkcover",
    version,
    about = "Coverage times of random and directionally biased walks on toroidal grids"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coverage trace and coverage time for one movement model.
    Coverage(CoverageArgs),
    /// Coverage time against bias, with the uniform walk as baseline.
    SweepBias(SweepBiasArgs),
    /// Cross-over bias for a range of square torus sizes.
    SweepSize(SweepSizeArgs),
    /// Bias at which the biased walk matches the uniform walk.
    Crossover(CrossoverArgs),
    /// Compare the chain model with an agent simulation.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TopologyArg {
    Ring,
    Torus8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Uniform,
    Biased,
    BiasedRandom,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long, value_enum, default_value = "torus8")]
    pub topology: TopologyArg,
    /// Grid rows (defaults to 5, or 1 for a ring).
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub cols: usize,
    /// Start node; defaults to the centre node.
    #[arg(long)]
    pub start: Option<usize>,
    /// Initial heading index, counter-clockwise from east.
    #[arg(long, default_value_t = 0)]
    pub direction: usize,
    /// Target coverage in percent.
    #[arg(long, default_value_t = 99.0)]
    pub target: f64,
    #[arg(long)]
    pub max_steps: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    pub model: ModelArg,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CoverageArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Per-step trace CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Unabsorbed transition matrix as `row col prob` lines.
    #[arg(long)]
    pub dump_matrix: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepBiasArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Random-step probability; 0 uses the plain biased walk.
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    #[arg(long, default_value_t = 0.0)]
    pub bias_start: f64,
    #[arg(long, default_value_t = 0.95)]
    pub bias_stop: f64,
    #[arg(long, default_value_t = 0.05)]
    pub bias_step: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CrossoverArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    /// Bisection stops once the bracket is this narrow.
    #[arg(long, default_value_t = DEFAULT_CROSSOVER_TOLERANCE)]
    pub tolerance: f64,
    /// CSV of every coverage-time evaluation.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepSizeArgs {
    #[arg(long, default_value_t = 5)]
    pub min_size: usize,
    #[arg(long, default_value_t = 15)]
    pub max_size: usize,
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    #[arg(long, default_value_t = 99.0)]
    pub target: f64,
    #[arg(long, default_value_t = DEFAULT_CROSSOVER_TOLERANCE)]
    pub tolerance: f64,
    /// Initial heading index, counter-clockwise from east.
    #[arg(long, default_value_t = 0)]
    pub direction: usize,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 10_000)]
    pub runs: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Allowed deviation in standard errors.
    #[arg(long, default_value_t = 4.0)]
    pub bands: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Inconclusive(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoCrossover(_) | Error::AmbiguousCrossover(_) | Error::BaselineTruncated(_) => {
                Failure::Inconclusive(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// A fully validated grid/start/target selection.
struct Setup {
    grid: TorusGrid,
    query: CoverageQuery,
}

impl GridArgs {
    fn setup(&self) -> std::result::Result<Setup, Failure> {
        let grid = match self.topology {
            TopologyArg::Ring => TorusGrid::new(Topology::Ring, self.rows.unwrap_or(1), self.cols)?,
            TopologyArg::Torus8 => TorusGrid::torus8(self.rows.unwrap_or(5), self.cols)?,
        };
        let target = self.target / 100.0;
        if !(target > 0.0 && target <= 1.0) {
            return Err(Failure::Usage(format!(
                "--target must be in (0, 100], got {}",
                self.target
            )));
        }
        if self.max_steps == Some(0) {
            return Err(Failure::Usage("--max-steps must be at least 1".into()));
        }
        let start = self.start.map(|s| grid.check_node(s)).transpose()?;
        let direction = grid.direction(self.direction)?;
        Ok(Setup {
            query: CoverageQuery {
                start,
                initial_direction: Some(direction),
                target_fraction: target,
                max_steps: self.max_steps,
            },
            grid,
        })
    }
}

impl ModelArgs {
    fn model(&self, grid: &TorusGrid) -> std::result::Result<MovementModel, Failure> {
        let need = |v: Option<f64>, flag: &str| {
            v.ok_or_else(|| {
                Failure::Usage(format!("--{flag} is required for --model {:?}", self.model))
            })
        };
        let model = match self.model {
            ModelArg::Uniform => MovementModel::Uniform,
            ModelArg::Biased => MovementModel::biased(need(self.p, "p")?)?,
            ModelArg::BiasedRandom => {
                MovementModel::biased_with_random(need(self.p, "p")?, need(self.r, "r")?)?
            }
        };
        model.validate(grid)?;
        Ok(model)
    }
}

fn create(path: &Path) -> io::Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new)
}

fn cmd_coverage(args: &CoverageArgs, out: &mut dyn Write) -> CmdResult {
    let Setup { grid, query } = args.grid.setup()?;
    let model = args.model.model(&grid)?;
    if let Some(path) = &args.dump_matrix {
        let mut w = create(path)?;
        build_transition_matrix(&grid, &model)?.write_triplets(&mut w)?;
        w.flush()?;
    }
    let result = coverage::coverage(&grid, &model, &query)?;
    if let Some(path) = &args.csv {
        report::write_trace_csv(&result, create(path)?)?;
    }
    match result.coverage_time {
        Some(k) => {
            writeln!(out, "coverage_time={k}")?;
            Ok(EXIT_OK)
        }
        None => {
            writeln!(out, "truncated after {} steps", result.trace.last_step())?;
            Ok(EXIT_INCONCLUSIVE)
        }
    }
}

fn sweep_chart(title: String, sweep: &coverage::SweepResult) -> LineChart {
    let curve: Vec<(f64, f64)> = sweep
        .points
        .iter()
        .filter_map(|p| p.coverage_time.map(|t| (p.bias, t as f64)))
        .collect();
    let mut chart = LineChart::new(title, "bias p", "coverage time (steps)")
        .with_series(Series::new("directionally biased walk", curve, "#1f77b4"));
    if let (Some(b), Some(first), Some(last)) =
        (sweep.baseline, sweep.points.first(), sweep.points.last())
    {
        let (x0, x1) = (first.bias.min(last.bias), first.bias.max(last.bias));
        chart = chart.with_series(
            Series::new(
                "random walk",
                vec![(x0, b as f64), (x1, b as f64)],
                "#d62728",
            )
            .dashed(),
        );
    }
    chart
}

fn cmd_sweep_bias(args: &SweepBiasArgs, out: &mut dyn Write) -> CmdResult {
    let Setup { grid, query } = args.grid.setup()?;
    let biases = bias_range(args.bias_start, args.bias_stop, args.bias_step)?;
    let sweep = sweep_bias(&grid, &biases, args.r, &query)?;
    if let Some(path) = &args.csv {
        report::write_sweep_csv(&sweep, create(path)?)?;
    }
    if let Some(path) = &args.svg {
        let title = format!(
            "Coverage time vs bias, {grid}, r = {}, target {}%",
            fmt_float(args.r),
            fmt_float(args.grid.target)
        );
        let mut w = create(path)?;
        w.write_all(sweep_chart(title, &sweep).to_svg().as_bytes())?;
        w.flush()?;
    }
    match sweep.baseline {
        Some(b) => writeln!(out, "baseline={b}")?,
        None => writeln!(out, "baseline=truncated")?,
    }
    for p in &sweep.points {
        let t = p
            .coverage_time
            .map_or("truncated".to_string(), |t| t.to_string());
        writeln!(out, "p={} coverage_time={t}", fmt_float(p.bias))?;
    }
    Ok(if sweep.baseline.is_some() {
        EXIT_OK
    } else {
        EXIT_INCONCLUSIVE
    })
}

fn cmd_crossover(args: &CrossoverArgs, out: &mut dyn Write) -> CmdResult {
    let Setup { grid, query } = args.grid.setup()?;
    let c = crossover_bias(&grid, args.r, &query, args.tolerance)?;
    if let Some(path) = &args.csv {
        report::write_crossover_csv(&c, create(path)?)?;
    }
    writeln!(out, "baseline={}", c.baseline)?;
    writeln!(out, "crossover={}", fmt_float(c.bias))?;
    Ok(EXIT_OK)
}

fn cmd_sweep_size(args: &SweepSizeArgs, out: &mut dyn Write) -> CmdResult {
    if args.min_size < 3 || args.max_size < args.min_size {
        return Err(Failure::Usage(format!(
            "size range {}..={} is invalid (sizes start at 3)",
            args.min_size, args.max_size
        )));
    }
    let template = GridArgs {
        topology: TopologyArg::Torus8,
        rows: Some(args.min_size),
        cols: args.min_size,
        start: None,
        direction: args.direction,
        target: args.target,
        max_steps: None,
    };
    let Setup { query, .. } = template.setup()?;
    coverage::model_for(0.0, args.r)?;

    let rows: Vec<SizeRow> = (args.min_size..=args.max_size)
        .into_par_iter()
        .map(|n| {
            let grid = TorusGrid::torus8(n, n).expect("size checked");
            match crossover_bias(&grid, args.r, &query, args.tolerance) {
                Ok(c) => SizeRow {
                    rows: n,
                    cols: n,
                    baseline: Some(c.baseline),
                    crossover: Some(c.bias),
                    status: "ok".into(),
                },
                Err(e) => SizeRow {
                    rows: n,
                    cols: n,
                    baseline: None,
                    crossover: None,
                    status: e.to_string(),
                },
            }
        })
        .collect();

    if let Some(path) = &args.csv {
        report::write_size_csv(&rows, create(path)?)?;
    }
    if let Some(path) = &args.svg {
        let pts = rows
            .iter()
            .filter_map(|r| r.crossover.map(|c| (r.rows as f64, c)))
            .collect();
        let chart = LineChart::new(
            format!("Cross-over bias vs grid size, r = {}", fmt_float(args.r)),
            "grid side length",
            "cross-over bias",
        )
        .with_series(Series::new("cross-over bias", pts, "#1f77b4"));
        let mut w = create(path)?;
        w.write_all(chart.to_svg().as_bytes())?;
        w.flush()?;
    }
    let mut all_ok = true;
    for r in &rows {
        match r.crossover {
            Some(c) => writeln!(out, "size={}x{} crossover={}", r.rows, r.cols, fmt_float(c))?,
            None => {
                all_ok = false;
                writeln!(out, "size={}x{} {}", r.rows, r.cols, r.status)?
            }
        }
    }
    Ok(if all_ok { EXIT_OK } else { EXIT_INCONCLUSIVE })
}

fn cmd_validate(args: &ValidateArgs, out: &mut dyn Write) -> CmdResult {
    if args.runs < 100 {
        return Err(Failure::Usage(format!(
            "--runs must be at least 100, got {}",
            args.runs
        )));
    }
    if args.bands.is_nan() || args.bands <= 0.0 {
        return Err(Failure::Usage("--bands must be positive".into()));
    }
    let Setup { grid, query } = args.grid.setup()?;
    let model = args.model.model(&grid)?;
    let macro_result = coverage::coverage(&grid, &model, &query)?;
    let Some(up_to) = macro_result.coverage_time else {
        writeln!(out, "macro model truncated; nothing to validate")?;
        return Ok(EXIT_INCONCLUSIVE);
    };
    let config = SimulationConfig {
        start: query.start.unwrap_or_else(|| grid.center()),
        initial_direction: query.initial_direction.expect("set by setup"),
        ..SimulationConfig::new(grid.clone(), model, args.runs, up_to + 1, args.seed)
    };
    let empirical = empirical_trace(&config, query.target_fraction)?;
    let report = compare_with_macro(&macro_result.trace, &empirical, up_to, args.bands)?;
    if let Some(path) = &args.csv {
        report::write_validation_csv(&report, create(path)?)?;
    }
    writeln!(out, "coverage_time={up_to}")?;
    writeln!(out, "max_return_z={}", fmt_float(report.max_return_z()))?;
    writeln!(out, "max_distinct_z={}", fmt_float(report.max_distinct_z()))?;
    if report.passed {
        writeln!(out, "validation=pass")?;
        Ok(EXIT_OK)
    } else {
        writeln!(out, "validation=fail")?;
        Ok(EXIT_VALIDATION_FAILED)
    }
}

/// Runs one command; diagnostics go to `err`.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Coverage(a) => cmd_coverage(a, out),
        Command::SweepBias(a) => cmd_sweep_bias(a, out),
        Command::SweepSize(a) => cmd_sweep_size(a, out),
        Command::Crossover(a) => cmd_crossover(a, out),
        Command::Validate(a) => cmd_validate(a, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Inconclusive(msg)) => {
            let _ = writeln!(err, "{msg}");
            EXIT_INCONCLUSIVE
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli, out, err),
        Err(e) if e.use_stderr() => {
            let _ = write!(err, "{}", e.render());
            EXIT_USAGE
        }
        Err(e) => {
            let _ = write!(out, "{}", e.render());
            EXIT_OK
        }
    }
}
