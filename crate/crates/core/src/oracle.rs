//! Agent-level Monte-Carlo simulation, used to check the chain model.
//!
//! Each run draws from its own ChaCha stream, selected by run index, so the
//! aggregate is the same whatever the thread count. Per-step statistics are
//! integer counters, summed in a fixed order.
//!
//! Step indices follow the chain: `returned_by_step[k]` is the fraction of
//! runs back at the start within `k + 1` agent steps, to be compared with the
//! start mass after chain step `k`. `mean_distinct[k]` counts nodes seen after
//! `k` agent steps and estimates `C_k`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::coverage::CoverageTrace;
use crate::error::{Error, Result};
use crate::grid::{Direction, NodeId, TorusGrid};
use crate::movement::MovementModel;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub grid: TorusGrid,
    pub model: MovementModel,
    pub start: NodeId,
    /// Heading before the first step. Ignored by the uniform walk.
    pub initial_direction: Direction,
    pub runs: usize,
    pub max_steps: usize,
    pub seed: u64,
}

impl SimulationConfig {
    /// Centre start, heading east.
    pub fn new(
        grid: TorusGrid,
        model: MovementModel,
        runs: usize,
        max_steps: usize,
        seed: u64,
    ) -> Self {
        let start = grid.center();
        Self {
            grid,
            model,
            start,
            initial_direction: Direction::EAST,
            runs,
            max_steps,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidArgument("runs must be at least 1".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument(
                "max_steps must be at least 1".into(),
            ));
        }
        self.model.validate(&self.grid)?;
        self.grid.check_node(self.start)?;
        self.grid.direction(self.initial_direction.index())?;
        Ok(())
    }
}

/// Cumulative heading tables, one per current heading.
#[derive(Debug, Clone)]
struct HeadingSampler {
    cumulative: Vec<Vec<f64>>,
}

impl HeadingSampler {
    fn new(grid: &TorusGrid, model: &MovementModel) -> Result<Self> {
        let cumulative = grid
            .directions()
            .map(|d| {
                let q = model.heading_distribution(grid, d)?;
                let mut acc = 0.0;
                let mut table: Vec<f64> = q
                    .iter()
                    .map(|&w| {
                        acc += w;
                        acc
                    })
                    .collect();
                // absorb rounding slack into the last reachable heading
                let last = q.iter().rposition(|&w| w > 0.0).expect("normalised");
                table[last] = f64::INFINITY;
                Ok(table)
            })
            .collect::<Result<_>>()?;
        Ok(Self { cumulative })
    }

    fn sample<R: Rng>(&self, current: Direction, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cumulative[current.index()]
            .iter()
            .position(|&c| u < c)
            .expect("last entry is infinite")
    }
}

/// One agent's walk. Yields the start node first, then one node per step,
/// without end; bound it with `take`.
pub struct Walk<'a, R> {
    grid: &'a TorusGrid,
    sampler: HeadingSampler,
    node: NodeId,
    heading: Direction,
    started: bool,
    rng: R,
}

impl<R> Walk<'_, R> {
    /// Heading of the most recent step (the initial heading before any step).
    pub fn heading(&self) -> Direction {
        self.heading
    }
}

impl<R: Rng> Iterator for Walk<'_, R> {
    type Item = NodeId;

    fn next(&mut self) -> Option<NodeId> {
        if !self.started {
            self.started = true;
            return Some(self.node);
        }
        let next = self.sampler.sample(self.heading, &mut self.rng);
        self.heading = self.grid.direction(next).expect("sampled within degree");
        self.node = self.grid.neighbor(self.node, self.heading);
        Some(self.node)
    }
}

/// Starts a walk at `s` with heading `d0`; each step draws the next heading
/// from the model's heading distribution and moves one node that way.
pub fn simulate_run<'a, R: Rng>(
    grid: &'a TorusGrid,
    model: &MovementModel,
    s: NodeId,
    d0: Direction,
    rng: R,
) -> Result<Walk<'a, R>> {
    model.validate(grid)?;
    Ok(Walk {
        grid,
        sampler: HeadingSampler::new(grid, model)?,
        node: grid.check_node(s)?,
        heading: grid.direction(d0.index())?,
        started: false,
        rng,
    })
}

/// Generator for run `run` of a simulation seeded with `seed`.
pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalTrace {
    pub runs: usize,
    /// Length `max_steps`.
    pub returned_by_step: Vec<f64>,
    /// Length `max_steps + 1`.
    pub mean_distinct: Vec<f64>,
    /// Standard error of `mean_distinct`.
    pub distinct_std_err: Vec<f64>,
    /// Per run, the first step at which the target fraction was seen.
    pub coverage_times: Vec<Option<usize>>,
}

impl EmpiricalTrace {
    /// Mean over the runs that reached the target, with the count of those runs.
    pub fn mean_coverage_time(&self) -> Option<(f64, usize)> {
        let hit: Vec<usize> = self.coverage_times.iter().flatten().copied().collect();
        (!hit.is_empty()).then(|| {
            (
                hit.iter().sum::<usize>() as f64 / hit.len() as f64,
                hit.len(),
            )
        })
    }
}

#[derive(Debug, Clone)]
struct Counters {
    returned: Vec<u64>,
    distinct: Vec<u64>,
    distinct_sq: Vec<u64>,
}

impl Counters {
    fn new(max_steps: usize) -> Self {
        Self {
            returned: vec![0; max_steps],
            distinct: vec![0; max_steps + 1],
            distinct_sq: vec![0; max_steps + 1],
        }
    }

    fn merge(mut self, other: &Counters) -> Self {
        for (a, b) in self.returned.iter_mut().zip(&other.returned) {
            *a += b;
        }
        for (a, b) in self.distinct.iter_mut().zip(&other.distinct) {
            *a += b;
        }
        for (a, b) in self.distinct_sq.iter_mut().zip(&other.distinct_sq) {
            *a += b;
        }
        self
    }
}

const BATCH: usize = 256;

/// Runs `config.runs` independent walks and aggregates per-step statistics.
pub fn empirical_trace(config: &SimulationConfig, target_fraction: f64) -> Result<EmpiricalTrace> {
    config.validate()?;
    if !(target_fraction > 0.0 && target_fraction <= 1.0) {
        return Err(Error::InvalidTarget(target_fraction));
    }
    let grid = &config.grid;
    let nodes = grid.node_count();
    let threshold = target_fraction * nodes as f64;
    let max_steps = config.max_steps;

    let batches: Vec<(Counters, Vec<Option<usize>>)> = (0..config.runs.div_ceil(BATCH))
        .into_par_iter()
        .map(|b| {
            let mut counters = Counters::new(max_steps);
            let mut times = Vec::with_capacity(BATCH);
            let mut seen = vec![false; nodes];
            for run in b * BATCH..((b + 1) * BATCH).min(config.runs) {
                seen.fill(false);
                let mut distinct = 0u64;
                let mut returned = false;
                let mut covered_at = None;
                let walk = simulate_run(
                    grid,
                    &config.model,
                    config.start,
                    config.initial_direction,
                    run_rng(config.seed, run as u64),
                )?;
                for (k, node) in walk.take(max_steps + 1).enumerate() {
                    if k > 0 && node == config.start {
                        returned = true;
                    }
                    if !seen[node] {
                        seen[node] = true;
                        distinct += 1;
                    }
                    if k > 0 && returned {
                        counters.returned[k - 1] += 1;
                    }
                    counters.distinct[k] += distinct;
                    counters.distinct_sq[k] += distinct * distinct;
                    if covered_at.is_none() && distinct as f64 >= threshold {
                        covered_at = Some(k);
                    }
                }
                times.push(covered_at);
            }
            Ok((counters, times))
        })
        .collect::<Result<_>>()?;

    let mut total = Counters::new(max_steps);
    let mut coverage_times = Vec::with_capacity(config.runs);
    for (c, t) in &batches {
        total = total.merge(c);
        coverage_times.extend_from_slice(t);
    }

    let n = config.runs as f64;
    let mean_distinct: Vec<f64> = total.distinct.iter().map(|&s| s as f64 / n).collect();
    let distinct_std_err = total
        .distinct
        .iter()
        .zip(&total.distinct_sq)
        .map(|(&s, &sq)| {
            if config.runs < 2 {
                return 0.0;
            }
            let mean = s as f64 / n;
            let var = ((sq as f64 - n * mean * mean) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        })
        .collect();

    Ok(EmpiricalTrace {
        runs: config.runs,
        returned_by_step: total.returned.iter().map(|&c| c as f64 / n).collect(),
        mean_distinct,
        distinct_std_err,
        coverage_times,
    })
}

/// Standard errors away from the reference; a zero error demands agreement
/// to 1e-9.
fn z_score(observed: f64, expected: f64, std_err: f64) -> f64 {
    let diff = (observed - expected).abs();
    if std_err > 0.0 {
        diff / std_err
    } else if diff <= 1e-9 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub step: usize,
    pub macro_start_mass: f64,
    pub empirical_returned: f64,
    pub return_z: f64,
    pub macro_covered: f64,
    pub empirical_distinct: f64,
    pub distinct_z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub rows: Vec<ComparisonRow>,
    pub bands: f64,
    pub passed: bool,
}

impl ValidationReport {
    pub fn max_return_z(&self) -> f64 {
        self.rows.iter().map(|r| r.return_z).fold(0.0, f64::max)
    }

    pub fn max_distinct_z(&self) -> f64 {
        self.rows.iter().map(|r| r.distinct_z).fold(0.0, f64::max)
    }
}

/// Compares the chain's start mass and `C_k` with the simulation for steps
/// `0..=up_to`.
///
/// Return probabilities use the binomial standard error at the chain's value;
/// distinct counts use the sample standard error.
pub fn compare_with_macro(
    trace: &CoverageTrace,
    empirical: &EmpiricalTrace,
    up_to: usize,
    bands: f64,
) -> Result<ValidationReport> {
    let need = |have: usize, what: &'static str| {
        if have > up_to {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "{what} covers {have} steps, comparison needs {}",
                up_to + 1
            )))
        }
    };
    need(trace.start_mass.len(), "macro trace")?;
    need(empirical.returned_by_step.len(), "simulation")?;

    let n = empirical.runs as f64;
    let rows: Vec<ComparisonRow> = (0..=up_to)
        .map(|k| {
            let m = trace.start_mass[k];
            let ret = empirical.returned_by_step[k];
            let ret_se = (m * (1.0 - m) / n).max(0.0).sqrt();
            let c = trace.cumulative[k];
            let dist = empirical.mean_distinct[k];
            ComparisonRow {
                step: k,
                macro_start_mass: m,
                empirical_returned: ret,
                return_z: z_score(ret, m, ret_se),
                macro_covered: c,
                empirical_distinct: dist,
                distinct_z: z_score(dist, c, empirical.distinct_std_err[k]),
            }
        })
        .collect();
    let passed = rows
        .iter()
        .all(|r| r.return_z <= bands && r.distinct_z <= bands);
    Ok(ValidationReport {
        rows,
        bands,
        passed,
    })
}
