//! Expected coverage times from the absorbing-start chain.
//!
//! With `m_i` the mass on the start node after the `i`-th chain step
//! (`m_0` is measured one agent step after leaving the start), the expected
//! number of new nodes covered at agent step `k` is
//!
//! ```text
//! gamma_0 = 1,   gamma_k = 1 - m_{k-1}   (k >= 1)
//! ```
//!
//! and `C_k = gamma_0 + ... + gamma_k`. The coverage time for a target
//! fraction `x` is the smallest `k` with `C_k >= x * N`.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Direction, NodeId, TorusGrid};
use crate::markov::{
    absorb_start, build_transition_matrix, initial_distribution, start_mass, StateIndexing,
};
use crate::movement::MovementModel;

pub const DEFAULT_TARGET: f64 = 0.99;
pub const DEFAULT_CROSSOVER_TOLERANCE: f64 = 0.005;
/// Upper end of the bias range searched for a cross-over.
pub const MAX_SEARCH_BIAS: f64 = 0.95;

/// `200 * N * degree`.
pub fn default_max_steps(grid: &TorusGrid) -> usize {
    200 * grid.node_count() * grid.degree()
}

/// Where the walk starts and what it has to reach.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageQuery {
    pub start: Option<NodeId>,
    pub initial_direction: Option<Direction>,
    pub target_fraction: f64,
    pub max_steps: Option<usize>,
}

impl Default for CoverageQuery {
    fn default() -> Self {
        Self {
            start: None,
            initial_direction: None,
            target_fraction: DEFAULT_TARGET,
            max_steps: None,
        }
    }
}

impl CoverageQuery {
    pub fn with_target(target_fraction: f64) -> Self {
        Self {
            target_fraction,
            ..Self::default()
        }
    }

    pub fn max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = Some(max_steps);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageTrace {
    /// `start_mass[k]` is the absorbed mass after chain step `k`.
    pub start_mass: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `cumulative[k]` is `C_k`.
    pub cumulative: Vec<f64>,
    pub nodes: usize,
    pub truncated: bool,
}

impl CoverageTrace {
    /// Index of the last computed step.
    pub fn last_step(&self) -> usize {
        self.cumulative.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageResult {
    pub coverage_time: Option<usize>,
    pub target_fraction: f64,
    pub trace: CoverageTrace,
    pub model: MovementModel,
    pub rows: usize,
    pub cols: usize,
}

fn check_target(target_fraction: f64) -> Result<()> {
    if target_fraction > 0.0 && target_fraction <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidTarget(target_fraction))
    }
}

/// Iterates the absorbing chain until `C_k` reaches the target or
/// `max_steps` steps have been taken.
///
/// `s` defaults to the grid centre and `d0` to east for the directional
/// models.
pub fn coverage_trace(
    grid: &TorusGrid,
    model: &MovementModel,
    s: Option<NodeId>,
    d0: Option<Direction>,
    target_fraction: f64,
    max_steps: usize,
) -> Result<CoverageResult> {
    check_target(target_fraction)?;
    if max_steps == 0 {
        return Err(Error::InvalidArgument(
            "max_steps must be at least 1".into(),
        ));
    }
    model.validate(grid)?;
    let s = grid.check_node(s.unwrap_or_else(|| grid.center()))?;
    let d0 = match (model.is_directional(), d0) {
        (true, d) => Some(grid.direction(d.unwrap_or(Direction::EAST).index())?),
        (false, None) => None,
        (false, Some(_)) => {
            return Err(Error::InitialDirection(
                "must not be given for a uniform walk",
            ))
        }
    };

    let indexing = StateIndexing::for_model(grid, model);
    let matrix = build_transition_matrix(grid, model)?;
    let mut v = initial_distribution(&matrix, indexing, s, d0)?;
    let absorbing = absorb_start(matrix, indexing, s)?;

    let nodes = grid.node_count();
    let threshold = target_fraction * nodes as f64;
    let mut trace = CoverageTrace {
        start_mass: vec![start_mass(&v, indexing, s)],
        gamma: vec![1.0],
        cumulative: vec![1.0],
        nodes,
        truncated: false,
    };
    let mut scratch = Vec::with_capacity(indexing.dim());
    let mut covered = 1.0;
    let mut coverage_time = (covered >= threshold).then_some(0);
    let mut k = 0;
    while coverage_time.is_none() && k < max_steps {
        k += 1;
        let gamma = 1.0 - trace.start_mass[k - 1];
        covered += gamma;
        v.advance_in_place(&absorbing, &mut scratch)?;
        trace.start_mass.push(start_mass(&v, indexing, s));
        trace.gamma.push(gamma);
        trace.cumulative.push(covered);
        if covered >= threshold {
            coverage_time = Some(k);
        }
    }
    trace.truncated = coverage_time.is_none();

    Ok(CoverageResult {
        coverage_time,
        target_fraction,
        trace,
        model: *model,
        rows: grid.rows(),
        cols: grid.cols(),
    })
}

/// Coverage with the options in `query`, defaulting `max_steps` from the grid.
pub fn coverage(
    grid: &TorusGrid,
    model: &MovementModel,
    query: &CoverageQuery,
) -> Result<CoverageResult> {
    coverage_trace(
        grid,
        model,
        query.start,
        query.initial_direction.filter(|_| model.is_directional()),
        query.target_fraction,
        query.max_steps.unwrap_or_else(|| default_max_steps(grid)),
    )
}

/// `Biased(p)` when `r == 0`, `BiasedWithRandom(p, r)` otherwise.
pub fn model_for(p: f64, r: f64) -> Result<MovementModel> {
    if r == 0.0 {
        MovementModel::biased(p)
    } else {
        MovementModel::biased_with_random(p, r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub bias: f64,
    pub coverage_time: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// Uniform-walk coverage time, `None` if it was truncated.
    pub baseline: Option<usize>,
    pub r: f64,
    pub target_fraction: f64,
}

fn coverage_time_for(
    grid: &TorusGrid,
    p: f64,
    r: f64,
    query: &CoverageQuery,
) -> Result<Option<usize>> {
    Ok(coverage(grid, &model_for(p, r)?, query)?.coverage_time)
}

/// Coverage time for every bias in `biases` plus the uniform baseline.
///
/// Points are evaluated in parallel; the output keeps the input order.
pub fn sweep_bias(
    grid: &TorusGrid,
    biases: &[f64],
    r: f64,
    query: &CoverageQuery,
) -> Result<SweepResult> {
    if biases.is_empty() {
        return Err(Error::InvalidArgument("bias list is empty".into()));
    }
    for &p in biases {
        model_for(p, r)?.validate(grid)?;
    }
    let baseline = coverage(grid, &MovementModel::Uniform, query)?.coverage_time;
    let points = biases
        .par_iter()
        .map(|&p| {
            Ok(SweepPoint {
                bias: p,
                coverage_time: coverage_time_for(grid, p, r, query)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        points,
        baseline,
        r,
        target_fraction: query.target_fraction,
    })
}

/// `start, start + step, ...` up to `stop` inclusive, rounded to 1e-9 so that
/// the printed values are the intended decimals.
pub fn bias_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !start.is_finite() || !stop.is_finite() || step.is_nan() || step <= 0.0 || stop < start {
        return Err(Error::InvalidArgument(format!(
            "bias range {start}..{stop} step {step} is malformed"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

/// The default sweep `0, 0.05, ..., 0.95`.
pub fn standard_biases() -> Vec<f64> {
    bias_range(0.0, MAX_SEARCH_BIAS, 0.05).expect("static range")
}

/// How a biased coverage time compares with the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Side {
    Below,
    Equal,
    Above,
}

impl Side {
    pub fn label(self) -> &'static str {
        match self {
            Side::Below => "below",
            Side::Equal => "equal",
            Side::Above => "above",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossoverIterate {
    pub bias: f64,
    pub coverage_time: usize,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crossover {
    pub bias: f64,
    /// Final bracket `[lo, hi]` around the sign change.
    pub bracket: (f64, f64),
    pub baseline: usize,
    /// Every evaluation in the order it was made.
    pub iterates: Vec<CrossoverIterate>,
}

struct BiasProbe<'a> {
    grid: &'a TorusGrid,
    r: f64,
    query: &'a CoverageQuery,
    baseline: usize,
    cache: HashMap<u64, usize>,
    iterates: Vec<CrossoverIterate>,
}

impl BiasProbe<'_> {
    fn record(&mut self, p: f64, time: usize) -> Side {
        let side = self.classify(time);
        self.cache.insert(p.to_bits(), time);
        self.iterates.push(CrossoverIterate {
            bias: p,
            coverage_time: time,
            side,
        });
        side
    }

    fn side(&mut self, p: f64) -> Result<Side> {
        if let Some(&t) = self.cache.get(&p.to_bits()) {
            return Ok(self.classify(t));
        }
        let time = coverage_time_for(self.grid, p, self.r, self.query)?.ok_or_else(|| {
            Error::NoCrossover(format!("coverage at bias {p} did not reach the target"))
        })?;
        Ok(self.record(p, time))
    }

    fn classify(&self, time: usize) -> Side {
        match time.cmp(&self.baseline) {
            std::cmp::Ordering::Less => Side::Below,
            std::cmp::Ordering::Equal => Side::Equal,
            std::cmp::Ordering::Greater => Side::Above,
        }
    }

    /// Bisects for the boundary of `{p : below(side(p))}` inside `[lo, hi]`.
    fn bisect(
        &mut self,
        mut lo: f64,
        mut hi: f64,
        tolerance: f64,
        below: impl Fn(Side) -> bool,
    ) -> Result<(f64, f64)> {
        while hi - lo > tolerance {
            let mid = 0.5 * (lo + hi);
            if below(self.side(mid)?) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo, hi))
    }
}

fn is_monotone(sides: &[Side]) -> bool {
    sides.windows(2).all(|w| w[0] <= w[1])
}

/// Bias at which the biased walk's coverage time crosses the uniform baseline.
///
/// The 0.05 grid over `[0, 0.95]` is scanned first; it must start below the
/// baseline, end above it and change side only once. The bracket is then
/// bisected twice, once for the end of the strictly-below region and once for
/// the start of the strictly-above region, and the result is the midpoint of
/// the two boundaries so that a plateau of equal coverage times resolves to its
/// centre.
pub fn crossover_bias(
    grid: &TorusGrid,
    r: f64,
    query: &CoverageQuery,
    tolerance: f64,
) -> Result<Crossover> {
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    model_for(0.0, r)?.validate(grid)?;
    let max_steps = query.max_steps.unwrap_or_else(|| default_max_steps(grid));
    let baseline = coverage(grid, &MovementModel::Uniform, query)?
        .coverage_time
        .ok_or(Error::BaselineTruncated(max_steps))?;

    let coarse = standard_biases();
    let times = coarse
        .par_iter()
        .map(|&p| coverage_time_for(grid, p, r, query))
        .collect::<Result<Vec<_>>>()?;

    let mut probe = BiasProbe {
        grid,
        r,
        query,
        baseline,
        cache: HashMap::new(),
        iterates: Vec::new(),
    };
    let mut sides = Vec::with_capacity(coarse.len());
    for (&p, t) in coarse.iter().zip(&times) {
        let t = t.ok_or_else(|| {
            Error::NoCrossover(format!("coverage at bias {p} did not reach the target"))
        })?;
        sides.push(probe.record(p, t));
    }

    if sides[0] != Side::Below || sides[sides.len() - 1] != Side::Above {
        return Err(Error::NoCrossover(format!(
            "bias 0 is {} and bias {MAX_SEARCH_BIAS} is {} the baseline {baseline}",
            sides[0].label(),
            sides[sides.len() - 1].label()
        )));
    }
    if !is_monotone(&sides) {
        return Err(Error::AmbiguousCrossover(
            "coverage time crosses the baseline more than once on the 0.05 grid".into(),
        ));
    }

    let last_below = sides.iter().rposition(|&s| s == Side::Below).unwrap();
    let first_above = sides.iter().position(|&s| s == Side::Above).unwrap();
    let (lo, hi) = (coarse[last_below], coarse[first_above]);

    let below = probe.bisect(lo, hi, tolerance, |s| s == Side::Below)?;
    let not_above = probe.bisect(lo, hi, tolerance, |s| s != Side::Above)?;
    let bracket = (below.0, not_above.1);
    let bias = 0.25 * (below.0 + below.1 + not_above.0 + not_above.1);

    // Check the refined bracket does not hide a second crossing.
    let samples: Vec<f64> = (0..=4)
        .map(|i| bracket.0 + (bracket.1 - bracket.0) * i as f64 / 4.0)
        .collect();
    let inner = samples
        .iter()
        .map(|&p| probe.side(p))
        .collect::<Result<Vec<_>>>()?;
    if !is_monotone(&inner) {
        return Err(Error::AmbiguousCrossover(format!(
            "coverage time is not monotone across [{:.4}, {:.4}]",
            bracket.0, bracket.1
        )));
    }

    Ok(Crossover {
        bias,
        bracket,
        baseline,
        iterates: probe.iterates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact dyadic start masses printed for the 5-node ring, start node 2.
    const RING_MASSES: [f64; 5] = [0.0, 0.5, 0.5, 0.625, 0.6875];

    #[test]
    fn ring_trace_matches_hand_iteration() {
        let ring = TorusGrid::ring(5).unwrap();
        let res = coverage_trace(&ring, &MovementModel::Uniform, Some(2), None, 0.6, 100).unwrap();
        assert_eq!(res.coverage_time, Some(3));
        assert_eq!(res.trace.cumulative, vec![1.0, 2.0, 2.5, 3.0]);
        assert_eq!(res.trace.gamma, vec![1.0, 1.0, 0.5, 0.5]);
        assert_eq!(res.trace.start_mass, RING_MASSES[..4].to_vec());
        assert!(!res.trace.truncated);
    }

    /// Brute-force mean distinct count over all 2^k equally likely paths.
    fn ring_distinct_by_enumeration(n: usize, start: usize, k: usize) -> f64 {
        let mut total = 0usize;
        for mask in 0..(1usize << k) {
            let mut seen = vec![false; n];
            let mut at = start;
            seen[at] = true;
            for b in 0..k {
                at = if mask >> b & 1 == 1 {
                    (at + 1) % n
                } else {
                    (at + n - 1) % n
                };
                seen[at] = true;
            }
            total += seen.iter().filter(|&&x| x).count();
        }
        total as f64 / (1usize << k) as f64
    }

    #[test]
    fn ring_cumulative_equals_enumerated_distinct_count() {
        let ring = TorusGrid::ring(7).unwrap();
        let res = coverage_trace(&ring, &MovementModel::Uniform, Some(3), None, 1.0, 12).unwrap();
        assert!(res.trace.last_step() >= 8);
        for k in 0..=res.trace.last_step() {
            let want = ring_distinct_by_enumeration(7, 3, k);
            assert!((res.trace.cumulative[k] - want).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn small_target_is_immediate() {
        let g = TorusGrid::torus8(5, 5).unwrap();
        let res = coverage_trace(
            &g,
            &MovementModel::biased(0.3).unwrap(),
            None,
            None,
            0.04,
            10,
        )
        .unwrap();
        assert_eq!(res.coverage_time, Some(0));
        assert_eq!(res.trace.cumulative, vec![1.0]);
    }

    #[test]
    fn straight_walk_truncates() {
        let g = TorusGrid::torus8(5, 5).unwrap();
        let res = coverage_trace(
            &g,
            &MovementModel::biased(1.0).unwrap(),
            None,
            None,
            0.99,
            500,
        )
        .unwrap();
        assert_eq!(res.coverage_time, None);
        assert!(res.trace.truncated);
        assert_eq!(res.trace.last_step(), 500);
        // the walk returns after 5 steps and covers one row only
        assert!((res.trace.cumulative[500] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        let g = TorusGrid::torus8(5, 5).unwrap();
        let u = MovementModel::Uniform;
        assert!(matches!(
            coverage_trace(&g, &u, None, None, 0.0, 10),
            Err(Error::InvalidTarget(_))
        ));
        assert!(coverage_trace(&g, &u, None, None, 1.5, 10).is_err());
        assert!(coverage_trace(&g, &u, None, None, 0.5, 0).is_err());
        assert!(coverage_trace(&g, &u, Some(25), None, 0.5, 10).is_err());
        assert!(coverage_trace(&g, &u, None, Some(Direction::EAST), 0.5, 10).is_err());
        let ring = TorusGrid::ring(5).unwrap();
        let m = MovementModel::biased_with_random(0.5, 0.5).unwrap();
        assert!(coverage_trace(&ring, &m, None, None, 0.5, 10).is_err());
    }

    #[test]
    fn trace_shape_invariants() {
        let g = TorusGrid::torus8(6, 5).unwrap();
        for model in [
            MovementModel::Uniform,
            MovementModel::biased(0.0).unwrap(),
            MovementModel::biased(0.8).unwrap(),
            MovementModel::biased_with_random(0.4, 0.3).unwrap(),
        ] {
            let t = coverage(&g, &model, &CoverageQuery::default())
                .unwrap()
                .trace;
            assert_eq!(t.gamma[0], 1.0);
            for w in t.gamma.windows(2) {
                assert!(w[1] <= w[0] + 1e-12);
            }
            for w in t.cumulative.windows(2) {
                assert!(w[1] >= w[0]);
            }
            assert!(t.gamma.iter().all(|&g| (0.0..=1.0 + 1e-12).contains(&g)));
        }
    }

    #[test]
    fn bias_range_has_clean_decimals() {
        let b = standard_biases();
        assert_eq!(b.len(), 20);
        assert_eq!(b[3], 0.15);
        assert_eq!(b[19], 0.95);
        assert_eq!(bias_range(0.3, 0.3, 0.05).unwrap(), vec![0.3]);
        assert!(bias_range(0.5, 0.1, 0.05).is_err());
        assert!(bias_range(0.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn sweep_keeps_order_and_baseline() {
        let g = TorusGrid::torus8(5, 5).unwrap();
        let q = CoverageQuery::default();
        let s = sweep_bias(&g, &[0.9, 0.1, 0.5], 1.0, &q).unwrap();
        let biases: Vec<f64> = s.points.iter().map(|p| p.bias).collect();
        assert_eq!(biases, vec![0.9, 0.1, 0.5]);
        for p in &s.points {
            assert_eq!(p.coverage_time, s.baseline);
        }
        assert!(sweep_bias(&g, &[], 0.0, &q).is_err());
        assert!(sweep_bias(&g, &[1.2], 0.0, &q).is_err());
    }

    #[test]
    fn crossover_reports_missing_bracket() {
        // r = 1 makes every bias equal to the baseline
        let g = TorusGrid::torus8(5, 5).unwrap();
        let err = crossover_bias(&g, 1.0, &CoverageQuery::default(), 0.005).unwrap_err();
        assert!(matches!(err, Error::NoCrossover(_)), "{err}");
    }

    #[test]
    fn monotone_sides() {
        use Side::*;
        assert!(is_monotone(&[Below, Below, Equal, Above]));
        assert!(!is_monotone(&[Below, Above, Below, Above]));
    }
}
