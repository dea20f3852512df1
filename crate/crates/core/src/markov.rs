//! Sparse Markov-chain model of a walk on a [`TorusGrid`].
//!
//! A uniform walk uses one state per node. The biased models carry the
//! current heading as well, so state `d * N + i` means "at node `i`, having
//! arrived moving in direction `d`". Coverage is read off a chain whose start
//! node is absorbing: the mass held by the start states after `k` steps is the
//! probability of having returned by then.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::grid::{Direction, NodeId, TorusGrid};
use crate::movement::MovementModel;

const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Layout of the state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateIndexing {
    Plain { nodes: usize },
    DirectionAugmented { nodes: usize, degree: usize },
}

impl StateIndexing {
    pub fn for_model(grid: &TorusGrid, model: &MovementModel) -> Self {
        if model.is_directional() {
            Self::DirectionAugmented {
                nodes: grid.node_count(),
                degree: grid.degree(),
            }
        } else {
            Self::Plain {
                nodes: grid.node_count(),
            }
        }
    }

    pub fn nodes(&self) -> usize {
        match *self {
            Self::Plain { nodes } | Self::DirectionAugmented { nodes, .. } => nodes,
        }
    }

    /// Number of headings carried per node (1 for the plain layout).
    pub fn layers(&self) -> usize {
        match *self {
            Self::Plain { .. } => 1,
            Self::DirectionAugmented { degree, .. } => degree,
        }
    }

    pub fn dim(&self) -> usize {
        self.nodes() * self.layers()
    }

    /// State index of `node` entered in direction `d`; `d` is ignored for the
    /// plain layout.
    pub fn state(&self, d: Direction, node: NodeId) -> usize {
        match *self {
            Self::Plain { .. } => node,
            Self::DirectionAugmented { nodes, .. } => d.index() * nodes + node,
        }
    }

    /// All states that sit on `node`, one per heading.
    pub fn states_of(&self, node: NodeId) -> impl Iterator<Item = usize> {
        let nodes = self.nodes();
        (0..self.layers()).map(move |layer| layer * nodes + node)
    }

    fn check_node(&self, node: NodeId) -> Result<()> {
        if node < self.nodes() {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                what: "node",
                value: node,
                limit: self.nodes(),
            })
        }
    }
}

/// Row-stochastic matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseStochasticMatrix {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseStochasticMatrix {
    /// Builds a matrix from per-row `(column, probability)` lists.
    ///
    /// Zero entries are dropped, duplicate columns within a row are summed and
    /// each row must be a probability vector.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(c, _)| c);
            let start = cols.len();
            for (c, w) in row {
                if c >= dim {
                    return Err(Error::OutOfRange {
                        what: "column",
                        value: c,
                        limit: dim,
                    });
                }
                if w.is_nan() || w < 0.0 {
                    return Err(Error::NotStochastic {
                        row: i,
                        reason: format!("entry {w} at column {c}"),
                    });
                }
                if w == 0.0 {
                    continue;
                }
                if cols.len() > start && cols[cols.len() - 1] == c {
                    *vals.last_mut().unwrap() += w;
                } else {
                    cols.push(c);
                    vals.push(w);
                }
            }
            let sum: f64 = vals[start..].iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::NotStochastic {
                    row: i,
                    reason: format!("row sums to {sum}"),
                });
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Nonzero `(column, probability)` pairs of row `i`, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, w)| w)
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.vals[self.row_ptr[i]..self.row_ptr[i + 1]].iter().sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| {
                let mut dense = vec![0.0; self.dim()];
                for (j, w) in self.row(i) {
                    dense[j] = w;
                }
                dense
            })
            .collect()
    }

    /// Replaces row `i` by the unit row at column `i`.
    fn make_absorbing(&mut self, i: usize) {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols.splice(lo..hi, [i]);
        self.vals.splice(lo..hi, [1.0]);
        let shift = 1 - (hi - lo) as isize;
        for p in &mut self.row_ptr[i + 1..] {
            *p = (*p as isize + shift) as usize;
        }
    }

    /// `out = v * M`. `out` is overwritten.
    pub fn left_multiply_into(&self, v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (i, &mass) in v.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let span = self.row_ptr[i]..self.row_ptr[i + 1];
            for (&j, &w) in self.cols[span.clone()].iter().zip(&self.vals[span]) {
                out[j] += mass * w;
            }
        }
    }

    /// Writes one `row col prob` line per nonzero, rows ascending.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> io::Result<()> {
        for i in 0..self.dim() {
            for (j, p) in self.row(i) {
                writeln!(w, "{i} {j} {p}")?;
            }
        }
        Ok(())
    }
}

/// Transition matrix of `model` on `grid`, without absorption.
///
/// Row `d * N + i` sends mass `q[d']` to state `d' * N + neighbor(i, d')`,
/// where `q` is the heading distribution for current heading `d`.
pub fn build_transition_matrix(
    grid: &TorusGrid,
    model: &MovementModel,
) -> Result<SparseStochasticMatrix> {
    model.validate(grid)?;
    let indexing = StateIndexing::for_model(grid, model);
    let nodes = grid.node_count();
    let mut rows = Vec::with_capacity(indexing.dim());
    match indexing {
        StateIndexing::Plain { .. } => {
            let w = 1.0 / grid.degree() as f64;
            for i in 0..nodes {
                rows.push(
                    grid.directions()
                        .map(|d| (grid.neighbor(i, d), w))
                        .collect(),
                );
            }
        }
        StateIndexing::DirectionAugmented { .. } => {
            for current in grid.directions() {
                let q = model.heading_distribution(grid, current)?;
                let headings: Vec<(Direction, f64)> =
                    grid.directions().zip(q).filter(|&(_, w)| w > 0.0).collect();
                for i in 0..nodes {
                    rows.push(
                        headings
                            .iter()
                            .map(|&(next, w)| (indexing.state(next, grid.neighbor(i, next)), w))
                            .collect(),
                    );
                }
            }
        }
    }
    SparseStochasticMatrix::from_rows(rows)
}

/// Makes every state on the start node `s` absorbing. Other rows are left
/// untouched.
pub fn absorb_start(
    mut matrix: SparseStochasticMatrix,
    indexing: StateIndexing,
    s: NodeId,
) -> Result<SparseStochasticMatrix> {
    indexing.check_node(s)?;
    check_dim(indexing.dim(), matrix.dim())?;
    for state in indexing.states_of(s) {
        matrix.make_absorbing(state);
    }
    Ok(matrix)
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Probability vector over chain states after `step` transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution {
    entries: Vec<f64>,
    step: usize,
}

impl StateDistribution {
    pub fn new(entries: Vec<f64>) -> Self {
        Self { entries, step: 0 }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().sum()
    }

    /// Advances one step, returning the next distribution.
    pub fn advance(&self, matrix: &SparseStochasticMatrix) -> Result<StateDistribution> {
        let mut next = vec![0.0; self.entries.len()];
        self.advance_into(matrix, &mut next)?;
        Ok(StateDistribution {
            entries: next,
            step: self.step + 1,
        })
    }

    /// Advances in place using `scratch` as the output buffer.
    pub fn advance_in_place(
        &mut self,
        matrix: &SparseStochasticMatrix,
        scratch: &mut Vec<f64>,
    ) -> Result<()> {
        scratch.resize(self.entries.len(), 0.0);
        self.advance_into(matrix, scratch)?;
        std::mem::swap(&mut self.entries, scratch);
        self.step += 1;
        Ok(())
    }

    fn advance_into(&self, matrix: &SparseStochasticMatrix, out: &mut [f64]) -> Result<()> {
        check_dim(matrix.dim(), self.entries.len())?;
        matrix.left_multiply_into(&self.entries, out);
        Ok(())
    }
}

/// Distribution one step after a point mass at `s` (heading `d0` for the
/// directional layout), taken under the unabsorbed matrix.
pub fn initial_distribution(
    unabsorbed: &SparseStochasticMatrix,
    indexing: StateIndexing,
    s: NodeId,
    d0: Option<Direction>,
) -> Result<StateDistribution> {
    indexing.check_node(s)?;
    check_dim(indexing.dim(), unabsorbed.dim())?;
    let origin = match (indexing, d0) {
        (StateIndexing::Plain { .. }, None) => s,
        (StateIndexing::Plain { .. }, Some(_)) => {
            return Err(Error::InitialDirection(
                "must not be given for a uniform walk",
            ))
        }
        (StateIndexing::DirectionAugmented { degree, .. }, Some(d)) => {
            if d.index() >= degree {
                return Err(Error::OutOfRange {
                    what: "direction",
                    value: d.index(),
                    limit: degree,
                });
            }
            indexing.state(d, s)
        }
        (StateIndexing::DirectionAugmented { .. }, None) => {
            return Err(Error::InitialDirection("is required for a biased walk"))
        }
    };
    let mut entries = vec![0.0; indexing.dim()];
    for (j, w) in unabsorbed.row(origin) {
        entries[j] = w;
    }
    Ok(StateDistribution::new(entries))
}

/// `v * M` as a fresh distribution.
pub fn step(v: &StateDistribution, matrix: &SparseStochasticMatrix) -> Result<StateDistribution> {
    v.advance(matrix)
}

/// Total probability on the start node, summed over headings.
pub fn start_mass(v: &StateDistribution, indexing: StateIndexing, s: NodeId) -> f64 {
    indexing.states_of(s).map(|i| v.entries[i]).sum()
}
