//! Expected coverage times of random and directionally biased walks on
//! wrap-around grids.
//!
//! The walk is modelled as a Markov chain whose start node is absorbing. The
//! probability mass collected there after `k` steps is the probability of
//! having returned by then, and by the regularity of the grid its complement
//! is the expected number of new nodes reached at that step. Summing gives the
//! expected number of distinct nodes covered, and from it the coverage time.
//!
//! [`oracle`] simulates individual agents to cross-check the chain.

pub mod chart;
pub mod cli;
pub mod coverage;
pub mod error;
pub mod grid;
pub mod markov;
pub mod movement;
pub mod oracle;
pub mod report;

pub use coverage::{
    coverage, coverage_trace, crossover_bias, sweep_bias, CoverageQuery, CoverageResult,
    CoverageTrace, Crossover, SweepResult,
};
pub use error::{Error, Result};
pub use grid::{Direction, NodeId, Topology, TorusGrid};
pub use markov::{SparseStochasticMatrix, StateDistribution, StateIndexing};
pub use movement::MovementModel;
