//! Regular wrap-around topologies: the 1-D ring and the 8-neighbour torus.
//!
//! Nodes are numbered row-major, `row * cols + col`. Directions are indexed
//! counter-clockwise from east, so on the torus direction `i` has angle
//! `i * pi / 4` with north at `pi / 2`. Rows grow southwards.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Node identifier, `row * cols + col`.
pub type NodeId = usize;

/// `(drow, dcol)` for the 8 torus directions, counter-clockwise from east.
const TORUS8_OFFSETS: [(isize, isize); 8] = [
    (0, 1),   // east
    (-1, 1),  // northeast
    (-1, 0),  // north
    (-1, -1), // northwest
    (0, -1),  // west
    (1, -1),  // southwest
    (1, 0),   // south
    (1, 1),   // southeast
];

const RING_OFFSETS: [(isize, isize); 2] = [(0, 1), (0, -1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    Ring,
    Torus8,
}

impl Topology {
    pub fn name(self) -> &'static str {
        match self {
            Topology::Ring => "ring",
            Topology::Torus8 => "torus8",
        }
    }

    pub fn degree(self) -> usize {
        match self {
            Topology::Ring => 2,
            Topology::Torus8 => 8,
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A heading, stored as an index into the grid's direction set.
///
/// Validity depends on the grid; obtain checked values through
/// [`TorusGrid::direction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Direction(usize);

impl Direction {
    pub const EAST: Direction = Direction(0);
    pub const NORTHEAST: Direction = Direction(1);
    pub const NORTH: Direction = Direction(2);
    pub const NORTHWEST: Direction = Direction(3);
    /// Index 1 on a ring, index 4 on the torus; see [`TorusGrid::opposite`].
    pub const RING_WEST: Direction = Direction(1);
    pub const WEST: Direction = Direction(4);
    pub const SOUTHWEST: Direction = Direction(5);
    pub const SOUTH: Direction = Direction(6);
    pub const SOUTHEAST: Direction = Direction(7);

    pub fn index(self) -> usize {
        self.0
    }
}

/// A ring (`rows == 1`, degree 2) or an 8-neighbour torus.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TorusGrid {
    topology: Topology,
    rows: usize,
    cols: usize,
}

impl TorusGrid {
    /// Ring of `nodes` nodes, wrapping east to west.
    ///
    /// At least 3 nodes, so that east and west reach different neighbours.
    pub fn ring(nodes: usize) -> Result<Self> {
        if nodes < 3 {
            return Err(Error::InvalidGrid(format!(
                "a ring needs at least 3 nodes, got {nodes}"
            )));
        }
        Ok(Self {
            topology: Topology::Ring,
            rows: 1,
            cols: nodes,
        })
    }

    /// Torus of `rows x cols` nodes where every node has 8 neighbours.
    ///
    /// Both dimensions must be at least 3 so that the neighbours are distinct.
    pub fn torus8(rows: usize, cols: usize) -> Result<Self> {
        if rows < 3 || cols < 3 {
            return Err(Error::InvalidGrid(format!(
                "an 8-neighbour torus needs rows, cols >= 3, got {rows}x{cols}"
            )));
        }
        Ok(Self {
            topology: Topology::Torus8,
            rows,
            cols,
        })
    }

    pub fn new(topology: Topology, rows: usize, cols: usize) -> Result<Self> {
        match topology {
            Topology::Ring if rows != 1 => Err(Error::InvalidGrid(format!(
                "a ring has exactly one row, got {rows}"
            ))),
            Topology::Ring => Self::ring(cols),
            Topology::Torus8 => Self::torus8(rows, cols),
        }
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn node_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn degree(&self) -> usize {
        self.topology.degree()
    }

    pub fn node_index(&self, row: usize, col: usize) -> Result<NodeId> {
        if row >= self.rows {
            return Err(Error::OutOfRange {
                what: "row",
                value: row,
                limit: self.rows,
            });
        }
        if col >= self.cols {
            return Err(Error::OutOfRange {
                what: "col",
                value: col,
                limit: self.cols,
            });
        }
        Ok(row * self.cols + col)
    }

    pub fn coords(&self, node: NodeId) -> (usize, usize) {
        (node / self.cols, node % self.cols)
    }

    pub fn check_node(&self, node: NodeId) -> Result<NodeId> {
        if node < self.node_count() {
            Ok(node)
        } else {
            Err(Error::OutOfRange {
                what: "node",
                value: node,
                limit: self.node_count(),
            })
        }
    }

    /// The node at `(rows / 2, cols / 2)`.
    pub fn center(&self) -> NodeId {
        (self.rows / 2) * self.cols + self.cols / 2
    }

    pub fn direction(&self, index: usize) -> Result<Direction> {
        if index < self.degree() {
            Ok(Direction(index))
        } else {
            Err(Error::OutOfRange {
                what: "direction",
                value: index,
                limit: self.degree(),
            })
        }
    }

    pub fn directions(&self) -> impl Iterator<Item = Direction> {
        (0..self.degree()).map(Direction)
    }

    /// Angle in radians: `index * 2 pi / 8` on the torus, `index * pi` on a ring.
    pub fn angle(&self, d: Direction) -> f64 {
        d.0 as f64 * 2.0 * PI / self.degree() as f64
    }

    /// Rotate by `steps` direction increments (positive is counter-clockwise).
    pub fn turn(&self, d: Direction, steps: isize) -> Direction {
        let n = self.degree() as isize;
        Direction((d.0 as isize + steps).rem_euclid(n) as usize)
    }

    pub fn opposite(&self, d: Direction) -> Direction {
        self.turn(d, self.degree() as isize / 2)
    }

    fn offset(&self, d: Direction) -> (isize, isize) {
        match self.topology {
            Topology::Ring => RING_OFFSETS[d.0],
            Topology::Torus8 => TORUS8_OFFSETS[d.0],
        }
    }

    /// Node reached by one step from `node` in direction `d`, wrapping at the
    /// edges.
    ///
    /// Panics if `node` or `d` is out of range for this grid.
    pub fn neighbor(&self, node: NodeId, d: Direction) -> NodeId {
        assert!(node < self.node_count(), "node {node} out of range");
        assert!(d.0 < self.degree(), "direction {} out of range", d.0);
        let (row, col) = self.coords(node);
        let (dr, dc) = self.offset(d);
        let r = (row as isize + dr).rem_euclid(self.rows as isize) as usize;
        let c = (col as isize + dc).rem_euclid(self.cols as isize) as usize;
        r * self.cols + c
    }

    /// Neighbours in direction order.
    pub fn neighbors(&self, node: NodeId) -> Vec<NodeId> {
        self.directions().map(|d| self.neighbor(node, d)).collect()
    }
}

impl fmt::Display for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.topology {
            Topology::Ring => write!(f, "ring of {}", self.cols),
            Topology::Torus8 => write!(f, "{}x{} torus", self.rows, self.cols),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn node_index_examples() {
        let g = TorusGrid::torus8(5, 5).unwrap();
        assert_eq!(g.node_index(1, 0).unwrap(), 5);
        assert_eq!(g.node_index(0, 0).unwrap(), 0);
        let g = TorusGrid::torus8(3, 4).unwrap();
        assert_eq!(g.node_index(2, 3).unwrap(), 11);
        assert!(g.node_index(3, 0).is_err());
        assert!(g.node_index(0, 4).is_err());
    }

    #[test]
    fn ring_wraps_east() {
        let g = TorusGrid::ring(5).unwrap();
        assert_eq!(g.neighbor(4, Direction::EAST), 0);
        assert_eq!(g.neighbor(0, Direction::RING_WEST), 4);
        assert_eq!(g.neighbors(4), vec![0, 3]);
    }

    #[test]
    fn torus_neighbors_of_origin() {
        let g = TorusGrid::torus8(5, 5).unwrap();
        assert_eq!(g.neighbor(0, Direction::EAST), 1);
        assert_eq!(g.neighbor(0, Direction::NORTHWEST), 24);
        let mut n = g.neighbors(0);
        n.sort_unstable();
        assert_eq!(n, vec![1, 4, 5, 6, 9, 20, 21, 24]);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(TorusGrid::ring(2).is_err());
        assert!(TorusGrid::torus8(2, 5).is_err());
        assert!(TorusGrid::torus8(5, 2).is_err());
        assert!(TorusGrid::new(Topology::Ring, 2, 5).is_err());
        assert!(TorusGrid::torus8(3, 3).is_ok());
    }

    #[test]
    fn direction_angles() {
        let g = TorusGrid::torus8(3, 3).unwrap();
        assert_eq!(g.angle(Direction::EAST), 0.0);
        assert!((g.angle(Direction::NORTH) - PI / 2.0).abs() < 1e-15);
        assert!((g.angle(Direction::SOUTHEAST) - 7.0 * PI / 4.0).abs() < 1e-15);
        assert_eq!(g.turn(Direction::EAST, -1), Direction::SOUTHEAST);
        assert_eq!(g.turn(Direction::SOUTHEAST, 1), Direction::EAST);
        let r = TorusGrid::ring(5).unwrap();
        assert!((r.angle(Direction::RING_WEST) - PI).abs() < 1e-15);
        assert!(g.direction(8).is_err());
        assert!(r.direction(2).is_err());
    }

    fn any_grid() -> impl Strategy<Value = TorusGrid> {
        prop_oneof![
            (3usize..12).prop_map(|n| TorusGrid::ring(n).unwrap()),
            (3usize..9, 3usize..9).prop_map(|(r, c)| TorusGrid::torus8(r, c).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn step_and_back(grid in any_grid(), seed in 0usize..10_000) {
            let node = seed % grid.node_count();
            for d in grid.directions() {
                let there = grid.neighbor(node, d);
                prop_assert_eq!(grid.neighbor(there, grid.opposite(d)), node);
            }
        }

        #[test]
        fn neighbors_distinct_and_symmetric(grid in any_grid(), seed in 0usize..10_000) {
            let node = seed % grid.node_count();
            let mut n = grid.neighbors(node);
            n.sort_unstable();
            n.dedup();
            prop_assert_eq!(n.len(), grid.degree());
            for j in n {
                prop_assert!(grid.neighbors(j).contains(&node));
            }
        }
    }
}
