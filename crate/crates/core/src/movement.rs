//! Heading-selection rules for the three movement models.
//!
//! * `Uniform`: every direction with probability `1 / degree`.
//! * `Biased { p }`: keep the current heading with probability `p`, otherwise
//!   turn one increment left or right with probability `(1 - p) / 2` each.
//!   On a ring there is only one other heading, so it receives `1 - p`.
//! * `BiasedWithRandom { p, r }`: with probability `r` take a uniformly random
//!   heading, otherwise behave as `Biased { p }`. Torus only.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{Direction, Topology, TorusGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MovementModel {
    Uniform,
    Biased { p: f64 },
    BiasedWithRandom { p: f64, r: f64 },
}

fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}

impl MovementModel {
    pub fn biased(p: f64) -> Result<Self> {
        Ok(Self::Biased {
            p: check_probability("p", p)?,
        })
    }

    pub fn biased_with_random(p: f64, r: f64) -> Result<Self> {
        Ok(Self::BiasedWithRandom {
            p: check_probability("p", p)?,
            r: check_probability("r", r)?,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::Biased { .. } => "biased",
            Self::BiasedWithRandom { .. } => "biased-random",
        }
    }

    /// Whether the walk's state must carry the current heading.
    pub fn is_directional(&self) -> bool {
        !matches!(self, Self::Uniform)
    }

    pub fn bias(&self) -> Option<f64> {
        match *self {
            Self::Uniform => None,
            Self::Biased { p } | Self::BiasedWithRandom { p, .. } => Some(p),
        }
    }

    /// Checks the probabilities and that the model is defined on `grid`.
    pub fn validate(&self, grid: &TorusGrid) -> Result<()> {
        match *self {
            Self::Uniform => Ok(()),
            Self::Biased { p } => check_probability("p", p).map(|_| ()),
            Self::BiasedWithRandom { p, r } => {
                check_probability("p", p)?;
                check_probability("r", r)?;
                if grid.topology() == Topology::Ring {
                    return Err(Error::ModelGridMismatch {
                        model: self.name(),
                        topology: grid.topology().name(),
                    });
                }
                Ok(())
            }
        }
    }

    /// Probability of each next heading given the `current` one, indexed by
    /// direction.
    pub fn heading_distribution(&self, grid: &TorusGrid, current: Direction) -> Result<Vec<f64>> {
        self.validate(grid)?;
        let current = grid.direction(current.index())?;
        let degree = grid.degree();
        let mut q = vec![0.0; degree];
        match *self {
            Self::Uniform => q.fill(1.0 / degree as f64),
            Self::Biased { p } => match grid.topology() {
                Topology::Ring => {
                    q[current.index()] = p;
                    q[grid.opposite(current).index()] = 1.0 - p;
                }
                Topology::Torus8 => {
                    let side = (1.0 - p) / 2.0;
                    q[current.index()] = p;
                    q[grid.turn(current, 1).index()] = side;
                    q[grid.turn(current, -1).index()] = side;
                }
            },
            Self::BiasedWithRandom { p, r } => {
                let random = r / degree as f64;
                let side = random + (1.0 - r) * (1.0 - p) / 2.0;
                q.fill(random);
                q[current.index()] = random + (1.0 - r) * p;
                q[grid.turn(current, 1).index()] = side;
                q[grid.turn(current, -1).index()] = side;
            }
        }
        Ok(q)
    }
}

impl fmt::Display for MovementModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Uniform => f.write_str("uniform"),
            Self::Biased { p } => write!(f, "biased(p={p})"),
            Self::BiasedWithRandom { p, r } => write!(f, "biased-random(p={p}, r={r})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn torus() -> TorusGrid {
        TorusGrid::torus8(5, 5).unwrap()
    }

    #[test]
    fn biased_three_fifths_heading_north() {
        let q = MovementModel::biased(0.6)
            .unwrap()
            .heading_distribution(&torus(), Direction::NORTH)
            .unwrap();
        assert_eq!(q[Direction::NORTH.index()], 0.6);
        assert!((q[Direction::NORTHEAST.index()] - 0.2).abs() < 1e-15);
        assert!((q[Direction::NORTHWEST.index()] - 0.2).abs() < 1e-15);
        let rest: f64 = [0, 4, 5, 6, 7].iter().map(|&i| q[i]).sum();
        assert_eq!(rest, 0.0);
    }

    #[test]
    fn ring_bias_reverses_with_remaining_mass() {
        let ring = TorusGrid::ring(5).unwrap();
        let q = MovementModel::biased(0.75)
            .unwrap()
            .heading_distribution(&ring, Direction::EAST)
            .unwrap();
        assert_eq!(q, vec![0.75, 0.25]);
    }

    #[test]
    fn random_steps_substitution() {
        let q = MovementModel::biased_with_random(0.6, 0.2)
            .unwrap()
            .heading_distribution(&torus(), Direction::EAST)
            .unwrap();
        let expect = [0.505, 0.185, 0.025, 0.025, 0.025, 0.025, 0.025, 0.185];
        for (a, b) in q.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15, "{q:?}");
        }
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let q = MovementModel::biased_with_random(0.5, 1.0)
            .unwrap()
            .heading_distribution(&torus(), Direction::SOUTH)
            .unwrap();
        assert!(q.iter().all(|&x| x == 0.125));
    }

    #[test]
    fn domain_errors() {
        assert!(MovementModel::biased(1.01).is_err());
        assert!(MovementModel::biased(-0.1).is_err());
        assert!(MovementModel::biased(f64::NAN).is_err());
        assert!(MovementModel::biased_with_random(0.5, 1.5).is_err());
        let ring = TorusGrid::ring(5).unwrap();
        let m = MovementModel::biased_with_random(0.5, 0.1).unwrap();
        assert!(matches!(
            m.heading_distribution(&ring, Direction::EAST),
            Err(Error::ModelGridMismatch { .. })
        ));
        let bad = MovementModel::Biased { p: 2.0 };
        assert!(bad.heading_distribution(&torus(), Direction::EAST).is_err());
    }

    fn any_model() -> impl Strategy<Value = MovementModel> {
        prop_oneof![
            Just(MovementModel::Uniform),
            (0.0..=1.0f64).prop_map(|p| MovementModel::Biased { p }),
            (0.0..=1.0f64, 0.0..=1.0f64)
                .prop_map(|(p, r)| MovementModel::BiasedWithRandom { p, r }),
        ]
    }

    proptest! {
        #[test]
        fn distribution_is_normalised_and_mirror_symmetric(model in any_model(), d in 0usize..8) {
            let g = torus();
            let cur = g.direction(d).unwrap();
            let q = model.heading_distribution(&g, cur).unwrap();
            prop_assert!(q.iter().all(|&x| x >= 0.0));
            prop_assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for k in 1..4isize {
                prop_assert_eq!(q[g.turn(cur, k).index()], q[g.turn(cur, -k).index()]);
            }
        }

        #[test]
        fn random_step_limits(p in 0.0..=1.0f64, d in 0usize..8) {
            let g = torus();
            let cur = g.direction(d).unwrap();
            let zero = MovementModel::BiasedWithRandom { p, r: 0.0 }.heading_distribution(&g, cur).unwrap();
            let biased = MovementModel::Biased { p }.heading_distribution(&g, cur).unwrap();
            prop_assert_eq!(zero, biased);
            let one = MovementModel::BiasedWithRandom { p, r: 1.0 }.heading_distribution(&g, cur).unwrap();
            let uniform = MovementModel::Uniform.heading_distribution(&g, cur).unwrap();
            prop_assert_eq!(one, uniform);
        }
    }
}
