//! Seeded fixtures shared by the solver benchmarks.

use wnc_core::sets::random_point_set;
use wnc_core::{PointSet, SpaceSpec};

pub fn points(p: f64, d: usize, m: usize, seed: u64) -> PointSet {
    random_point_set(SpaceSpec::lp(p, d).expect("valid exponent"), m, seed).expect("valid points")
}
