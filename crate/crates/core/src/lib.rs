//! Certified finite-dimensional quantities of weak noncompactness.
//!
//! The crate computes, over finite point sets in finite-dimensional normed
//! spaces, the finite sections of several equivalent measures of (super)
//! weak noncompactness together with the audits that tie them together:
//!
//! * [`normed`]: norms, dual norms, and certified min-norm-point, hull
//!   distance, and chain-feasibility solvers;
//! * [`profiles`]: uniform-weak-null and Cesàro profiles, James-type chain
//!   and convex-separation values;
//! * [`dentability`]: slice derivation, dentability index, dyadic trees,
//!   midpoint-convexity moduli;
//! * [`operators`]: matrix operators, adjoint chain duality, image bounds;
//! * [`sets`]: generators for bases, characteristic families, type ratios;
//! * [`harness`]: batch experiments and report emission.

pub mod combinatorics;
pub mod dentability;
pub mod error;
pub mod harness;
pub(crate) mod linalg;
pub mod lp;
pub mod normed;
pub mod operators;
pub mod profiles;
pub mod sets;
pub mod space;

pub use error::{Error, Result};
pub use space::{
    DualFunctional, Exponent, PointSet, SimplexWeights, SolveCertificate, SolverConfig, SpaceKind, SpaceSpec, Vector,
};
