//! Mirror descent over pluggable geometries, online learning with experts,
//! exact complexity calculators for finite classes, and lower-bound adversaries.

pub mod adversary;
pub mod complexity;
pub mod error;
pub mod experts;
pub mod geometry;
pub mod harness;
pub mod losses;
pub mod md;
pub mod point;
pub mod tolerance;

pub use complexity::{BinaryTree, Caps, FiniteClass, WitnessTree};
pub use error::{Error, Result};
pub use geometry::{BregmanEval, Constraint, Family, GeometrySpec};
pub use losses::{LossEval, LossInstance, Piece};
pub use md::{Comparator, MdState, RegretTrace, StepPolicy};
pub use point::Point;
pub use tolerance::{Tolerances, TOL};
