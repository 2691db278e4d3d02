//! Lozenge tilings of a hexagon: height functions, single-site Glauber
//! dynamics with exact sampling, and the tilted limit shape.

pub mod dynamics;
pub mod error;
pub mod harness;
pub mod hexlattice;
pub mod limitshape;
pub mod rng;
pub mod stats;

pub use dynamics::*;
pub use error::{Error, Result};
pub use hexlattice::*;
pub use limitshape::{LimitShape, Phase, ShapeParams, Side};
