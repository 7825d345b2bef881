pub mod dynamics;
pub mod error;
pub mod extremal;
pub mod geometry;
pub mod initial_data;
pub mod numerics;
pub mod solver;
pub mod spherical;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
