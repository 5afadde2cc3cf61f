//! Numerical toolkit for pseudohyperbolic and homoclinic attractors of
//! three-dimensional maps and low-dimensional flows.

pub mod cli;
pub mod diagram;
pub mod error;
pub mod io;
pub mod lmp;
pub mod lyapunov;
pub mod manifold;
pub mod render;
pub mod saddlechart;
pub mod systems;

pub use error::{Error, Result};
