//! Level-curve geometry of a-harmonic functions on curved annuli.

pub mod chart;
pub mod complex;
pub mod error;
pub mod experiment;
pub mod field;
pub mod hessian;
pub mod io;
pub mod level;
pub mod model;
pub mod numeric;
pub mod solver;
pub mod verdicts;

pub use error::{Error, Result};
