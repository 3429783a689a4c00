pub mod error;
pub mod discretization;
pub mod faults;
pub mod solver;
pub mod analysis;
pub mod linalg;
pub mod harness;

pub use error::{Error, Result};
