pub mod analysis;
pub mod assembly;
pub mod basis;
pub mod cli;
pub mod error;
pub mod problems;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
