//! Instance generation, file formats, experiments and the command line
//! around `netforge-core`.

mod error;
pub mod experiment;
pub mod generator;
pub mod io;
pub mod parallel;

pub use error::{Error, Result};
