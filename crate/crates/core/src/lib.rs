pub mod ann;
pub mod classify;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod descriptor;
pub mod edge;
pub mod error;
pub mod eval;
pub mod image;
pub mod io;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
