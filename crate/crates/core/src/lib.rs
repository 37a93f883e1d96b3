pub mod agent;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod nn;
pub mod sim;
pub mod topo;

pub use error::{Error, Result};
