//! Satellite constellation retasking: an environment with stochastic
//! satellite failures and a set of agents that learn to move work between
//! satellites.

pub mod agents;
pub mod cli;
pub mod env;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod nn;
pub mod orbital;
pub mod report;

pub use error::{Error, Result};
