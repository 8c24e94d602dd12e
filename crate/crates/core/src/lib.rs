pub mod cwgan;
pub mod data;
pub mod error;
pub mod harness;
pub mod itc;
pub mod metrics;
pub mod nn;
pub mod predictor;
pub mod seed;
pub mod strategies;
pub mod theory;

pub use error::{Error, Result};
