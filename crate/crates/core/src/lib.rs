//! Road-test generation, labelling and model-guided selection for
//! simulation-based lane-keeping testing.

pub mod cli;
pub mod error;
pub mod features;
pub mod generator;
pub mod ml;
pub mod oracle;
pub mod road;
pub mod selection;
pub mod store;

pub use error::{Error, Result};
