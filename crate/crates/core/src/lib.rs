//! Sample-based execution of robust local algorithms.
//!
//! A local algorithm is a uniform multi-collection of decision trees. This
//! crate normalizes and prepares such algorithms, partitions their accepting
//! query sets into daisies, and runs the resulting sample-based algorithm,
//! alongside exhaustive oracles for checking every step at small scale.

pub mod cli;
pub mod coloring;
pub mod daisy;
pub mod error;
pub mod model;
pub mod oracle;
pub mod par;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod transforms;
pub mod zoo;

pub use error::{Error, Result};
