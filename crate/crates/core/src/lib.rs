//! Earth-observation satellite scheduling with optional orbital reconfiguration.

pub mod constants;
pub mod error;
pub mod greedy;
pub mod io;
pub mod maneuver;
pub mod model;
pub mod orbital;
pub mod report;
pub mod rhp;
pub mod scenario;
pub mod schedule;
pub mod solve;
pub mod validate;
pub mod visibility;

pub use error::{Error, Result};
