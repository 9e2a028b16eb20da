//! Slot-level simulation of cooperative vehicle tracking over a
//! collision-prone broadcast channel.

pub mod error;
pub mod model;
pub mod motion;
pub mod ukf;
pub mod channel;
pub mod policy;
pub mod mobility;
pub mod track;
pub mod metrics;
pub mod theory;
pub mod engine;
pub mod report;

pub use error::{Result, SimError};
