//! Performance analysis of users in sleeping cells under BS sleeping and cell zooming.

pub mod association;
pub mod channel;
pub mod error;
pub mod focus;
pub mod geometry;
pub mod mathkit;
pub mod metrics;
pub mod montecarlo;
pub mod scenario;
pub mod sigint;

pub use error::{Error, Result};
