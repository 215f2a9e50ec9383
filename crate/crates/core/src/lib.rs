//! Explicit minimal-width network construction and verification.

pub mod coding;
pub mod construct;
pub mod error;
pub mod exact;
pub mod geometry;
pub mod metrics;
pub mod net;
pub mod target;
pub mod verify;

pub use error::{Error, Result};
pub use net::{Activation, Layer, NetBuilder, Network, NumericMode};
pub use target::TargetFunction;
