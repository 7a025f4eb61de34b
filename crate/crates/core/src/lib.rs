//! Flexible cylindrical array modeling, joint precoding and antenna
//! placement, and a Monte Carlo sum-rate harness.

pub mod alternating;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod joint;
pub mod linalg;
pub mod oracle;
pub mod pattern;
pub mod precoding;
pub mod solver;
pub mod validation;

pub use error::{FclaError, Result};
