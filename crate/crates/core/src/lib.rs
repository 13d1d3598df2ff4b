//! Simulation and verification toolkit for preferential attachment graphs and
//! the descendant counts of their last vertex.

pub mod descendants;
pub mod error;
pub mod generators;
pub mod harness;
pub mod quadrature;
pub mod randomness;
pub mod special;
pub mod stats;
pub mod theory;
pub mod yule;

pub use error::{Error, Result};
