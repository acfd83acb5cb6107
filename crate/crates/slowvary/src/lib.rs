//! Slowly-varying macroscale models of PDEs on long thin domains.
pub mod crosssec;
mod error;
pub mod linreduce;
pub mod local;
pub mod nlreduce;
pub mod normform;
pub mod problems;
pub mod report;

pub use error::{Error, Result};
pub use report::{Entry, ModelReport};
