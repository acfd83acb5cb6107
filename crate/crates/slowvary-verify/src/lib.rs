//! Numerical checks of slowly-varying models: full simulations, model simulations,
//! dispersion oracles, emergence rates and error scaling.
//!
//! Everything here is double precision. Exact expressions from the constructions
//! are converted once, at the boundary, by [`numeric`].

pub mod dispersion;
pub mod emergence;
mod error;
pub mod grid;
pub mod numeric;
pub mod output;
pub mod sim;

pub use error::{Result, VerifyError};
