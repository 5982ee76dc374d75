//! Balanced phase-sensitive heterodyne detection with a bichromatic local
//! oscillator: closed-form photocurrent statistics, a Gaussian correlation
//! engine for squeezed inputs, and a photoemission Monte Carlo that checks
//! the closed forms.

pub mod analytic;
pub mod cli;
pub mod config;
pub mod correlators;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod phasor;

pub use error::{Error, Result};
