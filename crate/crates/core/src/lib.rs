//! Spectral simulation and verification toolkit for semilinear stochastic
//! PDEs with colored or rough additive noise on boxes.

pub mod admissibility;
pub mod cli;
pub mod config;
pub mod error;
pub mod galerkin;
pub mod kolmogorov;
pub mod law_compare;
pub mod numerics;
pub mod noise;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{BoundaryCondition, ModeVector, Spectrum};
