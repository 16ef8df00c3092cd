//! Quadrature, optimisation and statistics helpers shared by the modules.

pub mod optimize;
pub mod quadrature;
pub mod stats;

pub use optimize::{golden_max, golden_max_log, linear_fit, log_log_slope, logspace};
pub use quadrature::{adaptive_integrate, compensated_sum, geometric_panels, GaussRule, NeumaierSum};
pub use stats::{ks_test, normal_cdf, normal_upper_quantile, KsResult, Welford};
