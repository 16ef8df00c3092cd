//! Gradient bounds of the Ornstein–Uhlenbeck semigroup measured on
//! observables of a single mode coordinate.
//!
//! For `v(x) = φ(x_k)` the gradient `D R_t v` points along `e_k`, so
//! `‖D R_t v‖ = |∂_y E φ(e^{-λ_k t} y + √q_k(t) Z)|` and
//! `‖A^γ D R_t v‖ = λ_k^γ ‖D R_t v‖`. Taking the supremum over a catalog of
//! profiles and over many modes probes the operator-norm bound.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::{ProjectedProblem, Profile};
use crate::error::{Error, Result};
use crate::galerkin::csv_err;
use crate::noise::{q_mode, q_mode_infinity, NoiseSpec};
use crate::numerics::{adaptive_integrate, log_log_slope};
use crate::spectral::Spectrum;

const STD_NORMAL_DENSITY: f64 = 0.398_942_280_401_432_7;

/// Mode data over which smoothing norms are maximised.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothingStudy {
    eigenvalues: Vec<f64>,
    gains: Vec<f64>,
    delta: f64,
    /// Evaluation points per mode coordinate (odd, so zero is included).
    pub points: usize,
}

impl SmoothingStudy {
    /// The first `modes` eigenmodes of `spec` under `noise`.
    pub fn new(spec: &Spectrum, noise: &NoiseSpec, modes: usize) -> Result<Self> {
        noise.validate()?;
        if modes == 0 || modes > spec.len() {
            return Err(Error::param("modes", format!("must lie in 1..={}", spec.len())));
        }
        let eigenvalues = spec.eigenvalues()[..modes].to_vec();
        let gains = eigenvalues.iter().map(|&l| noise.gain(l)).collect();
        Ok(Self {
            eigenvalues,
            gains,
            delta: noise.effective_delta(),
            points: 41,
        })
    }

    /// The projected modes of a Kolmogorov problem.
    pub fn from_problem(problem: &ProjectedProblem) -> Self {
        Self {
            eigenvalues: problem.eigenvalues().to_vec(),
            gains: problem.gains().to_vec(),
            delta: problem.delta,
            points: 41,
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `sup_y |∂_y R_t φ(y)|` along mode `k`.
    pub fn gradient_sup(&self, profile: &Profile, k: usize, t: f64) -> f64 {
        let (l, g) = (self.eigenvalues[k], self.gains[k]);
        let decay = (-t * l).exp();
        let sd = q_mode(g, l, t).sqrt();
        let radius = 6.0 * q_mode_infinity(g, l).sqrt();
        if decay == 0.0 {
            return 0.0;
        }
        let n = self.points.max(3) | 1;
        let shift = 1e-3 * sd;
        let scale = profile.sup_abs().max(1e-300);
        (0..n)
            .map(|i| {
                let y = -radius + 2.0 * radius * i as f64 / (n - 1) as f64;
                let mu = decay * y;
                let mut cuts: Vec<f64> = profile
                    .breakpoints()
                    .iter()
                    .flat_map(|b| [(b - mu - shift) / sd, (b - mu + shift) / sd])
                    .filter(|z| z.abs() < 10.0)
                    .collect();
                cuts.push(-10.0);
                cuts.push(10.0);
                cuts.sort_by(f64::total_cmp);
                let diff: f64 = cuts
                    .windows(2)
                    .map(|w| {
                        adaptive_integrate(
                            |z| {
                                let x = sd * z;
                                (profile.eval(mu + shift + x) - profile.eval(mu - shift + x))
                                    * STD_NORMAL_DENSITY
                                    * (-0.5 * z * z).exp()
                            },
                            w[0],
                            w[1],
                            1e-14 * scale,
                            1e-10,
                        )
                        .0
                    })
                    .sum();
                (decay * diff / (2.0 * shift)).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothingRow {
    pub t: f64,
    /// `sup ‖D R_t v‖ / sup|v|` over catalog, modes and points.
    pub gradient_norm: f64,
    /// Same with `A^γ` applied to the gradient.
    pub fractional_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothingReport {
    pub gamma: f64,
    pub rows: Vec<SmoothingRow>,
    pub slope: f64,
    pub fractional_slope: f64,
    /// `-(½ + δ)`.
    pub expected_slope: f64,
    /// `-(½ + δ + γ)`.
    pub expected_fractional_slope: f64,
    /// Largest gradient norm over the time grid.
    pub max_gradient: f64,
}

/// Measures `sup ‖D R_t v‖` and `sup ‖A^γ D R_t v‖` over `times` and fits
/// their log-log slopes.
pub fn verify_smoothing(
    study: &SmoothingStudy,
    catalog: &[Profile],
    times: &[f64],
    gamma: f64,
) -> Result<SmoothingReport> {
    let delta = study.delta;
    if !(gamma >= 0.0 && gamma < 0.5 - delta) {
        return Err(Error::param("gamma", format!("must lie in [0, {})", 0.5 - delta)));
    }
    if catalog.is_empty() || times.len() < 2 || times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::param("times", "need a nonempty catalog and at least two positive times"));
    }
    let rows: Vec<SmoothingRow> = times
        .par_iter()
        .map(|&t| {
            let mut gradient_norm: f64 = 0.0;
            let mut fractional_norm: f64 = 0.0;
            for profile in catalog {
                for k in 0..study.eigenvalues.len() {
                    let v = study.gradient_sup(profile, k, t) / profile.sup_abs();
                    gradient_norm = gradient_norm.max(v);
                    fractional_norm = fractional_norm.max(study.eigenvalues[k].powf(gamma) * v);
                }
            }
            SmoothingRow {
                t,
                gradient_norm,
                fractional_norm,
            }
        })
        .collect();
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let g: Vec<f64> = rows.iter().map(|r| r.gradient_norm).collect();
    let fr: Vec<f64> = rows.iter().map(|r| r.fractional_norm).collect();
    Ok(SmoothingReport {
        gamma,
        slope: log_log_slope(&ts, &g),
        fractional_slope: log_log_slope(&ts, &fr),
        expected_slope: -(0.5 + delta),
        expected_fractional_slope: -(0.5 + delta + gamma),
        max_gradient: g.iter().copied().fold(0.0, f64::max),
        rows,
    })
}

/// Empirical `C_R = max t^{½+δ} sup‖D R_t v‖ / sup|v|` over the catalog,
/// the study modes and `times`.
pub fn estimate_c_r(study: &SmoothingStudy, catalog: &[Profile], times: &[f64]) -> Result<f64> {
    let report = verify_smoothing(study, catalog, times, 0.0)?;
    Ok(report
        .rows
        .iter()
        .map(|r| r.t.powf(0.5 + study.delta) * r.gradient_norm)
        .fold(0.0, f64::max))
}

/// CSV with header `t,gradient_norm,fractional_norm,slope,fractional_slope`.
pub fn write_smoothing_csv(path: &Path, report: &SmoothingReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["t", "gradient_norm", "fractional_norm", "slope", "fractional_slope"])
        .map_err(csv_err)?;
    for r in &report.rows {
        w.write_record([
            format!("{:.17e}", r.t),
            format!("{:.17e}", r.gradient_norm),
            format!("{:.17e}", r.fractional_norm),
            format!("{:.6}", report.slope),
            format!("{:.6}", report.fractional_slope),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
