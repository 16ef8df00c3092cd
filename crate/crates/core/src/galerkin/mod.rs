//! Galerkin approximations `dX_n + A X_n dt = B_n(X_n) dt + P_n G dW` with an
//! exponential Euler scheme: the linear part and the noise are sampled
//! exactly per mode, and the drift enters through `(1 - e^{-hλ_k})/λ_k`.

mod drift;
mod rng;
mod transform;

use std::io::Write;
use std::path::Path;

use serde::Serialize;

pub use drift::{radial_projection, DriftEvaluator, DriftModel, DriftSpec, ModeField, Nonlinearity};
pub use rng::NoiseStream;
pub use transform::Collocation;


use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::spectral::{sobolev_norm_slice, Spectrum};

/// Norm above which a state counts as blown up.
pub const BLOW_UP_NORM: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct GalerkinProblem {
    pub spectrum: Spectrum,
    pub noise: NoiseSpec,
    pub drift: DriftModel,
}

impl GalerkinProblem {
    pub fn new(spectrum: Spectrum, noise: NoiseSpec, drift: DriftModel) -> Self {
        Self { spectrum, noise, drift }
    }

    /// Same equation on the first `n` modes.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        Ok(Self { spectrum: self.spectrum.truncated(n)?, noise: self.noise, drift: self.drift.clone() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSettings {
    pub horizon: f64,
    pub step: f64,
    /// Level `N` of the drift truncation `B_N`.
    pub truncation: Option<f64>,
    /// Levels whose exit times `τ_N` are recorded.
    pub stop_levels: Vec<f64>,
    /// Exponent `s` of the monitored norm `‖a‖_{2s}`.
    pub monitor_exponent: f64,
}

impl RunSettings {
    /// Horizon `T` with the default step `T/2048`.
    pub fn new(horizon: f64) -> Self {
        Self { horizon, step: horizon / 2048.0, truncation: None, stop_levels: Vec::new(), monitor_exponent: 0.0 }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn with_truncation(mut self, level: f64) -> Self {
        self.truncation = Some(level);
        self
    }

    pub fn with_stop_levels(mut self, levels: Vec<f64>) -> Self {
        self.stop_levels = levels;
        self
    }

    /// Number of steps; `T/h` must be an integer up to rounding.
    pub fn steps(&self) -> Result<usize> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::param("T", "horizon must be positive and finite"));
        }
        if !(self.step > 0.0) {
            return Err(Error::param("h", "step must be positive"));
        }
        let m = (self.horizon / self.step).round();
        if m < 1.0 || ((m * self.step - self.horizon) / self.horizon).abs() > 1e-9 {
            return Err(Error::param("h", format!("T/h = {} is not an integer", self.horizon / self.step)));
        }
        Ok(m as usize)
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.step
    }
}

/// First grid time with `‖a‖_{2α} > N`, `None` standing for `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StoppingRecord {
    pub level: f64,
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GalerkinPath {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub seed: u64,
    pub path: u64,
    /// `‖a(t)‖_{2s}` at each recorded time.
    pub monitor: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSummary {
    pub final_state: Vec<f64>,
    pub stopping: Vec<StoppingRecord>,
    pub max_monitor: f64,
}

/// One-step exponential Euler integrator for a fixed step size.
pub struct Simulator {
    drift: DriftEvaluator,
    eigenvalues: Vec<f64>,
    decay: Vec<f64>,
    drift_gain: Vec<f64>,
    noise_sd: Vec<f64>,
    step: f64,
    b: Vec<f64>,
    xi: Vec<f64>,
}

impl Simulator {
    pub fn new(problem: &GalerkinProblem, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::param("h", "step must be positive and finite"));
        }
        problem.noise.validate()?;
        let spec = &problem.spectrum;
        let drift = DriftEvaluator::new(problem.drift.clone(), spec)?;
        let eig = spec.eigenvalues().to_vec();
        let decay = eig.iter().map(|l| (-step * l).exp()).collect();
        let drift_gain = eig.iter().map(|l| -(-step * l).exp_m1() / l).collect();
        let noise_sd = eig
            .iter()
            .map(|&l| crate::noise::q_mode(problem.noise.gain(l), l, step).sqrt())
            .collect();
        let n = eig.len();
        Ok(Self { drift, eigenvalues: eig, decay, drift_gain, noise_sd, step, b: vec![0.0; n], xi: vec![0.0; n] })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn step_size(&self) -> f64 {
        self.step
    }

    pub fn drift_mut(&mut self) -> &mut DriftEvaluator {
        &mut self.drift
    }

    /// `a_k ← e^{-hλ_k} a_k + (1 - e^{-hλ_k})/λ_k · B(a)_k + √q_k(h) ξ_k`.
    pub fn step_with(&mut self, a: &mut [f64], normals: &[f64], truncation: Option<f64>) -> Result<()> {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { time: f64::NAN, reason: "nonfinite state".into(), last_state: a.to_vec() });
        }
        if self.drift.is_zero() {
            self.b.iter_mut().for_each(|v| *v = 0.0);
        } else {
            match truncation {
                Some(level) => self.drift.eval_truncated(a, level, &mut self.b)?,
                None => self.drift.eval(a, &mut self.b)?,
            }
        }
        for k in 0..a.len() {
            a[k] = self.decay[k] * a[k] + self.drift_gain[k] * self.b[k] + self.noise_sd[k] * normals[k];
        }
        Ok(())
    }

    /// Step `m` of path `p`, drawing the increments from `stream`.
    pub fn advance(&mut self, a: &mut [f64], stream: &NoiseStream, path: u64, m: usize, truncation: Option<f64>) -> Result<()> {
        let mut xi = std::mem::take(&mut self.xi);
        stream.fill(path, m as u64, &mut xi);
        let r = self.step_with(a, &xi, truncation);
        self.xi = xi;
        r
    }

    /// Runs one path to the horizon, calling `observe(m, t_m, a(t_m))` for
    /// `m = 0..=M`.
    pub fn run(
        &mut self,
        x0: &[f64],
        stream: &NoiseStream,
        path: u64,
        settings: &RunSettings,
        mut observe: impl FnMut(usize, f64, &[f64]),
    ) -> Result<PathSummary> {
        if (settings.step - self.step).abs() > 1e-15 * self.step.max(1.0) {
            return Err(Error::param("h", "settings step differs from the simulator step"));
        }
        if x0.len() != self.len() {
            return Err(Error::param("x0", format!("expected {} coefficients, got {}", self.len(), x0.len())));
        }
        let steps = settings.steps()?;
        let alpha = self.drift.model().alpha();
        let mut a = x0.to_vec();
        let mut stopping: Vec<StoppingRecord> =
            settings.stop_levels.iter().map(|&level| StoppingRecord { level, tau: None }).collect();
        let mut max_monitor = 0.0f64;
        for m in 0..=steps {
            let t = settings.time(m);
            let norm = sobolev_norm_slice(&self.eigenvalues, 0.0, &a);
            if !norm.is_finite() || norm > BLOW_UP_NORM {
                return Err(Error::BlowUp {
                    time: t,
                    reason: if norm.is_finite() { format!("norm {norm:.3e} exceeds {BLOW_UP_NORM:e}") } else { "nonfinite state".into() },
                    last_state: a,
                });
            }
            if !stopping.is_empty() {
                let v = sobolev_norm_slice(&self.eigenvalues, alpha, &a);
                for rec in stopping.iter_mut().filter(|r| r.tau.is_none()) {
                    if v > rec.level {
                        rec.tau = Some(t);
                    }
                }
            }
            let monitor = if settings.monitor_exponent == 0.0 {
                norm
            } else {
                sobolev_norm_slice(&self.eigenvalues, settings.monitor_exponent, &a)
            };
            max_monitor = max_monitor.max(monitor);
            observe(m, t, &a);
            if m < steps {
                self.advance(&mut a, stream, path, m, settings.truncation).map_err(|e| match e {
                    Error::BlowUp { reason, last_state, .. } => Error::BlowUp { time: t, reason, last_state },
                    other => other,
                })?;
            }
        }
        Ok(PathSummary { final_state: a, stopping, max_monitor })
    }
}

/// Simulates one path and keeps every `record_every`-th state.
pub fn simulate_path(
    problem: &GalerkinProblem,
    x0: &[f64],
    seed: u64,
    path: u64,
    settings: &RunSettings,
    record_every: usize,
) -> Result<(GalerkinPath, PathSummary)> {
    let mut sim = Simulator::new(problem, settings.step)?;
    let stride = record_every.max(1);
    let steps = settings.steps()?;
    let mut out = GalerkinPath { times: Vec::new(), states: Vec::new(), seed, path, monitor: Vec::new() };
    let s = settings.monitor_exponent;
    let eig = problem.spectrum.eigenvalues().to_vec();
    let summary = sim.run(x0, &NoiseStream::new(seed), path, settings, |m, t, a| {
        if m % stride == 0 || m == steps {
            out.times.push(t);
            out.states.push(a.to_vec());
            out.monitor.push(sobolev_norm_slice(&eig, s, a));
        }
    })?;
    Ok((out, summary))
}

/// Across-path statistics of the monitored norm at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryRow {
    pub t: f64,
    pub mean_norm: f64,
    pub var_norm: f64,
    pub p05: f64,
    pub p95: f64,
}

/// Monitored-norm statistics across `paths` paths, recorded every `record_every` steps.
pub fn summarize_paths(
    problem: &GalerkinProblem,
    x0: &[f64],
    seed: u64,
    paths: usize,
    settings: &RunSettings,
    record_every: usize,
) -> Result<Vec<SummaryRow>> {
    let mut sim = Simulator::new(problem, settings.step)?;
    let steps = settings.steps()?;
    let stride = record_every.max(1);
    let rows: Vec<usize> = (0..=steps).filter(|m| m % stride == 0 || *m == steps).collect();
    let mut norms = vec![Vec::with_capacity(paths); rows.len()];
    let eig = problem.spectrum.eigenvalues().to_vec();
    let stream = NoiseStream::new(seed);
    for p in 0..paths {
        let mut r = 0;
        sim.run(x0, &stream, p as u64, settings, |m, _, a| {
            if r < rows.len() && rows[r] == m {
                norms[r].push(sobolev_norm_slice(&eig, settings.monitor_exponent, a));
                r += 1;
            }
        })?;
    }
    Ok(rows
        .iter()
        .zip(norms)
        .map(|(&m, mut v)| {
            let mut w = crate::numerics::Welford::default();
            v.iter().for_each(|&x| w.push(x));
            v.sort_by(f64::total_cmp);
            SummaryRow { t: settings.time(m), mean_norm: w.mean(), var_norm: w.variance(), p05: quantile(&v, 0.05), p95: quantile(&v, 0.95) }
        })
        .collect())
}

/// Linear-interpolated empirical quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

/// Per-path diagnostics of two resolutions driven by shared increments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledPath {
    /// `sup_t ‖P_{n₁} X_{n₂}(t) - X_{n₁}(t)‖`.
    pub sup_difference: f64,
    /// `sup_t ‖X_{n₂}(t)‖_{2s}` with `s` the monitor exponent.
    pub sup_norm_fine: f64,
    pub sup_norm_coarse: f64,
}

/// Runs the problem on `n₁` and on its full cutoff `n₂` with identical
/// increments on the first `n₁` modes.
pub fn couple_resolutions(
    problem: &GalerkinProblem,
    n1: usize,
    x0: &[f64],
    seed: u64,
    paths: usize,
    settings: &RunSettings,
) -> Result<Vec<CoupledPath>> {
    let n2 = problem.spectrum.len();
    if n1 == 0 || n1 >= n2 {
        return Err(Error::param("n1", format!("coarse cutoff must lie in 1..{n2}")));
    }
    let coarse = problem.truncated(n1)?;
    let mut fine_sim = Simulator::new(problem, settings.step)?;
    let mut coarse_sim = Simulator::new(&coarse, settings.step)?;
    let steps = settings.steps()?;
    let stream = NoiseStream::new(seed);
    let eig = problem.spectrum.eigenvalues();
    let s = settings.monitor_exponent;
    let mut out = Vec::with_capacity(paths);
    for p in 0..paths as u64 {
        let mut fine = x0.to_vec();
        let mut crs = x0[..n1].to_vec();
        let mut rec = CoupledPath { sup_difference: 0.0, sup_norm_fine: 0.0, sup_norm_coarse: 0.0 };
        for m in 0..=steps {
            let diff = fine[..n1].iter().zip(&crs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            rec.sup_difference = rec.sup_difference.max(diff);
            rec.sup_norm_fine = rec.sup_norm_fine.max(sobolev_norm_slice(eig, s, &fine));
            rec.sup_norm_coarse = rec.sup_norm_coarse.max(sobolev_norm_slice(&eig[..n1], s, &crs));
            if !(rec.sup_norm_fine.is_finite() && rec.sup_norm_fine < BLOW_UP_NORM) {
                return Err(Error::BlowUp { time: settings.time(m), reason: "fine path diverged".into(), last_state: fine });
            }
            if m < steps {
                fine_sim.advance(&mut fine, &stream, p, m, settings.truncation)?;
                coarse_sim.advance(&mut crs, &stream, p, m, settings.truncation)?;
            }
        }
        out.push(rec);
    }
    Ok(out)
}

/// CSV with header `t,a_1,...,a_n`.
pub fn write_trajectory_csv(path: &Path, traj: &GalerkinPath) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let n = traj.states.first().map_or(0, |s| s.len());
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|k| format!("a_{k}")));
    w.write_record(&header).map_err(csv_err)?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![format!("{t:.17e}")];
        row.extend(s.iter().map(|v| format!("{v:.17e}")));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV with header `t,mean_norm,var_norm,p05,p95`.
pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Writes `content` to `path`, creating parent directories.
pub(crate) fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(content.as_bytes())?;
    Ok(())
}
