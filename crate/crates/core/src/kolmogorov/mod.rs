//! Kolmogorov equation `λu + Lu = f + ⟨B, Du⟩` on the span of the first `m`
//! eigenmodes, where `L = -½Tr[QD²] + ⟨Ax, D⟩` generates the
//! Ornstein–Uhlenbeck semigroup
//! `R_t v(x) = E v(e^{-tΛ}x + Q_t^{1/2} Z)`.
//!
//! Everything is diagonal in the mode coordinates, so Gaussian expectations
//! factor over axes and the mild operator is a sum over time nodes of tensor
//! products of one-dimensional matrices.

mod grid;
mod mild;
mod smoothing;
#[cfg(test)]
mod tests;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::noise::{q_mode, q_mode_infinity, NoiseSpec};
use crate::numerics::{GaussRule, Welford};
use crate::spectral::Spectrum;

pub use grid::Grid;
pub use mild::{
    residual_strong, solve_mild, trace_remainder, write_factors_csv, KolmogorovSolution, MildOperator,
    PicardInit, ResidualReport, SolveOptions,
};
pub use smoothing::{estimate_c_r, verify_smoothing, write_smoothing_csv, SmoothingReport, SmoothingRow, SmoothingStudy};

/// Largest projection dimension; tensor quadrature is used up to three modes
/// and Monte Carlo for four.
pub const MAX_MODES: usize = 4;

pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Bounded functions of one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Profile {
    /// `clamp(y / width, -1, 1)`.
    SignLike { width: f64 },
    /// `amplitude · exp(-y² / (2 width²))`.
    Bump { width: f64, amplitude: f64 },
    /// `clamp(y³, -clip, clip)`.
    ClippedCubic { clip: f64 },
    /// `cos(frequency · y)`.
    Cosine { frequency: f64 },
}

impl Profile {
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            Profile::SignLike { width } => (y / width).clamp(-1.0, 1.0),
            Profile::Bump { width, amplitude } => amplitude * (-0.5 * (y / width).powi(2)).exp(),
            Profile::ClippedCubic { clip } => (y * y * y).clamp(-clip, clip),
            Profile::Cosine { frequency } => (frequency * y).cos(),
        }
    }

    pub fn sup_abs(&self) -> f64 {
        match *self {
            Profile::SignLike { .. } | Profile::Cosine { .. } => 1.0,
            Profile::Bump { amplitude, .. } => amplitude.abs(),
            Profile::ClippedCubic { clip } => clip,
        }
    }

    /// Points where the profile is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Profile::SignLike { width } => vec![-width, width],
            Profile::ClippedCubic { clip } => vec![-clip.cbrt(), clip.cbrt()],
            Profile::Bump { .. } | Profile::Cosine { .. } => Vec::new(),
        }
    }

    /// Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            Profile::SignLike { width } => 1.0 / width,
            Profile::Bump { width, amplitude } => amplitude.abs() / (width * std::f64::consts::E.sqrt()),
            Profile::ClippedCubic { clip } => 3.0 * clip.powf(2.0 / 3.0),
            Profile::Cosine { frequency } => frequency.abs(),
        }
    }
}

/// Bounded continuous observables on `ℝ^m`.
#[derive(Clone)]
pub enum Observable {
    Constant(f64),
    /// `cos(⟨w, x⟩)`.
    Cosine { weights: Vec<f64> },
    /// A [`Profile`] of the coordinate `x_axis`.
    Axis { axis: usize, profile: Profile },
    Custom { field: ScalarField, sup: f64, label: String },
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Constant(c) => write!(f, "Constant({c})"),
            Observable::Cosine { weights } => write!(f, "Cosine({weights:?})"),
            Observable::Axis { axis, profile } => write!(f, "Axis({axis}, {profile:?})"),
            Observable::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

impl Observable {
    pub fn cosine(weights: Vec<f64>) -> Self {
        Observable::Cosine { weights }
    }

    pub fn axis(axis: usize, profile: Profile) -> Self {
        Observable::Axis { axis, profile }
    }

    pub fn custom(label: impl Into<String>, sup: f64, field: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Observable::Custom {
            field: Arc::new(field),
            sup,
            label: label.into(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Observable::Constant(c) => *c,
            Observable::Cosine { weights } => weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>().cos(),
            Observable::Axis { axis, profile } => profile.eval(x[*axis]),
            Observable::Custom { field, .. } => field(x),
        }
    }

    pub fn sup_abs(&self) -> f64 {
        match self {
            Observable::Constant(c) => c.abs(),
            Observable::Cosine { .. } => 1.0,
            Observable::Axis { profile, .. } => profile.sup_abs(),
            Observable::Custom { sup, .. } => *sup,
        }
    }

    /// Largest coordinate index the observable reads, if any.
    fn max_axis(&self) -> Option<usize> {
        match self {
            Observable::Constant(_) | Observable::Custom { .. } => None,
            Observable::Cosine { weights } => weights.len().checked_sub(1),
            Observable::Axis { axis, .. } => Some(*axis),
        }
    }

    /// `f_ε(x) = E f(T(ε)x + Y)`.
    pub fn regularized(&self, reg: &RegularizerSpec) -> Result<Observable> {
        reg.validate()?;
        let base = self.clone();
        let rule = GaussRule::hermite_normal(regularizer_order(reg.c.len()));
        let (t, sd) = reg.factors();
        Ok(Observable::custom(format!("regularized {self:?}"), self.sup_abs(), move |x| {
            tensor_expectation(&rule, x.len(), |z, y| {
                for k in 0..y.len() {
                    y[k] = t[k] * x[k] + sd[k] * z[k];
                }
                base.eval(y)
            })
        }))
    }
}

/// Drift fields on `ℝ^m`.
#[derive(Clone)]
pub enum Drift {
    Zero,
    /// `B_k(x) = clamp(coefficient · x_k³, -clip, clip)`.
    ClippedCubic { coefficient: f64, clip: f64 },
    /// `B(x) = diag(M) x`; bounded only on the computational box.
    Linear { diagonal: Vec<f64> },
    /// Arbitrary field with a known bound on `sup ‖B(x)‖`.
    Field { field: VectorField, bound: f64 },
}

impl fmt::Debug for Drift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Drift::Zero => write!(f, "Zero"),
            Drift::ClippedCubic { coefficient, clip } => write!(f, "ClippedCubic({coefficient}, {clip})"),
            Drift::Linear { diagonal } => write!(f, "Linear({diagonal:?})"),
            Drift::Field { bound, .. } => write!(f, "Field(bound {bound})"),
        }
    }
}

impl Drift {
    pub fn field(bound: f64, field: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        Drift::Field {
            field: Arc::new(field),
            bound,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Drift::Zero)
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Drift::Zero => out.iter_mut().for_each(|v| *v = 0.0),
            Drift::ClippedCubic { coefficient, clip } => {
                for (o, &v) in out.iter_mut().zip(x) {
                    *o = (coefficient * v * v * v).clamp(-clip, *clip);
                }
            }
            Drift::Linear { diagonal } => {
                for ((o, &v), &m) in out.iter_mut().zip(x).zip(diagonal) {
                    *o = m * v;
                }
            }
            Drift::Field { field, .. } => field(x, out),
        }
    }

    /// `sup ‖B(x)‖_{-2β}` over `ℝ^m`, or over the box `[-radius, radius]^m`
    /// for the linear drift.
    pub fn bound(&self, eigenvalues: &[f64], beta: f64, radius: f64) -> f64 {
        let w = |l: f64| l.powf(-2.0 * beta);
        match self {
            Drift::Zero => 0.0,
            Drift::ClippedCubic { coefficient, clip } => {
                let per = clip.min(coefficient.abs() * radius.powi(3));
                eigenvalues.iter().map(|&l| w(l) * per * per).sum::<f64>().sqrt()
            }
            Drift::Linear { diagonal } => eigenvalues
                .iter()
                .zip(diagonal)
                .map(|(&l, m)| w(l) * (m * radius).powi(2))
                .sum::<f64>()
                .sqrt(),
            Drift::Field { bound, .. } => *bound,
        }
    }

    /// The Galerkin-ready closure of this field.
    pub fn to_mode_field(&self) -> impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static {
        let me = self.clone();
        move |x, out| me.eval(x, out)
    }

    /// `B_ε(x) = E[T(ε) B(T(ε)x + Y)]` as a new field.
    pub fn regularized(&self, reg: &RegularizerSpec, eigenvalues: &[f64], beta: f64, radius: f64) -> Result<Drift> {
        reg.validate()?;
        if self.is_zero() {
            return Ok(Drift::Zero);
        }
        let base = self.clone();
        let reg2 = reg.clone();
        let bound = self.bound(eigenvalues, beta, radius);
        Ok(Drift::field(bound, move |x, out| {
            let b = regularize_drift(&base, &reg2, x).expect("validated regularizer");
            out.copy_from_slice(&b);
        }))
    }
}

/// Gaussian regularizer with `T(ε) = e^{-εC}` and covariance
/// `½ C^{-1}(I - e^{-2εC})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularizerSpec {
    pub c: Vec<f64>,
    pub eps: f64,
}

impl RegularizerSpec {
    pub fn new(c: Vec<f64>, eps: f64) -> Self {
        Self { c, eps }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::param("eps", "must be positive"));
        }
        if self.c.is_empty() || self.c.len() > MAX_MODES {
            return Err(Error::param("c", format!("needs 1..={MAX_MODES} entries")));
        }
        if self.c.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::param("c", "eigenvalues must be positive"));
        }
        Ok(())
    }

    /// `(T(ε)_k, standard deviation of Y_k)`.
    pub fn factors(&self) -> (Vec<f64>, Vec<f64>) {
        let t = self.c.iter().map(|&c| (-self.eps * c).exp()).collect();
        let sd = self
            .c
            .iter()
            .map(|&c| (-0.5 * (-2.0 * self.eps * c).exp_m1() / c).sqrt())
            .collect();
        (t, sd)
    }
}

fn regularizer_order(m: usize) -> usize {
    match m {
        1 => 24,
        2 => 16,
        3 => 10,
        _ => 6,
    }
}

/// `Σ_z w_z g(z)` over the tensor Gauss–Hermite grid in `m` dimensions; `g`
/// receives the node and a scratch point buffer.
fn tensor_expectation(rule: &GaussRule, m: usize, mut g: impl FnMut(&[f64], &mut [f64]) -> f64) -> f64 {
    let n = rule.nodes.len();
    let mut z = vec![0.0; m];
    let mut y = vec![0.0; m];
    let mut total = 0.0;
    for flat in 0..n.pow(m as u32) {
        let mut c = flat;
        let mut w = 1.0;
        for zk in z.iter_mut() {
            let i = c % n;
            c /= n;
            *zk = rule.nodes[i];
            w *= rule.weights[i];
        }
        total += w * g(&z, &mut y);
    }
    total
}

/// `B_ε(x) = E[T(ε) B(T(ε)x + Y)]`, by tensor Gauss–Hermite quadrature.
pub fn regularize_drift(drift: &Drift, reg: &RegularizerSpec, x: &[f64]) -> Result<Vec<f64>> {
    reg.validate()?;
    let m = reg.c.len();
    if x.len() != m {
        return Err(Error::param("x", format!("expected {m} coordinates, got {}", x.len())));
    }
    let (t, sd) = reg.factors();
    let rule = GaussRule::hermite_normal(regularizer_order(m));
    let mut out = vec![0.0; m];
    let mut b = vec![0.0; m];
    for k in 0..m {
        out[k] = tensor_expectation(&rule, m, |z, y| {
            for j in 0..m {
                y[j] = t[j] * x[j] + sd[j] * z[j];
            }
            drift.eval(y, &mut b);
            b[k]
        }) * t[k];
    }
    Ok(out)
}

/// The Kolmogorov problem on the span of the first `m` modes.
#[derive(Debug, Clone)]
pub struct ProjectedProblem {
    eigenvalues: Vec<f64>,
    gains: Vec<f64>,
    pub drift: Drift,
    pub observable: Observable,
    pub lambda: f64,
    pub beta: f64,
    pub delta: f64,
}

impl ProjectedProblem {
    pub fn new(
        spec: &Spectrum,
        noise: &NoiseSpec,
        m: usize,
        drift: Drift,
        observable: Observable,
        lambda: f64,
    ) -> Result<Self> {
        noise.validate()?;
        if m == 0 || m > MAX_MODES {
            return Err(Error::param("m", format!("projection dimension must lie in 1..={MAX_MODES}, got {m}")));
        }
        if m > spec.len() {
            return Err(Error::param("m", format!("spectrum retains only {} modes", spec.len())));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::param("lambda", "must be positive"));
        }
        if observable.max_axis().is_some_and(|a| a >= m) {
            return Err(Error::param("f", format!("observable reads a coordinate beyond the first {m}")));
        }
        if let Drift::Linear { diagonal } = &drift {
            if diagonal.len() != m {
                return Err(Error::param("B", "linear drift needs one entry per mode"));
            }
        }
        let eigenvalues = spec.eigenvalues()[..m].to_vec();
        let gains = eigenvalues.iter().map(|&l| noise.gain(l)).collect();
        Ok(Self {
            eigenvalues,
            gains,
            drift,
            observable,
            lambda,
            beta: 0.0,
            delta: noise.effective_delta(),
        })
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    /// `q_k(t)` on the projected modes.
    pub fn variances(&self, t: f64) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .zip(&self.gains)
            .map(|(&l, &g)| q_mode(g, l, t))
            .collect()
    }

    /// Box radius `6 max_k √q_k(∞)`.
    pub fn box_radius(&self) -> f64 {
        6.0 * self
            .eigenvalues
            .iter()
            .zip(&self.gains)
            .map(|(&l, &g)| q_mode_infinity(g, l).sqrt())
            .fold(0.0, f64::max)
    }

    /// `sup ‖B‖_{-2β}` (on the box for drifts unbounded on `ℝ^m`).
    pub fn drift_bound(&self) -> f64 {
        self.drift.bound(&self.eigenvalues, self.beta, self.box_radius())
    }

    /// Default regularizer `C = A` on the projected modes.
    pub fn default_regularizer(&self, eps: f64) -> RegularizerSpec {
        RegularizerSpec::new(self.eigenvalues.clone(), eps)
    }

    /// The same problem with `B_ε` and `f_ε` in place of `B` and `f`.
    pub fn regularized(&self, reg: &RegularizerSpec) -> Result<Self> {
        if reg.c.len() != self.dim() {
            return Err(Error::param("c", "regularizer must act on the projected modes"));
        }
        let drift = self
            .drift
            .regularized(reg, &self.eigenvalues, self.beta, self.box_radius())?;
        let observable = self.observable.regularized(reg)?;
        Ok(Self {
            drift,
            observable,
            ..self.clone()
        })
    }
}

/// Quadrature used by [`ou_apply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OuRule {
    /// Tensor Gauss–Hermite with this many nodes per axis (`m ≤ 3`).
    Hermite(usize),
    MonteCarlo { samples: usize, seed: u64 },
}

/// Value of `R_t v(x)` and the 95% half-width (zero for quadrature).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuEstimate {
    pub value: f64,
    pub half_width: f64,
}

/// `R_t v(x) = E v(e^{-tΛ}x + Q_t^{1/2} Z)`.
pub fn ou_apply(problem: &ProjectedProblem, v: &Observable, t: f64, x: &[f64], rule: OuRule) -> Result<OuEstimate> {
    let m = problem.dim();
    if x.len() != m {
        return Err(Error::param("x", format!("expected {m} coordinates, got {}", x.len())));
    }
    if !(t >= 0.0) {
        return Err(Error::param("t", "must be nonnegative"));
    }
    if t == 0.0 {
        return Ok(OuEstimate {
            value: v.eval(x),
            half_width: 0.0,
        });
    }
    let mean: Vec<f64> = problem
        .eigenvalues
        .iter()
        .zip(x)
        .map(|(&l, &xk)| (-t * l).exp() * xk)
        .collect();
    let sd: Vec<f64> = problem.variances(t).into_iter().map(f64::sqrt).collect();
    match rule {
        OuRule::Hermite(order) => {
            if m > 3 {
                return Err(Error::param("m", "tensor quadrature is limited to three modes; use Monte Carlo"));
            }
            let gh = GaussRule::hermite_normal(order.max(1));
            let value = tensor_expectation(&gh, m, |z, y| {
                for k in 0..m {
                    y[k] = mean[k] + sd[k] * z[k];
                }
                v.eval(y)
            });
            Ok(OuEstimate { value, half_width: 0.0 })
        }
        OuRule::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::param("samples", "need at least two samples"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut acc = Welford::default();
            let mut y = vec![0.0; m];
            for _ in 0..samples {
                for k in 0..m {
                    let z: f64 = rng.sample(StandardNormal);
                    y[k] = mean[k] + sd[k] * z;
                }
                acc.push(v.eval(&y));
            }
            Ok(OuEstimate {
                value: acc.mean(),
                half_width: 1.96 * acc.std_error(),
            })
        }
    }
}

/// Threshold `λ₀ = (C_R Γ(½-δ-β) sup‖B‖_{-2β})^{1/(½-δ-β)}` above which the
/// mild operator contracts.
pub fn lambda0(c_r: f64, drift_bound: f64, delta: f64, beta: f64) -> Result<f64> {
    let a = 0.5 - delta - beta;
    if !(a > 0.0) {
        return Err(Error::param("delta + beta", format!("must be below 1/2, got {}", delta + beta)));
    }
    if !(c_r > 0.0 && c_r.is_finite()) {
        return Err(Error::param("C_R", "must be positive and finite"));
    }
    if !(drift_bound >= 0.0) {
        return Err(Error::param("drift bound", "must be nonnegative"));
    }
    if drift_bound == 0.0 {
        return Ok(0.0);
    }
    Ok((c_r * gamma(a) * drift_bound).powf(1.0 / a))
}
