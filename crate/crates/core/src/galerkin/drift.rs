//! Drift operators `B_n = P_n B P_n` of the equation families, evaluated
//! pseudo-spectrally on the collocation grid.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::transform::Collocation;
use crate::admissibility::Family;
use crate::error::{Error, Result};
use crate::spectral::{sobolev_norm_slice, BoundaryCondition, Spectrum};

/// Scalar nonlinearity `F: ℝ → ℝ` applied pointwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Nonlinearity {
    Zero,
    /// `Σ c_i r^i`.
    Polynomial { coefficients: Vec<f64> },
    /// `a·sin(ω r)`.
    Sine { amplitude: f64, frequency: f64 },
}

impl Nonlinearity {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Polynomial { coefficients } => coefficients.iter().rev().fold(0.0, |acc, c| acc * r + c),
            Nonlinearity::Sine { amplitude, frequency } => amplitude * (frequency * r).sin(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Nonlinearity::Zero => true,
            Nonlinearity::Polynomial { coefficients } => coefficients.iter().all(|&c| c == 0.0),
            Nonlinearity::Sine { amplitude, .. } => *amplitude == 0.0,
        }
    }

    /// Highest polynomial degree (1 for non-polynomial maps).
    pub fn degree(&self) -> usize {
        match self {
            Nonlinearity::Polynomial { coefficients } => {
                coefficients.iter().rposition(|&c| c != 0.0).unwrap_or(0)
            }
            _ => 1,
        }
    }
}

/// Drift of one equation family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub family: Family,
    pub alpha: f64,
    pub beta: f64,
    /// `F` for the heat, divergence and non-divergence families; the extra
    /// bounded term for Burgers and Cahn–Hilliard.
    pub nonlinearity: Nonlinearity,
    /// Clip level `M`: `F` is cut to `[-M, M]`.
    pub clip: Option<f64>,
    /// Sign of the transport term `u ∂_x u` in Burgers.
    pub burgers_sign: f64,
}

impl DriftSpec {
    pub fn new(family: Family, nonlinearity: Nonlinearity) -> Self {
        let (alpha, beta) = match family {
            Family::Burgers | Family::CahnHilliard => (0.5, 0.0),
            _ => (0.0, 0.0),
        };
        Self { family, alpha, beta, nonlinearity, clip: None, burgers_sign: 1.0 }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_clip(mut self, level: f64) -> Self {
        self.clip = Some(level);
        self
    }

    fn f(&self, r: f64) -> f64 {
        let v = self.nonlinearity.eval(r);
        match self.clip {
            Some(m) => v.clamp(-m, m),
            None => v,
        }
    }

    /// Checks the spec against the family and the spectrum it acts on.
    pub fn validate(&self, spec: &Spectrum) -> Result<()> {
        let bad = |msg: String| Err(Error::Inconsistent(msg));
        if let Some(m) = self.clip {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::param("clip", "must be positive and finite"));
            }
        }
        if !(self.alpha >= 0.0 && self.alpha < 1.0 && self.beta >= 0.0 && self.beta < 1.0) {
            return bad(format!("alpha = {}, beta = {} outside [0, 1)", self.alpha, self.beta));
        }
        let want_power = self.family.operator_power();
        if spec.power() != want_power {
            return bad(format!("{} needs operator power {}, spectrum has {}", self.family, want_power, spec.power()));
        }
        match self.family {
            Family::HeatPerturb if self.alpha != 0.0 || self.beta != 0.0 => {
                bad("heat-perturb has alpha = beta = 0".into())
            }
            Family::DivergenceSub if self.alpha != 0.0 || !(self.beta > 0.0 && self.beta < 0.5) => {
                bad("divergence-sub has alpha = 0 and beta in (0, 1/2)".into())
            }
            Family::DivergenceSuper if self.alpha != 0.0 || self.beta < 0.5 => {
                bad("divergence-super has alpha = 0 and beta >= 1/2".into())
            }
            Family::NonDivergence if self.beta != 0.0 || self.alpha <= 0.0 => {
                bad("non-divergence has beta = 0 and alpha in (0, 1)".into())
            }
            Family::Burgers
                if spec.dim() != 1 || spec.boundary() != BoundaryCondition::Dirichlet =>
            {
                bad("burgers is posed on an interval with Dirichlet conditions".into())
            }
            Family::Burgers | Family::CahnHilliard if self.alpha != 0.5 || self.beta != 0.0 => {
                bad(format!("{} has alpha = 1/2 and beta = 0", self.family))
            }
            Family::CahnHilliard if spec.boundary() != BoundaryCondition::NeumannZeroMean => {
                bad("cahn-hilliard uses Neumann conditions".into())
            }
            _ => Ok(()),
        }
    }
}

/// Drift on mode coordinates given directly as a function on `ℝ^n`.
pub type ModeField = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub enum DriftModel {
    Zero,
    Pde(DriftSpec),
    /// Field on mode coordinates with the exponent `α` of its truncation norm.
    Modes { field: ModeField, alpha: f64 },
}

impl fmt::Debug for DriftModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriftModel::Zero => f.write_str("Zero"),
            DriftModel::Pde(s) => f.debug_tuple("Pde").field(s).finish(),
            DriftModel::Modes { alpha, .. } => f.debug_struct("Modes").field("alpha", alpha).finish_non_exhaustive(),
        }
    }
}

impl DriftModel {
    pub fn modes(alpha: f64, field: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        DriftModel::Modes { field: Arc::new(field), alpha }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            DriftModel::Zero => 0.0,
            DriftModel::Pde(s) => s.alpha,
            DriftModel::Modes { alpha, .. } => *alpha,
        }
    }

    pub fn beta(&self) -> f64 {
        match self {
            DriftModel::Pde(s) => s.beta,
            _ => 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            DriftModel::Zero => true,
            DriftModel::Pde(s) => {
                s.nonlinearity.is_zero() && !matches!(s.family, Family::Burgers | Family::CahnHilliard)
            }
            DriftModel::Modes { .. } => false,
        }
    }
}

/// Evaluator with its grid buffers.
pub struct DriftEvaluator {
    model: DriftModel,
    eigenvalues: Vec<f64>,
    laplacian: Vec<f64>,
    /// `λ_k^β` and `λ_k^α` of the drift spec.
    beta_weights: Vec<f64>,
    alpha_weights: Vec<f64>,
    grid: Option<Collocation>,
    u: Vec<f64>,
    ux: Vec<f64>,
    scaled: Vec<f64>,
    extra: Vec<f64>,
    clipped: Vec<f64>,
}

impl DriftEvaluator {
    pub fn new(model: DriftModel, spec: &Spectrum) -> Result<Self> {
        let grid = match &model {
            DriftModel::Pde(s) => {
                s.validate(spec)?;
                Some(Collocation::new(spec))
            }
            _ => None,
        };
        let glen = grid.as_ref().map_or(0, |g| g.grid_len());
        let n = spec.len();
        let powers = |e: f64| spec.eigenvalues().iter().map(|l| l.powf(e)).collect::<Vec<_>>();
        Ok(Self {
            beta_weights: powers(model.beta()),
            alpha_weights: powers(model.alpha()),
            model,
            eigenvalues: spec.eigenvalues().to_vec(),
            laplacian: spec.laplacian_eigenvalues().to_vec(),
            grid,
            u: vec![0.0; glen],
            ux: vec![0.0; glen],
            scaled: vec![0.0; n],
            extra: vec![0.0; n],
            clipped: vec![0.0; n],
        })
    }

    pub fn model(&self) -> &DriftModel {
        &self.model
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.model.is_zero()
    }

    /// `‖a‖_{2α}`, the norm of the truncation ball.
    pub fn truncation_norm(&self, a: &[f64]) -> f64 {
        sobolev_norm_slice(&self.eigenvalues, self.model.alpha(), a)
    }

    /// `B_n(a)`.
    pub fn eval(&mut self, a: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.len();
        if a.len() != n || out.len() != n {
            return Err(Error::param("a", format!("expected {n} coefficients, got {}", a.len())));
        }
        if self.is_zero() {
            out.iter_mut().for_each(|v| *v = 0.0);
            return Ok(());
        }
        let Self { model, laplacian, beta_weights, alpha_weights, grid, u, ux, scaled, extra, .. } = self;
        let spec = match model {
            DriftModel::Modes { field, .. } => {
                field(a, out);
                return Ok(());
            }
            DriftModel::Pde(s) => s,
            DriftModel::Zero => unreachable!("zero drift handled above"),
        };
        let grid = grid.as_mut().expect("collocation grid for pde drift");
        match spec.family {
            Family::HeatPerturb | Family::HeatPolynomial | Family::DivergenceSub | Family::DivergenceSuper => {
                grid.synthesize(a, None, u);
                u.iter_mut().for_each(|v| *v = spec.f(*v));
                grid.analyze(u, out);
                if spec.beta != 0.0 {
                    out.iter_mut().zip(beta_weights.iter()).for_each(|(o, w)| *o *= w);
                }
            }
            Family::NonDivergence => {
                for ((s, &x), w) in scaled.iter_mut().zip(a).zip(alpha_weights.iter()) {
                    *s = w * x;
                }
                grid.synthesize(scaled, None, u);
                u.iter_mut().for_each(|v| *v = spec.f(*v));
                grid.analyze(u, out);
            }
            Family::Burgers => {
                grid.synthesize(a, None, u);
                grid.synthesize(a, Some(0), ux);
                for (u, ux) in u.iter_mut().zip(ux.iter()) {
                    *u = spec.burgers_sign * *u * ux + spec.f(*u);
                }
                grid.analyze(u, out);
            }
            Family::CahnHilliard => {
                // B = Δ F₁(u) + F₂(u) with F₁(r) = r³ - r; Δ acts on coefficients
                grid.synthesize(a, None, u);
                ux.copy_from_slice(u);
                u.iter_mut().for_each(|v| *v = *v * *v * *v - *v);
                grid.analyze(u, out);
                for (o, mu) in out.iter_mut().zip(laplacian.iter()) {
                    *o *= -mu;
                }
                if !spec.nonlinearity.is_zero() {
                    ux.iter_mut().for_each(|v| *v = spec.f(*v));
                    grid.analyze(ux, extra);
                    out.iter_mut().zip(extra.iter()).for_each(|(o, e)| *o += e);
                }
            }
        }
        Ok(())
    }

    /// `B_n(Π_N a)` with `Π_N` the radial projection onto the `V_{2α}` ball of radius `N`.
    pub fn eval_truncated(&mut self, a: &[f64], level: f64, out: &mut [f64]) -> Result<()> {
        if !(level > 0.0) {
            return Err(Error::param("N", "truncation level must be positive"));
        }
        let norm = self.truncation_norm(a);
        if norm <= level {
            return self.eval(a, out);
        }
        let mut clipped = std::mem::take(&mut self.clipped);
        let scale = level / norm;
        clipped.iter_mut().zip(a).for_each(|(c, &x)| *c = x * scale);
        let r = self.eval(&clipped, out);
        self.clipped = clipped;
        r
    }
}

/// `Π_N a`.
pub fn radial_projection(spec: &Spectrum, alpha: f64, level: f64, a: &[f64]) -> Vec<f64> {
    let norm = sobolev_norm_slice(spec.eigenvalues(), alpha, a);
    if norm <= level {
        a.to_vec()
    } else {
        a.iter().map(|x| x * level / norm).collect()
    }
}
