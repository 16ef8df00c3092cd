//! Diagonal covariance operators `G`, `Q = GG*`, `Q_t`, `Q_∞` and the series
//! behind the strong Feller estimates of the Ornstein–Uhlenbeck semigroup.
//!
//! All operators commute with `A`, so everything is a per-mode formula. Sums
//! run over the retained modes of a [`Spectrum`]; the tails beyond the cutoff
//! are estimated by continuing the eigenvalues with the Weyl law
//! `λ(k) = λ_n (k/n)^{2p/d}`, and convergence flags come from exponent tests
//! rather than from the finite sums.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_lr};

use crate::error::{Error, Result};
use crate::numerics::{adaptive_integrate, compensated_sum, golden_max_log};
use crate::spectral::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// `G = A^{-δ}`.
    Colored,
    /// `G = A^{γ}`; handled on the shifted state space `D(A^{-γ})`.
    Rough,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// `δ` for colored noise, `γ` for rough noise. Always nonnegative.
    pub exponent: f64,
    /// Optional `δ'` for the Hilbert–Schmidt check into `D(A^{δ'})`.
    pub hs_shift: Option<f64>,
}

impl NoiseSpec {
    pub fn colored(delta: f64) -> Self {
        Self {
            kind: NoiseKind::Colored,
            exponent: delta,
            hs_shift: None,
        }
    }

    pub fn rough(gamma: f64) -> Self {
        Self {
            kind: NoiseKind::Rough,
            exponent: gamma,
            hs_shift: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.exponent.is_finite() && self.exponent >= 0.0) {
            return Err(Error::param("noise exponent", "must be a finite nonnegative number"));
        }
        if let Some(s) = self.hs_shift {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::param("delta'", "must be nonnegative"));
            }
        }
        Ok(())
    }

    /// Signed exponent `δ` with `g_k = λ_k^{-δ}`: `δ` itself for colored
    /// noise and `-γ` for rough noise.
    pub fn effective_delta(&self) -> f64 {
        match self.kind {
            NoiseKind::Colored => self.exponent,
            NoiseKind::Rough => -self.exponent,
        }
    }

    /// Per-mode gain `g_k`.
    pub fn gain(&self, lambda: f64) -> f64 {
        lambda.powf(-self.effective_delta())
    }

    pub fn gains(&self, spec: &Spectrum) -> Vec<f64> {
        spec.eigenvalues().iter().map(|&l| self.gain(l)).collect()
    }
}

/// `q_k(t) = g_k² (1 - e^{-2tλ}) / (2λ)`, accurate for small `tλ`.
pub fn q_mode(g: f64, lambda: f64, t: f64) -> f64 {
    g * g * (-(-2.0 * t * lambda).exp_m1()) / (2.0 * lambda)
}

/// Stationary variance `q_k(∞) = g_k² / (2λ)`.
pub fn q_mode_infinity(g: f64, lambda: f64) -> f64 {
    g * g / (2.0 * lambda)
}

/// Diagonal of `Q_t` on the retained modes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceDiag {
    pub t: f64,
    pub q: Vec<f64>,
    /// `Σ q_k` over the retained modes.
    pub partial_trace: f64,
    /// Estimate of the discarded tail; infinite when the trace diverges.
    pub tail_bound: f64,
    pub trace_class: bool,
}

/// `Q_t` in closed form.
pub fn qt_diagonal(spec: &Spectrum, noise: &NoiseSpec, t: f64) -> Result<CovarianceDiag> {
    if !(t >= 0.0) {
        return Err(Error::param("t", format!("must be nonnegative, got {t}")));
    }
    noise.validate()?;
    let q: Vec<f64> = spec
        .eigenvalues()
        .iter()
        .map(|&l| q_mode(noise.gain(l), l, t))
        .collect();
    let partial_trace = compensated_sum(q.iter().copied());
    let trace_class = trace_exponent(spec, noise) > 1.0;
    let tail_bound = if t == 0.0 {
        0.0
    } else if trace_class {
        // q_k(t) ≤ q_k(∞)
        power_tail(spec, 1.0 + 2.0 * noise.effective_delta(), 0.5)
    } else {
        f64::INFINITY
    };
    Ok(CovarianceDiag {
        t,
        q,
        partial_trace,
        tail_bound,
        trace_class,
    })
}

/// Exponent `e` with `q_k(∞) ≍ k^{-e}`; the trace converges iff `e > 1`.
fn trace_exponent(spec: &Spectrum, noise: &NoiseSpec) -> f64 {
    (1.0 + 2.0 * noise.effective_delta()) * spec.growth_exponent()
}

/// Weyl-law estimate of `Σ_{k>n} c·λ_k^{-a}`; infinite when the series diverges.
fn power_tail(spec: &Spectrum, a: f64, c: f64) -> f64 {
    let n = spec.len() as f64;
    let e = spec.growth_exponent();
    if a * e <= 1.0 {
        return f64::INFINITY;
    }
    let ln = spec.eigenvalues()[spec.len() - 1];
    c * ln.powf(-a) * n / (a * e - 1.0)
}

/// Weyl-law estimate of `Σ_{k>n} term(λ_k)` for a rapidly decaying `term`.
fn weyl_tail<F: Fn(f64) -> f64>(spec: &Spectrum, term: F) -> f64 {
    let n = spec.len() as f64;
    let e = spec.growth_exponent();
    let ln = spec.eigenvalues()[spec.len() - 1];
    // k = n / u, u ∈ (0, 1]
    let (v, _) = adaptive_integrate(
        |u: f64| {
            if u <= 0.0 {
                return 0.0;
            }
            let lam = ln * u.powf(-e);
            let val = term(lam) * n / (u * u);
            if val.is_finite() {
                val
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        1e-300,
        1e-10,
    );
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEstimate {
    pub partial_sum: f64,
    pub tail_bound: f64,
    pub converges: bool,
}

impl TraceEstimate {
    pub fn value(&self) -> f64 {
        self.partial_sum + self.tail_bound
    }
}

/// `Tr Q_∞ = ½ Σ g_k² / λ_k` with its convergence classification.
pub fn q_infinity_trace(spec: &Spectrum, noise: &NoiseSpec) -> TraceEstimate {
    let partial_sum = compensated_sum(
        spec.eigenvalues()
            .iter()
            .map(|&l| q_mode_infinity(noise.gain(l), l)),
    );
    let converges = trace_exponent(spec, noise) > 1.0;
    let tail_bound = if converges {
        power_tail(spec, 1.0 + 2.0 * noise.effective_delta(), 0.5)
    } else {
        f64::INFINITY
    };
    TraceEstimate {
        partial_sum,
        tail_bound,
        converges,
    }
}

/// Largest `ξ` (open bound) with `∫₀^T t^{-2ξ} ‖S(t)G‖²_{ℒ²} dt < ∞`,
/// namely `δ + ½ - d/(4 p_A)`.
pub fn xi_supremum(spec: &Spectrum, noise: &NoiseSpec) -> f64 {
    noise.effective_delta() + 0.5 - 1.0 / (2.0 * spec.growth_exponent())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralCheck {
    pub satisfied: bool,
    /// Value over the retained modes plus the tail estimate; infinite when
    /// the condition fails.
    pub estimate: f64,
}

/// Checks `∫₀^T t^{-2ξ} Σ_k e^{-2tλ_k} g_k² dt < ∞`.
pub fn check_cont_time(spec: &Spectrum, noise: &NoiseSpec, xi: f64, horizon: f64) -> Result<IntegralCheck> {
    if !(xi > 0.0 && xi < 0.5) {
        return Err(Error::param("xi", format!("must lie in (0, 1/2), got {xi}")));
    }
    if !(horizon > 0.0) {
        return Err(Error::param("T", "must be positive"));
    }
    let a = 1.0 - 2.0 * xi;
    let ga = gamma(a);
    // ∫₀^T t^{-2ξ} e^{-2tλ} dt = (2λ)^{2ξ-1} Γ(1-2ξ) P(1-2ξ, 2λT)
    let partial = compensated_sum(spec.eigenvalues().iter().map(|&l| {
        let g = noise.gain(l);
        g * g * (2.0 * l).powf(-a) * ga * gamma_lr(a, 2.0 * l * horizon)
    }));
    let b = 1.0 + 2.0 * noise.effective_delta() - 2.0 * xi;
    let satisfied = b * spec.growth_exponent() > 1.0;
    let estimate = if satisfied {
        partial + power_tail(spec, b, 2f64.powf(-a) * ga)
    } else {
        f64::INFINITY
    };
    Ok(IntegralCheck { satisfied, estimate })
}

/// `‖Q_t^{-1/2}S(t)G‖⁴_{ℒ⁴}` term for one mode.
fn l4_term(lambda: f64, t: f64) -> f64 {
    let x = t * lambda;
    let den = -(-2.0 * x).exp_m1();
    4.0 * lambda * lambda * (-4.0 * x).exp() / (den * den)
}

/// `‖Q_t^{-1/2}S(2t)Q‖²_{ℒ²}` term for one mode.
fn l2_term(lambda: f64, delta: f64, t: f64) -> f64 {
    let x = t * lambda;
    2.0 * lambda.powf(1.0 - 2.0 * delta) * (-4.0 * x).exp() / (-(-2.0 * x).exp_m1())
}

/// Schatten-norm series entering the Kolmogorov regularity estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchattenSeries {
    /// `‖Q_t^{-1/2}S(t)G‖⁴_{ℒ⁴} = 4 Σ λ² e^{-4tλ} / (1 - e^{-2tλ})²`.
    pub l4_fourth: f64,
    pub l4_tail: f64,
    /// `‖Q_t^{-1/2}S(2t)Q‖²_{ℒ²} = 2 Σ λ^{1-2δ} e^{-4tλ} / (1 - e^{-2tλ})`.
    pub l2_squared: f64,
    pub l2_tail: f64,
    /// `t^{1+ε/2} ‖·‖²_{ℒ⁴}`, the constant in the `t^{-(1+ε/2)}` bound at this `t`.
    pub c_eps: f64,
    /// `t^{(1+σ)/2} ‖·‖_{ℒ²}`, the constant in the `t^{-(1+σ)/2}` bound at this `t`.
    pub c_sigma: f64,
}

impl SchattenSeries {
    /// `‖Q_t^{-1/2}S(t)G‖²_{ℒ⁴}` including the tail.
    pub fn l4_norm_squared(&self) -> f64 {
        (self.l4_fourth + self.l4_tail).sqrt()
    }

    /// `‖Q_t^{-1/2}S(2t)Q‖_{ℒ²}` including the tail.
    pub fn l2_norm(&self) -> f64 {
        (self.l2_squared + self.l2_tail).sqrt()
    }
}

/// Evaluates both Schatten series at time `t`.
pub fn l4_integrand(spec: &Spectrum, noise: &NoiseSpec, t: f64, eps: f64, sigma: f64) -> Result<SchattenSeries> {
    if !(t > 0.0) {
        return Err(Error::param("t", format!("must be positive, got {t}")));
    }
    let delta = noise.effective_delta();
    let l4_fourth = compensated_sum(spec.eigenvalues().iter().map(|&l| l4_term(l, t)));
    let l2_squared = compensated_sum(spec.eigenvalues().iter().map(|&l| l2_term(l, delta, t)));
    let l4_tail = weyl_tail(spec, |l| l4_term(l, t));
    let l2_tail = weyl_tail(spec, |l| l2_term(l, delta, t));
    let mut out = SchattenSeries {
        l4_fourth,
        l4_tail,
        l2_squared,
        l2_tail,
        c_eps: 0.0,
        c_sigma: 0.0,
    };
    out.c_eps = t.powf(1.0 + 0.5 * eps) * out.l4_norm_squared();
    out.c_sigma = t.powf(0.5 * (1.0 + sigma)) * out.l2_norm();
    Ok(out)
}

/// The same series evaluated in the shifted orthonormal basis
/// `ẽ_k = λ_k^{γ} e_k` of `D(A^{-γ})`, where each term is
/// `‖T ẽ_k‖_{D(A^{-γ})}^p = (λ_k^{-γ} |T_k| λ_k^{γ})^p`.
pub fn schatten_in_shifted_basis(spec: &Spectrum, noise: &NoiseSpec, t: f64) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(Error::param("t", format!("must be positive, got {t}")));
    }
    let gamma = -noise.effective_delta();
    let mut l4 = Vec::with_capacity(spec.len());
    let mut l2 = Vec::with_capacity(spec.len());
    for &l in spec.eigenvalues() {
        let x = t * l;
        let q = q_mode(noise.gain(l), l, t);
        // T₁ = Q_t^{-1/2} S(t) G and T₂ = Q_t^{-1/2} S(2t) Q acting on ẽ_k
        let image1 = q.powf(-0.5) * (-x).exp() * noise.gain(l) * l.powf(gamma);
        let image2 = q.powf(-0.5) * (-2.0 * x).exp() * noise.gain(l).powi(2) * l.powf(gamma);
        let n1 = l.powf(-gamma) * image1;
        let n2 = l.powf(-gamma) * image2;
        l4.push(n1.powi(4));
        l2.push(n2 * n2);
    }
    Ok((compensated_sum(l4), compensated_sum(l2)))
}

/// Small-`t` power of `‖Q_t^{-1/2}S(t)G‖⁴_{ℒ⁴} ≍ t^{-2-d/(2p)}`.
fn l4_singularity(spec: &Spectrum) -> f64 {
    2.0 + 1.0 / spec.growth_exponent()
}

/// Small-`t` power of `‖Q_t^{-1/2}S(2t)Q‖²_{ℒ²} ≍ t^{-1-max(0, d/(2p)-2δ)}`.
fn l2_singularity(spec: &Spectrum, delta: f64) -> f64 {
    1.0 + (1.0 / spec.growth_exponent() - 2.0 * delta).max(0.0)
}

/// Exponent `ν` of the `t^{-ν}` singularity of the (eq. L4) integrand.
pub fn l4_condition_exponent(spec: &Spectrum, noise: &NoiseSpec, theta: f64) -> f64 {
    let delta = noise.effective_delta();
    0.5 * (1.0 - theta) * l4_singularity(spec) + 0.5 * theta * l2_singularity(spec, delta)
}

/// Checks `∫₀^∞ e^{-λt} ‖Q_t^{-1/2}S(t)G‖^{2(1-ϑ)}_{ℒ⁴} ‖Q_t^{-1/2}S(2t)Q‖^{ϑ}_{ℒ²} dt < ∞`.
///
/// The integrand is evaluated on the retained modes for `t ≥ t_c = 10/λ_n`,
/// where truncation is invisible, and continued below `t_c` by its power law.
pub fn check_l4(spec: &Spectrum, noise: &NoiseSpec, lambda: f64, theta: f64) -> Result<IntegralCheck> {
    if !(lambda > 0.0) {
        return Err(Error::param("lambda", "must be positive"));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::param("theta", format!("must lie in (0, 1), got {theta}")));
    }
    let nu = l4_condition_exponent(spec, noise, theta);
    let satisfied = nu < 1.0;
    if !satisfied {
        return Ok(IntegralCheck {
            satisfied,
            estimate: f64::INFINITY,
        });
    }
    let delta = noise.effective_delta();
    let eig = spec.eigenvalues();
    let integrand = |t: f64| {
        let s4 = compensated_sum(eig.iter().map(|&l| l4_term(l, t)));
        let s2 = compensated_sum(eig.iter().map(|&l| l2_term(l, delta, t)));
        (-lambda * t).exp() * s4.powf(0.5 * (1.0 - theta)) * s2.powf(0.5 * theta)
    };
    let tc = 10.0 / eig[eig.len() - 1];
    let tmax = 60.0 / (lambda + 2.0 * eig[0]);
    let head = integrand(tc) * tc / (1.0 - nu);
    let body = if tmax > tc {
        adaptive_integrate(
            |s: f64| {
                let t = s.exp();
                integrand(t) * t
            },
            tc.ln(),
            tmax.ln(),
            1e-14,
            1e-8,
        )
        .0
    } else {
        0.0
    };
    Ok(IntegralCheck {
        satisfied,
        estimate: head + body,
    })
}

/// Result of [`smoothing_constant`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothingConstant {
    pub value: f64,
    pub argmax: f64,
    /// Largest ratio of the mode expression to `C_γ t^{-(½+δ+γ)}` over the
    /// certification grid; at most one when the bound holds.
    pub worst_ratio: f64,
}

/// `C_γ = √2 max_{r≥0} r^{½+δ+γ} e^{-r} / √(1-e^{-2r})`, certified against
/// `sup_k λ_k^γ e^{-tλ_k} √2 λ_k^{½+δ} / √(1-e^{-2tλ_k}) ≤ C_γ t^{-(½+δ+γ)}`
/// on a logarithmic `t`-grid.
pub fn smoothing_constant(spec: &Spectrum, noise: &NoiseSpec, gamma: f64) -> Result<SmoothingConstant> {
    if !(gamma >= 0.0) {
        return Err(Error::param("gamma", "must be nonnegative"));
    }
    let delta = noise.effective_delta();
    let a = 0.5 + delta + gamma;
    if a <= 0.0 {
        return Err(Error::param("gamma", "½ + δ + γ must be positive"));
    }
    let profile = |r: f64| 2f64.sqrt() * r.powf(a) * (-r).exp() / (-(-2.0 * r).exp_m1()).sqrt();
    let (argmax, value) = golden_max_log(profile, 1e-6, 50.0);
    let mut worst: f64 = 0.0;
    for t in crate::numerics::logspace(1e-4, 1.0, 41) {
        let bound = value * t.powf(-a);
        for &l in spec.eigenvalues() {
            let m = l.powf(gamma) * (-t * l).exp() * 2f64.sqrt() * l.powf(0.5 + delta)
                / (-(-2.0 * t * l).exp_m1()).sqrt();
            worst = worst.max(m / bound);
        }
    }
    Ok(SmoothingConstant {
        value,
        argmax,
        worst_ratio: worst,
    })
}

/// `G ∈ ℒ²(H, D(A^{δ'}))`, i.e. `Σ λ_k^{-2(δ-δ')}` converges.
pub fn check_hs(spec: &Spectrum, noise: &NoiseSpec, delta_prime: f64) -> Result<bool> {
    if !(delta_prime >= 0.0) {
        return Err(Error::param("delta'", "must be nonnegative"));
    }
    Ok(2.0 * (noise.effective_delta() - delta_prime) * spec.growth_exponent() > 1.0)
}

/// Largest `δ'` (open bound) with `G ∈ ℒ²(H, D(A^{δ'}))`, or `None`.
pub fn hs_shift_supremum(spec: &Spectrum, noise: &NoiseSpec) -> Option<f64> {
    let s = noise.effective_delta() - 1.0 / (2.0 * spec.growth_exponent());
    (s > 0.0).then_some(s)
}
