//! Explicit eigen-decomposition of the Laplacian on intervals and boxes.
//!
//! A [`Spectrum`] is a truncated list of eigenpairs of `A = (-Δ)^p` with
//! Dirichlet or zero-mean Neumann boundary conditions on `∏ [0, Lᵢ]`. Every
//! operator built from `A` (fractional powers, the heat semigroup, spectral
//! projections) is diagonal in this basis, so it acts on a [`ModeVector`]
//! coefficient by coefficient.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    Dirichlet,
    /// Cosine modes on the zero-mean subspace; the constant mode is excluded.
    NeumannZeroMean,
}

/// Truncated spectrum of `A = (-Δ)^power` on a box.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    dim: usize,
    bc: BoundaryCondition,
    lengths: Vec<f64>,
    power: u32,
    /// Laplacian eigenvalues (before raising to `power`).
    base: Vec<f64>,
    eigenvalues: Vec<f64>,
    modes: Vec<Vec<u32>>,
}

impl Spectrum {
    /// Builds the `cutoff` smallest eigenpairs. Ties between degenerate
    /// multi-indices are broken lexicographically.
    pub fn build(
        dim: usize,
        bc: BoundaryCondition,
        lengths: &[f64],
        cutoff: usize,
        power: u32,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::param("d", format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if cutoff == 0 {
            return Err(Error::param("cutoff", "at least one mode is required"));
        }
        if power == 0 {
            return Err(Error::param("p_A", "operator power must be at least 1"));
        }
        let lengths = match lengths.len() {
            1 => vec![lengths[0]; dim],
            l if l == dim => lengths.to_vec(),
            l => {
                return Err(Error::param(
                    "lengths",
                    format!("expected 1 or {dim} side lengths, got {l}"),
                ))
            }
        };
        if lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::param("lengths", "side lengths must be positive"));
        }

        let lowest = match bc {
            BoundaryCondition::Dirichlet => 1,
            BoundaryCondition::NeumannZeroMean => 0,
        };
        // grow the eigenvalue ceiling until enough multi-indices fit under it
        let min_step = lengths.iter().map(|l| (PI / l).powi(2)).fold(f64::INFINITY, f64::min);
        let mut ceiling = min_step * (cutoff as f64 + dim as f64);
        let mut candidates;
        loop {
            candidates = enumerate_modes(&lengths, lowest, ceiling);
            if candidates.len() >= cutoff {
                break;
            }
            ceiling *= 2.0;
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        candidates.truncate(cutoff);

        let base: Vec<f64> = candidates.iter().map(|c| c.0).collect();
        let eigenvalues = base.iter().map(|b| b.powi(power as i32)).collect();
        let modes = candidates.into_iter().map(|c| c.1).collect();
        Ok(Self {
            dim,
            bc,
            lengths,
            power,
            base,
            eigenvalues,
            modes,
        })
    }

    /// Unit interval, Dirichlet, `A = -Δ`.
    pub fn dirichlet_1d(cutoff: usize) -> Self {
        Self::build(1, BoundaryCondition::Dirichlet, &[1.0], cutoff, 1)
            .expect("valid default spectrum")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boundary(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues `λ_k` of `A`, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvalues of `-Δ` itself (equal to [`Self::eigenvalues`] when `p_A = 1`).
    pub fn laplacian_eigenvalues(&self) -> &[f64] {
        &self.base
    }

    pub fn modes(&self) -> &[Vec<u32>] {
        &self.modes
    }

    /// Exponent `2·p_A/d` of the Weyl growth `λ_k ≍ k^{2 p_A / d}`.
    pub fn growth_exponent(&self) -> f64 {
        2.0 * self.power as f64 / self.dim as f64
    }

    /// Same mode set truncated to the first `cutoff` entries.
    pub fn truncated(&self, cutoff: usize) -> Result<Self> {
        if cutoff == 0 || cutoff > self.len() {
            return Err(Error::param("cutoff", format!("must lie in 1..={}", self.len())));
        }
        let mut s = self.clone();
        s.base.truncate(cutoff);
        s.eigenvalues.truncate(cutoff);
        s.modes.truncate(cutoff);
        Ok(s)
    }

    /// Value of the `k`-th orthonormal eigenfunction at the point `x`.
    pub fn basis_value(&self, k: usize, x: &[f64]) -> f64 {
        self.modes[k]
            .iter()
            .zip(&self.lengths)
            .zip(x)
            .map(|((&m, &l), &xi)| axis_function(self.bc, m, l, xi))
            .product()
    }

    pub fn zeros(&self) -> ModeVector {
        ModeVector(vec![0.0; self.len()])
    }

    /// The `k`-th unit coordinate vector (0-based).
    pub fn unit(&self, k: usize) -> ModeVector {
        let mut v = self.zeros();
        v.0[k] = 1.0;
        v
    }

    fn check_len(&self, x: &ModeVector) -> Result<()> {
        if x.len() != self.len() {
            return Err(Error::param(
                "x",
                format!("mode vector has {} entries, spectrum has {}", x.len(), self.len()),
            ));
        }
        Ok(())
    }

    /// `(A^s x)_k = λ_k^s x_k`; negative `s` maps into the dual scale.
    pub fn frac_power_apply(&self, s: f64, x: &ModeVector) -> Result<ModeVector> {
        self.check_len(x)?;
        Ok(ModeVector(
            self.eigenvalues
                .iter()
                .zip(&x.0)
                .map(|(l, a)| l.powf(s) * a)
                .collect(),
        ))
    }

    /// Heat semigroup `(S(t)x)_k = e^{-tλ_k} x_k`.
    pub fn semigroup_apply(&self, t: f64, x: &ModeVector) -> Result<ModeVector> {
        if !(t >= 0.0) {
            return Err(Error::param("t", format!("semigroup time must be nonnegative, got {t}")));
        }
        self.check_len(x)?;
        Ok(ModeVector(
            self.eigenvalues
                .iter()
                .zip(&x.0)
                .map(|(l, a)| (-t * l).exp() * a)
                .collect(),
        ))
    }

    /// `‖x‖_{2s} = ‖A^s x‖ = (Σ λ_k^{2s} x_k²)^{1/2}`.
    pub fn sobolev_norm(&self, s: f64, x: &ModeVector) -> Result<f64> {
        self.check_len(x)?;
        Ok(sobolev_norm_slice(&self.eigenvalues, s, &x.0))
    }
}

pub(crate) fn sobolev_norm_slice(eigenvalues: &[f64], s: f64, x: &[f64]) -> f64 {
    let mut acc = crate::numerics::NeumaierSum::default();
    for (l, a) in eigenvalues.iter().zip(x) {
        let w = if s == 0.0 { *a } else { l.powf(s) * a };
        acc.add(w * w);
    }
    acc.total().sqrt()
}

pub(crate) fn axis_function(bc: BoundaryCondition, m: u32, l: f64, x: f64) -> f64 {
    let w = m as f64 * PI / l;
    match bc {
        BoundaryCondition::Dirichlet => (2.0 / l).sqrt() * (w * x).sin(),
        BoundaryCondition::NeumannZeroMean if m == 0 => (1.0 / l).sqrt(),
        BoundaryCondition::NeumannZeroMean => (2.0 / l).sqrt() * (w * x).cos(),
    }
}

/// All multi-indices with Laplacian eigenvalue at most `ceiling`.
fn enumerate_modes(lengths: &[f64], lowest: u32, ceiling: f64) -> Vec<(f64, Vec<u32>)> {
    let caps: Vec<u32> = lengths
        .iter()
        .map(|l| (ceiling.sqrt() * l / PI).floor() as u32)
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![lowest; lengths.len()];
    if caps.iter().any(|&c| c < lowest) {
        return out;
    }
    loop {
        let zero_mode = idx.iter().all(|&m| m == 0);
        if !zero_mode {
            let mut terms: Vec<f64> = idx
                .iter()
                .zip(lengths)
                .map(|(&m, &l)| (m as f64 * PI / l).powi(2))
                .collect();
            // sum in a canonical order so permuted multi-indices tie exactly
            terms.sort_by(f64::total_cmp);
            let lambda: f64 = terms.iter().sum();
            if lambda <= ceiling {
                out.push((lambda, idx.clone()));
            }
        }
        let mut axis = lengths.len();
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            if idx[axis] < caps[axis] {
                idx[axis] += 1;
                for j in axis + 1..idx.len() {
                    idx[j] = lowest;
                }
                break;
            }
        }
    }
}

/// Coefficients of a field in a [`Spectrum`]'s eigenbasis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeVector(pub Vec<f64>);

impl ModeVector {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self(coeffs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &ModeVector) -> f64 {
        crate::numerics::compensated_sum(self.0.iter().zip(&other.0).map(|(a, b)| a * b))
    }

    /// `P_j`: keeps the first `j` coefficients and zeroes the rest.
    pub fn project(&self, j: usize) -> Result<ModeVector> {
        if j == 0 || j > self.len() {
            return Err(Error::param(
                "j",
                format!("projection index must lie in 1..={}, got {j}", self.len()),
            ));
        }
        let mut out = self.clone();
        out.0[j..].iter_mut().for_each(|a| *a = 0.0);
        Ok(out)
    }
}

impl From<Vec<f64>> for ModeVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}
