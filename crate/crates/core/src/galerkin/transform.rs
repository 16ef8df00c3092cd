//! Pseudo-spectral transforms between eigenmode coefficients and a tensor
//! midpoint grid with four collocation points per retained mode number.
//!
//! Each axis uses zero-padded FFTs of length `2M`: the midpoint sine and
//! cosine sums are the imaginary and real parts of a phase-shifted DFT.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::spectral::{BoundaryCondition, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Trig {
    Sin,
    Cos,
}

struct AxisPlan {
    k_max: usize,
    m: usize,
    length: f64,
    inverse: Arc<dyn Fft<f64>>,
    forward: Arc<dyn Fft<f64>>,
    /// `e^{iπj/(2M)}` for `j < 2M`.
    phase: Vec<Complex<f64>>,
    /// Orthonormalization factor of each mode number.
    norms: Vec<f64>,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl AxisPlan {
    fn new(k_max: usize, length: f64, planner: &mut FftPlanner<f64>) -> Self {
        let m = 4 * k_max.max(1);
        let inverse = planner.plan_fft_inverse(2 * m);
        let forward = planner.plan_fft_forward(2 * m);
        let scratch_len = inverse.get_inplace_scratch_len().max(forward.get_inplace_scratch_len());
        let phase = (0..2 * m)
            .map(|j| Complex::from_polar(1.0, PI * j as f64 / (2 * m) as f64))
            .collect();
        let norms = (0..=k_max)
            .map(|mode| if mode == 0 { (1.0 / length).sqrt() } else { (2.0 / length).sqrt() })
            .collect();
        Self {
            k_max,
            m,
            length,
            inverse,
            forward,
            phase,
            norms,
            buf: vec![Complex::default(); 2 * m],
            scratch: vec![Complex::default(); scratch_len],
        }
    }

    /// `out_j = Σ_m c_m φ_m(x_j)` for `j < M`; with `slope = Some(s)` the
    /// terms carry an extra factor `s·m` (differentiated basis).
    fn synthesize(&mut self, trig: Trig, coeffs: &[f64], slope: Option<f64>, out: &mut [f64]) {
        self.buf.iter_mut().for_each(|z| *z = Complex::default());
        for (mode, &c) in coeffs.iter().enumerate() {
            let w = self.norms[mode] * slope.map_or(1.0, |s| s * mode as f64);
            self.buf[mode] = self.phase[mode] * (c * w);
        }
        self.inverse.process_with_scratch(&mut self.buf, &mut self.scratch);
        for (o, z) in out.iter_mut().zip(&self.buf[..self.m]) {
            *o = match trig {
                Trig::Sin => z.im,
                Trig::Cos => z.re,
            };
        }
    }

    /// Midpoint rule for `⟨u, φ_m⟩`, `m ≤ k_max`.
    fn analyze(&mut self, trig: Trig, values: &[f64], out: &mut [f64]) {
        let cell = self.length / self.m as f64;
        self.buf.iter_mut().for_each(|z| *z = Complex::default());
        for (z, &v) in self.buf.iter_mut().zip(values) {
            *z = Complex::new(v, 0.0);
        }
        self.forward.process_with_scratch(&mut self.buf, &mut self.scratch);
        for (mode, o) in out.iter_mut().enumerate() {
            let z = self.buf[mode] * self.phase[mode].conj();
            let s = match trig {
                Trig::Sin => -z.im,
                Trig::Cos => z.re,
            };
            *o = cell * self.norms[mode] * s;
        }
    }
}

/// Collocation grid matched to the eigenbasis of a [`Spectrum`].
pub struct Collocation {
    bc: BoundaryCondition,
    axes: Vec<AxisPlan>,
    /// Flat index of each retained mode in the coefficient tensor.
    mode_index: Vec<usize>,
    coeff_shape: Vec<usize>,
    grid_shape: Vec<usize>,
    work_a: Vec<f64>,
    work_b: Vec<f64>,
    line_in: Vec<f64>,
    line_out: Vec<f64>,
}

impl Collocation {
    pub fn new(spec: &Spectrum) -> Self {
        let d = spec.dim();
        let mut k_max = vec![0usize; d];
        for mode in spec.modes() {
            for (k, &m) in k_max.iter_mut().zip(mode) {
                *k = (*k).max(m as usize);
            }
        }
        let mut planner = FftPlanner::new();
        let axes: Vec<AxisPlan> = k_max
            .iter()
            .zip(spec.lengths())
            .map(|(&k, &l)| AxisPlan::new(k, l, &mut planner))
            .collect();
        let coeff_shape: Vec<usize> = axes.iter().map(|a| a.k_max + 1).collect();
        let grid_shape: Vec<usize> = axes.iter().map(|a| a.m).collect();
        let mode_index = spec
            .modes()
            .iter()
            .map(|mode| mode.iter().zip(&coeff_shape).fold(0, |acc, (&m, &s)| acc * s + m as usize))
            .collect();
        let widest = axes.iter().map(|a| a.m).max().unwrap_or(1);
        let cap = coeff_shape.iter().zip(&grid_shape).map(|(c, g)| c.max(g)).product();
        Self {
            bc: spec.boundary(),
            axes,
            mode_index,
            coeff_shape,
            grid_shape,
            work_a: vec![0.0; cap],
            work_b: vec![0.0; cap],
            line_in: vec![0.0; widest],
            line_out: vec![0.0; widest],
        }
    }

    pub fn grid_len(&self) -> usize {
        self.grid_shape.iter().product()
    }

    pub fn grid_shape(&self) -> &[usize] {
        &self.grid_shape
    }

    /// Volume element of the midpoint rule.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.length / a.m as f64).product()
    }

    /// Grid coordinates of the flat grid index `j`.
    pub fn point(&self, mut j: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.axes.len()];
        for (axis, a) in self.axes.iter().enumerate().rev() {
            let i = j % a.m;
            j /= a.m;
            x[axis] = a.length * (i as f64 + 0.5) / a.m as f64;
        }
        x
    }

    fn base_trig(&self) -> Trig {
        match self.bc {
            BoundaryCondition::Dirichlet => Trig::Sin,
            BoundaryCondition::NeumannZeroMean => Trig::Cos,
        }
    }

    /// Field values on the grid; with `derivative = Some(axis)` the partial
    /// derivative along that axis.
    pub fn synthesize(&mut self, coeffs: &[f64], derivative: Option<usize>, out: &mut [f64]) {
        let ncoef: usize = self.coeff_shape.iter().product();
        self.work_a[..ncoef].iter_mut().for_each(|v| *v = 0.0);
        for (&idx, &c) in self.mode_index.iter().zip(coeffs) {
            self.work_a[idx] = c;
        }
        let base = self.base_trig();
        let mut shape = self.coeff_shape.clone();
        let Self { axes, work_a, work_b, line_in, line_out, .. } = self;
        for (axis, plan) in axes.iter_mut().enumerate() {
            let (trig, slope) = match (base, derivative == Some(axis)) {
                (t, false) => (t, None),
                (Trig::Sin, true) => (Trig::Cos, Some(PI / plan.length)),
                (Trig::Cos, true) => (Trig::Sin, Some(-PI / plan.length)),
            };
            let n_out = plan.m;
            apply_along_axis(work_a, work_b, &shape, axis, n_out, line_in, line_out, |inp, out| {
                plan.synthesize(trig, inp, slope, out)
            });
            shape[axis] = n_out;
            std::mem::swap(work_a, work_b);
        }
        let n = self.grid_len();
        out[..n].copy_from_slice(&self.work_a[..n]);
    }

    /// Midpoint-rule projections `⟨u, e_k⟩` for every retained mode.
    pub fn analyze(&mut self, values: &[f64], out: &mut [f64]) {
        let n = self.grid_len();
        self.work_a[..n].copy_from_slice(&values[..n]);
        let base = self.base_trig();
        let mut shape = self.grid_shape.clone();
        let Self { axes, work_a, work_b, line_in, line_out, .. } = self;
        for (axis, plan) in axes.iter_mut().enumerate() {
            let n_out = plan.k_max + 1;
            apply_along_axis(work_a, work_b, &shape, axis, n_out, line_in, line_out, |inp, out| {
                plan.analyze(base, inp, out)
            });
            shape[axis] = n_out;
            std::mem::swap(work_a, work_b);
        }
        for (o, &idx) in out.iter_mut().zip(&self.mode_index) {
            *o = self.work_a[idx];
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn apply_along_axis(
    src: &[f64],
    dst: &mut [f64],
    shape: &[usize],
    axis: usize,
    n_out: usize,
    line_in: &mut [f64],
    line_out: &mut [f64],
    mut op: impl FnMut(&[f64], &mut [f64]),
) {
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let n_in = shape[axis];
    for o in 0..outer {
        for r in 0..inner {
            for i in 0..n_in {
                line_in[i] = src[(o * n_in + i) * inner + r];
            }
            op(&line_in[..n_in], &mut line_out[..n_out]);
            for i in 0..n_out {
                dst[(o * n_out + i) * inner + r] = line_out[i];
            }
        }
    }
}
