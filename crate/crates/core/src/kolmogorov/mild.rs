//! Picard iteration for the mild Kolmogorov equation
//! `u = ∫₀^∞ e^{-λt} R_t[f + ⟨B, Du⟩] dt` on a tensor grid.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::grid::{apply_along_axis, Grid};
use super::{tensor_expectation, ProjectedProblem};
use crate::error::{Error, Result};
use crate::galerkin::csv_err;
use crate::numerics::{geometric_panels, GaussRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PicardInit {
    Zero,
    /// `u₀ = f/λ`.
    SourceOverLambda,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_sweeps: usize,
    pub points_per_axis: usize,
    /// Gauss–Hermite nodes per axis for the source term.
    pub hermite_order: usize,
    /// Gauss–Hermite nodes of the one-dimensional transition matrices.
    pub kernel_order: usize,
    /// Gauss–Legendre nodes per geometric time panel.
    pub legendre_order: usize,
    pub init: PicardInit,
    /// When set, refuse to solve unless `λ` exceeds this threshold.
    pub threshold: Option<f64>,
}

impl SolveOptions {
    /// Defaults sized for `m` projected modes.
    pub fn for_dim(m: usize) -> Self {
        let (points_per_axis, hermite_order) = match m {
            1 => (161, 32),
            2 => (41, 16),
            3 => (17, 8),
            _ => (9, 5),
        };
        Self {
            tol: 1e-6,
            max_sweeps: 200,
            points_per_axis,
            hermite_order,
            kernel_order: 32,
            legendre_order: 10,
            init: PicardInit::Zero,
            threshold: None,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_points(mut self, n: usize) -> Self {
        self.points_per_axis = n;
        self
    }

    pub fn with_init(mut self, init: PicardInit) -> Self {
        self.init = init;
        self
    }

    pub fn with_threshold(mut self, lambda0: f64) -> Self {
        self.threshold = Some(lambda0);
        self
    }

    pub fn with_max_sweeps(mut self, n: usize) -> Self {
        self.max_sweeps = n;
        self
    }
}

/// The affine map `𝒯_λ u = ∫₀^{T} e^{-λt} R_t[f + ⟨B, Du⟩] dt` on grid values.
pub struct MildOperator {
    grid: Grid,
    /// `(t, quadrature weight · e^{-λt})`.
    times: Vec<(f64, f64)>,
    /// `[time][axis]`: row-major one-dimensional transition matrices.
    kernels: Vec<Vec<Vec<f64>>>,
    source: Vec<f64>,
    /// `[axis][node]`: drift components at the grid nodes.
    drift_at: Vec<Vec<f64>>,
    drift_free: bool,
    horizon: f64,
}

impl MildOperator {
    pub fn new(problem: &ProjectedProblem, opts: &SolveOptions) -> Result<Self> {
        if !(opts.tol > 0.0) {
            return Err(Error::param("tol", "must be positive"));
        }
        let m = problem.dim();
        let grid = Grid::new(m, opts.points_per_axis.max(4), problem.box_radius());
        let lambda = problem.lambda;
        let f_sup = problem.observable.sup_abs();
        let g_min = problem.gains().iter().copied().fold(f64::INFINITY, f64::min);
        let du_est = f_sup * (1.0 + 2.0 / (g_min * lambda.sqrt()));
        let budget = (f_sup + problem.drift_bound() * du_est).max(f64::MIN_POSITIVE);
        let horizon = ((10.0 * budget / (lambda * opts.tol)).ln() / lambda).max(1.0 / lambda);

        let lam_max = problem.eigenvalues().iter().copied().fold(0.0, f64::max);
        let t0 = 1e-3 / (lambda + lam_max);
        let gl = GaussRule::legendre(opts.legendre_order.max(2));
        let mut times = Vec::new();
        for (a, b) in geometric_panels(t0, horizon) {
            let half = 0.5 * (b - a);
            for (x, w) in gl.nodes.iter().zip(&gl.weights) {
                let t = 0.5 * (a + b) + half * x;
                times.push((t, half * w * (-lambda * t).exp()));
            }
        }

        let nodes: Vec<Vec<f64>> = (0..grid.len()).map(|j| grid.point(j)).collect();
        let gh = GaussRule::hermite_normal(opts.hermite_order.max(1));
        let per_time: Vec<(Vec<f64>, Vec<f64>)> = times
            .iter()
            .map(|&(t, _)| {
                let decay = problem.eigenvalues().iter().map(|&l| (-t * l).exp()).collect();
                let sd = problem.variances(t).into_iter().map(f64::sqrt).collect();
                (decay, sd)
            })
            .collect();
        let f = &problem.observable;
        let source: Vec<f64> = nodes
            .par_iter()
            .map(|x| {
                let mut acc = 0.0;
                for ((_, w), (decay, sd)) in times.iter().zip(&per_time) {
                    acc += w * tensor_expectation(&gh, m, |z, y| {
                        for k in 0..m {
                            y[k] = decay[k] * x[k] + sd[k] * z[k];
                        }
                        f.eval(y)
                    });
                }
                acc
            })
            .collect();

        let drift_free = problem.drift.is_zero();
        let mut drift_at = vec![vec![0.0; grid.len()]; m];
        let mut kernels = Vec::new();
        if !drift_free {
            let mut b = vec![0.0; m];
            for (j, x) in nodes.iter().enumerate() {
                problem.drift.eval(x, &mut b);
                for k in 0..m {
                    drift_at[k][j] = b[k];
                }
            }
            let kh = GaussRule::hermite_normal(opts.kernel_order.max(1));
            let n = grid.points_per_axis();
            kernels = per_time
                .par_iter()
                .map(|(decay, sd)| {
                    (0..m)
                        .map(|k| {
                            let mut mat = vec![0.0; n * n];
                            for i in 0..n {
                                let xi = grid.coordinate(i);
                                for (z, w) in kh.nodes.iter().zip(&kh.weights) {
                                    let (first, sw) = grid.stencil(decay[k] * xi + sd[k] * z);
                                    for (o, s) in sw.iter().enumerate() {
                                        mat[i * n + first + o] += w * s;
                                    }
                                }
                            }
                            mat
                        })
                        .collect()
                })
                .collect();
        }
        Ok(Self {
            grid,
            times,
            kernels,
            source,
            drift_at,
            drift_free,
            horizon,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `∫₀^T e^{-λt} R_t f dt` at the grid nodes.
    pub fn source(&self) -> &[f64] {
        &self.source
    }

    /// Truncation horizon of the time integral.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn time_nodes(&self) -> usize {
        self.times.len()
    }

    /// `∫₀^T e^{-λt} R_t g dt` for grid data `g`.
    fn smooth(&self, g: &[f64]) -> Vec<f64> {
        let len = g.len();
        let m = self.grid.dim();
        self.kernels
            .par_iter()
            .zip(self.times.par_iter())
            .fold(
                || (vec![0.0; len], vec![0.0; len], vec![0.0; len]),
                |(mut acc, mut a, mut b), (mats, &(_, w))| {
                    a.copy_from_slice(g);
                    for (axis, mat) in mats.iter().enumerate().take(m) {
                        apply_along_axis(&self.grid, mat, axis, &a, &mut b);
                        std::mem::swap(&mut a, &mut b);
                    }
                    for (o, v) in acc.iter_mut().zip(&a) {
                        *o += w * v;
                    }
                    (acc, a, b)
                },
            )
            .map(|(acc, _, _)| acc)
            .reduce(
                || vec![0.0; len],
                |mut x, y| {
                    x.iter_mut().zip(&y).for_each(|(a, b)| *a += b);
                    x
                },
            )
    }

    /// One Picard sweep `u ↦ 𝒯_λ u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        if self.drift_free {
            return self.source.clone();
        }
        let du = self.grid.gradient(u);
        let g: Vec<f64> = (0..u.len())
            .map(|j| (0..self.grid.dim()).map(|k| self.drift_at[k][j] * du[k][j]).sum())
            .collect();
        let mut out = self.smooth(&g);
        out.iter_mut().zip(&self.source).for_each(|(o, s)| *o += s);
        out
    }
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, &x| a.max(x.abs()))
}

/// Largest Euclidean norm of a gradient field over the grid.
fn sup_gradient(du: &[Vec<f64>]) -> f64 {
    let n = du.first().map_or(0, |d| d.len());
    (0..n)
        .map(|j| du.iter().map(|d| d[j] * d[j]).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Grid solution of the mild equation with its iteration record.
#[derive(Debug, Clone, Serialize)]
pub struct KolmogorovSolution {
    pub grid: Grid,
    pub u: Vec<f64>,
    /// `[axis][node]` finite-difference gradient.
    pub du: Vec<Vec<f64>>,
    /// `‖D(u_{k+1} - u_k)‖ / ‖D(u_k - u_{k-1})‖` in grid-sup, per sweep.
    pub factors: Vec<f64>,
    /// `sup |u_{k+1} - u_k|` per sweep.
    pub increments: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    pub lambda: f64,
    pub horizon: f64,
    /// `e^{-λT}(‖f‖ + ‖B‖‖Du‖)/λ` with the final gradient.
    pub tail_bound: f64,
}

impl KolmogorovSolution {
    /// Interpolated `u(x)`, constant outside the box.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.grid.interpolate(&self.u, x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.du.iter().map(|d| self.grid.interpolate(d, x)).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        sup_abs(&self.u)
    }

    pub fn sup_gradient(&self) -> f64 {
        sup_gradient(&self.du)
    }

    /// `sup|u| + sup‖Du‖` on the grid.
    pub fn c1_norm(&self) -> f64 {
        self.sup_norm() + self.sup_gradient()
    }

    pub fn max_factor(&self) -> f64 {
        self.factors.iter().copied().fold(0.0, f64::max)
    }
}

/// Picard iteration of the mild operator until successive iterates differ
/// by at most `tol/4` in grid-sup.
pub fn solve_mild(problem: &ProjectedProblem, opts: &SolveOptions) -> Result<KolmogorovSolution> {
    if let Some(l0) = opts.threshold {
        if !(problem.lambda > l0) {
            return Err(Error::param(
                "lambda",
                format!("λ = {} does not exceed the contraction threshold λ₀ = {l0}", problem.lambda),
            ));
        }
    }
    let op = MildOperator::new(problem, opts)?;
    let grid = op.grid().clone();
    let mut u: Vec<f64> = match opts.init {
        PicardInit::Zero => vec![0.0; grid.len()],
        PicardInit::SourceOverLambda => (0..grid.len())
            .map(|j| problem.observable.eval(&grid.point(j)) / problem.lambda)
            .collect(),
    };
    let mut factors = Vec::new();
    let mut increments = Vec::new();
    let mut previous: Option<f64> = None;
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let next = op.apply(&u);
        let diff: Vec<f64> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
        let change = sup_abs(&diff);
        let grad_change = sup_gradient(&grid.gradient(&diff));
        u = next;
        increments.push(change);
        if let Some(prev) = previous {
            let factor = if prev > 0.0 { grad_change / prev } else { 0.0 };
            factors.push(factor);
            let n = factors.len();
            if n >= 2 && factors[n - 1] >= 1.0 && factors[n - 2] >= 1.0 {
                return Err(Error::NonContraction { sweep: sweeps, factors });
            }
        }
        previous = Some(grad_change);
        if change <= 0.25 * opts.tol || !change.is_finite() {
            converged = change.is_finite();
            break;
        }
    }
    let du = grid.gradient(&u);
    let tail_bound = (-problem.lambda * op.horizon()).exp()
        * (problem.observable.sup_abs() + problem.drift_bound() * sup_gradient(&du))
        / problem.lambda;
    Ok(KolmogorovSolution {
        grid,
        u,
        du,
        factors,
        increments,
        sweeps,
        converged,
        lambda: problem.lambda,
        horizon: op.horizon(),
        tail_bound,
    })
}

/// Pointwise strong-form residuals at grid nodes.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub sup: f64,
}

/// `λu - ½Σ g_k² ∂²u/∂x_k² + Σ λ_k x_k ∂u/∂x_k - f - ⟨B, Du⟩` with
/// second-order central differences, at the grid nodes nearest to `points`.
pub fn residual_strong(
    problem: &ProjectedProblem,
    solution: &KolmogorovSolution,
    points: &[Vec<f64>],
) -> Result<ResidualReport> {
    let grid = &solution.grid;
    let m = grid.dim();
    let u = &solution.u;
    let mut values = Vec::with_capacity(points.len());
    let mut snapped = Vec::with_capacity(points.len());
    let mut b = vec![0.0; m];
    for x in points {
        if x.len() != m {
            return Err(Error::param("x", format!("expected {m} coordinates")));
        }
        let j = grid.nearest(x);
        if !grid.is_interior(j, 1) {
            return Err(Error::param("x", "residual points must be interior grid nodes"));
        }
        let node = grid.point(j);
        problem.drift.eval(&node, &mut b);
        let mut r = problem.lambda * u[j] - problem.observable.eval(&node);
        for k in 0..m {
            let g = problem.gains()[k];
            let d1 = grid.first_difference(u, k, j);
            r += -0.5 * g * g * grid.second_difference(u, k, j) + problem.eigenvalues()[k] * node[k] * d1 - b[k] * d1;
        }
        values.push(r);
        snapped.push(node);
    }
    let sup = sup_abs(&values);
    Ok(ResidualReport {
        points: snapped,
        values,
        sup,
    })
}

/// Mean over the inner half of the box of `|Σ_{k>j} g_k² ∂²u/∂x_k²|`, the
/// trace of `(I - P_j) Q D²u` on the projected modes.
pub fn trace_remainder(problem: &ProjectedProblem, solution: &KolmogorovSolution, j: usize) -> Result<f64> {
    let grid = &solution.grid;
    let m = grid.dim();
    if j > m {
        return Err(Error::param("j", format!("must not exceed m = {m}")));
    }
    if j == m {
        return Ok(0.0);
    }
    let half = 0.5 * grid.radius();
    let mut total = 0.0;
    let mut count = 0usize;
    for node in 0..grid.len() {
        if !grid.is_interior(node, 1) || grid.point(node).iter().any(|v| v.abs() > half) {
            continue;
        }
        let s: f64 = (j..m)
            .map(|k| problem.gains()[k].powi(2) * grid.second_difference(&solution.u, k, node))
            .sum();
        total += s.abs();
        count += 1;
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}

/// CSV with header `sweep,factor,increment`.
pub fn write_factors_csv(path: &Path, solution: &KolmogorovSolution) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["sweep", "factor", "increment"]).map_err(csv_err)?;
    for (i, inc) in solution.increments.iter().enumerate() {
        let factor = if i == 0 {
            String::new()
        } else {
            format!("{:.17e}", solution.factors[i - 1])
        };
        w.write_record([(i + 1).to_string(), factor, format!("{inc:.17e}")])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
