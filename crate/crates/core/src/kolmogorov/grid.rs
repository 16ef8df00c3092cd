//! Uniform tensor grid on `[-R, R]^m` with cubic Lagrange interpolation,
//! constant continuation outside the box, and finite-difference derivatives.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    radius: f64,
    spacing: f64,
}

impl Grid {
    /// `n ≥ 4` points per axis.
    pub fn new(dim: usize, n: usize, radius: f64) -> Self {
        assert!(n >= 4, "a grid axis needs at least four points");
        Self {
            dim,
            n,
            radius,
            spacing: 2.0 * radius / (n - 1) as f64,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.radius + self.spacing * i as f64
    }

    /// Axis indices of the flat index `j` (last axis fastest).
    pub fn multi_index(&self, mut j: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for slot in idx.iter_mut().rev() {
            *slot = j % self.n;
            j /= self.n;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn point(&self, j: usize) -> Vec<f64> {
        self.multi_index(j).into_iter().map(|i| self.coordinate(i)).collect()
    }

    /// Flat index of the grid node nearest to `x`.
    pub fn nearest(&self, x: &[f64]) -> usize {
        let idx: Vec<usize> = x
            .iter()
            .map(|&v| (((v + self.radius) / self.spacing).round().max(0.0) as usize).min(self.n - 1))
            .collect();
        self.flat_index(&idx)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    /// First index and weights of the four-point stencil at coordinate `y`.
    pub fn stencil(&self, y: f64) -> (usize, [f64; 4]) {
        let y = y.clamp(-self.radius, self.radius);
        let s = (y + self.radius) / self.spacing;
        let cell = (s.floor() as isize).clamp(0, self.n as isize - 2) as usize;
        let first = cell.saturating_sub(1).min(self.n - 4);
        let u = s - first as f64;
        let mut w = [0.0; 4];
        for (a, wa) in w.iter_mut().enumerate() {
            let mut p = 1.0;
            for b in 0..4 {
                if b != a {
                    p *= (u - b as f64) / (a as f64 - b as f64);
                }
            }
            *wa = p;
        }
        (first, w)
    }

    /// Tensor cubic interpolation of grid values at `x`.
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> f64 {
        let stencils: Vec<(usize, [f64; 4])> = x.iter().map(|&v| self.stencil(v)).collect();
        let mut total = 0.0;
        for corner in 0..4usize.pow(self.dim as u32) {
            let mut c = corner;
            let mut weight = 1.0;
            let mut flat = 0;
            for (first, w) in &stencils {
                let o = c % 4;
                c /= 4;
                weight *= w[o];
                flat = flat * self.n + first + o;
            }
            total += weight * values[flat];
        }
        total
    }

    /// Central differences in the interior and second-order one-sided
    /// differences at the faces; `out[axis][j]` is `∂u/∂x_axis` at node `j`.
    pub fn gradient(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let h = self.spacing;
        (0..self.dim)
            .map(|axis| {
                let s = self.stride(axis);
                (0..u.len())
                    .map(|j| {
                        let i = (j / s) % self.n;
                        if i == 0 {
                            (-3.0 * u[j] + 4.0 * u[j + s] - u[j + 2 * s]) / (2.0 * h)
                        } else if i == self.n - 1 {
                            (3.0 * u[j] - 4.0 * u[j - s] + u[j - 2 * s]) / (2.0 * h)
                        } else {
                            (u[j + s] - u[j - s]) / (2.0 * h)
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Central second difference along `axis` at an interior node.
    pub fn second_difference(&self, u: &[f64], axis: usize, j: usize) -> f64 {
        let s = self.stride(axis);
        (u[j + s] - 2.0 * u[j] + u[j - s]) / (self.spacing * self.spacing)
    }

    /// Central first difference along `axis` at an interior node.
    pub fn first_difference(&self, u: &[f64], axis: usize, j: usize) -> f64 {
        let s = self.stride(axis);
        (u[j + s] - u[j - s]) / (2.0 * self.spacing)
    }

    /// Whether node `j` has `margin` neighbours on both sides of every axis.
    pub fn is_interior(&self, j: usize, margin: usize) -> bool {
        self.multi_index(j).iter().all(|&i| i >= margin && i + margin < self.n)
    }
}

/// Applies the `n × n` row-major matrix `mat` along `axis` of the tensor `src`.
pub(crate) fn apply_along_axis(grid: &Grid, mat: &[f64], axis: usize, src: &[f64], dst: &mut [f64]) {
    let n = grid.n;
    let inner = grid.stride(axis);
    let outer = src.len() / (n * inner);
    for o in 0..outer {
        let base = o * n * inner;
        for i in 0..n {
            let out = &mut dst[base + i * inner..base + (i + 1) * inner];
            out.iter_mut().for_each(|v| *v = 0.0);
            for (k, &w) in mat[i * n..(i + 1) * n].iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let line = &src[base + k * inner..base + (k + 1) * inner];
                for (o, &v) in out.iter_mut().zip(line) {
                    *o += w * v;
                }
            }
        }
    }
}
