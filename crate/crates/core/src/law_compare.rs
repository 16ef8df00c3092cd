//! Monte Carlo Laplace functionals `u(x) = ∫₀^∞ e^{-λs} E f(X(s)) ds` of
//! Galerkin solutions and two-sample equality tests between discretizations.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::galerkin::{csv_err, DriftModel, GalerkinProblem, NoiseStream, RunSettings, Simulator};
use crate::kolmogorov::{solve_mild, KolmogorovSolution, Observable, ProjectedProblem, SolveOptions};
use crate::noise::{q_mode, q_mode_infinity, NoiseSpec};
use crate::numerics::{normal_upper_quantile, Welford};
use crate::spectral::{sobolev_norm_slice, Spectrum};

pub type ModeFunctional = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Bounded functionals of the mode coefficient vector.
#[derive(Clone)]
pub enum LawObservable {
    Constant(f64),
    /// `clamp(Σ c_i (a_mode/scale)^i, -clip, clip)`.
    ClippedPolynomial {
        mode: usize,
        scale: f64,
        coefficients: Vec<f64>,
        clip: f64,
    },
    /// `cos(Σ w_k a_k)` over the leading modes.
    Cosine { weights: Vec<f64> },
    /// `min(‖a‖_{2s} / scale, clip)`.
    ClippedNorm { exponent: f64, scale: f64, clip: f64 },
    Custom {
        label: String,
        sup: f64,
        field: ModeFunctional,
    },
}

impl std::fmt::Debug for LawObservable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

impl LawObservable {
    pub fn custom(label: impl Into<String>, sup: f64, field: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        LawObservable::Custom {
            label: label.into(),
            sup,
            field: Arc::new(field),
        }
    }

    /// Wraps an observable on the first `m` coordinates.
    pub fn from_observable(f: &Observable) -> Self {
        let g = f.clone();
        LawObservable::custom(format!("{f:?}"), f.sup_abs(), move |a| g.eval(a))
    }

    pub fn label(&self) -> String {
        match self {
            LawObservable::Constant(c) => format!("const({c})"),
            LawObservable::ClippedPolynomial { mode, coefficients, .. } => {
                format!("clipped-poly(a_{}; {:?})", mode + 1, coefficients)
            }
            LawObservable::Cosine { weights } => {
                let nz: Vec<String> = weights
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| **w != 0.0)
                    .map(|(k, w)| format!("{w:.4}*a_{}", k + 1))
                    .collect();
                format!("cos({})", nz.join("+"))
            }
            LawObservable::ClippedNorm { exponent, .. } => format!("clipped-norm(s={exponent})"),
            LawObservable::Custom { label, .. } => label.clone(),
        }
    }

    pub fn eval(&self, eigenvalues: &[f64], a: &[f64]) -> f64 {
        match self {
            LawObservable::Constant(c) => *c,
            LawObservable::ClippedPolynomial {
                mode,
                scale,
                coefficients,
                clip,
            } => {
                let y = a.get(*mode).copied().unwrap_or(0.0) / scale;
                let p = coefficients.iter().rev().fold(0.0, |acc, c| acc * y + c);
                p.clamp(-clip, *clip)
            }
            LawObservable::Cosine { weights } => weights.iter().zip(a).map(|(w, v)| w * v).sum::<f64>().cos(),
            LawObservable::ClippedNorm { exponent, scale, clip } => {
                (sobolev_norm_slice(eigenvalues, *exponent, a) / scale).min(*clip)
            }
            LawObservable::Custom { field, .. } => field(a),
        }
    }

    pub fn sup_abs(&self) -> f64 {
        match self {
            LawObservable::Constant(c) => c.abs(),
            LawObservable::ClippedPolynomial { clip, .. } | LawObservable::ClippedNorm { clip, .. } => *clip,
            LawObservable::Cosine { .. } => 1.0,
            LawObservable::Custom { sup, .. } => *sup,
        }
    }

    /// Eight observables scaled by the stationary standard deviations:
    /// clipped polynomials of the first three coefficients, cosines of three
    /// linear functionals and two clipped Sobolev norms.
    pub fn standard_catalog(spec: &Spectrum, noise: &NoiseSpec) -> Result<Vec<LawObservable>> {
        if spec.len() < 3 {
            return Err(Error::param("n", "the standard catalog needs at least three modes"));
        }
        let eig = spec.eigenvalues();
        let sd: Vec<f64> = eig.iter().map(|&l| q_mode_infinity(noise.gain(l), l).sqrt()).collect();
        let mut out = Vec::with_capacity(8);
        for (mode, coefficients) in [vec![0.0, 1.0, 0.5], vec![0.0, 1.0, 0.0, -0.25], vec![-1.0, 0.0, 1.0]]
            .into_iter()
            .enumerate()
        {
            out.push(LawObservable::ClippedPolynomial {
                mode,
                scale: sd[mode],
                coefficients,
                clip: 2.0,
            });
        }
        let cosines = [
            vec![1.0 / sd[0]],
            vec![0.7 / sd[0], -0.7 / sd[1]],
            vec![0.5 / sd[0], 0.5 / sd[1], 0.5 / sd[2]],
        ];
        out.extend(cosines.into_iter().map(|weights| LawObservable::Cosine { weights }));
        for exponent in [0.0, 0.25] {
            let scale = eig
                .iter()
                .zip(&sd)
                .map(|(&l, s)| l.powf(2.0 * exponent) * s * s)
                .sum::<f64>()
                .sqrt();
            out.push(LawObservable::ClippedNorm {
                exponent,
                scale,
                clip: 2.0,
            });
        }
        Ok(out)
    }
}

/// Truncated Laplace functional estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplaceEstimate {
    pub label: String,
    pub value: f64,
    pub std_error: f64,
    pub paths: usize,
    pub horizon: f64,
    /// `e^{-λT} sup|f| / λ`, the size of the discarded `∫_T^∞` part.
    pub tail_bound: f64,
}

/// Horizon `T = ln(sup|f|·10³ / (λ·SE)) / λ` for a target standard error.
pub fn default_horizon(lambda: f64, sup_f: f64, target_se: f64) -> f64 {
    ((sup_f * 1e3 / (lambda * target_se)).ln() / lambda).max(1.0 / lambda)
}

/// One Monte Carlo configuration of a Galerkin scheme.
#[derive(Debug, Clone)]
pub struct LawConfig {
    pub problem: GalerkinProblem,
    pub x0: Vec<f64>,
    pub settings: RunSettings,
    pub paths: usize,
    pub seed: u64,
    /// Index of the first simulated path, so disjoint blocks of one seed can
    /// serve as independent samples.
    pub first_path: u64,
}

impl LawConfig {
    pub fn new(problem: GalerkinProblem, x0: Vec<f64>, settings: RunSettings, paths: usize, seed: u64) -> Self {
        Self {
            problem,
            x0,
            settings,
            paths,
            seed,
            first_path: 0,
        }
    }

    pub fn with_first_path(mut self, first: u64) -> Self {
        self.first_path = first;
        self
    }

    /// `n, h, T, paths, seed, first_path` as a short string.
    pub fn digest(&self) -> String {
        format!(
            "n={} h={:e} T={} paths={} seed={} first_path={}",
            self.problem.spectrum.len(),
            self.settings.step,
            self.settings.horizon,
            self.paths,
            self.seed,
            self.first_path
        )
    }
}

/// Laplace functionals of every observable in `catalog`, estimated from the
/// same set of paths with trapezoidal time quadrature.
pub fn laplace_functionals(config: &LawConfig, catalog: &[LawObservable], lambda: f64) -> Result<Vec<LaplaceEstimate>> {
    if !(lambda > 0.0) {
        return Err(Error::param("lambda", "must be positive"));
    }
    if config.paths < 2 {
        return Err(Error::param("paths", "need at least two paths"));
    }
    let steps = config.settings.steps()?;
    let h = config.settings.step;
    let eig = config.problem.spectrum.eigenvalues().to_vec();
    let weights: Vec<f64> = (0..=steps)
        .map(|m| {
            let end = if m == 0 || m == steps { 0.5 } else { 1.0 };
            end * h * (-lambda * config.settings.time(m)).exp()
        })
        .collect();
    let stream = NoiseStream::new(config.seed);
    let chunk = 64usize;
    let chunks: Vec<u64> = (0..config.paths.div_ceil(chunk) as u64).collect();
    let per_path: Vec<Vec<f64>> = chunks
        .par_iter()
        .map(|&c| -> Result<Vec<Vec<f64>>> {
            let mut sim = Simulator::new(&config.problem, h)?;
            let lo = c as usize * chunk;
            let hi = (lo + chunk).min(config.paths);
            let mut rows = Vec::with_capacity(hi - lo);
            for p in lo..hi {
                let mut acc = vec![0.0; catalog.len()];
                sim.run(&config.x0, &stream, config.first_path + p as u64, &config.settings, |m, _, a| {
                    let w = weights[m];
                    for (o, f) in acc.iter_mut().zip(catalog) {
                        *o += w * f.eval(&eig, a);
                    }
                })?;
                rows.push(acc);
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let tail_decay = (-lambda * config.settings.horizon).exp() / lambda;
    Ok(catalog
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut w = Welford::default();
            per_path.iter().for_each(|r| w.push(r[i]));
            LaplaceEstimate {
                label: f.label(),
                value: w.mean(),
                std_error: w.std_error(),
                paths: config.paths,
                horizon: config.settings.horizon,
                tail_bound: tail_decay * f.sup_abs(),
            }
        })
        .collect())
}

/// Laplace functional of a single observable.
pub fn laplace_functional(config: &LawConfig, f: &LawObservable, lambda: f64) -> Result<LaplaceEstimate> {
    Ok(laplace_functionals(config, std::slice::from_ref(f), lambda)?.remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub observable: String,
    pub est_a: f64,
    pub se_a: f64,
    pub est_b: f64,
    pub se_b: f64,
    pub z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub level: f64,
    /// Bonferroni-corrected two-sided critical value.
    pub threshold: f64,
    pub passed: bool,
    pub max_abs_z: f64,
    pub digest_a: String,
    pub digest_b: String,
}

fn same_drift(a: &DriftModel, b: &DriftModel) -> bool {
    match (a, b) {
        (DriftModel::Zero, DriftModel::Zero) => true,
        (DriftModel::Pde(x), DriftModel::Pde(y)) => x == y,
        (DriftModel::Modes { field: f, alpha: x }, DriftModel::Modes { field: g, alpha: y }) => {
            Arc::ptr_eq(f, g) && x == y
        }
        _ => false,
    }
}

/// Errors unless both configurations discretize the same continuous equation
/// from the same initial datum.
pub fn check_same_equation(a: &LawConfig, b: &LawConfig) -> Result<()> {
    let (sa, sb) = (&a.problem.spectrum, &b.problem.spectrum);
    if sa.dim() != sb.dim() || sa.boundary() != sb.boundary() || sa.lengths() != sb.lengths() || sa.power() != sb.power()
    {
        return Err(Error::Inconsistent("the configurations use different domains or operators".into()));
    }
    if a.problem.noise != b.problem.noise {
        return Err(Error::Inconsistent("the configurations use different noise".into()));
    }
    if !same_drift(&a.problem.drift, &b.problem.drift) {
        return Err(Error::Inconsistent("the configurations use different drifts".into()));
    }
    // the coarser run starts from the projection of the finer datum
    let shared = a.x0.len().min(b.x0.len());
    if a.x0[..shared] != b.x0[..shared] {
        return Err(Error::Inconsistent("the configurations start from different initial data".into()));
    }
    if a.settings.horizon != b.settings.horizon {
        return Err(Error::Inconsistent("the configurations integrate over different horizons".into()));
    }
    Ok(())
}

/// Two-sample z-tests of every catalog functional with a Bonferroni
/// correction at `level`.
pub fn compare_laws(
    a: &LawConfig,
    b: &LawConfig,
    catalog: &[LawObservable],
    lambda: f64,
    level: f64,
) -> Result<ComparisonReport> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param("level", "must lie in (0, 1)"));
    }
    if catalog.is_empty() {
        return Err(Error::param("catalog", "needs at least one observable"));
    }
    check_same_equation(a, b)?;
    let ea = laplace_functionals(a, catalog, lambda)?;
    let eb = laplace_functionals(b, catalog, lambda)?;
    let threshold = normal_upper_quantile(level / (2.0 * catalog.len() as f64));
    let rows: Vec<ComparisonRow> = ea
        .iter()
        .zip(&eb)
        .map(|(x, y)| {
            let diff = x.value - y.value;
            let se = x.std_error.hypot(y.std_error);
            let z = if diff == 0.0 {
                0.0
            } else if se > 0.0 {
                diff / se
            } else {
                f64::INFINITY.copysign(diff)
            };
            ComparisonRow {
                observable: x.label.clone(),
                est_a: x.value,
                se_a: x.std_error,
                est_b: y.value,
                se_b: y.std_error,
                z,
                pass: z.abs() < threshold,
            }
        })
        .collect();
    let max_abs_z = rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max);
    Ok(ComparisonReport {
        passed: rows.iter().all(|r| r.pass),
        rows,
        level,
        threshold,
        max_abs_z,
        digest_a: a.digest(),
        digest_b: b.digest(),
    })
}

/// CSV with header `observable,est_A,se_A,est_B,se_B,z,pass`.
pub fn write_comparison_csv(path: &Path, report: &ComparisonReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["observable", "est_A", "se_A", "est_B", "se_B", "z", "pass"])
        .map_err(csv_err)?;
    for r in &report.rows {
        w.write_record([
            r.observable.clone(),
            format!("{:.17e}", r.est_a),
            format!("{:.17e}", r.se_a),
            format!("{:.17e}", r.est_b),
            format!("{:.17e}", r.se_b),
            format!("{:.6}", r.z),
            r.pass.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-mode mean and variance of the linear equation at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeLaw {
    pub mean: f64,
    pub variance: f64,
}

/// Exact law of the Ornstein–Uhlenbeck modes: mean `e^{-tλ_k}x_k`, variance `q_k(t)`.
pub fn exact_linear_law(spec: &Spectrum, noise: &NoiseSpec, x: &[f64], t: f64) -> Result<Vec<ModeLaw>> {
    if !(t >= 0.0) {
        return Err(Error::param("t", "must be nonnegative"));
    }
    if x.len() != spec.len() {
        return Err(Error::param("x", format!("expected {} coefficients, got {}", spec.len(), x.len())));
    }
    Ok(spec
        .eigenvalues()
        .iter()
        .zip(x)
        .map(|(&l, &xk)| {
            let g = noise.gain(l);
            if t.is_infinite() {
                ModeLaw {
                    mean: 0.0,
                    variance: q_mode_infinity(g, l),
                }
            } else {
                ModeLaw {
                    mean: (-t * l).exp() * xk,
                    variance: q_mode(g, l, t),
                }
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheckRow {
    pub x: Vec<f64>,
    pub pde: f64,
    pub monte_carlo: f64,
    pub std_error: f64,
    pub budget: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossCheckReport {
    pub rows: Vec<CrossCheckRow>,
    pub tol: f64,
    pub passed: bool,
    pub solution: KolmogorovSolution,
}

/// Settings of the Monte Carlo side of [`kolmogorov_cross_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossCheckSettings {
    pub paths: usize,
    pub seed: u64,
    pub steps: usize,
}

impl Default for CrossCheckSettings {
    fn default() -> Self {
        Self {
            paths: 10_000,
            seed: 1,
            steps: 2048,
        }
    }
}

/// Compares the grid solution of the mild Kolmogorov equation with Monte
/// Carlo Laplace functionals of the `m`-mode dynamics
/// `dX = (-ΛX + B(X)) dt + G dW` started at each point of `points`.
pub fn kolmogorov_cross_check(
    spec: &Spectrum,
    noise: &NoiseSpec,
    problem: &ProjectedProblem,
    opts: &SolveOptions,
    points: &[Vec<f64>],
    mc: &CrossCheckSettings,
) -> Result<CrossCheckReport> {
    let m = problem.dim();
    let solution = solve_mild(problem, opts)?;
    let drift = problem.drift.clone();
    let model = if drift.is_zero() {
        DriftModel::Zero
    } else {
        DriftModel::modes(0.0, drift.to_mode_field())
    };
    let galerkin = GalerkinProblem::new(spec.truncated(m)?, *noise, model);
    let f = LawObservable::from_observable(&problem.observable);
    let target_se = f.sup_abs().max(1e-12) / (problem.lambda * (mc.paths as f64).sqrt());
    let horizon = default_horizon(problem.lambda, f.sup_abs().max(1e-12), target_se);
    let settings = RunSettings::new(horizon).with_step(horizon / mc.steps as f64);
    let mut rows = Vec::with_capacity(points.len());
    for (i, x) in points.iter().enumerate() {
        if x.len() != m {
            return Err(Error::param("x", format!("expected {m} coordinates")));
        }
        let config = LawConfig::new(galerkin.clone(), x.clone(), settings.clone(), mc.paths, mc.seed)
            .with_first_path(i as u64 * mc.paths as u64);
        let est = laplace_functional(&config, &f, problem.lambda)?;
        let pde = solution.value(x);
        let budget = 3.0 * (est.std_error + opts.tol) + est.tail_bound + solution.tail_bound;
        rows.push(CrossCheckRow {
            x: x.clone(),
            pde,
            monte_carlo: est.value,
            std_error: est.std_error,
            budget,
            pass: (pde - est.value).abs() <= budget,
        });
    }
    Ok(CrossCheckReport {
        passed: rows.iter().all(|r| r.pass),
        rows,
        tol: opts.tol,
        solution,
    })
}
