//! Scenario files: strict TOML with exact rational parameters.
//!
//! Unknown keys are rejected, fractions written as `"p/q"` stay exact, and
//! defaults are filled in place so that the serialized form of a parsed
//! scenario is complete and reparses to an equal object.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::admissibility::{classify, rational_from_f64, to_f64, Family, Rational, Relation, ScenarioParams, Verdict};
use crate::error::{Error, Result};
use crate::galerkin::{DriftModel, DriftSpec, GalerkinProblem, Nonlinearity, RunSettings};
use crate::law_compare::LawConfig;
use crate::noise::{NoiseKind, NoiseSpec};
use crate::numerics::GaussRule;
use crate::spectral::{axis_function, BoundaryCondition, Spectrum};

pub const DEFAULT_STEPS: f64 = 2048.0;
pub const DEFAULT_PATHS: usize = 10_000;

/// A rational read from an integer, a float or a `"p/q"` string and written
/// back as a string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exact(pub Rational);

impl Exact {
    pub fn value(self) -> Rational {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        to_f64(self.0)
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Exact {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let parse = |t: &str| t.trim().parse::<i64>().map_err(|_| format!("`{s}` is not a fraction p/q"));
        match s.split_once('/') {
            Some((n, d)) => {
                let (n, d) = (parse(n)?, parse(d)?);
                if d == 0 {
                    return Err(format!("`{s}` has a zero denominator"));
                }
                Ok(Exact(Rational::new(n, d)))
            }
            None => match s.parse::<i64>() {
                Ok(n) => Ok(Exact(Rational::from_integer(n))),
                Err(_) => s
                    .parse::<f64>()
                    .ok()
                    .and_then(|x| rational_from_f64(x).ok())
                    .map(Exact)
                    .ok_or_else(|| format!("`{s}` is not a number or a fraction p/q")),
            },
        }
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) => Ok(Exact(Rational::from_integer(n))),
            Raw::Float(x) => rational_from_f64(x).map(Exact).map_err(serde::de::Error::custom),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationSection {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Exact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Exact>,
    /// Growth order of the polynomial nonlinearity (heat-polynomial).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<u32>,
    /// Whether the drift is bounded; defaults from the family and `clip`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounded: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<Nonlinearity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burgers_sign: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSection {
    pub d: u32,
    #[serde(default = "default_bc")]
    pub bc: BoundaryCondition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<f64>>,
    /// Number of retained modes.
    pub n: usize,
    /// Power of `-Δ`; must match the family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_a: Option<u32>,
}

fn default_bc() -> BoundaryCondition {
    BoundaryCondition::Dirichlet
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default = "default_kind")]
    pub kind: NoiseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Exact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Exact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_prime: Option<Exact>,
}

fn default_kind() -> NoiseKind {
    NoiseKind::Colored
}

/// Initial datum: explicit coefficients or one of the presets `zero`, `e1`,
/// `smooth-bump` and `rough-tail s`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    Zero,
    E1,
    SmoothBump,
    RoughTail(f64),
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let words: Vec<&str> = s.split_whitespace().collect();
        match words.as_slice() {
            ["zero"] => Ok(Preset::Zero),
            ["e1"] => Ok(Preset::E1),
            ["smooth-bump"] => Ok(Preset::SmoothBump),
            ["rough-tail", v] => v
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Preset::RoughTail)
                .ok_or_else(|| format!("rough-tail needs a numeric exponent, got `{v}`")),
            _ => Err(format!("unknown preset `{s}` (expected zero, e1, smooth-bump or \"rough-tail s\")")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Horizon `T`.
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Drift truncation level `N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_levels: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monitor_exponent: Option<f64>,
    /// Keep every `record_every`-th step in trajectory and summary files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default = "names::trajectory")]
    pub trajectory: String,
    #[serde(default = "names::summary")]
    pub summary: String,
    #[serde(default = "names::smoothing")]
    pub smoothing: String,
    #[serde(default = "names::factors")]
    pub factors: String,
    #[serde(default = "names::solution")]
    pub solution: String,
    #[serde(default = "names::comparison")]
    pub comparison: String,
}

mod names {
    pub fn trajectory() -> String {
        "trajectory.csv".into()
    }
    pub fn summary() -> String {
        "summary.csv".into()
    }
    pub fn smoothing() -> String {
        "smoothing.csv".into()
    }
    pub fn factors() -> String {
        "factors.csv".into()
    }
    pub fn solution() -> String {
        "solution.csv".into()
    }
    pub fn comparison() -> String {
        "comparison.csv".into()
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: None,
            trajectory: names::trajectory(),
            summary: names::summary(),
            smoothing: names::smoothing(),
            factors: names::factors(),
            solution: names::solution(),
            comparison: names::comparison(),
        }
    }
}

/// Settings of the `kolmogorov` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KolmogorovSection {
    /// Projection dimension `m`.
    #[serde(default = "one")]
    pub modes: usize,
    /// `λ` as a multiple of the estimated threshold `λ₀`.
    #[serde(default = "three")]
    pub lambda_factor: f64,
    /// Explicit `λ`, overriding `lambda_factor`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Cosine observable `cos(w·x)` on the projected coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cosine: Option<Vec<f64>>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// Fractional order used in the smoothing report.
    #[serde(default)]
    pub gamma: f64,
    /// Modes over which smoothing norms are maximised.
    #[serde(default = "sixty_four")]
    pub smoothing_modes: usize,
}

fn one() -> usize {
    1
}

fn three() -> f64 {
    3.0
}

fn default_tol() -> f64 {
    1e-6
}

fn sixty_four() -> usize {
    64
}

impl Default for KolmogorovSection {
    fn default() -> Self {
        Self {
            modes: 1,
            lambda_factor: 3.0,
            lambda: None,
            cosine: None,
            tol: default_tol(),
            points: None,
            gamma: 0.0,
            smoothing_modes: 64,
        }
    }
}

/// Resolution B of the `compare` command; unset fields copy resolution A.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_path: Option<u64>,
    /// Laplace exponent `λ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Family-wise significance level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub equation: EquationSection,
    pub spectral: SpectralSection,
    #[serde(default = "default_noise")]
    pub noise: NoiseSection,
    #[serde(default)]
    pub initial: InitialSection,
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub kolmogorov: KolmogorovSection,
    #[serde(default)]
    pub compare: CompareSection,
}

fn default_noise() -> NoiseSection {
    NoiseSection { kind: NoiseKind::Colored, delta: None, gamma: None, delta_prime: None }
}

/// Parses, fills defaults and validates, including admissibility.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile> {
    let s = parse_scenario_unchecked(text)?;
    s.require_admissible()?;
    Ok(s)
}

/// Parses, fills defaults and validates everything except admissibility.
pub fn parse_scenario_unchecked(text: &str) -> Result<ScenarioFile> {
    let mut s: ScenarioFile = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map(|r| line_column(text, r.start)).unwrap_or((0, 0));
        Error::Parse { line, column, message: e.message().trim().to_string() }
    })?;
    s.fill_defaults();
    s.validate()?;
    Ok(s)
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn semantic(msg: impl Into<String>) -> Error {
    Error::Semantic(msg.into())
}

impl ScenarioFile {
    fn fill_defaults(&mut self) {
        let base = ScenarioParams::new(self.equation.family, self.spectral.d);
        let eq = &mut self.equation;
        eq.alpha.get_or_insert(Exact(base.alpha));
        eq.beta.get_or_insert(Exact(base.beta));
        eq.nonlinearity.get_or_insert(Nonlinearity::Zero);
        if eq.family == Family::Burgers {
            eq.burgers_sign.get_or_insert(1.0);
        }
        let bounded_default = base.drift_bounded
            || (eq.clip.is_some()
                && matches!(
                    eq.family,
                    Family::HeatPerturb | Family::DivergenceSub | Family::DivergenceSuper | Family::NonDivergence
                ));
        eq.bounded.get_or_insert(bounded_default);
        self.spectral.lengths.get_or_insert_with(|| vec![1.0]);
        self.spectral.p_a.get_or_insert(self.equation.family.operator_power());
        if self.noise.kind == NoiseKind::Colored {
            self.noise.delta.get_or_insert(Exact(Rational::from_integer(0)));
        }
        if self.initial.preset.is_none() && self.initial.coefficients.is_none() {
            self.initial.preset = Some("zero".into());
        }
        self.initial.scale.get_or_insert(1.0);
        let run = &mut self.run;
        run.step.get_or_insert(run.horizon / DEFAULT_STEPS);
        run.paths.get_or_insert(DEFAULT_PATHS);
        run.seed.get_or_insert(0);
        run.monitor_exponent.get_or_insert(0.0);
        if run.record_every.is_none() {
            let steps = (run.horizon / run.step.unwrap_or(1.0)).round().max(1.0) as usize;
            run.record_every = Some((steps / 256).max(1));
        }
    }

    fn validate(&self) -> Result<()> {
        if self.spectral.p_a != Some(self.equation.family.operator_power()) {
            return Err(semantic(format!(
                "p_A = {} does not match {}, which needs {}",
                self.spectral.p_a.unwrap_or(0),
                self.equation.family,
                self.equation.family.operator_power()
            )));
        }
        match self.noise.kind {
            NoiseKind::Colored if self.noise.gamma.is_some() => {
                return Err(semantic("colored noise takes delta, not gamma"));
            }
            NoiseKind::Rough if self.noise.delta.is_some() => {
                return Err(semantic("rough noise takes gamma, not delta"));
            }
            NoiseKind::Rough if self.noise.gamma.is_none() => {
                return Err(semantic("rough noise needs gamma"));
            }
            NoiseKind::Rough if self.equation.family != Family::DivergenceSuper => {
                return Err(semantic("rough noise is only supported for divergence-super"));
            }
            _ => {}
        }
        if self.equation.family == Family::HeatPolynomial && self.equation.p.is_none() {
            return Err(semantic("heat-polynomial needs the growth order p"));
        }
        let spec = self.spectrum()?;
        self.noise_spec().validate()?;
        self.drift_spec().validate(&spec)?;
        self.initial_datum(&spec)?;
        let run = &self.run;
        self.run_settings().steps()?;
        if run.paths == Some(0) {
            return Err(semantic("paths must be positive"));
        }
        if let Some(n) = run.truncation {
            if !(n > 0.0) {
                return Err(semantic("truncation level must be positive"));
            }
        }
        if let Some(c) = self.compare.level {
            if !(c > 0.0 && c < 1.0) {
                return Err(semantic("compare level must lie in (0, 1)"));
            }
        }
        if let Some(l) = self.compare.lambda {
            if !(l > 0.0) {
                return Err(semantic("compare lambda must be positive"));
            }
        }
        let k = &self.kolmogorov;
        if !(1..=crate::kolmogorov::MAX_MODES).contains(&k.modes) || k.modes > spec.len() {
            return Err(semantic(format!("kolmogorov modes must lie in 1..={}", crate::kolmogorov::MAX_MODES.min(spec.len()))));
        }
        if let Some(w) = &k.cosine {
            if w.len() != k.modes {
                return Err(semantic("kolmogorov cosine weights need one entry per projected mode"));
            }
        }
        if !(k.tol > 0.0 && k.lambda_factor > 0.0) {
            return Err(semantic("kolmogorov tol and lambda_factor must be positive"));
        }
        Ok(())
    }

    /// Exact parameters handed to the admissibility calculus.
    pub fn params(&self) -> ScenarioParams {
        let eq = &self.equation;
        let mut p = ScenarioParams::new(eq.family, self.spectral.d);
        if let Some(a) = eq.alpha {
            p.alpha = a.0;
        }
        if let Some(b) = eq.beta {
            p.beta = b.0;
        }
        p.p = eq.p;
        if let Some(b) = eq.bounded {
            p.drift_bounded = b;
        }
        match self.noise.kind {
            NoiseKind::Colored => p.delta = self.noise.delta.map_or(p.delta, |d| d.0),
            NoiseKind::Rough => p.gamma = self.noise.gamma.map(|g| g.0),
        }
        p
    }

    pub fn verdict(&self) -> Result<Verdict> {
        classify(&self.params())
    }

    /// Semantic error naming the violated constraint when inadmissible.
    pub fn require_admissible(&self) -> Result<Verdict> {
        let v = self.verdict()?;
        if v.admissible {
            return Ok(v);
        }
        Err(semantic(inadmissibility_message(&v)))
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        Spectrum::build(
            self.spectral.d as usize,
            self.spectral.bc,
            self.spectral.lengths.as_deref().unwrap_or(&[1.0]),
            self.spectral.n,
            self.spectral.p_a.unwrap_or_else(|| self.equation.family.operator_power()),
        )
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        let mut n = match self.noise.kind {
            NoiseKind::Colored => NoiseSpec::colored(self.noise.delta.map_or(0.0, Exact::to_f64)),
            NoiseKind::Rough => NoiseSpec::rough(self.noise.gamma.map_or(0.0, Exact::to_f64)),
        };
        n.hs_shift = self.noise.delta_prime.map(Exact::to_f64);
        n
    }

    pub fn drift_spec(&self) -> DriftSpec {
        let eq = &self.equation;
        let base = ScenarioParams::new(eq.family, self.spectral.d);
        let mut s = DriftSpec::new(eq.family, eq.nonlinearity.clone().unwrap_or(Nonlinearity::Zero))
            .with_alpha(to_f64(eq.alpha.map_or(base.alpha, |a| a.0)))
            .with_beta(to_f64(eq.beta.map_or(base.beta, |b| b.0)));
        s.clip = eq.clip;
        if let Some(sign) = eq.burgers_sign {
            s.burgers_sign = sign;
        }
        s
    }

    /// The drift model; a zero nonlinearity in the heat or divergence
    /// families is the linear equation.
    pub fn drift_model(&self) -> DriftModel {
        let s = self.drift_spec();
        let linear = s.nonlinearity.is_zero()
            && matches!(
                s.family,
                Family::HeatPerturb | Family::DivergenceSub | Family::DivergenceSuper | Family::NonDivergence | Family::HeatPolynomial
            );
        if linear {
            DriftModel::Zero
        } else {
            DriftModel::Pde(s)
        }
    }

    pub fn problem(&self) -> Result<GalerkinProblem> {
        Ok(GalerkinProblem::new(self.spectrum()?, self.noise_spec(), self.drift_model()))
    }

    /// Mode coefficients of the initial datum on `spec`.
    pub fn initial_datum(&self, spec: &Spectrum) -> Result<Vec<f64>> {
        let n = spec.len();
        let scale = self.initial.scale.unwrap_or(1.0);
        if !scale.is_finite() {
            return Err(semantic("initial scale must be finite"));
        }
        let mut a = match (&self.initial.preset, &self.initial.coefficients) {
            (Some(_), Some(_)) => return Err(semantic("give either an initial preset or coefficients, not both")),
            (_, Some(c)) => {
                if c.len() > n {
                    return Err(semantic(format!("{} initial coefficients exceed the {n} retained modes", c.len())));
                }
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(semantic("initial coefficients must be finite"));
                }
                let mut a = c.clone();
                a.resize(n, 0.0);
                a
            }
            (Some(p), None) => match p.parse::<Preset>().map_err(semantic)? {
                Preset::Zero => vec![0.0; n],
                Preset::E1 => {
                    let mut a = vec![0.0; n];
                    a[0] = 1.0;
                    a
                }
                Preset::SmoothBump => smooth_bump(spec),
                Preset::RoughTail(s) => {
                    let l1 = spec.eigenvalues()[0];
                    spec.eigenvalues().iter().map(|&l| (l1 / l).powf(s)).collect()
                }
            },
            (None, None) => vec![0.0; n],
        };
        a.iter_mut().for_each(|v| *v *= scale);
        Ok(a)
    }

    pub fn run_settings(&self) -> RunSettings {
        let r = &self.run;
        let mut s = RunSettings::new(r.horizon).with_step(r.step.unwrap_or(r.horizon / DEFAULT_STEPS));
        s.truncation = r.truncation;
        s.stop_levels = r.stop_levels.clone().unwrap_or_default();
        s.monitor_exponent = r.monitor_exponent.unwrap_or(0.0);
        s
    }

    pub fn paths(&self) -> usize {
        self.run.paths.unwrap_or(DEFAULT_PATHS)
    }

    pub fn seed(&self) -> u64 {
        self.run.seed.unwrap_or(0)
    }

    pub fn record_every(&self) -> usize {
        self.run.record_every.unwrap_or(1)
    }

    /// Resolution A of a law comparison.
    pub fn law_config(&self) -> Result<LawConfig> {
        let problem = self.problem()?;
        let x0 = self.initial_datum(&problem.spectrum)?;
        Ok(LawConfig::new(problem, x0, self.run_settings(), self.paths(), self.seed()))
    }

    /// Resolution B of a law comparison.
    pub fn compare_config(&self) -> Result<LawConfig> {
        let c = &self.compare;
        let mut other = self.clone();
        if let Some(n) = c.n {
            other.spectral.n = n;
        }
        if let Some(h) = c.step {
            other.run.step = Some(h);
        }
        if let Some(seed) = c.seed {
            other.run.seed = Some(seed);
        }
        let cfg = other.law_config()?;
        Ok(cfg.with_first_path(c.first_path.unwrap_or(0)))
    }

    /// Canonical serialized form with every default filled.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// SHA-256 of the canonical form.
    pub fn digest(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Projections of `∏ sin(πx_i/L_i) e^{-((x_i - L_i/2)/(L_i/4))²}` computed
/// axis by axis with composite Gauss–Legendre, so shared modes get identical
/// coefficients at every truncation.
fn smooth_bump(spec: &Spectrum) -> Vec<f64> {
    let rule = GaussRule::legendre(16);
    let bc = spec.boundary();
    let mut cache: HashMap<(usize, u32), f64> = HashMap::new();
    let mut axis_coefficient = |axis: usize, m: u32| {
        let l = spec.lengths()[axis];
        *cache.entry((axis, m)).or_insert_with(|| {
            let panels = 16 + m as usize;
            let w = l / panels as f64;
            (0..panels)
                .map(|i| {
                    rule.integrate(i as f64 * w, (i + 1) as f64 * w, |x| {
                        let s = (x - 0.5 * l) / (0.25 * l);
                        (std::f64::consts::PI * x / l).sin() * (-s * s).exp() * axis_function(bc, m, l, x)
                    })
                })
                .sum()
        })
    };
    spec.modes()
        .iter()
        .map(|mi| mi.iter().enumerate().map(|(axis, &m)| axis_coefficient(axis, m)).product())
        .collect()
}

/// `boundary excluded: δ must exceed 1/4 (noise regularity)` and similar.
pub fn inadmissibility_message(v: &Verdict) -> String {
    let Some(c) = v.failing().next() else {
        return "scenario is not admissible".into();
    };
    let prefix = if v.boundary_excluded { "boundary excluded: " } else { "" };
    let verb = match c.relation {
        Relation::Gt => "must exceed",
        Relation::Ge => "must be at least",
        Relation::Lt => "must be below",
        Relation::Le => "must be at most",
    };
    format!("{prefix}{} {verb} {} ({}, got {})", c.expr, c.rhs, c.name, c.lhs)
}
