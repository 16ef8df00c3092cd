//! Command-line entry points and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::admissibility::Verdict;
use crate::config::{inadmissibility_message, parse_scenario_unchecked, ScenarioFile};
use crate::error::{Error, Result};
use crate::galerkin::{
    simulate_path, summarize_paths, write_summary_csv, write_text, write_trajectory_csv, DriftEvaluator,
};
use crate::kolmogorov::{
    estimate_c_r, lambda0, solve_mild, verify_smoothing, write_factors_csv, write_smoothing_csv, Drift, Grid,
    KolmogorovSolution, Observable, ProjectedProblem, Profile, SmoothingStudy, SolveOptions,
};
use crate::law_compare::{compare_laws, write_comparison_csv, LawObservable};
use crate::noise::q_mode_infinity;
use crate::numerics::logspace;

/// Output directory used when `--out` is absent.
pub const OUT_DIR_ENV: &str = "SPDE_UNIQ_LAB_OUT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INADMISSIBLE: i32 = 2;
pub const EXIT_BLOW_UP: i32 = 3;
pub const EXIT_REJECTED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "spde-uniq-lab", version, about = "Spectral simulation and verification of semilinear SPDEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    /// Print the admissibility verdict.
    Check,
    /// Simulate the Galerkin scheme and write trajectory and summary CSVs.
    Simulate,
    /// Smoothing report and mild Kolmogorov solve on a few modes.
    Kolmogorov,
    /// Compare laws across two resolutions.
    Compare,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    Check(Flags),
    Simulate(Flags),
    Kolmogorov(Flags),
    Compare(Flags),
}

impl Command {
    pub fn split(&self) -> (CommandKind, &Flags) {
        match self {
            Command::Check(f) => (CommandKind::Check, f),
            Command::Simulate(f) => (CommandKind::Simulate, f),
            Command::Kolmogorov(f) => (CommandKind::Kolmogorov, f),
            Command::Compare(f) => (CommandKind::Compare, f),
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct Flags {
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Run even if the scenario is not covered by the uniqueness results.
    #[arg(long)]
    pub override_admissibility: bool,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the scenario path count.
    #[arg(long)]
    pub paths: Option<usize>,
}

/// Parses `args` and runs the command, returning the exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => {
            let (kind, flags) = cli.command.split();
            run(kind, flags, out, err)
        }
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            code
        }
    }
}

/// Runs one command and reports errors on `err`.
pub fn run(kind: CommandKind, flags: &Flags, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match execute(kind, flags, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::BlowUp { .. } => EXIT_BLOW_UP,
                _ => EXIT_ERROR,
            }
        }
    }
}

fn execute(kind: CommandKind, flags: &Flags, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let text = std::fs::read_to_string(&flags.scenario)?;
    let mut scenario = parse_scenario_unchecked(&text)?;
    if let Some(seed) = flags.seed {
        scenario.run.seed = Some(seed);
    }
    if let Some(paths) = flags.paths {
        if paths == 0 {
            return Err(Error::Semantic("--paths must be positive".into()));
        }
        scenario.run.paths = Some(paths);
    }
    let verdict = scenario.verdict()?;
    if kind == CommandKind::Check {
        write!(out, "{verdict}")?;
        if verdict.admissible {
            return Ok(EXIT_OK);
        }
        writeln!(err, "not admissible: {}", inadmissibility_message(&verdict))?;
        return Ok(EXIT_INADMISSIBLE);
    }
    if !verdict.admissible {
        let msg = inadmissibility_message(&verdict);
        if !flags.override_admissibility {
            writeln!(err, "error: scenario is not admissible: {msg}")?;
            writeln!(err, "rerun with --override-admissibility to simulate anyway")?;
            return Ok(EXIT_INADMISSIBLE);
        }
        writeln!(err, "warning: scenario is not admissible ({msg}); continuing because of --override-admissibility")?;
    }
    let dir = output_dir(flags, &scenario);
    std::fs::create_dir_all(&dir)?;
    let ctx = RunContext { kind, scenario: &scenario, verdict: &verdict, overridden: !verdict.admissible, dir: &dir };
    match kind {
        CommandKind::Check => unreachable!(),
        CommandKind::Simulate => simulate(&ctx, out),
        CommandKind::Kolmogorov => kolmogorov(&ctx, out),
        CommandKind::Compare => compare(&ctx, out),
    }
}

/// `--out`, then the environment variable, then `output.dir`, then `out`.
pub fn output_dir(flags: &Flags, scenario: &ScenarioFile) -> PathBuf {
    flags
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .or_else(|| scenario.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

struct RunContext<'a> {
    kind: CommandKind,
    scenario: &'a ScenarioFile,
    verdict: &'a Verdict,
    overridden: bool,
    dir: &'a Path,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: CommandKind,
    file: String,
    config_digest: String,
    seed: u64,
    paths: usize,
    admissible: bool,
    route: String,
    admissibility_overridden: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    /// Multi-index of every mode column, in column order.
    mode_ordering: Vec<Vec<u32>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
    scenario: &'a ScenarioFile,
}

impl RunContext<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `<csv>.manifest.toml` next to `csv`.
    fn manifest(&self, csv: &Path, notes: Vec<String>) -> Result<()> {
        let spec = self.scenario.spectrum()?;
        let m = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: self.kind,
            file: csv.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
            config_digest: self.scenario.digest(),
            seed: self.scenario.seed(),
            paths: self.scenario.paths(),
            admissible: self.verdict.admissible,
            route: self.verdict.route.to_string(),
            admissibility_overridden: self.overridden,
            reason: self.verdict.reason(),
            mode_ordering: spec.modes().to_vec(),
            notes,
            scenario: self.scenario,
        };
        let text = toml::to_string(&m).map_err(|e| Error::Semantic(format!("cannot serialize manifest: {e}")))?;
        let mut name = csv.as_os_str().to_owned();
        name.push(".manifest.toml");
        write_text(Path::new(&name), &text)
    }
}

fn simulate(ctx: &RunContext, out: &mut dyn Write) -> Result<i32> {
    let s = ctx.scenario;
    let problem = s.problem()?;
    let x0 = s.initial_datum(&problem.spectrum)?;
    let settings = s.run_settings();
    let every = s.record_every();
    let (traj, summary) = simulate_path(&problem, &x0, s.seed(), 0, &settings, every)?;
    let traj_path = ctx.path(&s.output.trajectory);
    write_trajectory_csv(&traj_path, &traj)?;
    ctx.manifest(&traj_path, vec![format!("path index 0, every {every} steps")])?;
    let rows = summarize_paths(&problem, &x0, s.seed(), s.paths(), &settings, every)?;
    let summary_path = ctx.path(&s.output.summary);
    write_summary_csv(&summary_path, &rows)?;
    ctx.manifest(&summary_path, vec![format!("paths 0..{}, every {every} steps", s.paths())])?;
    writeln!(out, "wrote {} and {}", traj_path.display(), summary_path.display())?;
    writeln!(out, "path 0: max monitored norm {:.6e}", summary.max_monitor)?;
    for r in &summary.stopping {
        match r.tau {
            Some(t) => writeln!(out, "tau_{} = {t}", r.level)?,
            None => writeln!(out, "tau_{} > T", r.level)?,
        }
    }
    Ok(crate::cli::EXIT_OK)
}

/// Drift of the scenario restricted to its first `m` mode coordinates,
/// bounded on the box `[-radius, radius]^m` by grid sampling.
fn projected_drift(s: &ScenarioFile, m: usize, beta: f64, radius: f64, points: usize) -> Result<Drift> {
    let model = s.drift_model();
    if model.is_zero() {
        return Ok(Drift::Zero);
    }
    let spec = s.spectrum()?.truncated(m)?;
    let eval = Mutex::new(DriftEvaluator::new(model, &spec)?);
    let eig = spec.eigenvalues().to_vec();
    let grid = Grid::new(m, points, radius);
    let mut b = vec![0.0; m];
    let mut bound: f64 = 0.0;
    for j in 0..grid.len() {
        eval.lock().expect("drift lock").eval(&grid.point(j), &mut b)?;
        let norm = eig.iter().zip(&b).map(|(&l, v)| l.powf(-2.0 * beta) * v * v).sum::<f64>().sqrt();
        bound = bound.max(norm);
    }
    Ok(Drift::field(bound, move |x, out| {
        let mut e = eval.lock().expect("drift lock");
        if e.eval(x, out).is_err() {
            out.iter_mut().for_each(|v| *v = f64::NAN);
        }
    }))
}

fn kolmogorov(ctx: &RunContext, out: &mut dyn Write) -> Result<i32> {
    let s = ctx.scenario;
    let k = &s.kolmogorov;
    let spec = s.spectrum()?;
    let noise = s.noise_spec();
    let catalog = [Profile::SignLike { width: 1e-4 }, Profile::Bump { width: 1.0, amplitude: 1.0 }];

    let study = SmoothingStudy::new(&spec, &noise, k.smoothing_modes.min(spec.len()))?;
    let report = verify_smoothing(&study, &catalog, &logspace(1e-3, 1e-1, 9), k.gamma)?;
    let smoothing_path = ctx.path(&s.output.smoothing);
    write_smoothing_csv(&smoothing_path, &report)?;
    ctx.manifest(
        &smoothing_path,
        vec![format!(
            "slope {:.4} (expected {:.4}), fractional slope {:.4} (expected {:.4})",
            report.slope, report.expected_slope, report.fractional_slope, report.expected_fractional_slope
        )],
    )?;
    writeln!(out, "smoothing slope {:.4} (expected {:.4})", report.slope, report.expected_slope)?;
    writeln!(
        out,
        "fractional slope {:.4} (expected {:.4}, gamma {})",
        report.fractional_slope, report.expected_fractional_slope, k.gamma
    )?;

    let m = k.modes;
    let beta = s.drift_spec().beta;
    let weights = k.cosine.clone().unwrap_or_else(|| {
        let mut w = vec![0.0; m];
        let (l, g) = (spec.eigenvalues()[0], noise.gain(spec.eigenvalues()[0]));
        w[0] = 1.0 / q_mode_infinity(g, l).sqrt();
        w
    });
    let mut problem =
        ProjectedProblem::new(&spec, &noise, m, Drift::Zero, Observable::cosine(weights), 1.0)?.with_beta(beta);
    let mut opts = SolveOptions::for_dim(m).with_tol(k.tol);
    if let Some(p) = k.points {
        opts = opts.with_points(p);
    }
    problem.drift = projected_drift(s, m, beta, problem.box_radius(), opts.points_per_axis)?;
    let c_r = 1.5 * estimate_c_r(&SmoothingStudy::from_problem(&problem), &catalog, &logspace(1e-3, 1.0, 13))?;
    let lam0 = lambda0(c_r, problem.drift_bound(), problem.delta, beta)?;
    let lambda = k.lambda.unwrap_or(if lam0 > 0.0 { k.lambda_factor * lam0 } else { 1.0 });
    problem = problem.with_lambda(lambda);
    writeln!(out, "C_R {c_r:.6}, drift bound {:.6}, lambda0 {lam0:.6}, lambda {lambda:.6}", problem.drift_bound())?;
    let sol = solve_mild(&problem, &opts)?;
    let factors_path = ctx.path(&s.output.factors);
    write_factors_csv(&factors_path, &sol)?;
    let notes = vec![
        format!("lambda {lambda}, lambda0 {lam0}, C_R {c_r}, drift bound {}", problem.drift_bound()),
        format!("sweeps {}, converged {}, max factor {}", sol.sweeps, sol.converged, sol.max_factor()),
    ];
    ctx.manifest(&factors_path, notes.clone())?;
    let solution_path = ctx.path(&s.output.solution);
    write_solution_csv(&solution_path, &sol)?;
    ctx.manifest(&solution_path, notes)?;
    writeln!(
        out,
        "solved in {} sweeps (converged {}), max contraction factor {:.4}, sup|u| {:.6}",
        sol.sweeps,
        sol.converged,
        sol.max_factor(),
        sol.sup_norm()
    )?;
    Ok(EXIT_OK)
}

/// CSV with one row per grid node: coordinates `x0..`, `u`, gradient `du0..`.
fn write_solution_csv(path: &Path, sol: &KolmogorovSolution) -> Result<()> {
    let m = sol.grid.dim();
    let mut header: Vec<String> = (0..m).map(|k| format!("x{k}")).collect();
    header.push("u".into());
    header.extend((0..m).map(|k| format!("du{k}")));
    let mut text = header.join(",") + "\n";
    for j in 0..sol.grid.len() {
        let mut row: Vec<String> = sol.grid.point(j).iter().map(|v| format!("{v:.17e}")).collect();
        row.push(format!("{:.17e}", sol.u[j]));
        row.extend(sol.du.iter().map(|d| format!("{:.17e}", d[j])));
        text += &row.join(",");
        text.push('\n');
    }
    write_text(path, &text)
}

fn compare(ctx: &RunContext, out: &mut dyn Write) -> Result<i32> {
    let s = ctx.scenario;
    let a = s.law_config()?;
    let b = s.compare_config()?;
    let catalog = LawObservable::standard_catalog(&a.problem.spectrum, &a.problem.noise)?;
    let lambda = s.compare.lambda.unwrap_or(1.0);
    let level = s.compare.level.unwrap_or(0.01);
    let report = compare_laws(&a, &b, &catalog, lambda, level)?;
    let path = ctx.path(&s.output.comparison);
    write_comparison_csv(&path, &report)?;
    ctx.manifest(
        &path,
        vec![
            format!("A: {}", report.digest_a),
            format!("B: {}", report.digest_b),
            format!("lambda {lambda}, level {level}, threshold {:.6}", report.threshold),
        ],
    )?;
    for r in &report.rows {
        writeln!(out, "{:<40} z = {:>9.4}  {}", r.observable, r.z, if r.pass { "ok" } else { "REJECT" })?;
    }
    writeln!(out, "max |z| {:.4}, threshold {:.4}", report.max_abs_z, report.threshold)?;
    Ok(if report.passed { EXIT_OK } else { EXIT_REJECTED })
}
