use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::noise::smoothing_constant;
use crate::numerics::{adaptive_integrate, logspace};

fn heat(cutoff: usize) -> Spectrum {
    Spectrum::dirichlet_1d(cutoff)
}

fn problem_1d(delta: f64, drift: Drift, f: Observable, lambda: f64) -> ProjectedProblem {
    ProjectedProblem::new(&heat(8), &NoiseSpec::colored(delta), 1, drift, f, lambda).unwrap()
}

/// `∫₀^∞ e^{-λt} e^{-q(t)/2} cos(e^{-λ₁t} x) dt`.
fn cosine_closed_form(p: &ProjectedProblem, x: f64) -> f64 {
    let (l1, g) = (p.eigenvalues()[0], p.gains()[0]);
    let lam = p.lambda;
    adaptive_integrate(
        |t| (-lam * t).exp() * (-0.5 * q_mode(g, l1, t)).exp() * ((-l1 * t).exp() * x).cos(),
        0.0,
        80.0 / lam,
        1e-15,
        1e-13,
    )
    .0
}

#[test]
fn ou_moments() {
    let p = problem_1d(0.0, Drift::Zero, Observable::Constant(0.0), 1.0);
    let l1 = p.eigenvalues()[0];
    let lin = Observable::custom("x", 1.0, |x| x[0]);
    let sq = Observable::custom("x^2", 1.0, |x| x[0] * x[0]);
    for &t in &[1e-3, 0.05, 0.4] {
        let x = [0.3];
        let a = ou_apply(&p, &lin, t, &x, OuRule::Hermite(12)).unwrap().value;
        assert_abs_diff_eq!(a, (-l1 * t).exp() * 0.3, epsilon = 1e-14);
        let b = ou_apply(&p, &sq, t, &x, OuRule::Hermite(12)).unwrap().value;
        let want = (-2.0 * l1 * t).exp() * 0.09 + p.variances(t)[0];
        assert_abs_diff_eq!(b, want, epsilon = 1e-14);
    }
    assert_eq!(ou_apply(&p, &sq, 0.0, &[0.5], OuRule::Hermite(4)).unwrap().value, 0.25);
}

#[test]
fn ou_monte_carlo_and_caps() {
    let spec = heat(8);
    let p = ProjectedProblem::new(&spec, &NoiseSpec::colored(0.0), 4, Drift::Zero, Observable::Constant(0.0), 1.0)
        .unwrap();
    let v = Observable::cosine(vec![1.0, 0.5, 0.0, 2.0]);
    let x = [0.1, -0.2, 0.05, 0.0];
    let t = 0.02;
    let mc = ou_apply(&p, &v, t, &x, OuRule::MonteCarlo { samples: 200_000, seed: 3 }).unwrap();
    // closed form of E cos(⟨w, Y⟩) for Gaussian Y
    let q = p.variances(t);
    let w = [1.0, 0.5, 0.0, 2.0];
    let mean: f64 = (0..4).map(|k| w[k] * (-t * p.eigenvalues()[k]).exp() * x[k]).sum();
    let var: f64 = (0..4).map(|k| w[k] * w[k] * q[k]).sum();
    let exact = mean.cos() * (-0.5 * var).exp();
    assert!((mc.value - exact).abs() < mc.half_width.max(1e-3));
    assert!(ou_apply(&p, &v, t, &x, OuRule::Hermite(4)).is_err());
    assert!(ProjectedProblem::new(&spec, &NoiseSpec::colored(0.0), 5, Drift::Zero, Observable::Constant(0.0), 1.0)
        .is_err());
}

#[test]
fn ou_is_a_sup_contraction() {
    let p = problem_1d(0.2, Drift::Zero, Observable::Constant(0.0), 1.0);
    let v = Observable::axis(0, Profile::ClippedCubic { clip: 0.01 });
    let r = p.box_radius();
    for t in logspace(1e-4, 1.0, 9) {
        for i in 0..41 {
            let x = [-r + 2.0 * r * i as f64 / 40.0];
            let val = ou_apply(&p, &v, t, &x, OuRule::Hermite(40)).unwrap().value;
            assert!(val.abs() <= 0.01 + 1e-12);
        }
    }
}

#[test]
fn ou_semigroup_property() {
    let p = problem_1d(0.3, Drift::Zero, Observable::Constant(0.0), 1.0);
    let v = Observable::cosine(vec![3.0]);
    let (t, r) = (0.03, 0.07);
    let inner = {
        let p = p.clone();
        let v = v.clone();
        Observable::custom("R_r v", 1.0, move |x| ou_apply(&p, &v, r, x, OuRule::Hermite(30)).unwrap().value)
    };
    for &x in &[-0.4, 0.0, 0.25] {
        let lhs = ou_apply(&p, &inner, t, &[x], OuRule::Hermite(30)).unwrap().value;
        let rhs = ou_apply(&p, &v, t + r, &[x], OuRule::Hermite(30)).unwrap().value;
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
    }
}

#[test]
fn regularization_oracles() {
    let reg = RegularizerSpec::new(vec![2.0, 5.0], 0.1);
    let lin = Drift::Linear { diagonal: vec![1.5, -0.7] };
    let x = [0.3, -1.1];
    let b = regularize_drift(&lin, &reg, &x).unwrap();
    for k in 0..2 {
        let want = (-2.0 * 0.1 * reg.c[k]).exp() * [1.5, -0.7][k] * x[k];
        assert_abs_diff_eq!(b[k], want, epsilon = 1e-13);
    }
    let constant = Drift::field(1.0, |_, out| out.copy_from_slice(&[0.4, -0.9]));
    let b = regularize_drift(&constant, &reg, &x).unwrap();
    let (t, _) = reg.factors();
    assert_abs_diff_eq!(b[0], t[0] * 0.4, epsilon = 1e-14);
    assert_abs_diff_eq!(b[1], -t[1] * 0.9, epsilon = 1e-14);
    assert!(regularize_drift(&lin, &RegularizerSpec::new(vec![1.0, 1.0], 0.0), &x).is_err());
    assert!(regularize_drift(&lin, &RegularizerSpec::new(vec![1.0, -1.0], 0.1), &x).is_err());
}

#[test]
fn regularization_converges_as_eps_vanishes() {
    let drift = Drift::ClippedCubic { coefficient: -2.0, clip: 1.0 };
    let c = vec![std::f64::consts::PI.powi(2), 4.0 * std::f64::consts::PI.powi(2)];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let x = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
        let mut exact = [0.0; 2];
        drift.eval(&x, &mut exact);
        let errs: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&eps| {
                let b = regularize_drift(&drift, &RegularizerSpec::new(c.clone(), eps), &x).unwrap();
                ((b[0] - exact[0]).powi(2) + (b[1] - exact[1]).powi(2)).sqrt()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?} at {x:?}");
    }
}

#[test]
fn lambda0_algebra() {
    assert_eq!(lambda0(1.3, 0.0, 0.1, 0.1).unwrap(), 0.0);
    let a = lambda0(0.8, 1.0, 0.0, 0.0).unwrap();
    let b = lambda0(0.8, 2.0, 0.0, 0.0).unwrap();
    assert_abs_diff_eq!(b / a, 4.0, epsilon = 1e-12);
    assert_abs_diff_eq!(a, (0.8 * std::f64::consts::PI.sqrt()).powi(2), epsilon = 1e-12);
    assert!(lambda0(1.0, 1.0, 0.3, 0.2).is_err());
    assert!(lambda0(1.0, 1.0, 0.4, 0.2).is_err());
}

#[test]
fn zero_data_gives_zero_solution() {
    let p = problem_1d(0.0, Drift::Zero, Observable::Constant(0.0), 2.0);
    let sol = solve_mild(&p, &SolveOptions::for_dim(1).with_points(41)).unwrap();
    assert!(sol.converged);
    assert_eq!(sol.sup_norm(), 0.0);
    let pts: Vec<Vec<f64>> = vec![vec![0.0], vec![0.3]];
    let res = residual_strong(&p, &sol, &pts).unwrap();
    assert_eq!(res.sup, 0.0);
}

#[test]
fn cosine_solution_matches_closed_form() {
    let tol = 1e-8;
    let p = problem_1d(0.0, Drift::Zero, Observable::cosine(vec![1.0]), 2.0);
    let sol = solve_mild(&p, &SolveOptions::for_dim(1).with_tol(tol)).unwrap();
    assert!(sol.converged);
    assert!(sol.tail_bound < tol / 10.0);
    let worst = (0..sol.grid.len())
        .map(|j| (sol.u[j] - cosine_closed_form(&p, sol.grid.point(j)[0])).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 5.0 * tol, "sup error {worst}");
}

#[test]
fn residual_is_second_order() {
    let tol = 1e-10;
    let p = problem_1d(0.0, Drift::Zero, Observable::cosine(vec![4.0]), 2.0);
    let r = p.box_radius();
    let pts: Vec<Vec<f64>> = (0..9).map(|i| vec![-0.5 * r + r * i as f64 / 8.0]).collect();
    let coarse = solve_mild(&p, &SolveOptions::for_dim(1).with_tol(tol).with_points(65)).unwrap();
    let fine = solve_mild(&p, &SolveOptions::for_dim(1).with_tol(tol).with_points(129)).unwrap();
    let rc = residual_strong(&p, &coarse, &pts).unwrap();
    let rf = residual_strong(&p, &fine, &pts).unwrap();
    let ratio = rc.sup / rf.sup;
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    // truncation bound from the fourth derivatives of the closed form
    let h = coarse.grid.spacing();
    let bound = h * h / 12.0 * (0.5 * 16.0 * 16.0 + p.eigenvalues()[0] * r * 4.0f64.powi(3) / 2.0) / p.lambda;
    assert!(rc.sup <= bound + 10.0 * tol, "{} vs {}", rc.sup, bound);
}

#[test]
fn drift_solution_is_a_fixed_point_from_either_start() {
    let drift = Drift::ClippedCubic { coefficient: -3.0, clip: 1.0 };
    let f = Observable::cosine(vec![2.0]);
    let base = problem_1d(0.0, drift, f, 1.0);
    let study = SmoothingStudy::from_problem(&base);
    let cr = 1.5 * estimate_c_r(&study, &[Profile::SignLike { width: 1e-3 }], &logspace(1e-4, 1.0, 21)).unwrap();
    let l0 = lambda0(cr, base.drift_bound(), base.delta, base.beta).unwrap();
    let p = base.with_lambda(2.0 * l0);
    let tol = 1e-8;
    let opts = SolveOptions::for_dim(1).with_tol(tol).with_points(81).with_threshold(l0);
    let a = solve_mild(&p, &opts).unwrap();
    let b = solve_mild(&p, &opts.with_init(PicardInit::SourceOverLambda)).unwrap();
    assert!(a.converged && b.converged);
    assert!(a.max_factor() < 1.0 && b.max_factor() < 1.0);
    let gap = a.u.iter().zip(&b.u).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(gap <= 2.0 * tol, "gap {gap}");
    let op = MildOperator::new(&p, &opts).unwrap();
    let again = op.apply(&a.u);
    let change = again.iter().zip(&a.u).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(change <= tol);
    assert!(solve_mild(&p.clone().with_lambda(0.5 * l0), &opts).is_err());
}

#[test]
fn contraction_below_one_at_twice_threshold() {
    let spec = heat(64);
    let noise = NoiseSpec::colored(0.2);
    let cr = 1.5 * smoothing_constant(&spec, &noise, 0.1).unwrap().value;
    let drift = Drift::field(1.0, |x, out| out[0] = x[0].sin());
    let base = ProjectedProblem::new(&spec, &noise, 1, drift, Observable::cosine(vec![1.0]), 1.0)
        .unwrap()
        .with_beta(0.1);
    let l0 = lambda0(cr, 1.0, 0.2, 0.1).unwrap();
    assert!(l0 > 0.0 && l0.is_finite());
    let p = base.with_lambda(2.0 * l0);
    let sol = solve_mild(&p, &SolveOptions::for_dim(1).with_points(81).with_tol(1e-9)).unwrap();
    assert!(sol.converged);
    assert!(sol.max_factor() < 1.0);
}

#[test]
fn trace_remainder_decreases_with_projection() {
    let spec = heat(8);
    let p = ProjectedProblem::new(
        &spec,
        &NoiseSpec::colored(0.0),
        3,
        Drift::Zero,
        Observable::cosine(vec![1.0, 1.0, 1.0]),
        1.0,
    )
    .unwrap();
    let sol = solve_mild(&p, &SolveOptions::for_dim(3).with_points(15)).unwrap();
    let r: Vec<f64> = (0..=3).map(|j| trace_remainder(&p, &sol, j).unwrap()).collect();
    assert_eq!(r[3], 0.0);
    assert!(r[0] >= r[1] && r[1] >= r[2] && r[2] > 0.0, "{r:?}");
    assert!(trace_remainder(&p, &sol, 4).is_err());
}

#[test]
fn smoothing_exponents() {
    let times = logspace(1e-3, 1e-1, 9);
    let catalog = [Profile::SignLike { width: 1e-4 }];
    let study = SmoothingStudy::new(&heat(64), &NoiseSpec::colored(0.0), 64).unwrap();
    let rep = verify_smoothing(&study, &catalog, &times, 0.2).unwrap();
    assert!((rep.slope - rep.expected_slope).abs() < 0.15, "{} {:?}", rep.slope, rep.rows);
    assert!((rep.fractional_slope - rep.expected_fractional_slope).abs() < 0.15, "{}", rep.fractional_slope);
    let study = SmoothingStudy::new(&heat(64), &NoiseSpec::colored(0.3), 64).unwrap();
    let rep = verify_smoothing(&study, &catalog, &times, 0.0).unwrap();
    assert!((rep.slope + 0.8).abs() < 0.15, "{}", rep.slope);
    assert!(verify_smoothing(&study, &catalog, &times, 0.2).is_err());
}

#[test]
fn smooth_observables_do_not_blow_up() {
    let times = logspace(1e-5, 1e-1, 9);
    let bump = Profile::Bump { width: 0.5, amplitude: 1.0 };
    let study = SmoothingStudy::new(&heat(16), &NoiseSpec::colored(0.0), 16).unwrap();
    let rep = verify_smoothing(&study, &[bump], &times, 0.0).unwrap();
    assert!(rep.max_gradient <= bump.lipschitz() * (1.0 + 1e-6));
    assert!(rep.rows[0].gradient_norm <= 1.05 * rep.rows[4].gradient_norm);
}
