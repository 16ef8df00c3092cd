//! Parameter calculus deciding which uniqueness theorem covers a scenario.
//!
//! Parameters are exact rationals so that strict inequalities at interval
//! endpoints (the critical and boundary cases) are decided exactly. The
//! three noise requirements (trace-class `Q_t`, the continuity-in-time
//! integral and the `ℒ⁴` interpolation integral) all reduce to
//! `δ > d/(4p_A) - ½` for `G = A^{-δ}` on a box, and the best available
//! `ξ` is `ξ_max = min(½, δ + ½ - d/(4p_A))`.

use std::fmt;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

pub fn rat(n: i64, d: i64) -> Rational {
    Ratio::new(n, d)
}

/// Closest small-denominator rational to a float (`0.3` becomes `3/10`).
pub fn rational_from_f64(x: f64) -> Result<Rational> {
    Ratio::approximate_float(x)
        .map(|r: Rational| {
            // snap to a denominator of at most 10⁶ to undo binary rounding
            let scaled = (x * 1e6).round() as i64;
            let snapped = Ratio::new(scaled, 1_000_000);
            if (r - snapped).abs() < Ratio::new(1, 1_000_000_000) {
                snapped
            } else {
                r
            }
        })
        .ok_or_else(|| Error::param("value", format!("{x} is not representable as a rational")))
}

pub fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn half() -> Rational {
    rat(1, 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    HeatPerturb,
    HeatPolynomial,
    DivergenceSub,
    DivergenceSuper,
    NonDivergence,
    Burgers,
    CahnHilliard,
}

impl Family {
    /// Power of `-Δ` in the leading operator.
    pub fn operator_power(self) -> u32 {
        match self {
            Family::CahnHilliard => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::HeatPerturb => "heat-perturb",
            Family::HeatPolynomial => "heat-polynomial",
            Family::DivergenceSub => "divergence-sub",
            Family::DivergenceSuper => "divergence-super",
            Family::NonDivergence => "non-divergence",
            Family::Burgers => "burgers",
            Family::CahnHilliard => "cahn-hilliard",
        };
        f.write_str(s)
    }
}

/// An interval of rationals with open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Interval {
    pub lo: Rational,
    pub lo_closed: bool,
    pub hi: Rational,
    pub hi_closed: bool,
}

impl Interval {
    pub fn open(lo: Rational, hi: Rational) -> Self {
        Self { lo, lo_closed: false, hi, hi_closed: false }
    }

    pub fn closed_open(lo: Rational, hi: Rational) -> Self {
        Self { lo, lo_closed: true, hi, hi_closed: false }
    }

    pub fn closed(lo: Rational, hi: Rational) -> Self {
        Self { lo, lo_closed: true, hi, hi_closed: true }
    }

    pub fn open_closed(lo: Rational, hi: Rational) -> Self {
        Self { lo, lo_closed: false, hi, hi_closed: true }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn contains(&self, x: Rational) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let (lo, lo_closed) = match self.lo.cmp(&other.lo) {
            std::cmp::Ordering::Greater => (self.lo, self.lo_closed),
            std::cmp::Ordering::Less => (other.lo, other.lo_closed),
            std::cmp::Ordering::Equal => (self.lo, self.lo_closed && other.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.cmp(&other.hi) {
            std::cmp::Ordering::Less => (self.hi, self.hi_closed),
            std::cmp::Ordering::Greater => (other.hi, other.hi_closed),
            std::cmp::Ordering::Equal => (self.hi, self.hi_closed && other.hi_closed),
        };
        Interval { lo, lo_closed, hi, hi_closed }
    }

    pub fn midpoint(&self) -> Rational {
        (self.lo + self.hi) / 2
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("∅");
        }
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Relation {
    fn eval(self, a: Rational, b: Rational) -> bool {
        match self {
            Relation::Lt => a < b,
            Relation::Le => a <= b,
            Relation::Gt => a > b,
            Relation::Ge => a >= b,
        }
    }

    fn is_strict(self) -> bool {
        matches!(self, Relation::Lt | Relation::Gt)
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "≤",
            Relation::Gt => ">",
            Relation::Ge => "≥",
        }
    }
}

/// A named inequality `lhs ⋈ rhs` evaluated at the scenario parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    pub name: &'static str,
    pub expr: &'static str,
    pub lhs: Rational,
    pub relation: Relation,
    pub rhs: Rational,
    pub holds: bool,
}

impl Constraint {
    fn new(name: &'static str, expr: &'static str, lhs: Rational, relation: Relation, rhs: Rational) -> Self {
        Self { name, expr, lhs, relation, rhs, holds: relation.eval(lhs, rhs) }
    }

    /// Fails only because a strict inequality is met with equality.
    pub fn is_boundary(&self) -> bool {
        !self.holds && self.relation.is_strict() && self.lhs == self.rhs
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} {:<14} {} {} {}  {}",
            self.name,
            self.expr,
            self.lhs,
            self.relation.symbol(),
            self.rhs,
            if self.holds { "ok" } else { "FAIL" }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Route {
    /// Bounded drift.
    Thm25,
    /// Unbounded drift with `α + β ≤ ½`, `α < ξ`.
    Thm26,
    /// Unbounded drift at `(α, β) = (½, 0)` under a Hilbert–Schmidt condition.
    Thm26Limiting,
    /// Super-critical `β ≥ ½` with rough noise `A^γ`.
    Cor27,
    Rejected,
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Route::Thm25 => "Thm2.5",
            Route::Thm26 => "Thm2.6",
            Route::Thm26Limiting => "Thm2.6-limiting",
            Route::Cor27 => "Cor2.7",
            Route::Rejected => "Rejected",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub family: Family,
    pub d: u32,
    /// Polynomial growth order (heat-polynomial only).
    pub p: Option<u32>,
    pub alpha: Rational,
    pub beta: Rational,
    pub delta: Rational,
    /// Rough-noise exponent (divergence-super only).
    pub gamma: Option<Rational>,
    pub drift_bounded: bool,
}

impl ScenarioParams {
    /// Parameters with the family's canonical `α`, `β` and zero `δ`.
    pub fn new(family: Family, d: u32) -> Self {
        let (alpha, beta) = match family {
            Family::Burgers | Family::CahnHilliard => (half(), Rational::zero()),
            _ => (Rational::zero(), Rational::zero()),
        };
        Self {
            family,
            d,
            p: None,
            alpha,
            beta,
            delta: Rational::zero(),
            gamma: None,
            drift_bounded: matches!(family, Family::DivergenceSuper),
        }
    }

    pub fn with_delta(mut self, delta: Rational) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_alpha(mut self, alpha: Rational) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_beta(mut self, beta: Rational) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_gamma(mut self, gamma: Rational) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn with_p(mut self, p: u32) -> Self {
        self.p = Some(p);
        self
    }

    pub fn bounded(mut self, bounded: bool) -> Self {
        self.drift_bounded = bounded;
        self
    }

    pub fn operator_power(&self) -> u32 {
        self.family.operator_power()
    }

    /// `d / (4 p_A)`.
    fn weyl_ratio(&self) -> Rational {
        rat(self.d as i64, 4 * self.operator_power() as i64)
    }

    /// `ξ_max = min(½, δ + ½ - d/(4p_A))` at the given `δ`.
    pub fn xi_max_at(&self, delta: Rational) -> Rational {
        (delta + half() - self.weyl_ratio()).min(half())
    }

    pub fn xi_max(&self) -> Rational {
        self.xi_max_at(self.delta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub admissible: bool,
    pub route: Route,
    /// The route that was examined (equal to `route` when admissible).
    pub attempted: Route,
    pub constraints: Vec<Constraint>,
    pub initial_datum: String,
    pub delta_interval: Option<Interval>,
    pub gamma_interval: Option<Interval>,
    /// Largest `δ'` (open) with `G ∈ ℒ²(H, D(A^{δ'}))`, limiting route only.
    pub hs_shift_sup: Option<Rational>,
    /// Rejected only because a strict inequality holds with equality.
    pub boundary_excluded: bool,
}

impl Verdict {
    pub fn failing(&self) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter().filter(|c| !c.holds)
    }

    /// One-line summary of the first violated constraint.
    pub fn reason(&self) -> Option<String> {
        self.failing().next().map(|c| {
            let prefix = if self.boundary_excluded { "boundary excluded: " } else { "" };
            format!("{prefix}{} requires {} {} {}", c.name, c.expr, c.relation.symbol(), c.rhs)
        })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "admissible      {}", self.admissible)?;
        writeln!(f, "route           {}", self.route)?;
        if self.route == Route::Rejected {
            writeln!(f, "examined route  {}", self.attempted)?;
        }
        writeln!(f, "initial datum   {}", self.initial_datum)?;
        if let Some(i) = &self.delta_interval {
            writeln!(f, "delta interval  {i}")?;
        }
        if let Some(i) = &self.gamma_interval {
            writeln!(f, "gamma interval  {i}")?;
        }
        if let Some(s) = self.hs_shift_sup {
            writeln!(f, "delta' sup      {s}")?;
        }
        if self.boundary_excluded {
            writeln!(f, "note            boundary-excluded")?;
        }
        writeln!(f, "constraints")?;
        for c in &self.constraints {
            writeln!(f, "  {c}")?;
        }
        Ok(())
    }
}

/// Largest lower bound among `(value, strict)` candidates, floored at a closed 0.
fn lower_bound(candidates: &[(Rational, bool)]) -> (Rational, bool) {
    let mut best = (Rational::zero(), false);
    for &(v, strict) in candidates {
        if v > best.0 || (v == best.0 && strict) {
            best = (v, strict);
        }
    }
    best
}

fn interval_from(lower: &[(Rational, bool)], hi: Rational) -> Interval {
    let (lo, open) = lower_bound(lower);
    Interval { lo, lo_closed: !open, hi, hi_closed: false }
}

/// Decides the applicable theorem and the binding constraints.
pub fn classify(params: &ScenarioParams) -> Result<Verdict> {
    check_family(params)?;
    let zero = Rational::zero();
    let one = Rational::from_integer(1);
    let w = params.weyl_ratio();
    let (a, b, dl) = (params.alpha, params.beta, params.delta);
    let noise_floor = w - half();
    let mut cs = Vec::new();

    if params.family == Family::DivergenceSuper {
        let gamma = params.gamma.unwrap_or(zero);
        let xi = params.xi_max_at(zero);
        cs.push(Constraint::new("bounded drift", "sup‖B‖", if params.drift_bounded { one } else { zero }, Relation::Gt, zero));
        cs.push(Constraint::new("noise regularity (δ=0)", "0", zero, Relation::Gt, noise_floor));
        cs.push(Constraint::new("alpha below xi", "α", a, Relation::Lt, xi));
        cs.push(Constraint::new("beta range", "β", b, Relation::Lt, half() + xi - a));
        cs.push(Constraint::new("gamma nonnegative", "γ", gamma, Relation::Ge, zero));
        cs.push(Constraint::new("gamma at most beta", "γ", gamma, Relation::Le, b));
        cs.push(Constraint::new("gamma above beta-1/2", "γ", gamma, Relation::Gt, b - half()));
        cs.push(Constraint::new("gamma below xi-alpha", "γ", gamma, Relation::Lt, xi - a));
        let range = Interval::closed(zero, b)
            .intersect(&Interval::open(b - half(), xi - a));
        return Ok(finish(cs, Route::Cor27, params, None, Some(range), None));
    }

    cs.push(Constraint::new("alpha range", "α", a, Relation::Ge, zero));
    cs.push(Constraint::new("alpha range", "α", a, Relation::Lt, one));
    cs.push(Constraint::new("beta range", "β", b, Relation::Ge, zero));
    cs.push(Constraint::new("beta range", "β", b, Relation::Lt, half()));
    cs.push(Constraint::new("delta nonnegative", "δ", dl, Relation::Ge, zero));
    cs.push(Constraint::new("delta below 1/2-beta", "δ", dl, Relation::Lt, half() - b));
    cs.push(Constraint::new("noise regularity", "δ", dl, Relation::Gt, noise_floor));

    if params.family == Family::HeatPolynomial {
        let p = params.p.unwrap_or(2);
        let (lo, hi) = embedding_r_window(params.d, p, a, b);
        cs.push(Constraint::new("Sobolev embedding window", "r_min", lo, Relation::Le, hi));
    }

    let bounded = params.drift_bounded && params.family != Family::Burgers && params.family != Family::CahnHilliard;
    let (route, delta_interval, hs) = if bounded {
        let iv = interval_from(&[(noise_floor, true)], half() - b);
        (Route::Thm25, iv, None)
    } else if a == half() && b == zero {
        cs.push(Constraint::new("Hilbert-Schmidt shift", "δ", dl, Relation::Gt, w));
        let iv = interval_from(&[(noise_floor, true), (w, true)], half());
        let hs = (dl > w).then_some(dl - w);
        (Route::Thm26Limiting, iv, hs)
    } else {
        cs.push(Constraint::new("order alpha+beta", "α+β", a + b, Relation::Le, half()));
        cs.push(Constraint::new("alpha below xi", "α", a, Relation::Lt, params.xi_max()));
        let iv = if a < half() {
            interval_from(&[(noise_floor, true), (a + noise_floor, true)], half() - b)
        } else {
            Interval::open(zero, zero)
        };
        (Route::Thm26, iv, None)
    };
    Ok(finish(cs, route, params, Some(delta_interval), None, hs))
}

fn finish(
    constraints: Vec<Constraint>,
    route: Route,
    params: &ScenarioParams,
    delta_interval: Option<Interval>,
    gamma_interval: Option<Interval>,
    hs_shift_sup: Option<Rational>,
) -> Verdict {
    let admissible = constraints.iter().all(|c| c.holds);
    let boundary_excluded = !admissible && constraints.iter().filter(|c| !c.holds).all(|c| c.is_boundary());
    Verdict {
        admissible,
        route: if admissible { route } else { Route::Rejected },
        attempted: route,
        constraints,
        initial_datum: initial_datum_label(params, route),
        delta_interval,
        gamma_interval,
        hs_shift_sup,
        boundary_excluded,
    }
}

fn initial_datum_label(params: &ScenarioParams, route: Route) -> String {
    match (params.family, route) {
        (_, Route::Cor27) => match params.gamma {
            Some(g) => format!("D(A^-{g})"),
            None => "D(A^-gamma)".into(),
        },
        (_, Route::Thm25) => "H = L^2".into(),
        (Family::Burgers, _) => "H^1_0 = D(A^1/2)".into(),
        (Family::CahnHilliard, _) => "D(A_N) = {H^2, Neumann}".into(),
        _ if params.alpha.is_zero() => "H = L^2".into(),
        _ => format!("D(A^{})", params.alpha),
    }
}

fn check_family(p: &ScenarioParams) -> Result<()> {
    let zero = Rational::zero();
    let bad = |msg: String| Err(Error::Inconsistent(msg));
    if !(1..=3).contains(&p.d) {
        return bad(format!("dimension must be 1, 2 or 3, got {}", p.d));
    }
    if p.gamma.is_some() && p.family != Family::DivergenceSuper {
        return bad(format!("gamma is only meaningful for divergence-super, not {}", p.family));
    }
    if p.p.is_some() && p.family != Family::HeatPolynomial {
        return bad(format!("growth order p is only meaningful for heat-polynomial, not {}", p.family));
    }
    match p.family {
        Family::HeatPerturb if p.alpha != zero || p.beta != zero => {
            bad("heat-perturb has alpha = beta = 0".into())
        }
        Family::HeatPolynomial if p.p.is_none_or(|q| q < 2) => {
            bad("heat-polynomial needs a growth order p >= 2".into())
        }
        Family::DivergenceSub if p.alpha != zero || !(p.beta > zero && p.beta < half()) => {
            bad("divergence-sub has alpha = 0 and beta in (0, 1/2)".into())
        }
        Family::DivergenceSuper if p.alpha != zero || p.beta < half() => {
            bad("divergence-super has alpha = 0 and beta >= 1/2".into())
        }
        Family::DivergenceSuper if p.delta != zero => {
            bad("divergence-super uses G = A^gamma; set delta = 0 and supply gamma".into())
        }
        Family::DivergenceSuper if p.gamma.is_none() => bad("divergence-super needs gamma".into()),
        Family::NonDivergence if p.beta != zero || !(p.alpha > zero && p.alpha < Rational::from_integer(1)) => {
            bad("non-divergence has beta = 0 and alpha in (0, 1)".into())
        }
        Family::Burgers if p.d != 1 => bad("burgers is one-dimensional".into()),
        Family::Burgers | Family::CahnHilliard if p.alpha != half() || p.beta != zero => {
            bad(format!("{} has alpha = 1/2 and beta = 0", p.family))
        }
        _ => Ok(()),
    }
}

/// Admissible window `[r_min, r_max]` of Lebesgue exponents for which
/// `D(A^α) ⊂ L^r` and `L^{r/(p-1)} ⊂ D(A^{-β})`; empty when `r_min > r_max`.
fn embedding_r_window(d: u32, p: u32, alpha: Rational, beta: Rational) -> (Rational, Rational) {
    let d = rat(d as i64, 1);
    let pm1 = rat(p as i64 - 1, 1);
    let two = rat(2, 1);
    // α ≥ (d/2)(½ - 1/r)  ⇔  1/r ≥ ½ - 2α/d
    let inv_r_min = half() - two * alpha / d;
    let r_from_alpha = if inv_r_min > Rational::zero() {
        inv_r_min.recip()
    } else {
        rat(i64::MAX / 4, 1)
    };
    // β ≥ (d/2)((p-1)/r - ½)  ⇔  r ≥ (p-1)/(½ + 2β/d)
    let r_from_beta = pm1 / (half() + two * beta / d);
    let lo = two.max(pm1).max(r_from_beta);
    let hi = (two * pm1).min(r_from_alpha);
    (lo, hi)
}

/// Optimal Lebesgue exponent and derived quantities for polynomial drifts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatPolynomialParams {
    pub r_opt: Rational,
    pub alpha_opt: Rational,
    pub beta_opt: Rational,
    /// Interval of `δ` stated for this dimension.
    pub delta_interval: Interval,
    pub feasible: bool,
}

/// `r_opt = max{2, p-1, d(p-2)}`, `α_opt = (d/2)(½ - 1/r_opt)`.
pub fn heat_polynomial_params(d: u32, p: u32) -> Result<HeatPolynomialParams> {
    if p < 2 {
        return Err(Error::param("p", format!("growth order must be at least 2, got {p}")));
    }
    if !(1..=3).contains(&d) {
        return Err(Error::param("d", "dimension must be 1, 2 or 3"));
    }
    let (di, pi) = (d as i64, p as i64);
    let r_opt = rat(2.max(pi - 1).max(di * (pi - 2)), 1);
    let dh = rat(di, 2);
    let alpha_opt = dh * (half() - r_opt.recip());
    let beta_opt = dh * (rat(pi - 1, 1) / r_opt - half());
    let feasible = di * (pi - 2) <= 2 * (pi - 1) && (d != 3 || p < 4);
    let delta_interval = match d {
        1 => Interval::closed_open(Rational::zero(), half()),
        2 => Interval::open(alpha_opt, half()),
        _ => Interval::open(alpha_opt + rat(1, 4), half()),
    };
    Ok(HeatPolynomialParams { r_opt, alpha_opt, beta_opt, delta_interval, feasible })
}

/// `[0, β] ∩ (β - ½, ξ - α)`; `None` when empty.
pub fn supercritical_gamma_range(alpha: Rational, beta: Rational, xi: Rational) -> Result<Option<Interval>> {
    if alpha < Rational::zero() || alpha >= xi {
        return Err(Error::param("alpha", format!("must lie in [0, xi) = [0, {xi}), got {alpha}")));
    }
    if beta < Rational::zero() {
        return Err(Error::param("beta", format!("must be nonnegative, got {beta}")));
    }
    let range = Interval::closed(Rational::zero(), beta).intersect(&Interval::open(beta - half(), xi - alpha));
    Ok((!range.is_empty()).then_some(range))
}

/// `(d/8, ½)` for the fourth-order operator.
pub fn cahn_hilliard_delta_range(d: u32) -> Result<Interval> {
    if !(1..=3).contains(&d) {
        return Err(Error::param("d", format!("dimension must be 1, 2 or 3, got {d}")));
    }
    Ok(Interval::open(rat(d as i64, 8), half()))
}

/// Parameter region for a non-divergence drift `F(A^α u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonDivergenceRange {
    pub alpha: Interval,
    pub delta: Interval,
}

/// Stated ranges for each `α`-regime. With unbounded `F` in `d = 1` the
/// critical `α = ½` carries its own `δ`-interval.
pub fn nondivergence_ranges(d: u32, bounded: bool) -> Result<Vec<NonDivergenceRange>> {
    if !(1..=3).contains(&d) {
        return Err(Error::param("d", format!("dimension must be 1, 2 or 3, got {d}")));
    }
    let z = Rational::zero();
    let one = Rational::from_integer(1);
    let quarter = rat(1, 4);
    if bounded {
        return Ok(vec![NonDivergenceRange {
            alpha: Interval::open(z, one),
            delta: Interval::closed_open(z, half()),
        }]);
    }
    Ok(match d {
        1 => vec![
            NonDivergenceRange { alpha: Interval::open(z, half()), delta: Interval::closed_open(z, half()) },
            NonDivergenceRange { alpha: Interval::closed(half(), half()), delta: Interval::open(quarter, half()) },
        ],
        // δ-interval depends on α: (α, ½) in d = 2
        2 => vec![NonDivergenceRange { alpha: Interval::open(z, half()), delta: Interval::open(z, half()) }],
        _ => vec![NonDivergenceRange { alpha: Interval::open(z, quarter), delta: Interval::open(quarter, half()) }],
    })
}

/// `δ`-interval for a given `α` (unbounded `F`), or `None` when `α` is outside the stated range.
pub fn nondivergence_delta_for_alpha(d: u32, alpha: Rational) -> Result<Option<Interval>> {
    let ranges = nondivergence_ranges(d, false)?;
    let Some(r) = ranges.iter().find(|r| r.alpha.contains(alpha)) else {
        return Ok(None);
    };
    Ok(Some(match d {
        2 => Interval::open(alpha, half()),
        3 => Interval::open(alpha + rat(1, 4), half()),
        _ => r.delta,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        rat(n, d)
    }

    #[test]
    fn rationals_from_decimals_are_exact() {
        assert_eq!(rational_from_f64(0.3).unwrap(), q(3, 10));
        assert_eq!(rational_from_f64(0.25).unwrap(), q(1, 4));
        assert_eq!(rational_from_f64(1.0 / 3.0).unwrap(), q(1, 3));
    }

    #[test]
    fn interval_basics() {
        let i = Interval::open(q(1, 4), q(1, 2));
        assert!(!i.contains(q(1, 4)) && i.contains(q(3, 10)) && !i.contains(q(1, 2)));
        assert!(Interval::open(q(1, 2), q(1, 2)).is_empty());
        assert!(!Interval::closed(q(0, 1), q(0, 1)).is_empty());
        assert_eq!(format!("{}", Interval::closed_open(q(0, 1), q(1, 2))), "[0, 1/2)");
    }

    #[test]
    fn burgers_limiting_route() {
        let v = classify(&ScenarioParams::new(Family::Burgers, 1).with_delta(q(3, 10))).unwrap();
        assert!(v.admissible);
        assert_eq!(v.route, Route::Thm26Limiting);
        assert!(v.initial_datum.contains("H^1_0"));
        assert_eq!(v.hs_shift_sup, Some(q(1, 20)));
        assert_eq!(v.delta_interval, Some(Interval::open(q(1, 4), q(1, 2))));
    }

    #[test]
    fn heat_perturb_d3() {
        let v = classify(&ScenarioParams::new(Family::HeatPerturb, 3).with_delta(q(3, 10))).unwrap();
        assert!(v.admissible);
        assert_eq!(v.route, Route::Thm26);
        assert_eq!(v.delta_interval, Some(Interval::open(q(1, 4), q(1, 2))));
        let v = classify(&ScenarioParams::new(Family::HeatPerturb, 3).with_delta(q(1, 4))).unwrap();
        assert!(!v.admissible && v.boundary_excluded);
        assert!(v.reason().unwrap().starts_with("boundary excluded"));
        let v = classify(&ScenarioParams::new(Family::HeatPerturb, 3).with_delta(q(1, 10))).unwrap();
        assert!(!v.admissible && !v.boundary_excluded);
    }

    #[test]
    fn divergence_sub_d3_beta_too_large() {
        let p = ScenarioParams::new(Family::DivergenceSub, 3).with_beta(q(3, 10)).with_delta(q(3, 10));
        let v = classify(&p).unwrap();
        assert!(!v.admissible);
        assert!(v.failing().any(|c| c.name == "delta below 1/2-beta"));
    }

    #[test]
    fn d2_delta_zero_is_boundary_excluded() {
        let v = classify(&ScenarioParams::new(Family::HeatPerturb, 2)).unwrap();
        assert!(!v.admissible && v.boundary_excluded);
    }

    #[test]
    fn inconsistent_combinations_rejected() {
        let p = ScenarioParams::new(Family::HeatPerturb, 1).with_gamma(q(1, 10));
        assert!(matches!(classify(&p), Err(Error::Inconsistent(_))));
        let p = ScenarioParams::new(Family::Burgers, 2);
        assert!(classify(&p).is_err());
        let p = ScenarioParams::new(Family::HeatPolynomial, 1);
        assert!(classify(&p).is_err());
        let p = ScenarioParams::new(Family::HeatPerturb, 4);
        assert!(classify(&p).is_err());
    }

    #[test]
    fn heat_polynomial_table() {
        let h = heat_polynomial_params(1, 2).unwrap();
        assert_eq!(h.alpha_opt, q(0, 1));
        assert!(h.feasible);
        assert!(!heat_polynomial_params(3, 4).unwrap().feasible);
        let h = heat_polynomial_params(2, 3).unwrap();
        assert_eq!(h.r_opt, q(2, 1));
        assert_eq!(h.alpha_opt, q(0, 1));
        assert!(heat_polynomial_params(1, 1).is_err());
        // d = 3, p = 2 reduces to the linear case
        assert_eq!(heat_polynomial_params(3, 2).unwrap().delta_interval, Interval::open(q(1, 4), q(1, 2)));
    }

    #[test]
    fn heat_polynomial_classify_uses_embedding() {
        // d = 1, p = 3 with α = 1/8, β = 0 (r = 4) is admissible at δ = 0.3
        let p = ScenarioParams::new(Family::HeatPolynomial, 1)
            .with_p(3)
            .with_alpha(q(1, 8))
            .with_delta(q(3, 10));
        assert!(classify(&p).unwrap().admissible);
        // α = β = 0 cannot embed a cubic nonlinearity
        let p = ScenarioParams::new(Family::HeatPolynomial, 1).with_p(3).with_delta(q(3, 10));
        let v = classify(&p).unwrap();
        assert!(!v.admissible);
        assert!(v.failing().any(|c| c.name == "Sobolev embedding window"));
    }

    #[test]
    fn gamma_ranges() {
        let r = supercritical_gamma_range(q(0, 1), q(3, 5), q(6, 25)).unwrap().unwrap();
        assert_eq!(r, Interval::open(q(1, 10), q(6, 25)));
        let r = supercritical_gamma_range(q(0, 1), q(0, 1), q(1, 5)).unwrap().unwrap();
        assert_eq!(r, Interval::closed(q(0, 1), q(0, 1)));
        assert!(supercritical_gamma_range(q(1, 5), q(4, 5), q(6, 25)).unwrap().is_none());
        assert!(supercritical_gamma_range(q(1, 4), q(0, 1), q(1, 5)).is_err());
    }

    #[test]
    fn cahn_hilliard_ranges() {
        assert_eq!(cahn_hilliard_delta_range(1).unwrap(), Interval::open(q(1, 8), q(1, 2)));
        assert_eq!(cahn_hilliard_delta_range(3).unwrap(), Interval::open(q(3, 8), q(1, 2)));
        assert!(cahn_hilliard_delta_range(4).is_err());
        for d in 1..=3 {
            let iv = cahn_hilliard_delta_range(d).unwrap();
            let v = classify(&ScenarioParams::new(Family::CahnHilliard, d).with_delta(iv.midpoint())).unwrap();
            assert!(v.admissible);
            assert_eq!(v.route, Route::Thm26Limiting);
            assert_eq!(v.delta_interval, Some(iv));
            let v = classify(&ScenarioParams::new(Family::CahnHilliard, d).with_delta(iv.lo)).unwrap();
            assert!(!v.admissible && v.boundary_excluded);
        }
    }

    #[test]
    fn nondivergence_tables() {
        let r = nondivergence_ranges(3, true).unwrap();
        assert_eq!(r[0].alpha, Interval::open(q(0, 1), q(1, 1)));
        assert_eq!(r[0].delta, Interval::closed_open(q(0, 1), q(1, 2)));
        assert_eq!(nondivergence_delta_for_alpha(2, q(3, 10)).unwrap(), Some(Interval::open(q(3, 10), q(1, 2))));
        assert_eq!(nondivergence_delta_for_alpha(3, q(3, 10)).unwrap(), None);
        assert_eq!(nondivergence_delta_for_alpha(1, q(1, 2)).unwrap(), Some(Interval::open(q(1, 4), q(1, 2))));
    }

    #[test]
    fn nondivergence_classify_matches_table_where_stated() {
        for (d, alpha) in [(2, q(3, 10)), (3, q(1, 5)), (2, q(1, 10))] {
            let iv = nondivergence_delta_for_alpha(d, alpha).unwrap().unwrap();
            let p = ScenarioParams::new(Family::NonDivergence, d).with_alpha(alpha);
            let v = classify(&p.clone().with_delta(iv.midpoint())).unwrap();
            assert!(v.admissible, "d={d} α={alpha}");
            assert_eq!(v.delta_interval, Some(iv));
            assert!(!classify(&p.with_delta(iv.lo)).unwrap().admissible);
        }
        let v = classify(&ScenarioParams::new(Family::NonDivergence, 1).with_alpha(q(1, 2)).with_delta(q(3, 10))).unwrap();
        assert_eq!(v.route, Route::Thm26Limiting);
        assert!(v.admissible);
    }

    #[test]
    fn supercritical_route() {
        let p = ScenarioParams::new(Family::DivergenceSuper, 1).with_beta(q(3, 5)).with_gamma(q(3, 20));
        let v = classify(&p).unwrap();
        assert!(v.admissible);
        assert_eq!(v.route, Route::Cor27);
        assert_eq!(v.gamma_interval, Some(Interval::open(q(1, 10), q(1, 4))));
        let v = classify(&p.with_gamma(q(1, 4))).unwrap();
        assert!(!v.admissible && v.boundary_excluded);
    }

    #[test]
    fn verdict_constraint_invariant() {
        let mut cases = Vec::new();
        for d in 1..=3u32 {
            for dn in 0..10i64 {
                let delta = q(dn, 20);
                cases.push(ScenarioParams::new(Family::HeatPerturb, d).with_delta(delta));
                cases.push(ScenarioParams::new(Family::CahnHilliard, d).with_delta(delta));
                cases.push(ScenarioParams::new(Family::DivergenceSub, d).with_beta(q(1, 5)).with_delta(delta));
                cases.push(ScenarioParams::new(Family::NonDivergence, d).with_alpha(q(1, 5)).with_delta(delta).bounded(dn % 2 == 0));
            }
        }
        for p in cases {
            let v = classify(&p).unwrap();
            if v.admissible {
                assert!(v.constraints.iter().all(|c| c.holds));
                assert!(v.delta_interval.unwrap().contains(p.delta), "{p:?}");
            } else {
                assert!(v.constraints.iter().any(|c| !c.holds));
                if let Some(i) = v.delta_interval {
                    let others_hold = v.failing().all(|c| c.expr == "δ");
                    if others_hold {
                        assert!(!i.contains(p.delta), "{p:?}");
                    }
                }
            }
        }
    }
}
