//! Smoothing and gluing of the rescaled norms into the final norm.
//!
//! Level `n` contributes `φ_n(s_n(x))` where `s_n` is a smoothed copy of
//! `|||·|||_n` and `φ_n` is a convex bump switched on just below `1`. The final
//! norm is the gauge of `{Φ ≤ 1}` with `Φ = Σ_n φ_n ∘ s_n`; for `x ≠ 0` it is the
//! unique `ρ` with `Φ(x/ρ) = 1`. Since `s_n(x/ρ) = s_n(x)/ρ` this is a scalar
//! equation once the level values are known.
//!
//! Evaluation runs in a floating type. The polyhedral variant (identity
//! smoother, piecewise-linear bumps) is also assembled exactly.

use std::fmt::Debug;

use num_traits::{Float, One, Signed, Zero};

use crate::body::{ConvexBody, Functional};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::planner::ParameterPlan;
use crate::scalar::{rational_from_f64, Rational, Scalar};
use crate::tower::RenormTower;

/// Floating types usable for glue evaluation.
pub trait Real: Float + Debug + Send + Sync + 'static {}

impl<T: Float + Debug + Send + Sync + 'static> Real for T {}

fn lit<F: Real>(v: f64) -> F {
    F::from(v).expect("literal fits the float type")
}

fn to_real<F: Real>(r: &Rational) -> F {
    lit(r.to_f64_lossy())
}

fn fdot<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (x, y)| acc + *x * *y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiKind {
    /// `φ'' = c·g` for the polynomial bump `g(s) = 140 s³(1−s)³` on `[1−δ, 1−δ/2]`.
    Smooth,
    /// `φ(t) = (t − (1−δ))₊ / δ`.
    PiecewiseLinear,
}

/// Convex bump `φ` with `φ = 0` on `[0, 1−δ]`, `φ(1) = 1`, strictly increasing
/// after `1−δ` and affine on `[1−δ/2, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpPhi<F> {
    delta: F,
    kind: PhiKind,
    /// Slope of the affine part.
    slope: F,
}

impl<F: Real> BumpPhi<F> {
    pub fn new(delta: F, kind: PhiKind) -> Result<Self> {
        if !(delta > F::zero() && delta < F::one()) {
            return Err(Error::Parameter(format!("δ = {delta:?} must lie in (0, 1)")));
        }
        let slope = match kind {
            PhiKind::Smooth => lit::<F>(4.0) / (lit::<F>(3.0) * delta),
            PhiKind::PiecewiseLinear => F::one() / delta,
        };
        Ok(Self { delta, kind, slope })
    }

    pub fn smooth(delta: F) -> Result<Self> {
        Self::new(delta, PhiKind::Smooth)
    }

    pub fn piecewise_linear(delta: F) -> Result<Self> {
        Self::new(delta, PhiKind::PiecewiseLinear)
    }

    pub fn delta(&self) -> F {
        self.delta
    }

    pub fn kind(&self) -> PhiKind {
        self.kind
    }

    /// Left end of the support, `1 − δ`.
    pub fn threshold(&self) -> F {
        F::one() - self.delta
    }

    fn half_width(&self) -> F {
        self.delta / lit(2.0)
    }

    pub fn value(&self, t: F) -> F {
        let a = self.threshold();
        if t <= a {
            return F::zero();
        }
        match self.kind {
            PhiKind::PiecewiseLinear => (t - a) * self.slope,
            PhiKind::Smooth => {
                let w = self.half_width();
                let s = (t - a) / w;
                if s >= F::one() {
                    self.slope * (t - F::one() + lit::<F>(0.75) * self.delta)
                } else {
                    // G2(s) = 7s⁵ − 14s⁶ + 10s⁷ − 2.5s⁸
                    let s5 = s.powi(5);
                    let g2 = s5 * (lit::<F>(7.0) + s * (lit::<F>(-14.0) + s * (lit::<F>(10.0) + s * lit(-2.5))));
                    self.slope * w * g2
                }
            }
        }
    }

    pub fn derivative(&self, t: F) -> F {
        let a = self.threshold();
        if t <= a {
            return F::zero();
        }
        match self.kind {
            PhiKind::PiecewiseLinear => self.slope,
            PhiKind::Smooth => {
                let s = (t - a) / self.half_width();
                if s >= F::one() {
                    self.slope
                } else {
                    // G1(s) = 35s⁴ − 84s⁵ + 70s⁶ − 20s⁷
                    let s4 = s.powi(4);
                    let g1 = s4 * (lit::<F>(35.0) + s * (lit::<F>(-84.0) + s * (lit::<F>(70.0) + s * lit(-20.0))));
                    self.slope * g1
                }
            }
        }
    }

    pub fn second_derivative(&self, t: F) -> F {
        let a = self.threshold();
        if t <= a || self.kind == PhiKind::PiecewiseLinear {
            return F::zero();
        }
        let w = self.half_width();
        let s = (t - a) / w;
        if s >= F::one() {
            return F::zero();
        }
        let u = s * (F::one() - s);
        self.slope / w * lit::<F>(140.0) * u * u * u
    }
}

/// `(Σ_j (a_j·x)^p)^{1/p}` over the functionals of a polyhedral norm, or the
/// polyhedral norm itself when no exponent is set.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothNorm<F> {
    rows: Vec<Vec<F>>,
    exponent: Option<u32>,
}

impl<F: Real> SmoothNorm<F> {
    /// Picks the smallest even `p` with `J^{1/p} ≤ 1+δ`, so that
    /// `max ≤ smooth ≤ (1+δ)·max`.
    pub fn new(rows: Vec<Vec<F>>, delta: F) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Representation("smoothing needs at least one functional".into()));
        }
        if !(delta > F::zero()) {
            return Err(Error::Parameter("smoothing width must be positive".into()));
        }
        let j = lit::<F>(rows.len() as f64);
        let step = delta.ln_1p();
        let mut p = if rows.len() == 1 {
            2
        } else {
            let raw = (j.ln() / step).ceil().to_u64().unwrap_or(u64::MAX);
            let even = raw + raw % 2;
            u32::try_from(even.max(2)).map_err(|_| Error::Parameter("smoothing exponent overflows".into()))?
        };
        while j.ln() > lit::<F>(f64::from(p)) * step {
            p += 2;
        }
        Ok(Self { rows, exponent: Some(p) })
    }

    /// No smoothing: the value is `max_j |a_j·x|`.
    pub fn identity(rows: Vec<Vec<F>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Representation("norm needs at least one functional".into()));
        }
        Ok(Self { rows, exponent: None })
    }

    pub fn exponent(&self) -> Option<u32> {
        self.exponent
    }

    pub fn rows(&self) -> &[Vec<F>] {
        &self.rows
    }

    /// Number of functional pairs `J`.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `J^{1/p}`, the worst ratio of smoothed to polyhedral value.
    pub fn sandwich_factor(&self) -> F {
        match self.exponent {
            Some(p) => lit::<F>(self.rows.len() as f64).powf(F::one() / lit(f64::from(p))),
            None => F::one(),
        }
    }

    /// The underlying polyhedral norm `max_j |a_j·x|`.
    pub fn polyhedral(&self, x: &[F]) -> F {
        self.rows
            .iter()
            .map(|r| fdot(r, x).abs())
            .fold(F::zero(), F::max)
    }

    pub fn value(&self, x: &[F]) -> F {
        let vals: Vec<F> = self.rows.iter().map(|r| fdot(r, x)).collect();
        let m = vals.iter().fold(F::zero(), |a, v| a.max(v.abs()));
        match self.exponent {
            _ if m == F::zero() => F::zero(),
            None => m,
            Some(p) => {
                let sum = vals.iter().fold(F::zero(), |acc, v| acc + (*v / m).powi(p as i32));
                m * sum.powf(F::one() / lit(f64::from(p)))
            }
        }
    }

    /// Value and gradient. At the origin, and on ridges of the identity
    /// smoother, the returned vector is a subgradient.
    pub fn value_and_gradient(&self, x: &[F]) -> (F, Vec<F>) {
        let dim = x.len();
        let vals: Vec<F> = self.rows.iter().map(|r| fdot(r, x)).collect();
        let (arg, m) = vals
            .iter()
            .enumerate()
            .fold((0, F::zero()), |(bi, bm), (i, v)| if v.abs() > bm { (i, v.abs()) } else { (bi, bm) });
        if m == F::zero() {
            return (F::zero(), vec![F::zero(); dim]);
        }
        match self.exponent {
            None => {
                let sign = vals[arg].signum();
                (m, self.rows[arg].iter().map(|a| *a * sign).collect())
            }
            Some(p) => {
                let us: Vec<F> = vals.iter().map(|v| *v / m).collect();
                let sum = us.iter().fold(F::zero(), |acc, u| acc + u.powi(p as i32));
                let inv_p = F::one() / lit(f64::from(p));
                let value = m * sum.powf(inv_p);
                let scale = sum.powf(inv_p - F::one());
                let mut g = vec![F::zero(); dim];
                for (u, row) in us.iter().zip(&self.rows) {
                    let w = u.powi(p as i32 - 1);
                    if w == F::zero() {
                        continue;
                    }
                    for (gi, a) in g.iter_mut().zip(row) {
                        *gi = *gi + w * *a;
                    }
                }
                (value, g.into_iter().map(|gi| gi * scale).collect())
            }
        }
    }
}

/// One level of the glued family.
#[derive(Debug, Clone)]
pub struct GlueLevel<F> {
    pub phi: BumpPhi<F>,
    pub norm: SmoothNorm<F>,
}

/// Root-finder report for one evaluation of the final norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics<F> {
    /// Initial bracket `[|||x|||_∞, (1+δ₀)/(1−δ₀)·|||x|||_∞]`.
    pub bracket: (F, F),
    pub bisection_steps: usize,
    pub newton_steps: usize,
    /// `|Φ(x/ρ) − 1|` at the returned root.
    pub residual: F,
    /// `∂Ψ/∂ρ` at the root; negative whenever a root exists.
    pub d2psi: F,
}

impl<F> Diagnostics<F> {
    pub fn iterations(&self) -> usize {
        self.bisection_steps + self.newton_steps
    }
}

/// Final-norm value with its gradient and root-finder report.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<F> {
    pub value: F,
    /// `None` at the origin.
    pub gradient: Option<Vec<F>>,
    /// Levels with `φ_n > 0` at `x/ρ`.
    pub active_levels: Vec<usize>,
    pub diagnostics: Option<Diagnostics<F>>,
}

/// `Φ(x)` together with the levels that contribute to it.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiSum<F> {
    pub value: F,
    pub active: Vec<usize>,
}

/// Levels that can contribute to `Φ` near a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSet<F> {
    /// Smallest `n₀ ≥ 1` with `‖P^n x‖_0 ≤ (c/2)‖x‖_0` for all `n ≥ n₀`; `None`
    /// at the origin, where `Φ` vanishes on the whole ball.
    pub n0: Option<usize>,
    /// Levels not certified to vanish on the neighbourhood: `0..=min(n₀+2, L)`.
    pub window: Vec<usize>,
    /// Levels with `φ_n > 0` at the point itself.
    pub active: Vec<usize>,
    /// Radius of the certified ball, measured in `‖·‖_0`.
    pub radius: F,
    /// Vanishing bound `(1+δ_n)·∏(head ratios)·(1+ε)(1+δ_{n₀})` for each level
    /// past the window, paired with its level; each is at most `1 − δ_n`.
    pub certified: Vec<(usize, Rational)>,
}

/// Functionals on which the final norm depends near a point.
#[derive(Debug, Clone, PartialEq)]
pub struct LfcWitness<F> {
    /// `(level, functional)` pairs over the window levels.
    pub functionals: Vec<(usize, Vec<F>)>,
    pub levels: Vec<usize>,
    /// Radius in `‖·‖_0`.
    pub radius: F,
}

/// The smoothed and glued family of rescaled norms `|||·|||_0, …, |||·|||_L`.
#[derive(Debug, Clone)]
pub struct GlueFamily<F> {
    dim: usize,
    levels: Vec<GlueLevel<F>>,
    plan: ParameterPlan,
    kind: PhiKind,
    /// `|||·|||_n` functionals, exact.
    exact_rows: Vec<Vec<Vec<Rational>>>,
    seed: ConvexBody<Rational>,
    seed_rows: Vec<Vec<F>>,
    seed_basis_constant: Rational,
    /// `max_{‖v‖_0 ≤ 1} |||v|||_n`.
    lipschitz: Vec<F>,
    /// `½∏(1+λ_i)^{-1}`.
    threshold: Rational,
    head_ratios: Vec<Rational>,
}

impl<F: Real> GlueFamily<F> {
    /// Smooth family: p-power smoothing and polynomial bumps.
    pub fn smooth(tower: &RenormTower<Rational>, plan: &ParameterPlan) -> Result<Self> {
        Self::build(tower, plan, PhiKind::Smooth)
    }

    /// Polyhedral family: identity smoother and piecewise-linear bumps.
    pub fn polyhedral(tower: &RenormTower<Rational>, plan: &ParameterPlan) -> Result<Self> {
        Self::build(tower, plan, PhiKind::PiecewiseLinear)
    }

    pub fn build(tower: &RenormTower<Rational>, plan: &ParameterPlan, kind: PhiKind) -> Result<Self> {
        let levels = tower.levels();
        if plan.levels() != levels {
            return Err(Error::Parameter(format!(
                "plan has {} levels, tower has {levels}",
                plan.levels()
            )));
        }
        for n in 1..=levels {
            if plan.lambda[n - 1] != *tower.lambda(n) || plan.gamma[n - 1] != *tower.gamma(n) {
                return Err(Error::Parameter(format!("plan and tower disagree at level {n}")));
            }
        }
        plan.verify()?;
        let dim = tower.dim();
        let mut exact_rows = Vec::with_capacity(levels + 1);
        let mut glue = Vec::with_capacity(levels + 1);
        for n in 0..=levels {
            let s = tower.scale(n);
            let rows: Vec<Vec<Rational>> = tower
                .body(n)
                .facets()
                .iter()
                .map(|f| f.coeffs().iter().map(|c| c * s).collect())
                .collect();
            let frows: Vec<Vec<F>> = rows.iter().map(|r| r.iter().map(to_real).collect()).collect();
            let delta = to_real::<F>(&plan.delta[n]);
            let norm = match kind {
                PhiKind::Smooth => SmoothNorm::new(frows, delta)?,
                PhiKind::PiecewiseLinear => SmoothNorm::identity(frows)?,
            };
            glue.push(GlueLevel { phi: BumpPhi::new(delta, kind)?, norm });
            exact_rows.push(rows);
        }
        let seed = tower.body(0).clone();
        let seed_rows = seed
            .facets()
            .iter()
            .map(|f| f.coeffs().iter().map(to_real).collect())
            .collect();
        let lipschitz = exact_rows
            .iter()
            .map(|rows| {
                let best = seed
                    .vertices()
                    .iter()
                    .map(|v| rows.iter().map(|r| dot(r, v).abs()).max().unwrap_or_else(Rational::zero))
                    .max()
                    .unwrap_or_else(Rational::zero);
                to_real::<F>(&best)
            })
            .collect();
        Ok(Self {
            dim,
            levels: glue,
            plan: plan.clone(),
            kind,
            exact_rows,
            seed_basis_constant: tower.basis_constant(0).clone(),
            seed,
            seed_rows,
            lipschitz,
            threshold: tower.uniform_threshold(),
            head_ratios: (0..=levels)
                .map(|n| if n == 0 { Rational::one() } else { tower.head_ratio(n) })
                .collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Index `L` of the last level.
    pub fn top(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> &GlueLevel<F> {
        &self.levels[n]
    }

    pub fn levels(&self) -> &[GlueLevel<F>] {
        &self.levels
    }

    pub fn kind(&self) -> PhiKind {
        self.kind
    }

    pub fn plan(&self) -> &ParameterPlan {
        &self.plan
    }

    pub fn delta(&self, n: usize) -> F {
        self.levels[n].phi.delta()
    }

    /// Exact functionals of `|||·|||_n`.
    pub fn exact_rows(&self, n: usize) -> &[Vec<Rational>] {
        &self.exact_rows[n]
    }

    fn check_dim(&self, x: &[F]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite input".into()));
        }
        Ok(())
    }

    /// `‖x‖_0`.
    pub fn seed_norm(&self, x: &[F]) -> F {
        self.seed_rows.iter().map(|r| fdot(r, x).abs()).fold(F::zero(), F::max)
    }

    /// `|||x|||_n` for every level.
    pub fn level_norms(&self, x: &[F]) -> Vec<F> {
        self.levels.iter().map(|l| l.norm.polyhedral(x)).collect()
    }

    /// `|||x|||_∞`.
    pub fn sup_norm(&self, x: &[F]) -> F {
        self.level_norms(x).into_iter().fold(F::zero(), F::max)
    }

    /// `s_n(x)` for every level.
    pub fn smooth_norms(&self, x: &[F]) -> Vec<F> {
        self.levels.iter().map(|l| l.norm.value(x)).collect()
    }

    pub fn phi_sum(&self, x: &[F]) -> Result<PhiSum<F>> {
        self.check_dim(x)?;
        Ok(self.phi_of_values(&self.smooth_norms(x), F::one()))
    }

    /// `Σ φ_n(s_n/ρ)` over all levels.
    fn phi_of_values(&self, s: &[F], rho: F) -> PhiSum<F> {
        let mut value = F::zero();
        let mut active = Vec::new();
        for (n, (l, sn)) in self.levels.iter().zip(s).enumerate() {
            let v = l.phi.value(*sn / rho);
            if v > F::zero() {
                active.push(n);
                value = value + v;
            }
        }
        PhiSum { value, active }
    }

    fn psi(&self, s: &[F], used: &[usize], rho: F) -> (F, F) {
        let mut value = -F::one();
        let mut slope = F::zero();
        for &n in used {
            let t = s[n] / rho;
            let phi = &self.levels[n].phi;
            value = value + phi.value(t);
            slope = slope - phi.derivative(t) * t / rho;
        }
        (value, slope)
    }

    /// The final norm `|||x|||`.
    pub fn final_gauge(&self, x: &[F]) -> Result<F> {
        Ok(self.final_gauge_with_diagnostics(x)?.0)
    }

    pub fn final_gauge_with_diagnostics(&self, x: &[F]) -> Result<(F, Option<Diagnostics<F>>)> {
        self.check_dim(x)?;
        let used: Vec<usize> = (0..self.levels.len()).collect();
        let s = self.smooth_norms(x);
        self.solve(x, &s, &used)
    }

    /// Final norm computed from the levels in `used` only.
    pub fn final_gauge_restricted(&self, x: &[F], used: &[usize]) -> Result<F> {
        self.check_dim(x)?;
        if used.is_empty() || used.iter().any(|&n| n > self.top()) {
            return Err(Error::Parameter("invalid level subset".into()));
        }
        let s = self.smooth_norms(x);
        Ok(self.solve(x, &s, used)?.0)
    }

    fn solve(&self, x: &[F], s: &[F], used: &[usize]) -> Result<(F, Option<Diagnostics<F>>)> {
        let lo0 = used
            .iter()
            .map(|&n| self.levels[n].norm.polyhedral(x))
            .fold(F::zero(), F::max);
        if lo0 == F::zero() {
            return Ok((F::zero(), None));
        }
        let d0 = self.delta(0);
        let hi0 = lo0 * (F::one() + d0) / (F::one() - d0);
        let eps = F::epsilon();
        let width_tol = lit::<F>(1e-10).max(eps * lit(64.0));
        let step_tol = lit::<F>(1e-13).max(eps * lit(8.0));
        let slack = lit::<F>(1e-12).max(eps * lit(64.0));

        let (f_lo, _) = self.psi(s, used, lo0);
        if f_lo < -slack {
            return Err(Error::invariant(format!(
                "Φ(x/|||x|||_∞) − 1 = {f_lo:?} < 0: bracket lower end violated"
            )));
        }
        let (f_hi, _) = self.psi(s, used, hi0);
        if f_hi > F::zero() {
            return Err(Error::invariant(format!(
                "Φ at the bracket upper end exceeds 1 by {f_hi:?}"
            )));
        }
        let (mut lo, mut hi) = (lo0, hi0);
        let mut bisection_steps = 0;
        while hi - lo > width_tol * hi && bisection_steps < 200 {
            let mid = (lo + hi) / lit(2.0);
            let (f, _) = self.psi(s, used, mid);
            if f > F::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
            bisection_steps += 1;
        }
        let mut rho = (lo + hi) / lit(2.0);
        let mut newton_steps = 0;
        let budget = 200usize.saturating_sub(bisection_steps);
        while newton_steps < budget {
            let (f, fp) = self.psi(s, used, rho);
            newton_steps += 1;
            if f == F::zero() {
                break;
            }
            if f > F::zero() {
                lo = lo.max(rho);
            } else {
                hi = hi.min(rho);
            }
            let mut next = if fp < F::zero() { rho - f / fp } else { (lo + hi) / lit(2.0) };
            if !(next > lo && next < hi) {
                next = (lo + hi) / lit(2.0);
            }
            let done = (next - rho).abs() <= step_tol * rho;
            rho = next;
            if done {
                break;
            }
        }
        let (f, fp) = self.psi(s, used, rho);
        if !(fp < F::zero()) {
            return Err(Error::invariant("∂Ψ/∂ρ vanishes at the root"));
        }
        Ok((
            rho,
            Some(Diagnostics {
                bracket: (lo0, hi0),
                bisection_steps,
                newton_steps,
                residual: f.abs(),
                d2psi: fp,
            }),
        ))
    }

    /// `∇|||x||| = ρ·Σφ_n'(t_n)∇s_n(x) / Σφ_n'(t_n)s_n(x)` with `t_n = s_n(x)/ρ`,
    /// i.e. `−D₁Ψ/D₂Ψ` at the root.
    pub fn final_gradient(&self, x: &[F]) -> Result<Vec<F>> {
        self.evaluate(x)?
            .gradient
            .ok_or_else(|| Error::Domain("gradient is undefined at the origin".into()))
    }

    /// Value, gradient, active levels and root-finder report.
    pub fn evaluate(&self, x: &[F]) -> Result<Evaluation<F>> {
        self.check_dim(x)?;
        let used: Vec<usize> = (0..self.levels.len()).collect();
        let parts: Vec<(F, Vec<F>)> = self.levels.iter().map(|l| l.norm.value_and_gradient(x)).collect();
        let s: Vec<F> = parts.iter().map(|p| p.0).collect();
        let (rho, diagnostics) = self.solve(x, &s, &used)?;
        let Some(diag) = diagnostics else {
            return Ok(Evaluation { value: F::zero(), gradient: None, active_levels: Vec::new(), diagnostics: None });
        };
        let mut num = vec![F::zero(); self.dim];
        let mut den = F::zero();
        let mut active = Vec::new();
        for (n, ((sn, grad), l)) in parts.iter().zip(&self.levels).enumerate() {
            let d = l.phi.derivative(*sn / rho);
            if d == F::zero() {
                continue;
            }
            if l.phi.value(*sn / rho) > F::zero() {
                active.push(n);
            }
            den = den + d * *sn;
            for (acc, g) in num.iter_mut().zip(grad) {
                *acc = *acc + d * *g;
            }
        }
        if !(den > F::zero()) {
            return Err(Error::invariant("D₂Ψ = 0 at the root"));
        }
        let gradient = num.into_iter().map(|v| rho * v / den).collect();
        Ok(Evaluation { value: rho, gradient: Some(gradient), active_levels: active, diagnostics: Some(diag) })
    }

    /// Levels that can be nonzero near `x`, with a certified neighbourhood.
    ///
    /// Requires `Φ(x) < 2`. The radius `ε‖x‖_0` uses
    /// `ε = min(c/(2(K+1+c)), δ_{n₀}/(1−δ_{n₀}))`; the factor `K+1` bounds the
    /// tail projection `I − P_n`. Vanishing past `n₀+2` is re-checked exactly.
    pub fn active_set(&self, x: &[F]) -> Result<ActiveSet<F>> {
        self.check_dim(x)?;
        let phi = self.phi_sum(x)?;
        if phi.value >= lit(2.0) {
            return Err(Error::Domain(format!("Φ(x) = {:?} is not below 2", phi.value)));
        }
        if x.iter().all(|v| *v == F::zero()) {
            let d0 = self.delta(0);
            let quiet = (F::one() - d0) / (F::one() + d0);
            let lip_sup = self.lipschitz.iter().copied().fold(F::zero(), F::max);
            return Ok(ActiveSet {
                n0: None,
                window: Vec::new(),
                active: Vec::new(),
                radius: quiet / lip_sup,
                certified: Vec::new(),
            });
        }
        let top = self.top();
        let c = self.threshold.clone();
        let half_c = to_real::<F>(&c) / lit(2.0);
        let norm0 = self.seed_norm(x);
        let mut n0 = self.dim.max(1);
        for n in (1..self.dim).rev() {
            let tail: Vec<F> = x.iter().enumerate().map(|(i, v)| if i < n { F::zero() } else { *v }).collect();
            if self.seed_norm(&tail) <= half_c * norm0 {
                n0 = n;
            } else {
                break;
            }
        }
        let m = n0.min(top);
        let k = &self.seed_basis_constant;
        let eps_a = &c / (Rational::from_integer(2.into()) * (k + Rational::one() + &c));
        let dm = &self.plan.delta[m];
        let eps_b = dm / (Rational::one() - dm);
        let eps_exact = eps_a.min(eps_b);
        // round down to a float, then take that float exactly
        let mut eps_f = to_real::<F>(&eps_exact);
        let mut eps_q = rational_from_f64(eps_f.to_f64().unwrap_or(0.0))?;
        while eps_q > eps_exact {
            eps_f = eps_f * (F::one() - F::epsilon());
            eps_q = rational_from_f64(eps_f.to_f64().unwrap_or(0.0))?;
        }
        let mut certified = Vec::new();
        for n in (n0 + 2)..=top {
            let mut bound = (Rational::one() + &self.plan.delta[n])
                * (Rational::one() + &eps_q)
                * (Rational::one() + dm);
            for i in (m + 1)..=n {
                bound *= &self.head_ratios[i];
            }
            if bound > Rational::one() - &self.plan.delta[n] {
                return Err(Error::invariant(format!(
                    "cannot certify that level {n} vanishes near x"
                ))
                .at_level(n));
            }
            certified.push((n, bound));
        }
        let level_norm = self.levels[m].norm.polyhedral(x);
        let radius = (eps_f * norm0).min(eps_f * level_norm / self.lipschitz[m]);
        Ok(ActiveSet {
            n0: Some(n0),
            window: (0..=(n0 + 2).min(top)).collect(),
            active: phi.active,
            radius,
            certified,
        })
    }

    /// Functionals (over the window levels at `x/|||x|||`) on which the final
    /// norm depends in a ball around `x`.
    pub fn lfc_witness(&self, x: &[F]) -> Result<LfcWitness<F>> {
        self.check_dim(x)?;
        let rho = self.final_gauge(x)?;
        if rho == F::zero() {
            return Err(Error::Domain("no witness at the origin".into()));
        }
        let z: Vec<F> = x.iter().map(|v| *v / rho).collect();
        let set = self.active_set(&z)?;
        let d0 = self.delta(0);
        let lip_rho = (F::one() + d0) / (F::one() - d0) * self.lipschitz.iter().copied().fold(F::zero(), F::max);
        let norm0 = self.seed_norm(x);
        let r = (set.radius * rho / (lit::<F>(2.0) * (F::one() + lip_rho * norm0 / rho)))
            .min(rho / (lit::<F>(2.0) * lip_rho));
        let functionals = set
            .window
            .iter()
            .flat_map(|&n| self.levels[n].norm.rows().iter().map(move |r| (n, r.clone())))
            .collect();
        Ok(LfcWitness { functionals, levels: set.window, radius: r })
    }
}

/// Exact final body of the polyhedral family.
#[derive(Debug, Clone)]
pub struct PolyhedralFinal {
    pub body: ConvexBody<Rational>,
    pub rounds: usize,
    pub cuts: usize,
}

/// Worst exact margins of `|ρ(x) − ‖x‖_0| ≤ ε‖x‖_0` over section vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct TailBoundCheck {
    pub level: usize,
    pub vertices: usize,
    /// `min (1+ε)‖v‖_0 − ρ(v)` over checked vertices.
    pub upper_margin: Rational,
    /// `min ρ(v) − (1−ε)‖v‖_0` over checked vertices.
    pub lower_margin: Rational,
}

impl TailBoundCheck {
    pub fn holds(&self) -> bool {
        !self.upper_margin.is_negative() && !self.lower_margin.is_negative()
    }
}

impl<F: Real> GlueFamily<F> {
    fn require_polyhedral(&self) -> Result<()> {
        if self.kind != PhiKind::PiecewiseLinear {
            return Err(Error::Parameter(
                "exact assembly needs the identity smoother and piecewise-linear bumps".into(),
            ));
        }
        Ok(())
    }

    fn exact_level_norm(&self, n: usize, x: &[Rational]) -> Rational {
        self.exact_rows[n]
            .iter()
            .map(|r| dot(r, x).abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// `Φ(x) = Σ (|||x|||_n − 1 + δ_n)₊ / δ_n`, exactly.
    pub fn exact_phi(&self, x: &[Rational]) -> Result<Rational> {
        self.require_polyhedral()?;
        let one = Rational::one();
        Ok((0..self.levels.len()).fold(Rational::zero(), |acc, n| {
            let d = &self.plan.delta[n];
            let v = (self.exact_level_norm(n, x) - &one + d) / d;
            if v.is_positive() {
                acc + v
            } else {
                acc
            }
        }))
    }

    /// Exact final gauge from the breakpoints of `t ↦ Φ(t·x)`.
    ///
    /// On the piece where the level set `A` is switched on,
    /// `1/ρ = (1 + Σ_A (1−δ_n)/δ_n) / Σ_A (|||x|||_n/δ_n)`.
    pub fn exact_gauge(&self, x: &[Rational]) -> Result<Rational> {
        self.require_polyhedral()?;
        let one = Rational::one();
        let mut pts: Vec<(Rational, usize)> = Vec::new();
        let ms: Vec<Rational> = (0..self.levels.len()).map(|n| self.exact_level_norm(n, x)).collect();
        for (n, m) in ms.iter().enumerate() {
            if m.is_positive() {
                pts.push(((&one - &self.plan.delta[n]) / m, n));
            }
        }
        if pts.is_empty() {
            return Ok(Rational::zero());
        }
        pts.sort();
        let mut num = one.clone();
        let mut den = Rational::zero();
        for (i, (_, n)) in pts.iter().enumerate() {
            let d = &self.plan.delta[*n];
            num += (&one - d) / d;
            den += &ms[*n] / d;
            let t = &num / &den;
            let next_break = pts.get(i + 1).map(|p| &p.0);
            if next_break.map_or(true, |b| t <= *b) {
                return Ok(one / t);
            }
        }
        Err(Error::invariant("no breakpoint piece contains the root"))
    }

    /// Assembles `{Φ ≤ 1}` exactly by adding violated affine pieces of `Φ`
    /// to `{|||·|||_∞ ≤ 1}` until every vertex satisfies `Φ ≤ 1`.
    pub fn polyhedral_final(&self) -> Result<PolyhedralFinal> {
        self.require_polyhedral()?;
        let one = Rational::one();
        let mut functionals: Vec<Functional<Rational>> = self
            .exact_rows
            .iter()
            .flatten()
            .map(|r| Functional::new(r.clone()))
            .collect::<Result<_>>()?;
        let mut body = ConvexBody::from_hrep(self.dim, functionals.clone())?;
        let mut cuts = 0;
        for round in 1..=10_000 {
            let mut fresh = Vec::new();
            for v in body.vertices() {
                if self.exact_phi(v)? <= one {
                    continue;
                }
                let mut coeffs = vec![Rational::zero(); self.dim];
                let mut rhs = one.clone();
                for n in 0..self.levels.len() {
                    let d = &self.plan.delta[n];
                    let (best, val) = self.exact_rows[n]
                        .iter()
                        .map(|r| (r, dot(r, v)))
                        .max_by(|a, b| a.1.abs().cmp(&b.1.abs()))
                        .expect("level has functionals");
                    if val.abs() <= &one - d {
                        continue;
                    }
                    let sign = if val.is_negative() { -one.clone() } else { one.clone() };
                    for (c, a) in coeffs.iter_mut().zip(best) {
                        *c += &sign * a / d;
                    }
                    rhs += (&one - d) / d;
                }
                let cut: Vec<Rational> = coeffs.iter().map(|c| c / &rhs).collect();
                fresh.push(Functional::new(cut)?);
            }
            if fresh.is_empty() {
                return Ok(PolyhedralFinal { body, rounds: round, cuts });
            }
            cuts += fresh.len();
            functionals.extend(fresh);
            body = ConvexBody::from_hrep(self.dim, functionals.clone())?;
            functionals = body.facets().to_vec();
        }
        Err(Error::invariant("polyhedral assembly did not terminate"))
    }

    /// Exact check of `|ρ(x) − ‖x‖_0| ≤ ε_N‖x‖_0` on `X^N` through the vertices
    /// of both tail sections (final body and seed ball).
    pub fn certify_tail_bound(&self, fin: &ConvexBody<Rational>, big_n: usize) -> Result<TailBoundCheck> {
        self.require_polyhedral()?;
        if big_n >= self.dim {
            return Err(Error::DegenerateSection { k: big_n, dim: self.dim });
        }
        let eps = &self.plan.epsilon[big_n.min(self.plan.epsilon.len() - 1)];
        let one = Rational::one();
        let mut pts = fin.section_vertices(big_n)?;
        pts.extend(self.seed.section_vertices(big_n)?);
        let mut upper: Option<Rational> = None;
        let mut lower: Option<Rational> = None;
        for v in &pts {
            let rho = fin.gauge(v);
            let base = self.seed.gauge(v);
            let u = (&one + eps) * &base - &rho;
            let l = &rho - (&one - eps) * &base;
            upper = Some(upper.map_or(u.clone(), |a| a.min(u)));
            lower = Some(lower.map_or(l.clone(), |a| a.min(l)));
        }
        Ok(TailBoundCheck {
            level: big_n,
            vertices: pts.len(),
            upper_margin: upper.unwrap_or_else(Rational::zero),
            lower_margin: lower.unwrap_or_else(Rational::zero),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_shape() {
        for kind in [PhiKind::Smooth, PhiKind::PiecewiseLinear] {
            let phi = BumpPhi::new(0.2f64, kind).unwrap();
            assert_eq!(phi.value(0.0), 0.0);
            assert_eq!(phi.value(0.8), 0.0);
            assert_eq!(phi.derivative(0.8), 0.0);
            assert!((phi.value(1.0) - 1.0).abs() < 1e-15);
            assert!(phi.value(1.2) >= 2.0 - 1e-15);
        }
        assert!(BumpPhi::smooth(0.0f64).is_err());
        assert!(BumpPhi::smooth(1.0f64).is_err());
    }

    #[test]
    fn bump_derivatives_match_differences() {
        let phi = BumpPhi::smooth(0.3f64).unwrap();
        let h = 1e-6;
        for i in 1..60 {
            let t = 0.65 + 0.01 * f64::from(i);
            let d = (phi.value(t + h) - phi.value(t - h)) / (2.0 * h);
            assert!((d - phi.derivative(t)).abs() < 1e-6, "t = {t}");
            let dd = (phi.derivative(t + h) - phi.derivative(t - h)) / (2.0 * h);
            assert!((dd - phi.second_derivative(t)).abs() < 1e-4, "t = {t}");
        }
    }

    #[test]
    fn p_norm_rule() {
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let s = SmoothNorm::new(rows, 0.1).unwrap();
        assert_eq!(s.exponent(), Some(8));
        assert!((s.value(&[1.0, 1.0]) - 2f64.powf(0.125)).abs() < 1e-15);
        assert_eq!(s.value(&[1.0, 0.0]), 1.0);
        let single = SmoothNorm::new(vec![vec![2.0, -1.0]], 0.1).unwrap();
        assert_eq!(single.value(&[1.0, 3.0]), 1.0);
        assert!(SmoothNorm::<f64>::new(Vec::new(), 0.1).is_err());
    }

    #[test]
    fn p_norm_gradient() {
        let rows = vec![vec![1.0, 0.5], vec![0.0, 1.0], vec![0.7, -0.2]];
        let s = SmoothNorm::new(rows, 0.05).unwrap();
        let x = [0.3, -0.8];
        let (_, g) = s.value_and_gradient(&x);
        let h = 1e-6;
        for i in 0..2 {
            let mut a = x;
            let mut b = x;
            a[i] += h;
            b[i] -= h;
            let fd = (s.value(&a) - s.value(&b)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6);
        }
    }
}
