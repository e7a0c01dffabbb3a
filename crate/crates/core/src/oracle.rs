//! Numeric gauges known only through evaluation, and the gauge algebra on them.
//!
//! Intersection of bodies is the pointwise maximum of gauges. The convex hull
//! of a union is the infimal convolution
//! `μ_C(x) = inf { Σ_i μ_i(v_i) : Σ_i v_i = x }`, computed here by a cutting
//! plane method: every subgradient `g` of a gauge at any point is a global
//! minorant `g·z ≤ μ(z)`, so the model LP bounds the infimum from below while
//! the decomposition it returns bounds it from above.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::projection::Projection;
use crate::scalar::{Rational, Scalar};

/// Relative allowance added to both ends of every bracket for floating rounding.
const ROUNDING: f64 = 1e-12;

/// Value bracket `lower ≤ μ(x) ≤ upper` and a minorant `g` with
/// `g·z ≤ μ(z)` for every `z` and `g·x ≈ lower`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleValue {
    pub upper: f64,
    pub lower: f64,
    pub subgradient: Vec<f64>,
}

impl OracleValue {
    fn exact(value: f64, subgradient: Vec<f64>) -> Self {
        Self { upper: value, lower: value, subgradient }
    }

    /// Best estimate of the gauge: the value of a feasible decomposition.
    pub fn value(&self) -> f64 {
        self.upper
    }

    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

/// A gauge of a bounded symmetric convex body with nonempty interior.
///
/// Implementations must be positively homogeneous, even and convex, and pure.
pub trait GaugeOracle: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> Result<OracleValue>;

    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval(x)?.upper)
    }
}

pub type Oracle = Arc<dyn GaugeOracle>;

fn check_len(dim: usize, x: &[f64]) -> Result<()> {
    if x.len() != dim {
        return Err(Error::Dimension { expected: dim, got: x.len() });
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gauge of a polytope from its facet functionals.
#[derive(Debug, Clone)]
pub struct PolytopeGauge {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

impl PolytopeGauge {
    pub fn new(dim: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Representation("polytope gauge needs facet rows of the right length".into()));
        }
        Ok(Self { dim, rows })
    }

    pub fn from_body(body: &ConvexBody<Rational>) -> Self {
        let rows = body
            .facets()
            .iter()
            .map(|f| f.coeffs().iter().map(|c| c.to_f64_lossy()).collect())
            .collect();
        Self { dim: body.dim(), rows }
    }
}

impl GaugeOracle for PolytopeGauge {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Result<OracleValue> {
        check_len(self.dim, x)?;
        let mut best = (0.0, vec![0.0; self.dim]);
        for r in &self.rows {
            let v = dot(r, x);
            if v.abs() > best.0 {
                let sign = v.signum();
                best = (v.abs(), r.iter().map(|a| a * sign).collect());
            }
        }
        Ok(OracleValue::exact(best.0, best.1))
    }
}

/// `‖x‖₂ / radius`.
#[derive(Debug, Clone)]
pub struct EuclideanGauge {
    dim: usize,
    radius: f64,
}

impl EuclideanGauge {
    pub fn new(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 || !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Parameter("Euclidean ball needs dim ≥ 1 and a positive radius".into()));
        }
        Ok(Self { dim, radius })
    }

    pub fn unit(dim: usize) -> Self {
        Self { dim, radius: 1.0 }
    }
}

impl GaugeOracle for EuclideanGauge {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Result<OracleValue> {
        check_len(self.dim, x)?;
        let n = dot(x, x).sqrt();
        let g = if n > 0.0 {
            x.iter().map(|v| v / (n * self.radius)).collect()
        } else {
            vec![0.0; self.dim]
        };
        Ok(OracleValue::exact(n / self.radius, g))
    }
}

/// Gauge of `s·A`, i.e. `μ_A / s`.
#[derive(Debug, Clone)]
pub struct ScaledGauge {
    inner: Oracle,
    factor: f64,
}

impl ScaledGauge {
    pub fn new(inner: Oracle, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::Parameter("scale factor must be positive".into()));
        }
        Ok(Self { inner, factor })
    }
}

impl GaugeOracle for ScaledGauge {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &[f64]) -> Result<OracleValue> {
        let v = self.inner.eval(x)?;
        Ok(OracleValue {
            upper: v.upper / self.factor,
            lower: v.lower / self.factor,
            subgradient: v.subgradient.iter().map(|g| g / self.factor).collect(),
        })
    }
}

/// `μ(P^k x) / R`, the gauge of the slab `{‖P^k x‖ ≤ R}`. Not a body gauge on
/// its own (it vanishes on `X_k`); combine it with [`max_gauge`].
#[derive(Debug, Clone)]
pub struct TailGauge {
    inner: Oracle,
    k: usize,
    radius: f64,
}

impl TailGauge {
    pub fn new(inner: Oracle, k: usize, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || k > inner.dim() {
            return Err(Error::Parameter("slab needs R > 0 and k ≤ dim".into()));
        }
        Ok(Self { inner, k, radius })
    }
}

impl GaugeOracle for TailGauge {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &[f64]) -> Result<OracleValue> {
        check_len(self.dim(), x)?;
        let p = Projection::new(self.k);
        let v = self.inner.eval(&p.tail(x))?;
        Ok(OracleValue {
            upper: v.upper / self.radius,
            lower: v.lower / self.radius,
            subgradient: p.tail(&v.subgradient).iter().map(|g| g / self.radius).collect(),
        })
    }
}

/// Pointwise maximum: the gauge of the intersection.
#[derive(Debug, Clone)]
pub struct MaxGauge {
    parts: Vec<Oracle>,
}

impl GaugeOracle for MaxGauge {
    fn dim(&self) -> usize {
        self.parts[0].dim()
    }

    fn eval(&self, x: &[f64]) -> Result<OracleValue> {
        let mut best: Option<OracleValue> = None;
        let mut upper = f64::NEG_INFINITY;
        for p in &self.parts {
            let v = p.eval(x)?;
            upper = upper.max(v.upper);
            if best.as_ref().map_or(true, |b| v.lower > b.lower) {
                best = Some(v);
            }
        }
        let best = best.expect("at least one part");
        Ok(OracleValue { upper, lower: best.lower, subgradient: best.subgradient })
    }
}

pub fn max_gauge(a: Oracle, b: Oracle) -> Result<Oracle> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension { expected: a.dim(), got: b.dim() });
    }
    Ok(Arc::new(MaxGauge { parts: vec![a, b] }))
}

/// Component of an infimal convolution; with `tail = Some(k)` its summand is
/// confined to `X^k` (the body is the section `X^k ∩ A`, padded by zeros).
#[derive(Debug, Clone)]
pub struct Component {
    pub gauge: Oracle,
    pub tail: Option<usize>,
}

impl Component {
    pub fn full(gauge: Oracle) -> Self {
        Self { gauge, tail: None }
    }

    pub fn section(gauge: Oracle, k: usize) -> Self {
        Self { gauge, tail: Some(k) }
    }

    fn first_free(&self) -> usize {
        self.tail.unwrap_or(0)
    }
}

/// Settings of the cutting-plane solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfconvSettings {
    /// Target relative gap.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for InfconvSettings {
    fn default() -> Self {
        Self { tol: 1e-9, max_iterations: 400 }
    }
}

/// Infimal convolution of gauges: the gauge of the convex hull of the union.
#[derive(Debug)]
pub struct Infconv {
    dim: usize,
    parts: Vec<Component>,
    settings: InfconvSettings,
}

impl Infconv {
    pub fn new(parts: Vec<Component>, settings: InfconvSettings) -> Result<Self> {
        let Some(first) = parts.first() else {
            return Err(Error::Parameter("infimal convolution of nothing".into()));
        };
        let dim = first.gauge.dim();
        if parts.iter().any(|p| p.gauge.dim() != dim || p.tail.is_some_and(|k| k >= dim)) {
            return Err(Error::Parameter("components disagree on dimension or mask".into()));
        }
        if parts.iter().all(|p| p.tail.is_some()) {
            return Err(Error::Parameter("at least one component must be full-dimensional".into()));
        }
        if !(settings.tol > 0.0) {
            return Err(Error::Parameter("tolerance must be positive".into()));
        }
        Ok(Self { dim, parts, settings })
    }

    fn solve(&self, x: &[f64]) -> Result<OracleValue> {
        check_len(self.dim, x)?;
        if x.iter().all(|v| *v == 0.0) {
            return Ok(OracleValue::exact(0.0, vec![0.0; self.dim]));
        }
        let m = self.parts.len();
        let mut cuts: Vec<(usize, Vec<f64>)> = Vec::new();
        let mut pending: Vec<usize> = Vec::new();
        let add_cut = |cuts: &mut Vec<(usize, Vec<f64>)>, pending: &mut Vec<usize>, i: usize, g: Vec<f64>| {
            if cuts.iter().any(|c| c.0 == i && c.1 == g) {
                false
            } else {
                pending.push(cuts.len());
                cuts.push((i, g));
                true
            }
        };

        // every component taking the whole (admissible part of the) vector
        let mut best: Option<(f64, f64, Vec<Vec<f64>>)> = None;
        for i in 0..m {
            let mut pts = vec![vec![0.0; self.dim]; m];
            pts[i] = Projection::new(self.parts[i].first_free()).tail(x);
            if pts[i].iter().all(|t| *t == 0.0) {
                continue;
            }
            let v = self.parts[i].gauge.eval(&pts[i])?;
            add_cut(&mut cuts, &mut pending, i, v.subgradient.clone());
            if pts[i] == x && best.as_ref().map_or(true, |b| v.upper < b.0) {
                best = Some((v.upper, v.gap(), pts));
            }
        }
        // signed basis directions keep every component's model bounded below
        for (i, part) in self.parts.iter().enumerate() {
            for j in part.first_free()..self.dim {
                for sign in [1.0, -1.0] {
                    let mut e = vec![0.0; self.dim];
                    e[j] = sign;
                    let v = self.parts[i].gauge.eval(&e)?;
                    add_cut(&mut cuts, &mut pending, i, v.subgradient);
                }
            }
        }

        // the cutting-plane model: min Σ tᵢ over Σ vᵢ = x with tᵢ above every cut of part i
        let mut problem = Problem::new(OptimizationDirection::Minimize);
        // gauges are nonnegative; leaving tᵢ free lets the pivoting stall on ±1 cut sets
        let t: Vec<Variable> = (0..m).map(|_| problem.add_var(1.0, (0.0, f64::INFINITY))).collect();
        let v: Vec<Vec<Option<Variable>>> = self
            .parts
            .iter()
            .map(|p| {
                (0..self.dim)
                    .map(|j| (j >= p.first_free()).then(|| problem.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))))
                    .collect()
            })
            .collect();
        for j in 0..self.dim {
            let terms: Vec<(Variable, f64)> = v.iter().filter_map(|vi| vi[j].map(|var| (var, 1.0))).collect();
            problem.add_constraint(terms, ComparisonOp::Eq, x[j]);
        }
        let cut_row = |i: usize, g: &[f64]| -> Vec<(Variable, f64)> {
            let mut row = vec![(t[i], 1.0)];
            row.extend((0..self.dim).filter_map(|j| v[i][j].map(|var| (var, -g[j]))).filter(|(_, c)| *c != 0.0));
            row
        };
        for r in pending.drain(..) {
            let (i, g) = &cuts[r];
            problem.add_constraint(cut_row(*i, g), ComparisonOp::Ge, 0.0);
        }
        let mut sol = problem.solve().map_err(lp_error)?;

        let mut lower: f64 = 0.0;
        let mut step: f64 = 0.25;
        for _ in 0..self.settings.max_iterations {
            lower = lower.max(sol.objective());
            let parts: Vec<Vec<f64>> = v
                .iter()
                .map(|vi| vi.iter().map(|var| var.map_or(0.0, |var| sol[var])).collect())
                .collect();
            let mut total = 0.0;
            let mut inherited = 0.0;
            for (i, p) in parts.iter().enumerate() {
                if p.iter().all(|t| *t == 0.0) {
                    continue;
                }
                let val = self.parts[i].gauge.eval(p)?;
                total += val.upper;
                inherited += val.gap();
                add_cut(&mut cuts, &mut pending, i, val.subgradient);
            }
            if best.as_ref().map_or(true, |b| total < b.0) {
                best = Some((total, inherited, parts));
            }
            let (upper, inherited, centre) = best.clone().expect("a full component exists");
            let gap = upper - lower;
            // aim below the tolerance: the certificate's own bound can trail the model
            if gap <= 0.5 * self.settings.tol * upper + inherited {
                break;
            }
            // probe around the best decomposition at a radius matched to the gap;
            // for smooth components the model error there is quadratic in the radius
            step = step.min((gap / upper).sqrt()).max(1e-9);
            for (i, centre) in centre.iter().enumerate() {
                for j in self.parts[i].first_free()..self.dim {
                    for sign in [1.0, -1.0] {
                        let mut p = centre.clone();
                        p[j] += sign * step;
                        if p.iter().any(|t| *t != 0.0) {
                            let val = self.parts[i].gauge.eval(&p)?;
                            add_cut(&mut cuts, &mut pending, i, val.subgradient);
                        }
                    }
                }
            }
            if pending.is_empty() {
                if step <= 1e-9 {
                    // no new information: the model is exact along this decomposition
                    break;
                }
                step /= 4.0;
                continue;
            }
            let mut next = Ok(sol);
            for r in pending.drain(..) {
                let (i, g) = &cuts[r];
                next = next.and_then(|s| s.add_constraint(cut_row(*i, g), ComparisonOp::Ge, 0.0));
            }
            sol = match next {
                Ok(s) => s,
                // the float pivoting gave up; keep the bracket so far
                Err(_) => break,
            };
        }
        let (upper, inherited, _) = best.expect("a full component exists");
        let dual = self.dual_point(x, &cuts)?;
        // the reported lower end must be backed by the certificate itself
        lower = lower.min(dot(&dual, x));
        let slack = ROUNDING * upper.abs().max(1e-300);
        let out = OracleValue {
            upper: upper + slack,
            lower: (lower - slack).max(0.0),
            subgradient: dual,
        };
        if out.upper - out.lower > self.settings.tol * upper + inherited + 2.0 * slack {
            return Err(Error::ToleranceNotMet { gap: out.gap() / upper, tol: self.settings.tol });
        }
        Ok(out)
    }

    /// Maximises `y·x` over functionals `y` lying, on each part's admissible
    /// coordinates, in the convex hull of that part's cut normals. Such a `y`
    /// is dominated by every part's model, hence by every part's gauge.
    fn dual_point(&self, x: &[f64], cuts: &[(usize, Vec<f64>)]) -> Result<Vec<f64>> {
        let mut problem = Problem::new(OptimizationDirection::Maximize);
        let y: Vec<Variable> = x.iter().map(|xj| problem.add_var(*xj, (f64::NEG_INFINITY, f64::INFINITY))).collect();
        let mu: Vec<Variable> = cuts.iter().map(|_| problem.add_var(0.0, (0.0, f64::INFINITY))).collect();
        for (i, part) in self.parts.iter().enumerate() {
            let mine: Vec<usize> = (0..cuts.len()).filter(|&r| cuts[r].0 == i).collect();
            problem.add_constraint(mine.iter().map(|&r| (mu[r], 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
            for j in part.first_free()..self.dim {
                let mut row: Vec<(Variable, f64)> =
                    mine.iter().map(|&r| (mu[r], cuts[r].1[j])).filter(|(_, c)| *c != 0.0).collect();
                row.push((y[j], -1.0));
                problem.add_constraint(row, ComparisonOp::Eq, 0.0);
            }
        }
        let sol = problem.solve().map_err(lp_error)?;
        Ok(y.iter().map(|var| sol[*var]).collect())
    }
}

fn lp_error(e: microlp::Error) -> Error {
    match e {
        microlp::Error::Infeasible => Error::Infeasible("cutting-plane model is infeasible".into()),
        microlp::Error::Unbounded => Error::Unbounded,
        microlp::Error::InternalError(msg) => Error::invariant(format!("cutting-plane solver: {msg}")),
    }
}

impl GaugeOracle for Infconv {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Result<OracleValue> {
        check_len(self.dim, x)?;
        // the LP tolerances are absolute, so solve on the unit scale
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 || !scale.is_finite() {
            return self.solve(x);
        }
        let unit: Vec<f64> = x.iter().map(|v| v / scale).collect();
        let v = self.solve(&unit)?;
        Ok(OracleValue { upper: v.upper * scale, lower: v.lower * scale, subgradient: v.subgradient })
    }
}

/// `inf_u μ_A(u) + μ_B(x − u)` with a certified gap of at most `tol` (relative).
pub fn infconv_gauge(a: Oracle, b: Oracle, x: &[f64], tol: f64) -> Result<OracleValue> {
    let settings = InfconvSettings { tol, ..InfconvSettings::default() };
    Infconv::new(vec![Component::full(a), Component::full(b)], settings)?.eval(x)
}

/// Caches evaluations of an inner oracle by the exact bit pattern of the query.
#[derive(Debug)]
pub struct Memo {
    inner: Oracle,
    cache: Mutex<HashMap<Vec<u64>, OracleValue>>,
    capacity: usize,
}

impl Memo {
    pub fn new(inner: Oracle, capacity: usize) -> Self {
        Self { inner, cache: Mutex::new(HashMap::new()), capacity }
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().map(|c| c.len()).unwrap_or(0)
    }
}

impl GaugeOracle for Memo {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &[f64]) -> Result<OracleValue> {
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        if let Some(v) = self.cache.lock().ok().and_then(|c| c.get(&key).cloned()) {
            return Ok(v);
        }
        let v = self.inner.eval(x)?;
        if let Ok(mut c) = self.cache.lock() {
            if c.len() >= self.capacity {
                c.clear();
            }
            c.insert(key, v.clone());
        }
        Ok(v)
    }
}

/// Largest observed `μ(P_k x)/μ(x)` over the probes: a lower estimate of the
/// basis constant, exact when a maximiser is among the probes.
pub fn estimate_basis_constant(oracle: &dyn GaugeOracle, probes: &[Vec<f64>]) -> Result<f64> {
    let d = oracle.dim();
    let mut best: f64 = 1.0;
    for x in probes {
        let nx = oracle.value(x)?;
        if nx <= 0.0 {
            continue;
        }
        for k in 1..d {
            let h = Projection::new(k).head(x);
            best = best.max(oracle.value(&h)? / nx);
        }
    }
    Ok(best)
}

/// Deterministic probe set for numeric checks: every nonzero vector with
/// entries in `{-1, 0, 1}`, plus a few irrational directions.
pub fn default_probes(dim: usize) -> Vec<Vec<f64>> {
    let d = dim.min(6);
    let mut out = Vec::new();
    for mut code in 1..3usize.pow(d as u32) {
        let mut v = vec![0.0; dim];
        for slot in v.iter_mut().take(d) {
            *slot = (code % 3) as f64 - 1.0;
            code /= 3;
        }
        out.push(v);
    }
    for s in 1..=4 {
        out.push((0..dim).map(|i| ((i + s) as f64 * 0.618_033_988_75).fract() - 0.5).collect());
    }
    out
}

/// How basis constants are obtained while iterating.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisConstants {
    /// `K_0, K_1, …` supplied by the caller (e.g. analytically or from an
    /// exact twin).
    Given(Vec<f64>),
    /// Estimated on the probes at each level.
    Estimate,
}

/// Outcome of the per-level checks in [`numeric_tower`].
#[derive(Debug, Clone, PartialEq)]
pub struct NumericLevelCheck {
    pub level: usize,
    /// Largest relative violation of the sandwich.
    pub sandwich: f64,
    /// Largest relative deviation from the tail dilation on `X^n`.
    pub tail: f64,
    /// Largest relative deviation from the head dilation on small-tail witnesses.
    pub head: f64,
    pub witnesses: usize,
}

/// Norms `‖·‖_0, …, ‖·‖_{n_max}` as nested oracles.
#[derive(Debug, Clone)]
pub struct NumericTower {
    pub levels: Vec<Oracle>,
    pub lambdas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub basis_constants: Vec<f64>,
    pub checks: Vec<NumericLevelCheck>,
}

impl NumericTower {
    pub fn norm(&self, n: usize, x: &[f64]) -> Result<f64> {
        self.levels[n].value(x)
    }
}

/// Iterates the hull surgery (`k = n`, `R = 1/2`) on oracles and checks the
/// three level relations on `probes` to relative accuracy `budget`.
pub fn numeric_tower(
    seed: Oracle,
    lambdas: &[f64],
    n_max: usize,
    constants: &BasisConstants,
    probes: &[Vec<f64>],
    budget: f64,
    settings: InfconvSettings,
) -> Result<NumericTower> {
    let dim = seed.dim();
    if n_max > dim || lambdas.len() < n_max {
        return Err(Error::Parameter("need n_max ≤ dim and one λ per level".into()));
    }
    if lambdas.iter().any(|l| !(*l >= 0.0)) {
        return Err(Error::Parameter("λ must be nonnegative".into()));
    }
    let radius = 0.5;
    let mut levels: Vec<Oracle> = vec![seed];
    let mut gammas = vec![0.0];
    let mut ks = Vec::new();
    let mut checks = Vec::new();
    for n in 1..=n_max {
        let prev = levels[n - 1].clone();
        let k = match constants {
            BasisConstants::Given(v) => *v
                .get(n - 1)
                .ok_or_else(|| Error::Parameter(format!("no basis constant for level {}", n - 1)))?,
            BasisConstants::Estimate => estimate_basis_constant(prev.as_ref(), probes).map_err(|e| Error::Invariant {
                level: Some(n),
                message: e.to_string(),
            })?,
        };
        let lambda = lambdas[n - 1];
        let gamma = k / (k + 1.0 - radius);
        let next: Oracle = if n == dim {
            Arc::new(ScaledGauge::new(prev.clone(), 1.0 + lambda)?)
        } else {
            let big: Oracle = Arc::new(ScaledGauge::new(prev.clone(), 1.0 + lambda)?);
            let slab: Oracle = Arc::new(TailGauge::new(prev.clone(), n, radius)?);
            let d = max_gauge(big, slab)?;
            let piece: Oracle = Arc::new(ScaledGauge::new(prev.clone(), 1.0 + lambda * gamma)?);
            // conv(conv(D ∪ B) ∪ S) is solved as one hull of three pieces
            let tilde = Infconv::new(
                vec![Component::full(d), Component::full(prev.clone()), Component::section(piece, n)],
                settings,
            )?;
            Arc::new(Memo::new(Arc::new(tilde), 1 << 16))
        };
        let check = check_level(prev.as_ref(), next.as_ref(), n, lambda, gamma, probes, budget).map_err(|e| match e {
            Error::Invariant { .. } => e.at_level(n),
            other => Error::Invariant { level: Some(n), message: other.to_string() },
        })?;
        checks.push(check);
        levels.push(next);
        gammas.push(gamma);
        ks.push(k);
    }
    Ok(NumericTower {
        levels,
        lambdas: lambdas[..n_max].to_vec(),
        gammas,
        basis_constants: ks,
        checks,
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn check_level(
    prev: &dyn GaugeOracle,
    next: &dyn GaugeOracle,
    n: usize,
    lambda: f64,
    gamma: f64,
    probes: &[Vec<f64>],
    budget: f64,
) -> Result<NumericLevelCheck> {
    let p = Projection::new(n);
    let rho = 0.5 / (1.0 + lambda);
    let mut out = NumericLevelCheck { level: n, sandwich: 0.0, tail: 0.0, head: 0.0, witnesses: 0 };
    for x in probes {
        let a = next.eval(x)?;
        let b = prev.value(x)?;
        // ‖x‖_n ≤ ‖x‖_{n-1} ≤ (1+λ)‖x‖_n
        let lo_violation = (a.lower - b).max(0.0) / b.max(f64::MIN_POSITIVE);
        let hi_violation = (b - (1.0 + lambda) * a.upper).max(0.0) / b.max(f64::MIN_POSITIVE);
        out.sandwich = out.sandwich.max(lo_violation).max(hi_violation);

        let t = p.tail(x);
        if t.iter().any(|v| *v != 0.0) && n < x.len() {
            let lhs = prev.value(&t)?;
            let rhs = (1.0 + lambda * gamma) * next.value(&t)?;
            out.tail = out.tail.max(rel(lhs, rhs));
        }

        let head = p.head(x);
        if head.iter().any(|v| *v != 0.0) {
            let mut s = 1.0;
            for _ in 0..60 {
                let y: Vec<f64> = head.iter().zip(&t).map(|(h, t)| h + s * t).collect();
                if prev.value(&p.tail(&y))? <= rho * prev.value(&y)? * (1.0 - 1e-9) {
                    let lhs = prev.value(&y)?;
                    let rhs = (1.0 + lambda) * next.value(&y)?;
                    out.head = out.head.max(rel(lhs, rhs));
                    out.witnesses += 1;
                    break;
                }
                s /= 2.0;
            }
        }
    }
    let worst = out.sandwich.max(out.tail).max(out.head);
    if worst > budget {
        return Err(Error::Invariant {
            level: Some(n),
            message: format!("numeric level relations off by {worst:e} > budget {budget:e}"),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn square() -> Oracle {
        Arc::new(PolytopeGauge::from_body(&ConvexBody::unit_cube(2)))
    }

    #[test]
    fn idempotent_and_nested_hulls() {
        let a = square();
        let twice: Oracle = Arc::new(ScaledGauge::new(a.clone(), 2.0).unwrap());
        for x in [[1.0, 0.3], [-0.2, 0.7], [3.0, -4.0]] {
            let mu = a.value(&x).unwrap();
            let same = infconv_gauge(a.clone(), a.clone(), &x, 1e-10).unwrap();
            assert!((same.value() - mu).abs() <= 1e-9 * mu, "{same:?} vs {mu}");
            let nested = infconv_gauge(a.clone(), twice.clone(), &x, 1e-10).unwrap();
            assert!((nested.value() - mu / 2.0).abs() <= 1e-9 * mu);
            assert!(nested.lower <= mu / 2.0 && mu / 2.0 <= nested.upper);
        }
    }

    #[test]
    fn max_gauge_laws() {
        let a = square();
        let twice: Oracle = Arc::new(ScaledGauge::new(a.clone(), 2.0).unwrap());
        let m = max_gauge(a.clone(), a.clone()).unwrap();
        let n = max_gauge(a.clone(), twice).unwrap();
        let x = [0.4, -1.3];
        assert_eq!(m.value(&x).unwrap(), a.value(&x).unwrap());
        assert_eq!(n.value(&x).unwrap(), a.value(&x).unwrap());
    }

    #[test]
    fn hull_of_square_and_cross() {
        // conv of the unit square and the cross polytope of radius 2
        let cube = square();
        let cross = ConvexBody::<Rational>::cross_polytope(2).scaled(&rat(2, 1)).unwrap();
        let cross_o: Oracle = Arc::new(PolytopeGauge::from_body(&cross));
        let hull = ConvexBody::<Rational>::unit_cube(2).hull_union(&cross).unwrap();
        let exact = PolytopeGauge::from_body(&hull);
        for x in [[1.0, 1.0], [0.3, 0.9], [-2.0, 0.1], [0.0, 1.0]] {
            let v = infconv_gauge(cube.clone(), cross_o.clone(), &x, 1e-12).unwrap();
            let e = exact.value(&x).unwrap();
            assert!((v.value() - e).abs() <= v.gap().max(1e-12), "{v:?} vs {e}");
        }
    }

    #[test]
    fn euclidean_section_component() {
        // conv(B₂ ∪ (X^1 ∩ 2B₂)) at a tail vector is half the norm
        let b: Oracle = Arc::new(EuclideanGauge::unit(2));
        let piece: Oracle = Arc::new(ScaledGauge::new(b.clone(), 2.0).unwrap());
        let h = Infconv::new(vec![Component::full(b), Component::section(piece, 1)], InfconvSettings::default()).unwrap();
        let v = h.eval(&[0.0, 1.0]).unwrap();
        assert!((v.value() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn memo_returns_identical_values() {
        let m = Memo::new(square(), 4);
        let a = m.eval(&[0.1, 0.2]).unwrap();
        let b = m.eval(&[0.1, 0.2]).unwrap();
        assert_eq!(a, b);
        assert_eq!(m.cached(), 1);
    }
}
