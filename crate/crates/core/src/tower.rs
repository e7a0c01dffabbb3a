//! The renorming tower.
//!
//! One [`step`] replaces a unit ball `B` by a larger ball `B̃` with
//! `B ⊆ B̃ ⊆ (1+λ)B`, exact dilation `1+λγ` on the tail space `X^k`, and
//! exact dilation `1+λ` on vectors whose tail is small. [`iterate`] applies the
//! step with `k = n`, `R = 1/2` at level `n`, and [`RenormTower`] then carries
//! the rescaled norms `|||·|||_n` whose ratios behave differently on head and
//! tail vectors.

use serde::{Deserialize, Serialize};

use crate::body::{BodyDocument, ConvexBody};
use crate::error::{Error, Result};
use crate::linalg::{add, is_zero_vec, scale};
use crate::projection::Projection;
use crate::scalar::{format_rational, parse_rational, Rational, Scalar};

/// Which norm measures the tail in the small-tail hypothesis of a step.
///
/// The hypothesis `‖P^k x‖ ≤ R/(1+λ)·‖x‖` is read with both sides in the
/// norm of the ball being modified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallTailReading {
    PreviousNorm,
}

/// Exact record of one hull surgery.
#[derive(Debug, Clone)]
pub struct StepCertificate<S> {
    pub k: usize,
    pub lambda: S,
    pub radius: S,
    pub basis_constant: S,
    pub gamma: S,
    pub d: ConvexBody<S>,
    pub c: ConvexBody<S>,
    pub tilde: ConvexBody<S>,
    /// Largest `‖v‖_B` over vertices `v` of `C ∩ X^k`; at most `1 + λγ`.
    pub hull_tail_extent: Option<S>,
    /// Vectors on which the two-sided sandwich was checked.
    pub sandwich_points: usize,
    /// Tail-section vertices on which the tail dilation was checked.
    pub tail_points: usize,
    /// Small-tail witnesses on which the head dilation was checked.
    pub head_witnesses: usize,
    pub reading: SmallTailReading,
}

impl<S: Scalar> StepCertificate<S> {
    /// `1 + λγ`.
    pub fn tail_factor(&self) -> S {
        S::one() + self.lambda.clone() * self.gamma.clone()
    }

    /// Bound `1 + λK/(K+1-R)` on the hull's trace on the tail space.
    pub fn hull_tail_bound(&self) -> S {
        self.tail_factor()
    }

    fn old_norm(&self, b: &ConvexBody<S>, x: &[S]) -> S {
        b.gauge(x)
    }

    /// `‖x‖_B̃ ≤ ‖x‖_B ≤ (1+λ)‖x‖_B̃`.
    pub fn sandwich_holds(&self, b: &ConvexBody<S>, x: &[S]) -> bool {
        let old = self.old_norm(b, x);
        let new = self.tilde.gauge(x);
        let hi = (S::one() + self.lambda.clone()) * new.clone();
        le(&new, &old) && le(&old, &hi)
    }

    /// `‖x‖_B = (1+λγ)‖x‖_B̃` for `x ∈ X^k`.
    pub fn tail_dilation_holds(&self, b: &ConvexBody<S>, x: &[S]) -> bool {
        let lhs = self.old_norm(b, x);
        let rhs = self.tail_factor() * self.tilde.gauge(x);
        lhs.approx_eq(&rhs)
    }

    /// Whether `x` satisfies the small-tail hypothesis.
    pub fn is_small_tail(&self, b: &ConvexBody<S>, x: &[S]) -> bool {
        let tail = b.gauge(&Projection::new(self.k).tail(x));
        let rhs = self.radius.clone() / (S::one() + self.lambda.clone()) * b.gauge(x);
        le(&tail, &rhs)
    }

    /// `‖x‖_B = (1+λ)‖x‖_B̃`, checked for a small-tail `x`.
    pub fn head_dilation_holds(&self, b: &ConvexBody<S>, x: &[S]) -> bool {
        let lhs = b.gauge(x);
        let rhs = (S::one() + self.lambda.clone()) * self.tilde.gauge(x);
        lhs.approx_eq(&rhs)
    }
}

fn le<S: Scalar>(a: &S, b: &S) -> bool {
    a <= b || a.approx_eq(b)
}

fn check(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::invariant(what))
    }
}

/// `γ = K/(K+1-R)`.
pub fn gamma<S: Scalar>(basis_constant: &S, radius: &S) -> S {
    basis_constant.clone() / (basis_constant.clone() + S::one() - radius.clone())
}

fn check_step_params<S: Scalar>(b: &ConvexBody<S>, k: usize, lambda: &S, radius: &S) -> Result<()> {
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    if lambda.is_strictly_negative() {
        return Err(Error::Parameter("λ must be nonnegative".into()));
    }
    if !radius.is_strictly_positive() || *radius >= S::one() {
        return Err(Error::Parameter("R must lie in (0, 1)".into()));
    }
    if k > b.dim() {
        return Err(Error::Parameter(format!("k = {k} exceeds dimension {}", b.dim())));
    }
    Ok(())
}

/// `D = {x : ‖P^k x‖_B ≤ R} ∩ (1+λ)B`.
pub fn build_d<S: Scalar>(b: &ConvexBody<S>, k: usize, radius: &S, lambda: &S) -> Result<ConvexBody<S>> {
    check_step_params(b, k, lambda, radius)?;
    b.scaled(&(S::one() + lambda.clone()))?
        .intersect_slab(b, k, radius)
}

/// `C = conv(D ∪ B)`, with the trace of `C` on `X^k` checked against
/// `(1 + λγ)B`. Returns the hull and the largest tail-section gauge.
pub fn build_c<S: Scalar>(
    b: &ConvexBody<S>,
    d: &ConvexBody<S>,
    k: usize,
    lambda: &S,
    gamma: &S,
) -> Result<(ConvexBody<S>, Option<S>)> {
    let c = d.hull_union(b)?;
    if k >= b.dim() {
        return Ok((c, None));
    }
    let bound = S::one() + lambda.clone() * gamma.clone();
    let extent = c
        .section_vertices(k)?
        .iter()
        .map(|v| b.gauge(v))
        .fold(S::zero(), |a, g| if g > a { g } else { a });
    check(le(&extent, &bound), "hull trace on the tail space exceeds 1 + λγ")?;
    Ok((c, Some(extent)))
}

/// `B̃ = conv(C ∪ (X^k ∩ (1+λγ)B))`, checked against the three set relations
/// that characterise it.
pub fn build_tilde<S: Scalar>(
    c: &ConvexBody<S>,
    b: &ConvexBody<S>,
    k: usize,
    lambda: &S,
    gamma: &S,
    radius: &S,
) -> Result<ConvexBody<S>> {
    let tail_factor = S::one() + lambda.clone() * gamma.clone();
    let tilde = if k >= b.dim() {
        c.clone()
    } else {
        let piece = b.scaled(&tail_factor)?.section_vertices(k)?;
        c.hull_with_points(&piece)?
    };
    let big = b.scaled(&(S::one() + lambda.clone()))?;
    check(tilde.contains_body(b), "B ⊄ B̃")?;
    check(big.contains_body(&tilde), "B̃ ⊄ (1+λ)B")?;
    let s_tilde = tilde.intersect_slab(b, k, radius)?;
    let s_big = big.intersect_slab(b, k, radius)?;
    check(s_tilde.same_set(&s_big), "S ∩ B̃ differs from S ∩ (1+λ)B")?;
    if k < b.dim() {
        let lhs = tilde.section(k)?;
        let rhs = b.scaled(&tail_factor)?.section(k)?;
        check(lhs.same_set(&rhs), "X^k ∩ B̃ differs from X^k ∩ (1+λγ)B")?;
    }
    Ok(tilde)
}

/// Deterministic probe vectors: every nonzero vector with entries in
/// `{-1, 0, 1, 2}` (at most 4096 of them).
pub fn probe_grid<S: Scalar>(dim: usize) -> Vec<Vec<S>> {
    let vals = [-1i64, 0, 1, 2];
    let d = dim.min(6);
    let total = 4usize.pow(d as u32);
    let mut out = Vec::with_capacity(total);
    for mut code in 1..total {
        let mut v = vec![S::zero(); dim];
        for slot in v.iter_mut().take(d) {
            *slot = S::from_int(vals[code % 4]);
            code /= 4;
        }
        if !is_zero_vec(&v) {
            out.push(v);
        }
    }
    out
}

/// Shrinks the tail of `x` by powers of two until the small-tail hypothesis
/// `‖P^k y‖_B ≤ ρ‖y‖_B` holds. `None` if `x` has no head.
pub fn small_tail_witness<S: Scalar>(b: &ConvexBody<S>, k: usize, rho: &S, x: &[S]) -> Option<Vec<S>> {
    let p = Projection::new(k);
    let head = p.head(x);
    if is_zero_vec(&head) {
        return None;
    }
    let tail = p.tail(x);
    let two = S::from_int(2);
    let mut s = S::one();
    for _ in 0..64 {
        let y = add(&head, &scale(&tail, &s));
        let lhs = b.gauge(&p.tail(&y));
        if le(&lhs, &(rho.clone() * b.gauge(&y))) {
            return Some(y);
        }
        s = s / two.clone();
    }
    Some(head)
}

/// One hull surgery on `b` with exact certificates.
///
/// Certifies the sandwich on every vertex of `B` and `B̃` plus `probes`, the
/// tail dilation on every vertex of `X^k ∩ B̃`, and the head dilation on small
/// tail witnesses derived from the probes.
pub fn step_with_probes<S: Scalar>(
    b: &ConvexBody<S>,
    k: usize,
    lambda: &S,
    radius: &S,
    probes: &[Vec<S>],
) -> Result<(ConvexBody<S>, StepCertificate<S>)> {
    check_step_params(b, k, lambda, radius)?;
    let basis_constant = b.basis_constant();
    let gamma = gamma(&basis_constant, radius);
    check(
        gamma.is_strictly_positive() && gamma < S::one(),
        "γ outside (0, 1)",
    )?;
    let d = build_d(b, k, radius, lambda)?;
    let (c, hull_tail_extent) = build_c(b, &d, k, lambda, &gamma)?;
    let tilde = build_tilde(&c, b, k, lambda, &gamma, radius)?;
    let mut cert = StepCertificate {
        k,
        lambda: lambda.clone(),
        radius: radius.clone(),
        basis_constant,
        gamma,
        d,
        c,
        tilde: tilde.clone(),
        hull_tail_extent,
        sandwich_points: 0,
        tail_points: 0,
        head_witnesses: 0,
        reading: SmallTailReading::PreviousNorm,
    };

    let sandwich: Vec<Vec<S>> = b
        .vertices()
        .iter()
        .chain(tilde.vertices())
        .chain(probes)
        .cloned()
        .collect();
    for x in &sandwich {
        check(cert.sandwich_holds(b, x), "‖·‖_B̃ ≤ ‖·‖_B ≤ (1+λ)‖·‖_B̃ fails")?;
    }
    cert.sandwich_points = sandwich.len();

    if k < b.dim() {
        let tails = tilde.section_vertices(k)?;
        for x in &tails {
            check(cert.tail_dilation_holds(b, x), "tail dilation 1+λγ fails")?;
        }
        cert.tail_points = tails.len();
    }

    let rho = radius.clone() / (S::one() + lambda.clone());
    let mut witnesses = 0;
    for x in probes {
        if let Some(w) = small_tail_witness(b, k, &rho, x) {
            check(cert.is_small_tail(b, &w), "witness construction failed")?;
            check(cert.head_dilation_holds(b, &w), "head dilation 1+λ fails")?;
            witnesses += 1;
        }
    }
    cert.head_witnesses = witnesses;
    Ok((tilde, cert))
}

/// [`step_with_probes`] on the default probe grid.
pub fn step<S: Scalar>(
    b: &ConvexBody<S>,
    k: usize,
    lambda: &S,
    radius: &S,
) -> Result<(ConvexBody<S>, StepCertificate<S>)> {
    let probes = probe_grid(b.dim());
    step_with_probes(b, k, lambda, radius, &probes)
}

/// Behaviour of the rescaling constant past the stored levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailSupport {
    /// `λ_i = 0` for every `i` beyond the stored levels.
    Finite,
    /// Beyond the stored levels `Σ λ_i ≤ bound`.
    SummableBound(f64),
}

/// The sequence of balls `B_0 ⊇ … ⊇`-dilated, their norms, and the rescaling.
#[derive(Debug, Clone)]
pub struct RenormTower<S> {
    bodies: Vec<ConvexBody<S>>,
    /// `λ_n` for `n = 1..=levels`; index 0 holds zero.
    lambdas: Vec<S>,
    /// `γ_n = K_{n-1}/(K_{n-1} + 1/2)`; index 0 holds zero.
    gammas: Vec<S>,
    /// `K_n`, the basis constant of `‖·‖_n`.
    basis_constants: Vec<S>,
    certificates: Vec<StepCertificate<S>>,
    c_resc: S,
    /// `|||·|||_n = scales[n] · ‖·‖_n`.
    scales: Vec<S>,
    remark_witnesses: usize,
}

/// Builds `B_0, …, B_{n_max}` by the surgery step with `k = n`, `R = 1/2`.
///
/// `lambdas[i]` is `λ_{i+1}`. Every level is certified; the first failure
/// aborts with its level index.
pub fn iterate<S: Scalar>(b0: &ConvexBody<S>, lambdas: &[S], n_max: usize) -> Result<RenormTower<S>> {
    if n_max > b0.dim() {
        return Err(Error::Parameter(format!(
            "tower depth {n_max} exceeds dimension {}",
            b0.dim()
        )));
    }
    if lambdas.len() < n_max {
        return Err(Error::Parameter("fewer λ values than levels".into()));
    }
    if lambdas.iter().any(|l| l.is_strictly_negative()) {
        return Err(Error::Parameter("λ must be nonnegative".into()));
    }
    let half = S::one() / S::from_int(2);
    let probes = probe_grid(b0.dim());
    let mut bodies = vec![b0.clone()];
    let mut certificates = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let (next, cert) = step_with_probes(&bodies[n - 1], n, &lambdas[n - 1], &half, &probes)
            .map_err(|e| e.at_level(n))?;
        bodies.push(next);
        certificates.push(cert);
    }
    let mut lam = vec![S::zero()];
    lam.extend(lambdas[..n_max].iter().cloned());
    let mut gammas = vec![S::zero()];
    gammas.extend(certificates.iter().map(|c| c.gamma.clone()));
    let mut basis_constants: Vec<S> = certificates.iter().map(|c| c.basis_constant.clone()).collect();
    basis_constants.push(bodies[n_max].basis_constant());

    let mut c_resc = S::one();
    for i in 1..=n_max {
        c_resc = c_resc * (S::one() + lam[i].clone() * gammas[i].clone()) / mid_factor(&lam[i], &gammas[i]);
    }
    let mut scales = vec![c_resc.clone()];
    for i in 1..=n_max {
        let s = scales[i - 1].clone() * mid_factor(&lam[i], &gammas[i]);
        scales.push(s);
    }
    let mut tower = RenormTower {
        bodies,
        lambdas: lam,
        gammas,
        basis_constants,
        certificates,
        c_resc,
        scales,
        remark_witnesses: 0,
    };
    tower.remark_witnesses = tower.certify_uniform_condition(&probes)?;
    Ok(tower)
}

/// `1 + λ(1+γ)/2`.
fn mid_factor<S: Scalar>(lambda: &S, gamma: &S) -> S {
    S::one() + lambda.clone() * (S::one() + gamma.clone()) / S::from_int(2)
}

impl<S: Scalar> RenormTower<S> {
    pub fn levels(&self) -> usize {
        self.bodies.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.bodies[0].dim()
    }

    pub fn body(&self, n: usize) -> &ConvexBody<S> {
        &self.bodies[n]
    }

    pub fn bodies(&self) -> &[ConvexBody<S>] {
        &self.bodies
    }

    pub fn lambda(&self, n: usize) -> &S {
        &self.lambdas[n]
    }

    pub fn gamma(&self, n: usize) -> &S {
        &self.gammas[n]
    }

    pub fn basis_constant(&self, n: usize) -> &S {
        &self.basis_constants[n]
    }

    pub fn certificate(&self, n: usize) -> &StepCertificate<S> {
        &self.certificates[n - 1]
    }

    pub fn certificates(&self) -> &[StepCertificate<S>] {
        &self.certificates
    }

    pub fn rescale_constant(&self) -> &S {
        &self.c_resc
    }

    /// Factor `s_n` with `|||·|||_n = s_n‖·‖_n`.
    pub fn scale(&self, n: usize) -> &S {
        &self.scales[n]
    }

    pub fn remark_witnesses(&self) -> usize {
        self.remark_witnesses
    }

    /// `‖x‖_n`.
    pub fn norm(&self, n: usize, x: &[S]) -> S {
        self.bodies[n].gauge(x)
    }

    /// `|||x|||_n`.
    pub fn rescaled(&self, n: usize, x: &[S]) -> S {
        self.scales[n].clone() * self.norm(n, x)
    }

    /// `|||x|||_∞`, the maximum over stored levels.
    pub fn sup_norm(&self, x: &[S]) -> S {
        (0..=self.levels())
            .map(|n| self.rescaled(n, x))
            .fold(S::zero(), |a, b| if b > a { b } else { a })
    }

    /// `∏_{i>N} (1+λ_i)` over stored levels.
    pub fn tail_product(&self, from: usize) -> S {
        ((from + 1)..=self.levels()).fold(S::one(), |acc, i| acc * (S::one() + self.lambdas[i].clone()))
    }

    /// `c = ½ ∏_{i≥1} (1+λ_i)^{-1}`.
    pub fn uniform_threshold(&self) -> S {
        S::one() / (S::from_int(2) * self.tail_product(0))
    }

    /// Ratio `|||x|||_n / |||x|||_{n-1}` once the small-tail regime is reached.
    pub fn head_ratio(&self, n: usize) -> S {
        mid_factor(&self.lambdas[n], &self.gammas[n]) / (S::one() + self.lambdas[n].clone())
    }

    /// Ratio `|||x|||_n / |||x|||_{n-1}` on tail vectors `x ∈ X^N`, `n ≤ N`.
    pub fn tail_ratio(&self, n: usize) -> S {
        mid_factor(&self.lambdas[n], &self.gammas[n])
            / (S::one() + self.lambdas[n].clone() * self.gammas[n].clone())
    }

    /// Whether `‖P^n x‖_0 ≤ c‖x‖_0` with `c` the uniform threshold.
    pub fn uniform_condition(&self, n: usize, x: &[S]) -> bool {
        let lhs = self.norm(0, &Projection::new(n).tail(x));
        le(&lhs, &(self.uniform_threshold() * self.norm(0, x)))
    }

    /// Smallest `n₀ ≥ 1` such that the uniform small-tail condition holds for
    /// every `n ≥ n₀`. For `n ≥ dim` the tail vanishes, so `n₀ ≤ dim`.
    pub fn active_index(&self, x: &[S]) -> Result<usize> {
        if is_zero_vec(x) {
            return Err(Error::Domain("active index of the zero vector".into()));
        }
        let mut n0 = self.dim().max(1);
        for n in (1..self.dim()).rev() {
            if self.uniform_condition(n, x) {
                n0 = n;
            } else {
                break;
            }
        }
        Ok(n0)
    }

    /// Checks `|||x|||_n = head_ratio(n)·|||x|||_{n-1}` for all stored `n ≥ n₀(x)`.
    pub fn head_ratios_hold(&self, x: &[S]) -> Result<bool> {
        let n0 = self.active_index(x)?;
        Ok((n0.max(1)..=self.levels()).all(|n| {
            self.rescaled(n, x)
                .approx_eq(&(self.head_ratio(n) * self.rescaled(n - 1, x)))
        }))
    }

    /// Checks `|||x|||_n = tail_ratio(n)·|||x|||_{n-1}` for `n ≤ N` where `x ∈ X^N`.
    pub fn tail_ratios_hold(&self, x: &[S], big_n: usize) -> bool {
        (1..=big_n.min(self.levels())).all(|n| {
            self.rescaled(n, x)
                .approx_eq(&(self.tail_ratio(n) * self.rescaled(n - 1, x)))
        })
    }

    /// For witnesses of the uniform condition at level `n`, checks the chain
    /// `‖P^n x‖_{n-1} ≤ ‖P^n x‖_0 ≤ c‖x‖_0 ≤ c∏_{i<n}(1+λ_i)‖x‖_{n-1} ≤ (1/2)/(1+λ_n)‖x‖_{n-1}`
    /// and the resulting head dilation. Returns the witness count.
    pub fn certify_uniform_condition(&self, probes: &[Vec<S>]) -> Result<usize> {
        let half = S::one() / S::from_int(2);
        let c = self.uniform_threshold();
        let mut count = 0;
        for n in 1..=self.levels() {
            let p = Projection::new(n);
            let prev = &self.bodies[n - 1];
            for x in probes {
                let Some(w) = small_tail_witness(&self.bodies[0], n, &c, x) else {
                    continue;
                };
                if !self.uniform_condition(n, &w) {
                    return Err(Error::invariant("uniform witness construction failed").at_level(n));
                }
                let tail = p.tail(&w);
                let head_prod = (1..n).fold(S::one(), |a, i| a * (S::one() + self.lambdas[i].clone()));
                let chain = [
                    prev.gauge(&tail),
                    self.bodies[0].gauge(&tail),
                    c.clone() * self.bodies[0].gauge(&w),
                    c.clone() * head_prod * prev.gauge(&w),
                    half.clone() / (S::one() + self.lambdas[n].clone()) * prev.gauge(&w),
                ];
                if !chain.windows(2).all(|p| le(&p[0], &p[1])) {
                    return Err(Error::invariant("uniform condition does not imply the level condition").at_level(n));
                }
                let lhs = prev.gauge(&w);
                let rhs = (S::one() + self.lambdas[n].clone()) * self.bodies[n].gauge(&w);
                if !lhs.approx_eq(&rhs) {
                    return Err(Error::invariant("head dilation fails on a uniform witness").at_level(n));
                }
                count += 1;
            }
        }
        Ok(count)
    }

    /// Bracket on the rescaling constant allowing for levels past the stored
    /// ones. Each extra factor lies in `[1/(1+λ_i), 1]`.
    pub fn rescale_bracket(&self, tail: TailSupport) -> Result<(f64, f64)> {
        let c = self.c_resc.to_f64_lossy();
        match tail {
            TailSupport::Finite => Ok((c, c)),
            TailSupport::SummableBound(bound) if bound.is_finite() && bound >= 0.0 => {
                Ok((c * (-bound).exp(), c))
            }
            TailSupport::SummableBound(_) => Err(Error::Parameter(
                "tail of λ has no finite summability bound".into(),
            )),
        }
    }
}

impl RenormTower<Rational> {
    pub fn to_document(&self) -> TowerDocument {
        let fmt = |v: &[Rational]| v.iter().map(format_rational).collect::<Vec<_>>();
        TowerDocument {
            bodies: self.bodies.iter().map(|b| b.to_document()).collect(),
            constants: TowerConstants {
                lambda: fmt(&self.lambdas[1..]),
                gamma: fmt(&self.gammas[1..]),
                basis_constant: fmt(&self.basis_constants),
                rescale_constant: format_rational(&self.c_resc),
                scales: fmt(&self.scales),
            },
        }
    }

    /// Rebuilds a tower from its document by re-running the construction on
    /// the seed and comparing every stored body and constant.
    pub fn from_document(doc: &TowerDocument) -> Result<Self> {
        let seed = doc
            .bodies
            .first()
            .ok_or_else(|| Error::Parse("tower document has no bodies".into()))?;
        let seed = ConvexBody::from_document(seed)?;
        let lambdas = doc
            .constants
            .lambda
            .iter()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>>>()?;
        let tower = iterate(&seed, &lambdas, doc.bodies.len() - 1)?;
        if tower.to_document() != *doc {
            return Err(Error::Parse("tower document does not match its reconstruction".into()));
        }
        Ok(tower)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerDocument {
    pub bodies: Vec<BodyDocument>,
    pub constants: TowerConstants,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerConstants {
    pub lambda: Vec<String>,
    pub gamma: Vec<String>,
    pub basis_constant: Vec<String>,
    pub rescale_constant: String,
    pub scales: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn q(p: i64, d: i64) -> Rational {
        rat(p, d)
    }

    fn cube() -> ConvexBody<Rational> {
        ConvexBody::unit_cube(2)
    }

    #[test]
    fn degenerate_lambda_gives_back_the_ball() {
        let (tilde, cert) = step(&cube(), 1, &q(0, 1), &q(1, 2)).unwrap();
        assert_eq!(tilde, cube());
        assert_eq!(cert.tail_factor(), q(1, 1));
        // λ = 0: D = S ∩ B
        let d = build_d(&cube(), 1, &q(1, 2), &q(0, 1)).unwrap();
        assert_eq!(d, cube().intersect_slab(&cube(), 1, &q(1, 2)).unwrap());
    }

    #[test]
    fn parameter_ranges() {
        assert!(matches!(step(&cube(), 1, &q(1, 1), &q(1, 1)), Err(Error::Parameter(_))));
        assert!(matches!(step(&cube(), 1, &q(1, 1), &q(0, 1)), Err(Error::Parameter(_))));
        assert!(matches!(step(&cube(), 0, &q(1, 1), &q(1, 2)), Err(Error::Parameter(_))));
        assert!(matches!(step(&cube(), 1, &q(-1, 1), &q(1, 2)), Err(Error::Parameter(_))));
        assert!(matches!(iterate(&cube(), &vec![q(1, 1); 3], 3), Err(Error::Parameter(_))));
    }

    #[test]
    fn d_contains_r_ball_and_hull_is_trivial_when_d_inside() {
        let d = build_d(&cube(), 1, &q(1, 2), &q(1, 1)).unwrap();
        assert!(d.contains_body(&cube().scaled(&q(1, 2)).unwrap()));
        let (c, _) = build_c(&cube(), &cube().scaled(&q(1, 2)).unwrap(), 1, &q(1, 1), &q(2, 3)).unwrap();
        assert_eq!(c, cube());
    }

    #[test]
    fn last_level_is_a_pure_dilation() {
        let (tilde, _) = step(&cube(), 2, &q(1, 3), &q(1, 2)).unwrap();
        assert_eq!(tilde, cube().scaled(&q(4, 3)).unwrap());
    }

    #[test]
    fn active_index_is_homogeneous() {
        let t = iterate(&ConvexBody::unit_cube(3), &[q(1, 2), q(1, 3), q(1, 4)], 3).unwrap();
        let x = vec![q(1, 1), q(1, 5), q(-1, 3)];
        let n0 = t.active_index(&x).unwrap();
        for s in [q(3, 1), q(-1, 7)] {
            assert_eq!(t.active_index(&scale(&x, &s)).unwrap(), n0);
        }
        assert!(t.active_index(&[q(0, 1), q(0, 1), q(0, 1)]).is_err());
        assert_eq!(t.active_index(&[q(1, 1), q(0, 1), q(0, 1)]).unwrap(), 1);
    }

    #[test]
    fn tower_document_round_trip() {
        let t = iterate(&cube(), &[q(1, 1), q(1, 2)], 2).unwrap();
        let doc = t.to_document();
        let json = serde_json::to_string(&doc).unwrap();
        let back: TowerDocument = serde_json::from_str(&json).unwrap();
        let t2 = RenormTower::from_document(&back).unwrap();
        assert_eq!(t2.to_document(), doc);
    }

    #[test]
    fn rescale_bracket_rejects_divergent_tails() {
        let t = iterate(&cube(), &[q(1, 1)], 1).unwrap();
        assert_eq!(t.rescale_bracket(TailSupport::Finite).unwrap(), (10.0 / 11.0, 10.0 / 11.0));
        let (lo, hi) = t.rescale_bracket(TailSupport::SummableBound(0.1)).unwrap();
        assert!(lo < hi);
        assert!(t.rescale_bracket(TailSupport::SummableBound(f64::INFINITY)).is_err());
    }
}
