//! The verification suite run by `verify`.
//!
//! Every check produces exactly one record. Exact checks report rational
//! margins, floating ones decimal margins; a negative margin is a violation.
//! Each check draws from its own random stream so that adding or removing a
//! check leaves the samples of the others unchanged.

use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use rand::Rng;
use renorm::glue::PhiKind;
use renorm::oracle::{
    max_gauge, Component, EuclideanGauge, GaugeOracle, Infconv, InfconvSettings, Oracle, PolytopeGauge,
    ScaledGauge, TailGauge,
};
use renorm::scalar::format_rational;
use renorm::tower::small_tail_witness;
use renorm::{rat, ExactTower, Glue, Projection, Rational, Scalar};

use crate::config::Mode;
use crate::pipeline::{ExactRun, Pipeline, NUMERIC_BUDGET};
use crate::report::{fmt_f64, fmt_vec_f64, CheckRecord, Status, VerificationReport, Worst};
use crate::sampling::{random_points, random_rationals, rng, sample_tail_vectors};
use crate::CliError;

/// Allowance for floating rounding when comparing an oracle's error with its
/// reported gap.
pub const ROUNDING_SLACK: f64 = 64.0 * f64::EPSILON;

const RADIUS: (i64, i64) = (1, 2);

type Outcome = Result<CheckRecord, CliError>;

struct Spec {
    id: &'static str,
    anchor: &'static str,
    stream: u64,
}

const SPECS: &[Spec] = &[
    Spec { id: "lemma.hull-trace", anchor: "hull-trace-bound", stream: 1 },
    Spec { id: "corollary.identities", anchor: "tilde-set-relations", stream: 2 },
    Spec { id: "proposition.sandwich", anchor: "step-sandwich", stream: 3 },
    Spec { id: "proposition.tail-dilation", anchor: "step-tail-dilation", stream: 4 },
    Spec { id: "proposition.head-dilation", anchor: "step-head-dilation", stream: 5 },
    Spec { id: "tower.eq1-sandwich", anchor: "level-sandwich", stream: 6 },
    Spec { id: "tower.eq2-tail", anchor: "level-tail-dilation", stream: 7 },
    Spec { id: "tower.eq3-head", anchor: "level-head-dilation", stream: 8 },
    Spec { id: "tower.eq4-uniform", anchor: "uniform-small-tail", stream: 9 },
    Spec { id: "fact.head-ratio", anchor: "rescaled-head-ratio", stream: 10 },
    Spec { id: "fact.tail-ratio", anchor: "rescaled-tail-ratio", stream: 11 },
    Spec { id: "planner.coupling", anchor: "level-coupling", stream: 12 },
    Spec { id: "planner.budget", anchor: "distortion-budget", stream: 13 },
    Spec { id: "chain.tail-levels", anchor: "tail-chain-levels", stream: 14 },
    Spec { id: "chain.final-vs-sup", anchor: "tail-chain-final", stream: 15 },
    Spec { id: "glue.sandwich", anchor: "final-sandwich", stream: 16 },
    Spec { id: "theorem.distortion", anchor: "tail-distortion-bound", stream: 17 },
    Spec { id: "root.bracket", anchor: "root-bracket", stream: 18 },
    Spec { id: "glue.gradient", anchor: "implicit-gradient", stream: 19 },
    Spec { id: "glue.euler", anchor: "euler-identity", stream: 20 },
    Spec { id: "glue.nondegenerate", anchor: "root-slope", stream: 21 },
    Spec { id: "glue.convexity", anchor: "final-convexity", stream: 22 },
    Spec { id: "glue.lfc", anchor: "local-finite-coordinates", stream: 23 },
    Spec { id: "polyhedral.final-body", anchor: "polyhedral-final-body", stream: 24 },
    Spec { id: "polyhedral.tail-bound", anchor: "polyhedral-tail-bound", stream: 25 },
    Spec { id: "oracle.max-gauge", anchor: "oracle-intersection", stream: 26 },
    Spec { id: "oracle.infconv", anchor: "oracle-hull", stream: 27 },
    Spec { id: "oracle.tower", anchor: "oracle-tower", stream: 28 },
];

/// Runs every check for the pipeline's mode and seed.
pub fn run_suite(p: &Pipeline) -> VerificationReport {
    let mut report = VerificationReport::new(p.plan_document());
    for spec in SPECS {
        let ctx = Ctx { p, seed: p.config.random_seed, stream: spec.stream };
        let outcome = match ctx.applicable(spec.id) {
            Err(reason) => Ok(skipped(reason)),
            Ok(()) => ctx.run(spec.id),
        };
        let mut record = outcome.unwrap_or_else(|e| CheckRecord {
            id: String::new(),
            anchor: String::new(),
            status: Status::Fail,
            margin: None,
            witness: None,
            checked: 0,
            detail: format!("error: {e}"),
        });
        record.id = spec.id.to_string();
        record.anchor = spec.anchor.to_string();
        report.push(record);
    }
    report
}

fn skipped(reason: &str) -> CheckRecord {
    CheckRecord {
        id: String::new(),
        anchor: String::new(),
        status: Status::Skipped,
        margin: None,
        witness: None,
        checked: 0,
        detail: reason.to_string(),
    }
}

fn exact_record(w: Worst<Rational>, detail: String) -> CheckRecord {
    let status = match &w.margin {
        None => Status::Skipped,
        Some(m) if m.is_negative() => Status::Fail,
        Some(_) => Status::Pass,
    };
    CheckRecord {
        id: String::new(),
        anchor: String::new(),
        status,
        margin: w.margin.as_ref().map(format_rational),
        witness: w.witness,
        checked: w.count,
        detail: if status == Status::Skipped { format!("nothing to check; {detail}") } else { detail },
    }
}

/// Passes when the worst margin is at least `floor`.
fn float_record(w: Worst<f64>, floor: f64, strict: bool, detail: String) -> CheckRecord {
    let status = match w.margin {
        None => Status::Skipped,
        Some(m) if m.is_nan() => Status::Fail,
        Some(m) if (strict && m > floor) || (!strict && m >= floor) => Status::Pass,
        Some(_) => Status::Fail,
    };
    CheckRecord {
        id: String::new(),
        anchor: String::new(),
        status,
        margin: w.margin.map(fmt_f64),
        witness: w.witness,
        checked: w.count,
        detail: if status == Status::Skipped { format!("nothing to check; {detail}") } else { detail },
    }
}

fn qv(v: &[Rational]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

fn fv(v: &[Rational]) -> Vec<f64> {
    v.iter().map(|c| c.to_f64_lossy()).collect()
}

fn one() -> Rational {
    Rational::one()
}

fn radius() -> Rational {
    rat(RADIUS.0, RADIUS.1)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// `1 + λ(1+γ)/2`.
fn mid(lambda: &Rational, gamma: &Rational) -> Rational {
    one() + lambda * (one() + gamma) / rat(2, 1)
}

/// Rescaling factors `s_n` with `|||·|||_n = s_n ‖·‖_n`, rebuilt from `λ` and `γ`.
fn scales(t: &ExactTower) -> Vec<Rational> {
    let l = t.levels();
    let mut c = one();
    for i in 1..=l {
        c = c * (one() + t.lambda(i) * t.gamma(i)) / mid(t.lambda(i), t.gamma(i));
    }
    let mut out = vec![c];
    for i in 1..=l {
        let next = out[i - 1].clone() * mid(t.lambda(i), t.gamma(i));
        out.push(next);
    }
    out
}

/// `½ ∏ (1+λ_i)^{-1}` over the stored levels.
fn uniform_threshold(t: &ExactTower) -> Rational {
    let prod = (1..=t.levels()).fold(one(), |a, i| a * (one() + t.lambda(i)));
    one() / (rat(2, 1) * prod)
}

/// Random rational vectors with zero head `P_N x = 0`.
fn rational_tail_vectors(dim: usize, n: usize, count: usize, r: &mut impl Rng) -> Vec<Vec<Rational>> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut v = random_rationals(dim, 1, r).pop().expect("one vector");
        for c in v.iter_mut().take(n) {
            *c = Rational::zero();
        }
        if v.iter().any(|c| !c.is_zero()) {
            out.push(v);
        }
    }
    out
}

struct Ctx<'a> {
    p: &'a Pipeline,
    seed: u64,
    stream: u64,
}

impl<'a> Ctx<'a> {
    fn rng(&self) -> rand_chacha::ChaCha8Rng {
        rng(self.seed, 100 + self.stream)
    }

    fn exact(&self) -> Result<&'a ExactRun, CliError> {
        self.p.exact.as_ref().ok_or_else(|| CliError::Run("no exact tower".into()))
    }

    fn glue(&self) -> Result<&'a Glue, CliError> {
        self.p.glue().ok_or_else(|| CliError::Run("no glued family".into()))
    }

    fn dim(&self) -> usize {
        self.p.dim()
    }

    fn samples(&self) -> &crate::config::Samples {
        &self.p.config.samples
    }

    fn tol(&self) -> &crate::config::Tolerances {
        &self.p.config.tolerances
    }

    fn applicable(&self, id: &str) -> Result<(), &'static str> {
        let mode = self.p.config.mode;
        let family = id.split('.').next().unwrap_or_default();
        let exact = self.p.exact.is_some();
        match family {
            "oracle" if id == "oracle.tower" && mode != Mode::Oracle => Err("numeric tower is built in oracle mode only"),
            "oracle" => Ok(()),
            _ if !exact => Err("needs an exact polytope seed"),
            "chain" if id == "chain.final-vs-sup" && mode == Mode::Oracle => Err("no glued norm in oracle mode"),
            "glue" | "theorem" | "root" if mode == Mode::Oracle => Err("no glued norm in oracle mode"),
            "glue" if mode == Mode::Polyhedral && matches!(id, "glue.gradient" | "glue.euler" | "glue.lfc") => {
                Err("piecewise-linear family is not differentiable")
            }
            "polyhedral" if mode != Mode::Polyhedral => Err("polyhedral mode only"),
            _ => Ok(()),
        }
    }

    fn run(&self, id: &str) -> Outcome {
        match id {
            "lemma.hull-trace" => self.hull_trace(),
            "corollary.identities" => self.corollary(),
            "proposition.sandwich" | "proposition.tail-dilation" | "proposition.head-dilation" => {
                self.proposition(id)
            }
            "tower.eq1-sandwich" => self.eq1(),
            "tower.eq2-tail" => self.eq2(),
            "tower.eq3-head" => self.eq3(),
            "tower.eq4-uniform" => self.eq4(),
            "fact.head-ratio" => self.head_ratio(),
            "fact.tail-ratio" => self.tail_ratio(),
            "planner.coupling" => self.coupling(),
            "planner.budget" => self.budget(),
            "chain.tail-levels" => self.chain_levels(),
            "chain.final-vs-sup" => self.chain_final(),
            "glue.sandwich" => self.glue_sandwich(),
            "theorem.distortion" => self.distortion(),
            "root.bracket" => self.root_bracket(),
            "glue.gradient" | "glue.euler" | "glue.nondegenerate" => self.gradient(id),
            "glue.convexity" => self.convexity(),
            "glue.lfc" => self.lfc(),
            "polyhedral.final-body" | "polyhedral.tail-bound" => self.polyhedral(id),
            "oracle.max-gauge" => self.oracle_max(),
            "oracle.infconv" => self.oracle_infconv(),
            "oracle.tower" => self.oracle_tower(),
            other => Err(CliError::Run(format!("unknown check {other}"))),
        }
    }

    /// Vertices of `C ∩ X^k` stay within `1 + λK/(K+1−R)` in the old norm.
    fn hull_trace(&self) -> Outcome {
        let t = &self.exact()?.tower;
        let mut w = Worst::default();
        for n in 1..=t.levels().min(self.dim() - 1) {
            let b = t.body(n - 1);
            let k = t.basis_constant(n - 1);
            let bound = one() + t.lambda(n) * k / (k + one() - radius());
            for v in t.certificate(n).c.section_vertices(n)? {
                w.see(&bound - b.gauge(&v), || qv(&v));
            }
        }
        Ok(exact_record(w, "vertices of the hull's tail section at every level".into()))
    }

    /// `B ⊆ B̃ ⊆ (1+λ)B`, `S∩B̃ = S∩(1+λ)B`, `X^k∩B̃ = X^k∩(1+λγ)B`.
    fn corollary(&self) -> Outcome {
        let t = &self.exact()?.tower;
        let mut w = Worst::default();
        let mut failures = Vec::new();
        for n in 1..=t.levels() {
            let (b, tilde) = (t.body(n - 1), t.body(n));
            let lam = t.lambda(n);
            let big = b.scaled(&(one() + lam))?;
            for v in b.vertices() {
                w.see(one() - tilde.gauge(v), || qv(v));
            }
            for v in tilde.vertices() {
                w.see(one() + lam - b.gauge(v), || qv(v));
            }
            if !tilde.intersect_slab(b, n, &radius())?.same_set(&big.intersect_slab(b, n, &radius())?) {
                failures.push(format!("slab identity at level {n}"));
            }
            if n < self.dim() {
                let piece = b.scaled(&(one() + lam * t.gamma(n)))?;
                if !tilde.section(n)?.same_set(&piece.section(n)?) {
                    failures.push(format!("tail section identity at level {n}"));
                }
            }
        }
        let mut rec = exact_record(w, "containments on vertices; slab and tail-section identities as sets".into());
        if !failures.is_empty() {
            rec.status = Status::Fail;
            rec.detail = failures.join("; ");
        }
        Ok(rec)
    }

    /// One surgery on the seed at each `k < M` with a random `λ ∈ (0, 2]`.
    fn proposition(&self, id: &str) -> Outcome {
        let seed = self.exact()?.tower.body(0);
        let mut r = rng(self.seed, 100 + 3);
        let mut w = Worst::default();
        let mut lambdas = Vec::new();
        let s = self.samples();
        for k in 1..self.dim() {
            let lam = rat(r.random_range(1..=8), 4);
            let (tilde, cert) = renorm::tower::step_with_probes(seed, k, &lam, &radius(), &[])?;
            let factor = one() + &lam;
            lambdas.push(format_rational(&lam));
            match id {
                "proposition.sandwich" => {
                    let mut pts: Vec<Vec<Rational>> = seed.vertices().to_vec();
                    pts.extend(tilde.vertices().iter().cloned());
                    pts.extend(random_rationals(self.dim(), s.random, &mut r));
                    for x in &pts {
                        let (old, new) = (seed.gauge(x), tilde.gauge(x));
                        let m = (&old - &new).min(&factor * &new - &old) / &old;
                        w.see(m, || qv(x));
                    }
                }
                "proposition.tail-dilation" => {
                    let tf = one() + &lam * &cert.gamma;
                    for v in tilde.section_vertices(k)? {
                        let d = (seed.gauge(&v) - &tf * tilde.gauge(&v)).abs();
                        w.see(-d, || qv(&v));
                    }
                }
                _ => {
                    let rho = radius() / &factor;
                    let p = Projection::new(k);
                    let mut made = 0;
                    for x in random_rationals(self.dim(), 4 * s.witnesses, &mut r) {
                        if made == s.witnesses {
                            break;
                        }
                        let Some(y) = small_tail_witness(seed, k, &rho, &x) else { continue };
                        made += 1;
                        let old = seed.gauge(&y);
                        let hyp = &rho * &old - seed.gauge(&p.tail(&y));
                        let d = (&old - &factor * tilde.gauge(&y)).abs();
                        w.see((hyp / &old).min(-d), || qv(&y));
                    }
                }
            }
        }
        Ok(exact_record(w, format!("k = 1..{}, λ = [{}]", self.dim() - 1, lambdas.join(", "))))
    }

    fn eq1(&self) -> Outcome {
        let t = &self.exact()?.tower;
        let mut r = self.rng();
        let mut w = Worst::default();
        for n in 1..=t.levels() {
            let factor = one() + t.lambda(n);
            let mut pts: Vec<Vec<Rational>> = t.body(n - 1).vertices().to_vec();
            pts.extend(t.body(n).vertices().iter().cloned());
            pts.extend(random_rationals(self.dim(), self.samples().random, &mut r));
            for x in &pts {
                let (old, new) = (t.norm(n - 1, x), t.norm(n, x));
                w.see((&old - &new).min(&factor * &new - &old) / &old, || qv(x));
            }
        }
        Ok(exact_record(w, "‖x‖_n ≤ ‖x‖_{n-1} ≤ (1+λ_n)‖x‖_n on vertices and random rationals".into()))
    }

    fn eq2(&self) -> Outcome {
        let t = &self.exact()?.tower;
        let mut w = Worst::default();
        for n in 1..=t.levels().min(self.dim() - 1) {
            let tf = one() + t.lambda(n) * t.gamma(n);
            let mut pts = t.body(n).section_vertices(n)?;
            pts.extend(t.body(n - 1).section_vertices(n)?);
            for v in &pts {
                w.see(-(t.norm(n - 1, v) - &tf * t.norm(n, v)).abs(), || qv(v));
            }
        }
        Ok(exact_record(w, "exact equality on vertices of both tail sections".into()))
    }

    fn eq3(&self) -> Outcome {
        let t = &self.exact()?.tower;
        let mut r = self.rng();
        let mut w = Worst::default();
        let want = self.samples().witnesses;
        for n in 1..=t.levels() {
            let prev = t.body(n - 1);
            let factor = one() + t.lambda(n);
            let rho = radius() / &factor;
            let p = Projection::new(n);
            let mut made = 0;
            for x in random_rationals(self.dim(), 4 * want, &mut r) {
                if made == want {
                    break;
                }
                let Some(y) = small_tail_witness(prev, n, &rho, &x) else { continue };
                made += 1;
                let old = prev.gauge(&y);
                let hyp = &rho * &old - prev.gauge(&p.tail(&y));
                let d = (&old - &factor * t.norm(n, &y)).abs();
                w.see((hyp / &old).min(-d), || qv(&y));
            }
        }
        Ok(exact_record(w, format!("{want} constructed witnesses per level")))
    }

    /// Witnesses of the uniform condition satisfy the level hypothesis and the
    /// head dilation.
    fn eq4(&self) -> Outcome {
        let t = &self.exact()?.tower;
        let mut r = self.rng();
        let mut w = Worst::default();
        let want = self.samples().witnesses;
        let c = uniform_threshold(t);
        let b0 = t.body(0);
        for n in 1..=t.levels() {
            let prev = t.body(n - 1);
            let factor = one() + t.lambda(n);
            let rho = radius() / &factor;
            let p = Projection::new(n);
            let mut made = 0;
            for x in random_rationals(self.dim(), 4 * want, &mut r) {
                if made == want {
                    break;
                }
                let Some(y) = small_tail_witness(b0, n, &c, &x) else { continue };
                made += 1;
                let base = b0.gauge(&y);
                let uniform = (&c * &base - b0.gauge(&p.tail(&y))) / &base;
                let old = prev.gauge(&y);
                let level = (&rho * &old - prev.gauge(&p.tail(&y))) / &old;
                let d = (&old - &factor * t.norm(n, &y)).abs();
                w.see(uniform.min(level).min(-d), || qv(&y));
            }
        }
        Ok(exact_record(w, format!("{want} witnesses per level; threshold c = {}", format_rational(&c))))
    }

    fn head_ratio(&self) -> Outcome {
        let t = &self.exact()?.tower;
        let s = scales(t);
        let c = uniform_threshold(t);
        let mut r = self.rng();
        let mut w = Worst::default();
        let m = self.dim();
        for x in random_rationals(m, self.samples().random, &mut r) {
            let base = t.norm(0, &x);
            let mut n0 = m;
            for n in (1..m).rev() {
                if t.norm(0, &Projection::new(n).tail(&x)) <= &c * &base {
                    n0 = n;
                } else {
                    break;
                }
            }
            for n in n0..=t.levels() {
                let ratio = mid(t.lambda(n), t.gamma(n)) / (one() + t.lambda(n));
                let lhs = &s[n] * t.norm(n, &x);
                let rhs = ratio * &s[n - 1] * t.norm(n - 1, &x);
                w.see(-(lhs - rhs).abs(), || qv(&x));
            }
        }
        Ok(exact_record(w, "|||x|||_n = (1+λ_n(1+γ_n)/2)/(1+λ_n)·|||x|||_{n-1} for n ≥ n₀(x)".into()))
    }

    fn tail_ratio(&self) -> Outcome {
        let t = &self.exact()?.tower;
        let s = scales(t);
        let mut r = self.rng();
        let mut w = Worst::default();
        let mismatch: Vec<usize> = (0..=t.levels()).filter(|&n| s[n] != *t.scale(n)).collect();
        for big_n in 1..self.dim() {
            for x in rational_tail_vectors(self.dim(), big_n, self.samples().random, &mut r) {
                for n in 1..=big_n.min(t.levels()) {
                    let ratio = mid(t.lambda(n), t.gamma(n)) / (one() + t.lambda(n) * t.gamma(n));
                    let lhs = &s[n] * t.norm(n, &x);
                    let rhs = ratio * &s[n - 1] * t.norm(n - 1, &x);
                    w.see(-(lhs - rhs).abs(), || qv(&x));
                }
            }
        }
        let mut rec = exact_record(
            w,
            format!("x ∈ X^N, n ≤ N; rescaling constant {}", format_rational(&s[0])),
        );
        if !mismatch.is_empty() {
            rec.status = Status::Fail;
            rec.detail = format!("stored rescaling factors differ at levels {mismatch:?}");
        }
        Ok(rec)
    }

    /// `(1+δ_n)·r_{n+1} ≤ 1−δ_n` with `r = (1+λγ)/(1+λ(1+γ)/2)`.
    fn coupling(&self) -> Outcome {
        let plan = &self.exact()?.plan;
        let mut w = Worst::default();
        for n in 0..plan.levels() {
            let (l, g) = (&plan.lambda[n], &plan.gamma[n]);
            let ratio = (one() + l * g) / mid(l, g);
            let d = &plan.delta[n];
            w.see(one() - d - (one() + d) * ratio, || vec![n.to_string()]);
        }
        for n in 1..plan.delta.len() {
            let d = &plan.delta[n - 1] - &plan.delta[n];
            if d.is_negative() {
                w.see(d, || vec![n.to_string()]);
            }
        }
        Ok(exact_record(w, "every level n < L; δ nonincreasing".into()))
    }

    /// `Π_N < 1+ε_N`, `Π_N^{-1} ≥ 1−ε_N`, `(1+δ_N)/(1−δ_N)·Π_N ≤ 1+ε_N`.
    fn budget(&self) -> Outcome {
        let plan = &self.exact()?.plan;
        let mut w = Worst::default();
        let mut strict_ok = true;
        for n in 0..=plan.levels() {
            let prod = plan.lambda.iter().skip(n).fold(one(), |a, l| a * (one() + l));
            let eps = &plan.epsilon[n];
            let d = &plan.delta[n];
            strict_ok &= prod < one() + eps;
            let upper = one() + eps - (one() + d) / (one() - d) * &prod;
            let lower = one() / &prod - (one() - eps);
            w.see(upper.min(lower), || vec![n.to_string()]);
        }
        let mut rec = exact_record(w, format!("N = 0..{}", plan.levels()));
        if !strict_ok {
            rec.status = Status::Fail;
            rec.detail = "a tail product reaches 1+ε_N".into();
        }
        Ok(rec)
    }

    /// On `X^N`: `|||·|||_N ≤ |||·|||_∞ ≤ Π_N|||·|||_N` and `|||·|||_N ≤ ‖·‖ ≤ Π_N|||·|||_N`.
    fn chain_levels(&self) -> Outcome {
        let t = &self.exact()?.tower;
        let s = scales(t);
        let mut r = self.rng();
        let mut w = Worst::default();
        for big_n in 0..=t.levels().min(self.dim() - 1) {
            let prod = (big_n + 1..=t.levels()).fold(one(), |a, i| a * (one() + t.lambda(i)));
            for x in rational_tail_vectors(self.dim(), big_n, self.samples().random, &mut r) {
                let resc: Vec<Rational> = (0..=t.levels()).map(|n| &s[n] * t.norm(n, &x)).collect();
                let sup = resc.iter().max().expect("levels").clone();
                let at = &resc[big_n];
                let base = t.norm(0, &x);
                let m = [
                    &sup - at,
                    &prod * at - &sup,
                    &base - at,
                    &prod * at - &base,
                ]
                .into_iter()
                .min()
                .expect("four margins");
                w.see(m / &base, || qv(&x));
            }
        }
        Ok(exact_record(w, "exact on random rational tail vectors for every N ≤ L".into()))
    }

    fn chain_final(&self) -> Outcome {
        let g = self.glue()?;
        let plan = &self.exact()?.plan;
        let tol = self.tol().gauge;
        let mut w = Worst::default();
        for big_n in 0..=g.top().min(self.dim() - 1) {
            let d = plan.delta[big_n].to_f64_lossy();
            let factor = (1.0 + d) / (1.0 - d);
            for x in sample_tail_vectors(self.dim(), big_n, self.samples().tail, self.seed ^ self.stream)? {
                let rho = g.final_gauge(&x)?;
                let sup = g.sup_norm(&x);
                let m = ((rho - sup) / sup).min((factor * sup - rho) / sup);
                w.see(tol + m, || fmt_vec_f64(&x));
            }
        }
        Ok(float_record(w, 0.0, false, format!("|||·|||_∞ ≤ |||·||| ≤ (1+δ_N)/(1−δ_N)|||·|||_∞ on X^N, tolerance {tol:e}")))
    }

    fn glue_sandwich(&self) -> Outcome {
        let g = self.glue()?;
        let plan = &self.exact()?.plan;
        let tol = self.tol().gauge;
        let d = plan.delta[0].to_f64_lossy();
        let factor = (1.0 + d) / (1.0 - d);
        let mut r = self.rng();
        let mut w = Worst::default();
        for x in random_points(self.dim(), self.samples().random, &mut r) {
            let rho = g.final_gauge(&x)?;
            let sup = g.sup_norm(&x);
            w.see(tol + ((rho - sup) / sup).min((factor * sup - rho) / sup), || fmt_vec_f64(&x));
        }
        Ok(float_record(w, 0.0, false, format!("random points, tolerance {tol:e}")))
    }

    /// `| |||x||| − ‖x‖ | ≤ ε_N ‖x‖` on sampled tail vectors, with a margin
    /// strictly above the gauge tolerance.
    fn distortion(&self) -> Outcome {
        let g = self.glue()?;
        let plan = &self.exact()?.plan;
        let tol = self.tol().gauge;
        let mut w = Worst::default();
        let mut per_level = Vec::new();
        for big_n in 0..=g.top().min(self.dim() - 1) {
            let eps = plan.epsilon[big_n].to_f64_lossy();
            let mut lw = Worst::default();
            for x in sample_tail_vectors(self.dim(), big_n, self.samples().tail, self.seed ^ self.stream)? {
                let rho = g.final_gauge(&x)?;
                let base = g.seed_norm(&x);
                let m = eps - (rho - base).abs() / base;
                lw.see(m, || fmt_vec_f64(&x));
                w.see(m, || fmt_vec_f64(&x));
            }
            per_level.push(format!("N={big_n}: {}", lw.margin.map(fmt_f64).unwrap_or_default()));
        }
        Ok(float_record(w, tol, true, format!("worst relative margin per level [{}]", per_level.join(", "))))
    }

    fn root_bracket(&self) -> Outcome {
        let g = self.glue()?;
        let plan = &self.exact()?.plan;
        let tol = self.tol().root;
        let d = plan.delta[0].to_f64_lossy();
        let factor = (1.0 + d) / (1.0 - d);
        let mut r = self.rng();
        let mut w = Worst::default();
        let mut max_iter = 0;
        for x in random_points(self.dim(), self.samples().random, &mut r) {
            let (rho, diag) = g.final_gauge_with_diagnostics(&x)?;
            let diag = diag.ok_or_else(|| CliError::Run("no diagnostics at a nonzero point".into()))?;
            let sup = g.sup_norm(&x);
            let inside = ((rho - sup) / sup).min((factor * sup - rho) / sup) + tol;
            let error = diag.residual / diag.d2psi.abs() / rho;
            let iters = if diag.iterations() <= 200 { 0.0 } else { -1.0 };
            max_iter = max_iter.max(diag.iterations());
            w.see(inside.min(tol - error).min(iters), || fmt_vec_f64(&x));
        }
        Ok(float_record(
            w,
            0.0,
            false,
            format!("root in the bracket, estimated root error ≤ {tol:e}·ρ, at most {max_iter} iterations (limit 200)"),
        ))
    }

    fn gradient(&self, id: &str) -> Outcome {
        let g = self.glue()?;
        if g.kind() != PhiKind::Smooth {
            return Ok(skipped("piecewise-linear family"));
        }
        let tol = self.tol();
        let h = tol.finite_difference_step;
        let mut r = rng(self.seed, 100 + 19);
        let mut w = Worst::default();
        for x in random_points(self.dim(), self.samples().gradient, &mut r) {
            let e = g.evaluate(&x)?;
            let grad = e.gradient.clone().ok_or_else(|| CliError::Run("missing gradient".into()))?;
            let m = match id {
                "glue.gradient" => {
                    let mut err: f64 = 0.0;
                    for i in 0..x.len() {
                        let mut a = x.clone();
                        let mut b = x.clone();
                        a[i] += h;
                        b[i] -= h;
                        let fd = (g.final_gauge(&a)? - g.final_gauge(&b)?) / (2.0 * h);
                        err = err.max((fd - grad[i]).abs());
                    }
                    let scale = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    tol.gradient - err / scale
                }
                "glue.euler" => {
                    let dot: f64 = grad.iter().zip(&x).map(|(a, b)| a * b).sum();
                    tol.euler - (dot - e.value).abs() / e.value
                }
                _ => {
                    let d2 = e.diagnostics.map(|d| d.d2psi).unwrap_or(0.0);
                    -d2
                }
            };
            w.see(m, || fmt_vec_f64(&x));
        }
        let detail = match id {
            "glue.gradient" => format!("central differences with step {h:e}, relative tolerance {:e}", tol.gradient),
            "glue.euler" => format!("⟨∇|||x|||, x⟩ = |||x|||, tolerance {:e}", tol.euler),
            _ => "margin is −D₂Ψ at the root".into(),
        };
        let strict = id == "glue.nondegenerate";
        Ok(float_record(w, 0.0, strict, detail))
    }

    fn convexity(&self) -> Outcome {
        let g = self.glue()?;
        let tol = self.tol().gauge;
        let mut r = self.rng();
        let mut w = Worst::default();
        let pts = random_points(self.dim(), 2 * self.samples().random, &mut r);
        for pair in pts.chunks(2) {
            let (x, y) = (&pair[0], &pair[1]);
            let mid_pt: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
            let (fx, fy, fm) = (g.final_gauge(x)?, g.final_gauge(y)?, g.final_gauge(&mid_pt)?);
            let scale = fx.max(fy);
            let convex = (0.5 * (fx + fy) - fm) / scale;
            let t = 1.0 + r.random::<f64>() * 3.0;
            let tx: Vec<f64> = x.iter().map(|v| -t * v).collect();
            let homog = -rel(g.final_gauge(&tx)?, t * fx);
            w.see(tol + convex.min(homog), || fmt_vec_f64(x));
        }
        Ok(float_record(w, 0.0, false, format!("midpoint convexity and |||−tx||| = t|||x|||, tolerance {tol:e}")))
    }

    /// Near each point the final norm only sees the window levels, and every
    /// level past the window is certified to vanish.
    fn lfc(&self) -> Outcome {
        let g = self.glue()?;
        let tol = self.tol().gauge;
        let mut r = self.rng();
        let mut w = Worst::default();
        let mut levels_seen = 0;
        for x in random_points(self.dim(), self.samples().witnesses, &mut r) {
            let wit = g.lfc_witness(&x)?;
            let rho = g.final_gauge(&x)?;
            let set = g.active_set(&x.iter().map(|v| v / rho).collect::<Vec<_>>())?;
            for (n, bound) in &set.certified {
                let slack = one() - &g.plan().delta[*n] - bound;
                w.see(slack.to_f64_lossy(), || fmt_vec_f64(&x));
            }
            levels_seen = levels_seen.max(wit.levels.len());
            for _ in 0..4 {
                let dir = random_points(self.dim(), 1, &mut r).pop().expect("one point");
                let scale = wit.radius * 0.99 / g.seed_norm(&dir);
                let y: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + scale * b).collect();
                let full = g.final_gauge(&y)?;
                let restricted = g.final_gauge_restricted(&y, &wit.levels)?;
                w.see(tol - rel(full, restricted), || fmt_vec_f64(&y));
            }
        }
        Ok(float_record(
            w,
            0.0,
            false,
            format!("restricted and full norms agree within the witness radius; at most {levels_seen} window levels"),
        ))
    }

    fn polyhedral(&self, id: &str) -> Outcome {
        let g = self.glue()?;
        let fin = self.p.polyhedral_final()?.ok_or_else(|| CliError::Run("no polyhedral final body".into()))?;
        let body = &fin.body;
        let mut w = Worst::default();
        if id == "polyhedral.final-body" {
            let tol = self.tol().gauge;
            for v in body.vertices() {
                let exact = g.exact_gauge(v)?;
                let float = g.final_gauge(&fv(v))?;
                let mut m = -(exact.clone() - one()).abs();
                if rel(float, exact.to_f64_lossy()) > tol {
                    m = m.min(rat(-1, 1));
                }
                w.see(m, || qv(v));
            }
            return Ok(exact_record(
                w,
                format!(
                    "{} vertices, {} facets after {} cut rounds; vertex gauges exactly 1",
                    body.vertices().len(),
                    body.facets().len(),
                    fin.rounds
                ),
            ));
        }
        let mut per_level = Vec::new();
        for big_n in 0..=g.top().min(self.dim() - 1) {
            let c = g.certify_tail_bound(body, big_n)?;
            let m = c.upper_margin.clone().min(c.lower_margin.clone());
            per_level.push(format!("N={big_n}: {} vertices, margin {}", c.vertices, format_rational(&m)));
            w.see(m, || vec![big_n.to_string()]);
        }
        Ok(exact_record(w, per_level.join("; ")))
    }

    /// Step pieces of the first level (or the Euclidean seed) as oracles.
    fn first_level(&self) -> Result<(Oracle, Rational, Rational, Option<renorm::tower::StepCertificate<Rational>>), CliError> {
        match &self.p.exact {
            Some(run) => {
                let cert = run.tower.certificate(1).clone();
                let b: Oracle = Arc::new(PolytopeGauge::from_body(run.tower.body(0)));
                Ok((b, cert.lambda.clone(), cert.gamma.clone(), Some(cert)))
            }
            None => {
                let b: Oracle = Arc::new(EuclideanGauge::unit(self.dim()));
                // K = 1 for the Euclidean norm, so γ = 1/(1 + 1/2)
                Ok((b, self.p.lambda[0].clone(), rat(2, 3), None))
            }
        }
    }

    fn oracle_points(&self) -> Vec<Vec<f64>> {
        let mut r = self.rng();
        random_points(self.dim(), self.samples().oracle, &mut r)
    }

    fn oracle_max(&self) -> Outcome {
        let (b, lam, _, cert) = self.first_level()?;
        let lf = lam.to_f64_lossy();
        let big: Oracle = Arc::new(ScaledGauge::new(b.clone(), 1.0 + lf)?);
        let slab: Oracle = Arc::new(TailGauge::new(b.clone(), 1, 0.5)?);
        let d = max_gauge(big, slab)?;
        let mut w = Worst::default();
        let gap = match &cert {
            Some(c) => {
                let exact = PolytopeGauge::from_body(&c.d);
                self.compare(&mut w, d.as_ref(), &|x: &[f64]| Ok(exact.value(x)?))?
            }
            None => {
                let p = Projection::new(1);
                let reference = |x: &[f64]| Ok((b.value(x)? / (1.0 + lf)).max(b.value(&p.tail(x))? / 0.5));
                self.compare(&mut w, d.as_ref(), &reference)?
            }
        };
        Ok(self.oracle_record(w, gap, "D = (1+λ)B ∩ slab as a max of gauges"))
    }

    fn oracle_infconv(&self) -> Outcome {
        let (b, lam, gamma, cert) = self.first_level()?;
        let lf = lam.to_f64_lossy();
        let gf = gamma.to_f64_lossy();
        let settings = InfconvSettings::default();
        let mut w = Worst::default();
        let (gap, what) = match cert {
            Some(cert) => {
                let big: Oracle = Arc::new(ScaledGauge::new(b.clone(), 1.0 + lf)?);
                let slab: Oracle = Arc::new(TailGauge::new(b.clone(), 1, 0.5)?);
                let d = max_gauge(big, slab)?;
                let c: Oracle = Arc::new(Infconv::new(vec![Component::full(d), Component::full(b.clone())], settings)?);
                let piece: Oracle = Arc::new(ScaledGauge::new(b.clone(), 1.0 + lf * gf)?);
                let tilde = Infconv::new(vec![Component::full(c.clone()), Component::section(piece, 1)], settings)?;
                let ec = PolytopeGauge::from_body(&cert.c);
                let et = PolytopeGauge::from_body(&cert.tilde);
                let g1 = self.compare(&mut w, c.as_ref(), &|x: &[f64]| Ok(ec.value(x)?))?;
                let g2 = self.compare(&mut w, &tilde, &|x: &[f64]| Ok(et.value(x)?))?;
                (g1.max(g2), "hulls C and B̃ of the first step against exact gauges")
            }
            None => {
                // conv(B ∪ B) = B and conv(B ∪ 2B) = 2B
                let twice: Oracle = Arc::new(ScaledGauge::new(b.clone(), 2.0)?);
                let same = Infconv::new(vec![Component::full(b.clone()), Component::full(b.clone())], settings)?;
                let nested = Infconv::new(vec![Component::full(b.clone()), Component::full(twice)], settings)?;
                let g1 = self.compare(&mut w, &same, &|x: &[f64]| Ok(b.value(x)?))?;
                let g2 = self.compare(&mut w, &nested, &|x: &[f64]| Ok(b.value(x)? / 2.0))?;
                (g1.max(g2), "Euclidean seed: idempotence and nesting of the hull")
            }
        };
        Ok(self.oracle_record(w, gap, what))
    }

    /// Margin per point: the smaller of the relative-tolerance slack and the
    /// slack of the error under the reported gap. Returns the largest
    /// relative gap seen.
    fn compare(
        &self,
        w: &mut Worst<f64>,
        oracle: &dyn GaugeOracle,
        reference: &dyn Fn(&[f64]) -> Result<f64, CliError>,
    ) -> Result<f64, CliError> {
        let tol = self.tol().oracle;
        let mut worst_gap: f64 = 0.0;
        for x in self.oracle_points() {
            let v = oracle.eval(&x)?;
            let e = reference(&x)?;
            let err = (v.value() - e).abs();
            let gap_slack = v.gap() + ROUNDING_SLACK * e - err;
            worst_gap = worst_gap.max(v.gap() / e);
            w.see((tol - err / e).min(gap_slack / e), || fmt_vec_f64(&x));
        }
        Ok(worst_gap)
    }

    fn oracle_record(&self, w: Worst<f64>, gap: f64, what: &str) -> CheckRecord {
        let tol = self.tol().oracle;
        float_record(w, 0.0, false, format!("{what}; tolerance {tol:e}, largest relative gap {}", fmt_f64(gap)))
    }

    fn oracle_tower(&self) -> Outcome {
        let t = self.p.numeric.as_ref().ok_or_else(|| CliError::Run("no numeric tower".into()))?;
        let mut w = Worst::default();
        for c in &t.checks {
            let worst = c.sandwich.max(c.tail).max(c.head);
            w.see(NUMERIC_BUDGET - worst, || vec![c.level.to_string()]);
        }
        let detail = match &self.p.exact {
            Some(run) => {
                for x in self.oracle_points() {
                    for n in 0..=t.levels.len() - 1 {
                        let a = t.norm(n, &x)?;
                        let e = PolytopeGauge::from_body(run.tower.body(n)).value(&x)?;
                        w.see(NUMERIC_BUDGET - rel(a, e), || fmt_vec_f64(&x));
                    }
                }
                "level relations on probes and agreement with the exact tower"
            }
            None => {
                let k0 = t.basis_constants[0];
                w.see(NUMERIC_BUDGET - (k0 - 1.0).abs(), || vec!["basis constant".into()]);
                "level relations on probes; estimated basis constant of the seed is 1"
            }
        };
        Ok(float_record(w, 0.0, false, format!("{detail}, budget {NUMERIC_BUDGET:e}")))
    }
}
