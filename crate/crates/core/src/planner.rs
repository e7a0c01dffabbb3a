//! Choice of the step sizes `λ_i` and smoothing widths `δ_n` from a target
//! accuracy sequence `ε_N`.
//!
//! Everything is exact. `λ` is supported on the stored levels `1..=L`, so the
//! tail products `Π_N = ∏_{i>N} (1+λ_i)` are finite products of rationals.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::scalar::{format_rational, parse_rational, sqrt_floor, Rational, Scalar};
use crate::tower::RenormTower;

/// Binary digits kept when rounding `√((1+ε_{i-1})/(1+ε_i)) − 1` down.
pub const LAMBDA_BITS: u32 = 32;

fn one() -> Rational {
    Rational::one()
}

fn check_epsilon(eps: &[Rational]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::Parameter("empty ε sequence".into()));
    }
    if eps.iter().any(|e| !e.is_positive()) {
        return Err(Error::Parameter("ε must be positive".into()));
    }
    if eps.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Parameter("ε must be nonincreasing".into()));
    }
    Ok(())
}

/// `λ_1..λ_L` with `1+λ_i` the square root of `(1+ε_{i-1})/(1+ε_i)`, rounded down
/// to a dyadic rational. Then `Π_N ≤ √((1+ε_N)/(1+ε_L)) < 1+ε_N`.
///
/// Needs `ε_0..ε_L`, i.e. `levels + 1` values.
pub fn plan_lambda(eps: &[Rational], levels: usize) -> Result<Vec<Rational>> {
    check_epsilon(eps)?;
    if eps.len() < levels + 1 {
        return Err(Error::Parameter(format!(
            "need {} values of ε for {levels} levels, got {}",
            levels + 1,
            eps.len()
        )));
    }
    let lambda: Vec<Rational> = (1..=levels)
        .map(|i| {
            let ratio = (one() + &eps[i - 1]) / (one() + &eps[i]);
            sqrt_floor(&ratio, LAMBDA_BITS) - one()
        })
        .collect();
    for n in 0..=levels {
        let p = tail_product(&lambda, n);
        let cap = (one() + &eps[n]) / (one() + &eps[levels]);
        if &p * &p > cap || p >= one() + &eps[n] {
            return Err(Error::invariant(format!("tail product bound fails at N = {n}")));
        }
    }
    Ok(lambda)
}

/// `Π_N = ∏_{i=N+1}^{L} (1+λ_i)` with `lambda[i-1] = λ_i`; empty products are 1.
pub fn tail_product(lambda: &[Rational], n: usize) -> Rational {
    lambda
        .iter()
        .skip(n)
        .fold(one(), |acc, l| acc * (one() + l))
}

/// What is known about `λ_i` beyond the listed values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaTail {
    Zero,
    /// `Σ_{i beyond} λ_i ≤ bound`.
    Summable(f64),
    Unknown,
}

/// Tail product, exact for finite support and bracketed otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum TailProduct {
    Exact(Rational),
    Interval { lo: Rational, hi: f64 },
}

/// `Π_N` allowing an infinite tail of `λ`: since `log(1+λ) ≤ λ`, the unseen
/// factors multiply by at most `exp(bound)`.
pub fn tail_product_bracket(lambda: &[Rational], n: usize, tail: LambdaTail) -> Result<TailProduct> {
    let p = tail_product(lambda, n);
    match tail {
        LambdaTail::Zero => Ok(TailProduct::Exact(p)),
        LambdaTail::Summable(b) if b.is_finite() && b >= 0.0 => {
            let hi = p.to_f64_lossy() * b.exp();
            Ok(TailProduct::Interval { lo: p, hi })
        }
        _ => Err(Error::Parameter(
            "tail of λ has no summability bound; product may diverge".into(),
        )),
    }
}

/// `(1+λγ)/(1+λ(1+γ)/2)`, the level ratio that the smoothing width has to beat.
pub fn dagger_ratio(lambda: &Rational, gamma: &Rational) -> Rational {
    (one() + lambda * gamma) / (one() + lambda * (one() + gamma) / Rational::from_integer(2.into()))
}

/// Whether `(1+δ)·r ≤ 1−δ`.
pub fn dagger_holds(delta: &Rational, ratio: &Rational) -> bool {
    (one() + delta) * ratio <= one() - delta
}

/// `δ_0..δ_L` given `λ_1..λ_L`, the tower's `γ_1..γ_L` and `ε_0..ε_L`.
///
/// `δ_n = ½·min(δ_{n-1}, (1−r_{n+1})/(1+r_{n+1}), (q_n−1)/(q_n+1))` with
/// `r_{n+1}` the level ratio and `q_n = (1+ε_n)/Π_n`; the `r` term is absent
/// at the last level. All constraints are re-checked exactly.
pub fn plan_delta(lambda: &[Rational], gamma: &[Rational], eps: &[Rational]) -> Result<Vec<Rational>> {
    let levels = lambda.len();
    if gamma.len() != levels {
        return Err(Error::Parameter("need one γ per λ".into()));
    }
    if eps.len() < levels + 1 {
        return Err(Error::Parameter("need ε_0..ε_L".into()));
    }
    check_epsilon(eps)?;
    if gamma.iter().any(|g| !g.is_positive() || *g >= one()) {
        return Err(Error::invariant("γ outside (0, 1)"));
    }
    let half = Rational::new(1.into(), 2.into());
    let mut delta: Vec<Rational> = Vec::with_capacity(levels + 1);
    for n in 0..=levels {
        let mut cands: Vec<Rational> = Vec::new();
        if let Some(prev) = delta.last() {
            cands.push(prev.clone());
        }
        if n < levels {
            let r = dagger_ratio(&lambda[n], &gamma[n]);
            cands.push((one() - &r) / (one() + &r));
        }
        let q = (one() + &eps[n]) / tail_product(lambda, n);
        cands.push((&q - one()) / (&q + one()));
        let m = cands.into_iter().min().expect("at least one candidate");
        let d = &half * m;
        if !d.is_positive() {
            return Err(Error::Infeasible(format!(
                "no positive δ_{n}: λ_{} must be positive",
                n + 1
            )));
        }
        delta.push(d);
    }
    verify_delta(lambda, gamma, eps, &delta)?;
    Ok(delta)
}

fn verify_delta(lambda: &[Rational], gamma: &[Rational], eps: &[Rational], delta: &[Rational]) -> Result<()> {
    let levels = lambda.len();
    for n in 0..=levels {
        let d = &delta[n];
        if !d.is_positive() || *d >= one() {
            return Err(Error::invariant(format!("δ_{n} outside (0, 1)")));
        }
        if n > 0 && *d > delta[n - 1] {
            return Err(Error::invariant("δ is not nonincreasing"));
        }
        if n < levels && !dagger_holds(d, &dagger_ratio(&lambda[n], &gamma[n])) {
            return Err(Error::invariant(format!("level coupling fails at n = {n}")));
        }
        let lhs = (one() + d) / (one() - d) * tail_product(lambda, n);
        if lhs > one() + &eps[n] {
            return Err(Error::invariant(format!("distortion budget exceeded at N = {n}")));
        }
    }
    Ok(())
}

/// A full parameter choice.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPlan {
    pub epsilon: Vec<Rational>,
    pub lambda: Vec<Rational>,
    pub gamma: Vec<Rational>,
    pub delta: Vec<Rational>,
}

impl ParameterPlan {
    pub fn levels(&self) -> usize {
        self.lambda.len()
    }

    /// `Π_N`.
    pub fn tail_product(&self, n: usize) -> Rational {
        tail_product(&self.lambda, n)
    }

    /// Upper distortion factor `(1+δ_N)/(1−δ_N)·Π_N`.
    pub fn upper_factor(&self, n: usize) -> Rational {
        (one() + &self.delta[n]) / (one() - &self.delta[n]) * self.tail_product(n)
    }

    /// Lower distortion factor `Π_N^{-1}`.
    pub fn lower_factor(&self, n: usize) -> Rational {
        one() / self.tail_product(n)
    }

    /// Re-checks every constraint: `Π_N < 1+ε_N`, the upper factor within
    /// `1+ε_N`, `Π_N^{-1} ≥ 1−ε_N`, and the level coupling.
    pub fn verify(&self) -> Result<()> {
        check_epsilon(&self.epsilon)?;
        if self.delta.len() != self.levels() + 1 || self.gamma.len() != self.levels() {
            return Err(Error::Parameter("plan arrays have inconsistent lengths".into()));
        }
        if self.lambda.iter().any(|l| l.is_negative()) {
            return Err(Error::Parameter("λ must be nonnegative".into()));
        }
        for n in 0..=self.levels() {
            let eps = &self.epsilon[n];
            if self.tail_product(n) >= one() + eps {
                return Err(Error::invariant(format!("Π_{n} ≥ 1 + ε_{n}")));
            }
            if self.lower_factor(n) < one() - eps {
                return Err(Error::invariant(format!("lower factor below 1 − ε_{n}")));
            }
        }
        verify_delta(&self.lambda, &self.gamma, &self.epsilon, &self.delta)
    }

    pub fn to_document(&self) -> PlanDocument {
        let f = |v: &[Rational]| v.iter().map(format_rational).collect();
        PlanDocument {
            scheme: "half-log-split".into(),
            epsilon: f(&self.epsilon),
            lambda: f(&self.lambda),
            gamma: f(&self.gamma),
            delta: f(&self.delta),
            tail_products: (0..=self.levels())
                .map(|n| format_rational(&self.tail_product(n)))
                .collect(),
        }
    }

    /// Parses and re-verifies a plan document.
    pub fn from_document(doc: &PlanDocument) -> Result<Self> {
        let p = |v: &[String]| v.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>();
        let plan = ParameterPlan {
            epsilon: p(&doc.epsilon)?,
            lambda: p(&doc.lambda)?,
            gamma: p(&doc.gamma)?,
            delta: p(&doc.delta)?,
        };
        plan.verify()?;
        let tails = p(&doc.tail_products)?;
        if tails.len() != plan.levels() + 1
            || tails.iter().enumerate().any(|(n, t)| *t != plan.tail_product(n))
        {
            return Err(Error::Parse("stored tail products disagree with λ".into()));
        }
        Ok(plan)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub scheme: String,
    pub epsilon: Vec<String>,
    pub lambda: Vec<String>,
    pub gamma: Vec<String>,
    pub delta: Vec<String>,
    pub tail_products: Vec<String>,
}

/// Plans `λ`, builds the tower on `seed`, then plans `δ` from its `γ`.
pub fn plan_and_build(
    seed: &ConvexBody<Rational>,
    eps: &[Rational],
    levels: usize,
) -> Result<(RenormTower<Rational>, ParameterPlan)> {
    let lambda = plan_lambda(eps, levels)?;
    let tower = crate::tower::iterate(seed, &lambda, levels)?;
    let gamma: Vec<Rational> = (1..=levels).map(|n| tower.gamma(n).clone()).collect();
    let delta = plan_delta(&lambda, &gamma, eps)?;
    let plan = ParameterPlan {
        epsilon: eps[..=levels].to_vec(),
        lambda,
        gamma,
        delta,
    };
    plan.verify()?;
    Ok((tower, plan))
}

/// `ε_N = base · 2^{-N}` for `N = 0..=levels`.
pub fn geometric_epsilon(base: &Rational, levels: usize) -> Vec<Rational> {
    (0..=levels)
        .map(|n| base / Rational::from_integer(num_bigint::BigInt::one() << n))
        .collect()
}

/// Zero-λ check helper used by callers that accept constant ε.
pub fn is_trivial(lambda: &[Rational]) -> bool {
    lambda.iter().all(|l| l.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn constant_epsilon_gives_zero_steps() {
        let eps = vec![rat(1, 10); 4];
        let lambda = plan_lambda(&eps, 3).unwrap();
        assert!(is_trivial(&lambda));
        assert_eq!(tail_product(&lambda, 0), rat(1, 1));
        // the coupling cannot be met without a positive step
        let gamma = vec![rat(2, 3); 3];
        assert!(matches!(plan_delta(&lambda, &gamma, &eps), Err(Error::Infeasible(_))));
    }

    #[test]
    fn rejects_bad_epsilon() {
        assert!(plan_lambda(&[rat(1, 10), rat(1, 5)], 1).is_err());
        assert!(plan_lambda(&[rat(1, 10), rat(0, 1)], 1).is_err());
        assert!(plan_lambda(&[rat(1, 10)], 1).is_err());
    }

    #[test]
    fn single_step_fixture_coupling() {
        // λ₁ = 1, γ₁ = 2/3: r = (5/3)/(11/6) = 10/11, so δ₀ ≤ 1/21
        let r = dagger_ratio(&rat(1, 1), &rat(2, 3));
        assert_eq!(r, rat(10, 11));
        assert_eq!((rat(1, 1) - &r) / (rat(1, 1) + &r), rat(1, 21));
        assert!(dagger_holds(&rat(1, 21), &r));
        assert!(!dagger_holds(&rat(1, 20), &r));
    }

    #[test]
    fn tail_products() {
        assert_eq!(tail_product(&[], 0), rat(1, 1));
        let l = vec![rat(1, 1), rat(0, 1), rat(0, 1)];
        assert_eq!(tail_product(&l, 0), rat(2, 1));
        assert_eq!(tail_product(&l, 1), rat(1, 1));
        assert!(tail_product_bracket(&l, 0, LambdaTail::Unknown).is_err());
        match tail_product_bracket(&l, 0, LambdaTail::Summable(0.5)).unwrap() {
            TailProduct::Interval { lo, hi } => {
                assert_eq!(lo, rat(2, 1));
                assert!((hi - 2.0 * 0.5f64.exp()).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn plan_document_round_trip_reverifies() {
        let eps = geometric_epsilon(&rat(1, 10), 2);
        let lambda = plan_lambda(&eps, 2).unwrap();
        let gamma = vec![rat(2, 3), rat(2, 3)];
        let delta = plan_delta(&lambda, &gamma, &eps).unwrap();
        let plan = ParameterPlan { epsilon: eps, lambda, gamma, delta };
        let doc = plan.to_document();
        assert_eq!(ParameterPlan::from_document(&doc).unwrap(), plan);
        let mut bad = doc.clone();
        bad.delta[0] = "1/2".into();
        assert!(ParameterPlan::from_document(&bad).is_err());
    }
}
