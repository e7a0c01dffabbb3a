//! Deterministic test-point generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use renorm::{rat, ExactBody, Rational};

use crate::CliError;

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// `count` unit directions in `X^N` (zero head coordinates), uniform on the
/// Euclidean sphere of the tail coordinates.
pub fn sample_tail_vectors(dim: usize, n: usize, count: usize, seed: u64) -> Result<Vec<Vec<f64>>, CliError> {
    if n >= dim {
        return Err(CliError::Config(format!("tail level {n} needs N < M = {dim}")));
    }
    let mut r = rng(seed, n as u64 + 1);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut v = vec![0.0; dim];
        for slot in v.iter_mut().skip(n) {
            *slot = r.sample::<f64, _>(StandardNormal);
        }
        let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm > 1e-12 {
            out.push(v.into_iter().map(|t| t / norm).collect());
        }
    }
    Ok(out)
}

/// Nonzero points with normally distributed coordinates.
pub fn random_points(dim: usize, count: usize, r: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: Vec<f64> = (0..dim).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        if v.iter().any(|t| t.abs() > 1e-6) {
            out.push(v);
        }
    }
    out
}

/// Nonzero rationals `a/q` with small numerators and denominators.
pub fn random_rationals(dim: usize, count: usize, r: &mut impl Rng) -> Vec<Vec<Rational>> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: Vec<Rational> = (0..dim).map(|_| rat(r.random_range(-12..=12), r.random_range(1..=6))).collect();
        if v.iter().any(|t| *t != rat(0, 1)) {
            out.push(v);
        }
    }
    out
}

/// A full-dimensional symmetric polytope spanned by `±` a few random rational points.
pub fn random_polytope(dim: usize, extra: usize, r: &mut impl Rng) -> ExactBody {
    loop {
        let n = dim + r.random_range(1..=extra.max(1));
        let pts: Vec<Vec<Rational>> = (0..n)
            .map(|_| (0..dim).map(|_| rat(r.random_range(-6..=6), r.random_range(1..=4))).collect())
            .collect();
        if let Ok(b) = ExactBody::from_vrep(dim, pts) {
            return b;
        }
    }
}
