//! Double description: extreme rays of a pointed polyhedral cone.
//!
//! Constraints are inserted one at a time (Motzkin's iteration). Adjacency of
//! a positive and a negative ray is decided combinatorially from the sets of
//! processed constraints they make tight, which is exact for any pointed cone.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{dot, independent_rows, inverse_columns};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn count(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }

    fn subset_of(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }
}

/// Arithmetic needed by the insertion loop. Exact inputs run on primitive
/// integer vectors, which avoids a gcd per field operation.
pub(crate) trait RayArith: Clone {
    fn dot(a: &[Self], b: &[Self]) -> Self;
    /// `-1`, `0` or `1`, with the tolerance of inexact types.
    fn sign(&self) -> i8;
    /// `a·x − b·y`, normalized; with `a > 0 > b` both weights are positive.
    fn combine(a: &Self, x: &[Self], b: &Self, y: &[Self]) -> Vec<Self>;
}

impl<S: Scalar> RayArith for S {
    fn dot(a: &[Self], b: &[Self]) -> Self {
        dot(a, b)
    }

    fn sign(&self) -> i8 {
        if self.is_strictly_positive() {
            1
        } else if self.is_strictly_negative() {
            -1
        } else {
            0
        }
    }

    fn combine(a: &Self, x: &[Self], b: &Self, y: &[Self]) -> Vec<Self> {
        let nb = -b.clone();
        let mut v: Vec<S> = x
            .iter()
            .zip(y)
            .map(|(xi, yi)| a.clone() * xi.clone() + nb.clone() * yi.clone())
            .collect();
        S::normalize_ray(&mut v);
        v
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Int(pub(crate) BigInt);

impl RayArith for Int {
    fn dot(a: &[Self], b: &[Self]) -> Self {
        let mut acc = BigInt::zero();
        for (x, y) in a.iter().zip(b) {
            if !x.0.is_zero() && !y.0.is_zero() {
                acc += &x.0 * &y.0;
            }
        }
        Int(acc)
    }

    fn sign(&self) -> i8 {
        match self.0.sign() {
            Sign::Plus => 1,
            Sign::Minus => -1,
            Sign::NoSign => 0,
        }
    }

    fn combine(a: &Self, x: &[Self], b: &Self, y: &[Self]) -> Vec<Self> {
        let nb = -&b.0;
        let v: Vec<BigInt> = x.iter().zip(y).map(|(xi, yi)| &a.0 * &xi.0 + &nb * &yi.0).collect();
        let g = v.iter().fold(BigInt::zero(), |acc, t| acc.gcd(t));
        if g.is_zero() || g.is_one() {
            return v.into_iter().map(Int).collect();
        }
        v.into_iter().map(|t| Int(t / &g)).collect()
    }
}

struct Ray<N> {
    v: Vec<N>,
    zeros: Bits,
}

/// Extreme rays of `{ z : row·z ≥ 0 for every row }`.
///
/// Fails with [`Error::Unbounded`] when the rows do not span the ambient space
/// (the cone then contains a line).
pub fn extreme_rays<S: Scalar>(rows: &[Vec<S>]) -> Result<Vec<Vec<S>>> {
    let d = match rows.first() {
        Some(r) => r.len(),
        None => return Err(Error::Unbounded),
    };
    let rows: Vec<Vec<S>> = rows
        .iter()
        .map(|r| {
            let mut r = r.clone();
            S::normalize_ray(&mut r);
            r
        })
        .collect();
    let basis = independent_rows(&rows);
    if basis.len() < d {
        return Err(Error::Unbounded);
    }
    let sub: Vec<Vec<S>> = basis.iter().map(|&i| rows[i].clone()).collect();
    let mut start = inverse_columns(&sub).ok_or_else(|| Error::invariant("singular start basis"))?;
    for v in start.iter_mut() {
        S::normalize_ray(v);
    }
    Ok(S::motzkin(rows, &basis, start))
}

/// The insertion loop, starting from the simplicial cone cut out by `basis`
/// whose extreme rays are `start` (ray `j` is not tight on `basis[j]`).
pub(crate) fn motzkin<N: RayArith>(rows: &[Vec<N>], basis: &[usize], start: Vec<Vec<N>>) -> Vec<Vec<N>> {
    let d = start.len();
    let nrows = rows.len();
    let mut rays: Vec<Ray<N>> = start
        .into_iter()
        .enumerate()
        .map(|(j, v)| {
            let mut zeros = Bits::new(nrows);
            for (pos, &i) in basis.iter().enumerate() {
                if pos != j {
                    zeros.set(i);
                }
            }
            Ray { v, zeros }
        })
        .collect();

    let mut processed = vec![false; nrows];
    for &i in basis {
        processed[i] = true;
    }
    for i in 0..nrows {
        if processed[i] {
            continue;
        }
        processed[i] = true;
        let row = &rows[i];
        let vals: Vec<N> = rays.iter().map(|r| N::dot(row, &r.v)).collect();
        let signs: Vec<i8> = vals.iter().map(|v| v.sign()).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&j| signs[j] > 0).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&j| signs[j] < 0).collect();
        if neg.is_empty() {
            for (j, r) in rays.iter_mut().enumerate() {
                if signs[j] == 0 {
                    r.zeros.set(i);
                }
            }
            continue;
        }
        let mut fresh: Vec<Ray<N>> = Vec::new();
        for &p in &pos {
            for &n in &neg {
                let common = rays[p].zeros.and(&rays[n].zeros);
                if (common.count() as usize) + 2 < d {
                    continue;
                }
                let blocked = rays.iter().enumerate().any(|(j, r)| {
                    j != p && j != n && common.subset_of(&r.zeros)
                });
                if blocked {
                    continue;
                }
                let v = N::combine(&vals[p], &rays[n].v, &vals[n], &rays[p].v);
                let mut zeros = common;
                zeros.set(i);
                fresh.push(Ray { v, zeros });
            }
        }
        let old = std::mem::take(&mut rays);
        for (j, mut r) in old.into_iter().enumerate() {
            if signs[j] < 0 {
                continue;
            }
            if signs[j] == 0 {
                r.zeros.set(i);
            }
            rays.push(r);
        }
        rays.extend(fresh);
    }
    rays.into_iter().map(|r| r.v).collect()
}

/// Vertices of the bounded polyhedron `{ x : a_i·x ≤ b_i }`.
pub fn polytope_vertices<S: Scalar>(a: &[Vec<S>], b: &[S]) -> Result<Vec<Vec<S>>> {
    let dim = a.first().map_or(0, |r| r.len());
    let mut rows: Vec<Vec<S>> = a
        .iter()
        .zip(b)
        .map(|(ai, bi)| {
            let mut r = Vec::with_capacity(dim + 1);
            r.push(bi.clone());
            r.extend(ai.iter().map(|x| -x.clone()));
            r
        })
        .collect();
    let mut lift = vec![S::zero(); dim + 1];
    lift[0] = S::one();
    rows.push(lift);
    let rays = extreme_rays(&rows)?;
    let mut out = Vec::with_capacity(rays.len());
    for r in rays {
        if !r[0].is_strictly_positive() {
            return Err(Error::Unbounded);
        }
        let t = r[0].clone();
        out.push(r[1..].iter().map(|x| x.clone() / t.clone()).collect());
    }
    if out.is_empty() {
        return Err(Error::Representation("empty polyhedron".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Rational};

    fn sorted(mut v: Vec<Vec<Rational>>) -> Vec<Vec<Rational>> {
        v.sort();
        v
    }

    #[test]
    fn square_vertices() {
        let a = vec![
            vec![rat(1, 1), rat(0, 1)],
            vec![rat(-1, 1), rat(0, 1)],
            vec![rat(0, 1), rat(1, 1)],
            vec![rat(0, 1), rat(-1, 1)],
        ];
        let b = vec![rat(1, 1); 4];
        let v = sorted(polytope_vertices(&a, &b).unwrap());
        let one = rat(1, 1);
        let m = rat(-1, 1);
        assert_eq!(
            v,
            sorted(vec![
                vec![one.clone(), one.clone()],
                vec![one.clone(), m.clone()],
                vec![m.clone(), one.clone()],
                vec![m.clone(), m.clone()],
            ])
        );
    }

    #[test]
    fn degenerate_octahedron_apex() {
        // cross-polytope in R^3: 8 facets, 6 vertices, every vertex on 4 facets
        let mut a = Vec::new();
        for s1 in [-1, 1] {
            for s2 in [-1, 1] {
                for s3 in [-1, 1] {
                    a.push(vec![rat(s1, 1), rat(s2, 1), rat(s3, 1)]);
                }
            }
        }
        let b = vec![rat(1, 1); 8];
        let v = polytope_vertices(&a, &b).unwrap();
        assert_eq!(v.len(), 6);
    }

    #[test]
    fn unbounded_is_reported() {
        let a = vec![vec![rat(1, 1), rat(0, 1)], vec![rat(-1, 1), rat(0, 1)]];
        let b = vec![rat(1, 1); 2];
        assert_eq!(polytope_vertices(&a, &b).unwrap_err(), Error::Unbounded);
    }

    #[test]
    fn float_square() {
        let a: Vec<Vec<f64>> = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 2.0], vec![0.0, -2.0]];
        let v = polytope_vertices(&a, &[1.0; 4]).unwrap();
        assert_eq!(v.len(), 4);
        assert!(v.iter().all(|p| (p[0].abs() - 1.0).abs() < 1e-12 && (p[1].abs() - 0.5).abs() < 1e-12));
    }
}
