use std::cmp::Ordering;
use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::dd::Int;
use crate::error::{Error, Result};

/// Arbitrary precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Rational = BigRational;

/// Builds the rational `p/q`.
///
/// Panics if `q == 0`.
pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Field element usable by the polytope algebra.
///
/// Exact types report a zero tolerance, so every sign test is decided exactly.
/// Floating types compare against [`Scalar::tolerance`] instead.
pub trait Scalar:
    Clone + Debug + PartialOrd + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    fn tolerance() -> Self;

    fn is_exact() -> bool;

    fn from_rational(r: &Rational) -> Self;

    fn is_negligible(&self) -> bool {
        self.abs() <= Self::tolerance()
    }

    fn is_strictly_positive(&self) -> bool {
        *self > Self::tolerance()
    }

    fn is_strictly_negative(&self) -> bool {
        *self < -Self::tolerance()
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }

    fn approx_eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).is_negligible()
    }

    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("integer fits the scalar type")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `Σ aᵢbᵢ`.
    fn dot_product(a: &[Self], b: &[Self]) -> Self {
        a.iter()
            .zip(b)
            .fold(Self::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
    }

    /// Runs the double-description insertion loop; exact types may switch to a
    /// cheaper internal representation.
    #[doc(hidden)]
    fn motzkin(rows: Vec<Vec<Self>>, basis: &[usize], start: Vec<Vec<Self>>) -> Vec<Vec<Self>> {
        crate::dd::motzkin(&rows, basis, start)
    }

    /// Rescales a ray in place to a canonical representative of its direction.
    fn normalize_ray(v: &mut [Self]) {
        let m = v
            .iter()
            .map(|x| x.abs())
            .fold(Self::zero(), |a, b| if b > a { b } else { a });
        if !m.is_zero() {
            for x in v.iter_mut() {
                *x = x.clone() / m.clone();
            }
        }
    }
}

impl Scalar for Rational {
    fn tolerance() -> Self {
        Rational::zero()
    }

    fn is_exact() -> bool {
        true
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn is_negligible(&self) -> bool {
        self.is_zero()
    }

    fn is_strictly_positive(&self) -> bool {
        self.is_positive()
    }

    fn is_strictly_negative(&self) -> bool {
        self.is_negative()
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }

    fn approx_eq(&self, other: &Self) -> bool {
        self == other
    }

    /// Primitive integer vector: denominators cleared, common factor removed.
    fn normalize_ray(v: &mut [Self]) {
        let lcm = v
            .iter()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
        if g.is_zero() {
            return;
        }
        for (slot, n) in v.iter_mut().zip(ints) {
            *slot = Rational::from_integer(n / &g);
        }
    }

    fn dot_product(a: &[Self], b: &[Self]) -> Self {
        // accumulate over a common denominator and reduce once
        let mut num = BigInt::zero();
        let mut den = BigInt::one();
        for (x, y) in a.iter().zip(b) {
            if x.is_zero() || y.is_zero() {
                continue;
            }
            let n = x.numer() * y.numer();
            let d = x.denom() * y.denom();
            if d == den {
                num += n;
            } else if den.is_one() {
                num = num * &d + n;
                den = d;
            } else {
                num = num * &d + n * &den;
                den *= d;
            }
        }
        Rational::new(num, den)
    }

    fn motzkin(rows: Vec<Vec<Self>>, basis: &[usize], start: Vec<Vec<Self>>) -> Vec<Vec<Self>> {
        // inputs are already primitive integer vectors
        let to_int = |v: Vec<Self>| -> Vec<Int> { v.into_iter().map(|x| Int(x.to_integer())).collect() };
        let rows: Vec<Vec<Int>> = rows.into_iter().map(to_int).collect();
        let start: Vec<Vec<Int>> = start.into_iter().map(to_int).collect();
        crate::dd::motzkin(&rows, basis, start)
            .into_iter()
            .map(|v| v.into_iter().map(|x| Rational::from_integer(x.0)).collect())
            .collect()
    }
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-9
    }

    fn is_exact() -> bool {
        false
    }

    fn from_rational(r: &Rational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-4
    }

    fn is_exact() -> bool {
        false
    }

    fn from_rational(r: &Rational) -> Self {
        r.to_f32().unwrap_or(f32::NAN)
    }
}

/// Formats a rational as `p/q` (denominator always written).
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `p/q`, `p`, or a finite decimal such as `0.125` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let negative = int.trim_start().starts_with('-');
        let int_part: BigInt = if int.is_empty() || int == "-" || int == "+" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| bad())?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let frac_part: BigInt = frac.parse().map_err(|_| bad())?;
        let magnitude = Rational::from_integer(int_part.abs()) + Rational::new(frac_part, scale);
        return Ok(if negative { -magnitude } else { magnitude });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

/// Largest rational with denominator `2^bits` not exceeding `sqrt(r)`.
pub fn sqrt_floor(r: &Rational, bits: u32) -> Rational {
    assert!(!r.is_negative(), "square root of a negative rational");
    let scale = BigInt::one() << (2 * bits as usize);
    // floor(sqrt(p * 4^bits / q)) / 2^bits
    let scaled = (r.numer() * scale) / r.denom();
    let root = num_integer::Roots::sqrt(&scaled);
    Rational::new(root, BigInt::one() << bits as usize)
}

/// Converts a finite float to the exact rational it represents.
pub fn rational_from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::Parse(format!("non-finite float {x}")))
}
