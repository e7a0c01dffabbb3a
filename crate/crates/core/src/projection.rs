
use crate::scalar::Scalar;

/// Head/tail coordinate projections `P_k` and `P^k = I - P_k`.
///
/// `P_k` keeps coordinates `0..k` (the first `k` basis vectors), `P^k` keeps
/// the rest. Ranges are the head space `X_k` and the tail space `X^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Projection {
    pub k: usize,
}

impl Projection {
    pub fn new(k: usize) -> Self {
        Self { k }
    }

    pub fn head<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        x.iter()
            .enumerate()
            .map(|(i, v)| if i < self.k { v.clone() } else { S::zero() })
            .collect()
    }

    pub fn tail<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        x.iter()
            .enumerate()
            .map(|(i, v)| if i < self.k { S::zero() } else { v.clone() })
            .collect()
    }

    /// True when `x` lies in the tail space `X^k`.
    pub fn in_tail<S: Scalar>(&self, x: &[S]) -> bool {
        x.iter().take(self.k).all(|v| v.is_zero())
    }

    /// Tail coordinates only, as a vector of length `dim - k`.
    pub fn tail_coords<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        x.iter().skip(self.k).cloned().collect()
    }

    /// Embeds tail coordinates back into the full space with zero head.
    pub fn embed_tail<S: Scalar>(&self, y: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.k];
        out.extend(y.iter().cloned());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::add;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn head_plus_tail_is_identity(x in proptest::collection::vec(-100i64..100, 1..7), k in 0usize..8) {
            let x: Vec<f64> = x.into_iter().map(|v| v as f64).collect();
            let p = Projection::new(k.min(x.len()));
            prop_assert_eq!(add(&p.head(&x), &p.tail(&x)), x.clone());
            prop_assert_eq!(p.head(&p.head(&x)), p.head(&x));
            prop_assert_eq!(p.embed_tail(&p.tail_coords(&x)), p.tail(&x));
        }
    }
}
