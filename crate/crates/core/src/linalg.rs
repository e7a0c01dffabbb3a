//! Small dense routines shared by the polytope code. Vectors are plain slices.

use crate::scalar::Scalar;

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    S::dot_product(a, b)
}

pub fn scale<S: Scalar>(v: &[S], s: &S) -> Vec<S> {
    v.iter().map(|x| x.clone() * s.clone()).collect()
}

pub fn add<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()
}

pub fn sub<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(x, y)| x.clone() - y.clone()).collect()
}

pub fn neg<S: Scalar>(v: &[S]) -> Vec<S> {
    v.iter().map(|x| -x.clone()).collect()
}

pub fn is_zero_vec<S: Scalar>(v: &[S]) -> bool {
    v.iter().all(|x| x.is_negligible())
}

/// Rank by Gaussian elimination with partial pivoting on magnitude.
pub fn rank<S: Scalar>(rows: &[Vec<S>]) -> usize {
    let mut m: Vec<Vec<S>> = rows.to_vec();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let pivot = (r..m.len())
            .filter(|&i| !m[i][c].is_negligible())
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()));
        let Some(p) = pivot else { continue };
        m.swap(r, p);
        let pv = m[r][c].clone();
        for i in (r + 1)..m.len() {
            if m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].clone() / pv.clone();
            for j in c..ncols {
                let t = m[r][j].clone() * f.clone();
                m[i][j] = m[i][j].clone() - t;
            }
        }
        r += 1;
    }
    r
}

/// Indices of a maximal linearly independent subset of `rows`, chosen greedily
/// in order.
pub fn independent_rows<S: Scalar>(rows: &[Vec<S>]) -> Vec<usize> {
    let mut basis: Vec<Vec<S>> = Vec::new();
    let mut picked = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        basis.push(row.clone());
        if rank(&basis) == basis.len() {
            picked.push(i);
        } else {
            basis.pop();
        }
        if let Some(first) = rows.first() {
            if picked.len() == first.len() {
                break;
            }
        }
    }
    picked
}

/// Solves the square system `a x = b`; `None` when singular.
pub fn solve<S: Scalar>(a: &[Vec<S>], b: &[S]) -> Option<Vec<S>> {
    let n = a.len();
    let mut m: Vec<Vec<S>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .filter(|&i| !m[i][c].is_negligible())
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        m.swap(c, p);
        let pv = m[c][c].clone();
        for j in c..=n {
            m[c][j] = m[c][j].clone() / pv.clone();
        }
        for i in 0..n {
            if i == c || m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].clone();
            for j in c..=n {
                let t = m[c][j].clone() * f.clone();
                m[i][j] = m[i][j].clone() - t;
            }
        }
    }
    Some(m.into_iter().map(|mut r| r.pop().unwrap()).collect())
}

/// Inverse of a square matrix, column `j` of the result solving `a x = e_j`.
pub fn inverse_columns<S: Scalar>(a: &[Vec<S>]) -> Option<Vec<Vec<S>>> {
    let n = a.len();
    (0..n)
        .map(|j| {
            let e: Vec<S> = (0..n)
                .map(|i| if i == j { S::one() } else { S::zero() })
                .collect();
            solve(a, &e)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Rational};

    #[test]
    fn rank_detects_dependence() {
        let rows = vec![
            vec![rat(1, 1), rat(2, 1)],
            vec![rat(2, 1), rat(4, 1)],
            vec![rat(0, 1), rat(1, 3)],
        ];
        assert_eq!(rank(&rows), 2);
        assert_eq!(independent_rows(&rows), vec![0, 2]);
    }

    #[test]
    fn solve_exact() {
        let a = vec![vec![rat(2, 1), rat(1, 1)], vec![rat(1, 1), rat(3, 1)]];
        let x = solve(&a, &[rat(3, 1), rat(5, 1)]).unwrap();
        assert_eq!(x, vec![rat(4, 5), rat(7, 5)]);
        let singular: Vec<Vec<Rational>> = vec![vec![rat(1, 1), rat(1, 1)]; 2];
        assert!(solve(&singular, &[rat(1, 1), rat(1, 1)]).is_none());
    }
}
