//! Dense two-phase simplex with Bland's rule.
//!
//! Works for any [`Scalar`]: with rationals every pivot is exact, with floats
//! sign tests go through the scalar tolerance. Problems are in standard form
//! `min c·z` subject to `A z = b`, `z ≥ 0`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct LinearProgram<S> {
    pub a: Vec<Vec<S>>,
    pub b: Vec<S>,
    pub c: Vec<S>,
    /// Pivot threshold; defaults to [`Scalar::tolerance`].
    pub tolerance: S,
}

#[derive(Debug, Clone)]
pub struct LpSolution<S> {
    pub x: Vec<S>,
    pub objective: S,
    /// Multipliers `y` of the equality rows: `c - yᵀA ≥ 0` and `y·b` equals the optimum.
    pub duals: Vec<S>,
    pub pivots: usize,
}

const MAX_PIVOTS: usize = 200_000;

struct Tableau<S> {
    rows: Vec<Vec<S>>,
    obj: Vec<S>,
    basis: Vec<usize>,
    n: usize,
    pivots: usize,
    tol: S,
}

impl<S: Scalar> Tableau<S> {
    fn rhs(&self) -> usize {
        self.n + self.rows.len()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.rows[r].len();
        let pv = self.rows[r][c].clone();
        for j in 0..width {
            self.rows[r][j] = self.rows[r][j].clone() / pv.clone();
        }
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for j in 0..width {
                let t = self.rows[r][j].clone() * f.clone();
                self.rows[i][j] = self.rows[i][j].clone() - t;
            }
        }
        if !self.obj[c].is_zero() {
            let f = self.obj[c].clone();
            for j in 0..width {
                let t = self.rows[r][j].clone() * f.clone();
                self.obj[j] = self.obj[j].clone() - t;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Runs simplex iterations with entering columns restricted to `allowed`.
    ///
    /// Exact scalars use Bland's rule throughout. Floating scalars price by the
    /// most negative reduced cost with a two-pass ratio test that prefers large
    /// pivots, and fall back to Bland's rule on long degenerate runs.
    fn optimize(&mut self, allowed: usize) -> Result<()> {
        let rhs = self.rhs();
        let exact = S::is_exact();
        let pivot_tol = S::tolerance();
        let mut rejected = vec![false; allowed];
        let mut degenerate_run = 0usize;
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::invariant("simplex pivot budget exhausted"));
            }
            let threshold = -self.tol.clone();
            let mut candidates = (0..allowed).filter(|&j| !rejected[j] && self.obj[j] < threshold);
            let enter = if exact || degenerate_run > 50 {
                candidates.next()
            } else {
                candidates.min_by(|&a, &b| self.obj[a].total_cmp(&self.obj[b]))
            };
            let Some(enter) = enter else {
                return Ok(());
            };
            let leave = if exact { self.bland_row(enter) } else { self.harris_row(enter, &pivot_tol) };
            match leave {
                Some(r) => {
                    if self.rows[r][rhs].is_negligible() {
                        degenerate_run += 1;
                    } else {
                        degenerate_run = 0;
                    }
                    self.pivot(r, enter);
                    rejected.iter_mut().for_each(|f| *f = false);
                }
                None => {
                    let positive = self.rows.iter().any(|row| row[enter] > S::zero());
                    if exact || !positive {
                        return Err(Error::Unbounded);
                    }
                    // only tiny pivots available: treat the column as priced out
                    rejected[enter] = true;
                }
            }
        }
    }

    fn bland_row(&self, enter: usize) -> Option<usize> {
        let rhs = self.rhs();
        let mut leave: Option<(usize, S)> = None;
        for i in 0..self.rows.len() {
            let a = &self.rows[i][enter];
            if !a.is_strictly_positive() {
                continue;
            }
            let ratio = self.rows[i][rhs].clone() / a.clone();
            leave = match leave {
                None => Some((i, ratio)),
                Some((li, lr)) => {
                    if ratio < lr || (ratio == lr && self.basis[i] < self.basis[li]) {
                        Some((i, ratio))
                    } else {
                        Some((li, lr))
                    }
                }
            };
        }
        leave.map(|(r, _)| r)
    }

    fn harris_row(&self, enter: usize, pivot_tol: &S) -> Option<usize> {
        let rhs = self.rhs();
        let relaxed = |i: usize| {
            let b = self.rows[i][rhs].clone();
            let b = if b < S::zero() { S::zero() } else { b };
            (b + pivot_tol.clone()) / self.rows[i][enter].clone()
        };
        let eligible: Vec<usize> = (0..self.rows.len()).filter(|&i| self.rows[i][enter] > *pivot_tol).collect();
        let bound = eligible.iter().map(|&i| relaxed(i)).min_by(|a, b| a.total_cmp(b))?;
        eligible
            .into_iter()
            .filter(|&i| {
                let b = self.rows[i][rhs].clone();
                let b = if b < S::zero() { S::zero() } else { b };
                b / self.rows[i][enter].clone() <= bound
            })
            .max_by(|&a, &b| self.rows[a][enter].total_cmp(&self.rows[b][enter]).then(b.cmp(&a)))
    }
}

impl<S: Scalar> LinearProgram<S> {
    pub fn new(a: Vec<Vec<S>>, b: Vec<S>, c: Vec<S>) -> Self {
        Self { a, b, c, tolerance: S::tolerance() }
    }

    pub fn with_tolerance(mut self, tolerance: S) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn solve(&self) -> Result<LpSolution<S>> {
        let m = self.a.len();
        let n = self.c.len();
        if self.b.len() != m || self.a.iter().any(|r| r.len() != n) {
            return Err(Error::Representation("inconsistent LP shape".into()));
        }
        let flips: Vec<bool> = self.b.iter().map(|bi| *bi < S::zero()).collect();
        let width = n + m + 1;
        let rows: Vec<Vec<S>> = (0..m)
            .map(|i| {
                let mut row = Vec::with_capacity(width);
                for j in 0..n {
                    let v = self.a[i][j].clone();
                    row.push(if flips[i] { -v } else { v });
                }
                for k in 0..m {
                    row.push(if k == i { S::one() } else { S::zero() });
                }
                row.push(if flips[i] { -self.b[i].clone() } else { self.b[i].clone() });
                row
            })
            .collect();
        let mut obj = vec![S::zero(); width];
        for row in &rows {
            for j in 0..n {
                obj[j] = obj[j].clone() - row[j].clone();
            }
            obj[width - 1] = obj[width - 1].clone() - row[width - 1].clone();
        }
        let mut t = Tableau {
            rows,
            obj,
            basis: (n..n + m).collect(),
            n,
            pivots: 0,
            tol: self.tolerance.clone(),
        };
        // phase 1
        t.optimize(n)?;
        let infeasibility = -t.obj[width - 1].clone();
        if infeasibility > t.tol {
            return Err(Error::Infeasible("no point satisfies the equality constraints".into()));
        }
        for i in 0..m {
            if t.basis[i] >= n {
                if let Some(j) = (0..n).find(|&j| t.rows[i][j].abs() > t.tol) {
                    t.pivot(i, j);
                }
            }
        }
        // phase 2
        let mut obj = vec![S::zero(); width];
        for j in 0..n {
            obj[j] = self.c[j].clone();
        }
        for (i, &bi) in t.basis.iter().enumerate() {
            let cb = if bi < n { self.c[bi].clone() } else { S::zero() };
            if cb.is_zero() {
                continue;
            }
            for j in 0..width {
                obj[j] = obj[j].clone() - cb.clone() * t.rows[i][j].clone();
            }
        }
        t.obj = obj;
        t.optimize(n)?;

        let mut x = vec![S::zero(); n];
        for (i, &bi) in t.basis.iter().enumerate() {
            if bi < n {
                x[bi] = t.rows[i][width - 1].clone();
            }
        }
        let objective = -t.obj[width - 1].clone();
        let duals = (0..m)
            .map(|i| {
                let y = -t.obj[n + i].clone();
                if flips[i] {
                    -y
                } else {
                    y
                }
            })
            .collect();
        Ok(LpSolution {
            x,
            objective,
            duals,
            pivots: t.pivots,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;
    use crate::scalar::{rat, Rational};

    #[test]
    fn small_exact_program() {
        // min -x - y  s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
        let lp = LinearProgram::new(
            vec![
                vec![rat(1, 1), rat(2, 1), rat(1, 1), rat(0, 1)],
                vec![rat(3, 1), rat(1, 1), rat(0, 1), rat(1, 1)],
            ],
            vec![rat(4, 1), rat(6, 1)],
            vec![rat(-1, 1), rat(-1, 1), rat(0, 1), rat(0, 1)],
        );
        let sol = lp.solve().unwrap();
        assert_eq!(sol.objective, rat(-14, 5));
        assert_eq!(&sol.x[..2], &[rat(8, 5), rat(6, 5)]);
        assert_eq!(dot(&sol.duals, &lp.b), sol.objective);
    }

    #[test]
    fn negative_rhs_and_duals() {
        // min t1 + t2 s.t. t1 - t2 = -3  → t2 = 3
        let lp: LinearProgram<Rational> = LinearProgram::new(
            vec![vec![rat(1, 1), rat(-1, 1)]],
            vec![rat(-3, 1)],
            vec![rat(1, 1), rat(1, 1)],
        );
        let sol = lp.solve().unwrap();
        assert_eq!(sol.objective, rat(3, 1));
        assert_eq!(sol.duals, vec![rat(-1, 1)]);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let lp: LinearProgram<f64> =
            LinearProgram::new(vec![vec![1.0, 1.0]], vec![-1.0], vec![0.0, 0.0]);
        assert!(matches!(lp.solve(), Err(Error::Infeasible(_))));
        let lp: LinearProgram<f64> =
            LinearProgram::new(vec![vec![1.0, -1.0]], vec![1.0], vec![0.0, -1.0]);
        assert_eq!(lp.solve().unwrap_err(), Error::Unbounded);
    }
}
