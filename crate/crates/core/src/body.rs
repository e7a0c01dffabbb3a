//! Symmetric convex polytopes with the origin in their interior.
//!
//! A [`ConvexBody`] always carries both a minimal H-representation (facet
//! functionals `f` with the body equal to `{x : |f(x)| ≤ 1}`) and a minimal
//! V-representation (the body is `conv{±v}`). Each `±` pair is stored once, with
//! the first nonzero coordinate positive, and both lists are sorted, so two
//! exact bodies describe the same set iff they compare equal.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::dd::polytope_vertices;
use crate::error::{Error, Result};
use crate::linalg::{dot, is_zero_vec, neg, rank, scale};
use crate::lp::LinearProgram;
use crate::projection::Projection;
use crate::scalar::{format_rational, parse_rational, Rational, Scalar};

/// Linear functional `x ↦ Σ cᵢxᵢ`, standing for the symmetric facet pair `|f(x)| ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional<S> {
    coeffs: Vec<S>,
}

impl<S: Scalar> Functional<S> {
    pub fn new(coeffs: Vec<S>) -> Result<Self> {
        if is_zero_vec(&coeffs) {
            return Err(Error::Representation("zero functional".into()));
        }
        Ok(Self { coeffs })
    }

    /// Coordinate functional `e_i*` in dimension `dim`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut c = vec![S::zero(); dim];
        c[i] = S::one();
        Self { coeffs: c }
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: &[S]) -> S {
        dot(&self.coeffs, x)
    }

    /// `f ∘ P^k`, i.e. the functional with its head coefficients zeroed.
    /// `None` when nothing of `f` survives.
    pub fn compose_tail(&self, k: usize) -> Option<Self> {
        let c = Projection::new(k).tail(&self.coeffs);
        Functional::new(c).ok()
    }

    pub fn scaled(&self, s: &S) -> Self {
        Self {
            coeffs: scale(&self.coeffs, s),
        }
    }
}

fn canonicalize_sign<S: Scalar>(v: &mut [S]) {
    if let Some(first) = v.iter().find(|x| !x.is_negligible()) {
        if first.is_strictly_negative() {
            for x in v.iter_mut() {
                *x = -x.clone();
            }
        }
    }
}

fn lex_cmp<S: Scalar>(a: &[S], b: &[S]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        if x.approx_eq(y) {
            continue;
        }
        return x.total_cmp(y);
    }
    a.len().cmp(&b.len())
}

fn canonical_points<S: Scalar>(mut pts: Vec<Vec<S>>) -> Vec<Vec<S>> {
    for p in pts.iter_mut() {
        canonicalize_sign(p);
    }
    pts.sort_by(|a, b| lex_cmp(a, b));
    pts.dedup_by(|a, b| lex_cmp(a, b) == Ordering::Equal);
    pts
}

/// Extreme points of `{ y : |p·y| ≤ 1 for every p }`, one per `±` pair.
fn symmetric_vertices<S: Scalar>(points: &[Vec<S>]) -> Result<Vec<Vec<S>>> {
    let mut a = Vec::with_capacity(2 * points.len());
    for p in points {
        a.push(p.clone());
        a.push(neg(p));
    }
    let b = vec![S::one(); a.len()];
    Ok(canonical_points(polytope_vertices(&a, &b)?))
}

/// Members of `candidates` that are extreme for the polar pair described by
/// `dual`: a candidate `c` survives when the dual points with `|c·w| = 1` span
/// the whole space. Gives the minimal list without a second enumeration.
fn extreme_candidates<S: Scalar>(dim: usize, candidates: &[Vec<S>], dual: &[Vec<S>]) -> Vec<Vec<S>> {
    let kept = candidates
        .iter()
        .filter(|c| {
            let tight: Vec<Vec<S>> = dual
                .iter()
                .filter(|w| S::dot_product(c, w).abs().approx_eq(&S::one()))
                .cloned()
                .collect();
            tight.len() >= dim && rank(&tight) == dim
        })
        .cloned()
        .collect();
    canonical_points(kept)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexBody<S> {
    dim: usize,
    facets: Vec<Functional<S>>,
    vertices: Vec<Vec<S>>,
}

impl<S: Scalar> ConvexBody<S> {
    /// Body `{x : |f(x)| ≤ 1 for all f}`; redundant functionals are dropped.
    pub fn from_hrep(dim: usize, functionals: Vec<Functional<S>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Representation("dimension must be positive".into()));
        }
        if functionals.is_empty() {
            return Err(Error::Representation("empty H-representation".into()));
        }
        for f in &functionals {
            check_dim(dim, f.dim())?;
        }
        let rows: Vec<Vec<S>> = functionals.into_iter().map(|f| f.coeffs).collect();
        let vertices = symmetric_vertices(&rows)?;
        let facets = extreme_candidates(dim, &rows, &vertices);
        Ok(Self {
            dim,
            facets: facets.into_iter().map(|c| Functional { coeffs: c }).collect(),
            vertices,
        })
    }

    /// Body `conv{±v}`; points interior to the hull are dropped.
    pub fn from_vrep(dim: usize, points: Vec<Vec<S>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Representation("dimension must be positive".into()));
        }
        if points.is_empty() {
            return Err(Error::Representation("empty V-representation".into()));
        }
        for p in &points {
            check_dim(dim, p.len())?;
        }
        let pts: Vec<Vec<S>> = points.into_iter().filter(|p| !is_zero_vec(p)).collect();
        if rank(&pts) < dim {
            return Err(Error::LowerDimensional);
        }
        let facets = symmetric_vertices(&pts).map_err(|e| match e {
            Error::Unbounded => Error::LowerDimensional,
            other => other,
        })?;
        let vertices = extreme_candidates(dim, &pts, &facets);
        Ok(Self {
            dim,
            facets: facets.into_iter().map(|c| Functional { coeffs: c }).collect(),
            vertices,
        })
    }

    /// Builds from both representations and checks they describe one set.
    pub fn from_reps(dim: usize, functionals: Vec<Functional<S>>, points: Vec<Vec<S>>) -> Result<Self> {
        let from_h = Self::from_hrep(dim, functionals)?;
        let from_v = Self::from_vrep(dim, points)?;
        let agree = from_v.vertices.iter().all(|v| from_h.gauge(v).approx_eq(&S::one()))
            && from_h.vertices.iter().all(|v| from_v.gauge(v).approx_eq(&S::one()));
        if !agree {
            return Err(Error::Representation(
                "H- and V-representations describe different sets".into(),
            ));
        }
        Ok(from_h)
    }

    /// Unit ball of `ℓ∞^dim`.
    pub fn unit_cube(dim: usize) -> Self {
        let facets = (0..dim).map(|i| Functional::coordinate(dim, i)).collect();
        Self::from_hrep(dim, facets).expect("cube is a valid body")
    }

    /// Unit ball of `ℓ1^dim`.
    pub fn cross_polytope(dim: usize) -> Self {
        let pts = (0..dim)
            .map(|i| Functional::<S>::coordinate(dim, i).coeffs)
            .collect();
        Self::from_vrep(dim, pts).expect("cross-polytope is a valid body")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn facets(&self) -> &[Functional<S>] {
        &self.facets
    }

    /// One representative per `±` vertex pair.
    pub fn vertices(&self) -> &[Vec<S>] {
        &self.vertices
    }

    /// Every vertex, both signs.
    pub fn all_vertices(&self) -> impl Iterator<Item = Vec<S>> + '_ {
        self.vertices.iter().flat_map(|v| [v.clone(), neg(v)])
    }

    /// Minkowski functional, evaluated as `max |f(x)|` over the facets.
    pub fn gauge(&self, x: &[S]) -> S {
        debug_assert_eq!(x.len(), self.dim);
        self.facets
            .iter()
            .map(|f| f.eval(x).abs())
            .fold(S::zero(), |a, b| if b > a { b } else { a })
    }

    /// Facet attaining the gauge at `x`, signed so that it evaluates to `gauge(x)`.
    pub fn active_functional(&self, x: &[S]) -> Functional<S> {
        let mut best = (S::zero(), &self.facets[0], false);
        for f in &self.facets {
            let v = f.eval(x);
            let a = v.abs();
            if a > best.0 {
                best = (a, f, v.is_strictly_negative());
            }
        }
        if best.2 {
            best.1.scaled(&-S::one())
        } else {
            best.1.clone()
        }
    }

    /// Minkowski functional from the V-representation alone: the optimum of
    /// `min Σ tᵢ` over nonnegative combinations `x = Σ tᵢ wᵢ`, `wᵢ ∈ {±v}`.
    pub fn gauge_lp(&self, x: &[S]) -> Result<S> {
        check_dim(self.dim, x.len())?;
        if is_zero_vec(x) {
            return Ok(S::zero());
        }
        let cols: Vec<Vec<S>> = self.all_vertices().collect();
        let a: Vec<Vec<S>> = (0..self.dim)
            .map(|i| cols.iter().map(|c| c[i].clone()).collect())
            .collect();
        let lp = LinearProgram::new(a, x.to_vec(), vec![S::one(); cols.len()]);
        let sol = lp.solve().map_err(|e| match e {
            Error::Infeasible(_) => Error::Representation("vertices do not span the space".into()),
            other => other,
        })?;
        Ok(sol.objective)
    }

    pub fn contains(&self, x: &[S]) -> bool {
        let g = self.gauge(x);
        g <= S::one() || g.approx_eq(&S::one())
    }

    /// `other ⊆ self`, decided on the vertices of `other`.
    pub fn contains_body(&self, other: &ConvexBody<S>) -> bool {
        other.vertices.iter().all(|v| self.contains(v))
    }

    pub fn same_set(&self, other: &ConvexBody<S>) -> bool {
        self.dim == other.dim && self.contains_body(other) && other.contains_body(self)
    }

    /// The body `s·B` for `s > 0`.
    pub fn scaled(&self, s: &S) -> Result<Self> {
        if !s.is_strictly_positive() {
            return Err(Error::Parameter("scale factor must be positive".into()));
        }
        let inv = S::one() / s.clone();
        Ok(Self {
            dim: self.dim,
            facets: self.facets.iter().map(|f| f.scaled(&inv)).collect(),
            vertices: self.vertices.iter().map(|v| scale(v, s)).collect(),
        })
    }

    /// `self ∩ {x : ‖P^k x‖_norm ≤ bound}` where `‖·‖_norm` is the gauge of `norm`.
    pub fn intersect_slab(&self, norm: &ConvexBody<S>, k: usize, bound: &S) -> Result<Self> {
        check_dim(self.dim, norm.dim)?;
        if !bound.is_strictly_positive() {
            return Err(Error::Parameter("slab bound must be positive".into()));
        }
        if k > self.dim {
            return Err(Error::Parameter(format!("k = {k} exceeds dimension {}", self.dim)));
        }
        let inv = S::one() / bound.clone();
        let mut fs = self.facets.clone();
        fs.extend(
            norm.facets
                .iter()
                .filter_map(|f| f.compose_tail(k))
                .map(|f| f.scaled(&inv)),
        );
        Self::from_hrep(self.dim, fs)
    }

    /// `conv(self ∪ other)`.
    pub fn hull_union(&self, other: &ConvexBody<S>) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let mut pts = self.vertices.clone();
        pts.extend(other.vertices.iter().cloned());
        Self::from_vrep(self.dim, pts)
    }

    /// Hull of the body with extra points (used for lower-dimensional pieces).
    pub fn hull_with_points(&self, points: &[Vec<S>]) -> Result<Self> {
        let mut pts = self.vertices.clone();
        for p in points {
            check_dim(self.dim, p.len())?;
            pts.push(p.clone());
        }
        Self::from_vrep(self.dim, pts)
    }

    /// Trace of the body on the tail space `X^k`, as a body in tail coordinates
    /// (dimension `dim - k`). Embed points back with [`Projection::embed_tail`].
    pub fn section(&self, k: usize) -> Result<Self> {
        if k >= self.dim {
            return Err(Error::DegenerateSection { k, dim: self.dim });
        }
        let p = Projection::new(k);
        let fs: Vec<Functional<S>> = self
            .facets
            .iter()
            .filter_map(|f| Functional::new(p.tail_coords(&f.coeffs)).ok())
            .collect();
        Self::from_hrep(self.dim - k, fs)
    }

    /// Section vertices embedded in the full space.
    pub fn section_vertices(&self, k: usize) -> Result<Vec<Vec<S>>> {
        let p = Projection::new(k);
        Ok(self
            .section(k)?
            .vertices
            .iter()
            .map(|v| p.embed_tail(v))
            .collect())
    }

    /// Operator norm of the head projection `P_k`.
    pub fn projection_norm(&self, k: usize) -> S {
        let p = Projection::new(k);
        self.vertices
            .iter()
            .map(|v| self.gauge(&p.head(v)))
            .fold(S::zero(), |a, b| if b > a { b } else { a })
    }

    /// Basis constant `sup_k ‖P_k‖` of the coordinate basis; `P_k` is the
    /// identity for `k ≥ dim`, so the value is at least one.
    pub fn basis_constant(&self) -> S {
        (1..self.dim)
            .map(|k| self.projection_norm(k))
            .fold(S::one(), |a, b| if b > a { b } else { a })
    }

    /// Converts to another scalar type, re-deriving minimal representations.
    pub fn convert<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Result<ConvexBody<T>> {
        let facets = self
            .facets
            .iter()
            .map(|g| Functional::new(g.coeffs.iter().map(&f).collect()))
            .collect::<Result<Vec<_>>>()?;
        ConvexBody::from_hrep(self.dim, facets)
    }
}

impl ConvexBody<Rational> {
    pub fn to_f64(&self) -> Result<ConvexBody<f64>> {
        self.convert(f64::from_rational)
    }

    pub fn to_document(&self) -> BodyDocument {
        let rows = |v: &mut dyn Iterator<Item = &[Rational]>| -> Vec<Vec<String>> {
            v.map(|r| r.iter().map(format_rational).collect()).collect()
        };
        BodyDocument {
            dimension: self.dim,
            kind: RepKind::Hv,
            hrep: Some(rows(&mut self.facets.iter().map(|f| f.coeffs()))),
            vrep: Some(rows(&mut self.vertices.iter().map(|v| v.as_slice()))),
        }
    }

    pub fn from_document(doc: &BodyDocument) -> Result<Self> {
        let parse_rows = |rows: &Option<Vec<Vec<String>>>, what: &str| -> Result<Vec<Vec<Rational>>> {
            rows.as_ref()
                .ok_or_else(|| Error::Parse(format!("document declares a {what} but has none")))?
                .iter()
                .map(|r| r.iter().map(|s| parse_rational(s)).collect())
                .collect()
        };
        let dim = doc.dimension;
        let functionals = |rows: Vec<Vec<Rational>>| -> Result<Vec<Functional<Rational>>> {
            rows.into_iter().map(Functional::new).collect()
        };
        match doc.kind {
            RepKind::H => Self::from_hrep(dim, functionals(parse_rows(&doc.hrep, "hrep")?)?),
            RepKind::V => Self::from_vrep(dim, parse_rows(&doc.vrep, "vrep")?),
            RepKind::Hv => {
                let body = Self::from_reps(
                    dim,
                    functionals(parse_rows(&doc.hrep, "hrep")?)?,
                    parse_rows(&doc.vrep, "vrep")?,
                )?;
                Ok(body)
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("body document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: BodyDocument = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_document(&doc)
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension { expected, got });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepKind {
    H,
    V,
    Hv,
}

/// Text form of an exact body. Rationals are written `p/q`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BodyDocument {
    pub dimension: usize,
    pub kind: RepKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hrep: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vrep: Option<Vec<Vec<String>>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn q(p: i64, d: i64) -> Rational {
        rat(p, d)
    }

    fn square() -> ConvexBody<Rational> {
        ConvexBody::unit_cube(2)
    }

    #[test]
    fn cube_gauge_is_max_coordinate() {
        assert_eq!(square().gauge(&[q(2, 1), q(0, 1)]), q(2, 1));
        assert_eq!(square().gauge(&[q(0, 1), q(0, 1)]), q(0, 1));
        assert_eq!(square().gauge(&[q(-1, 3), q(1, 4)]), q(1, 3));
    }

    #[test]
    fn square_vertices_and_cross_facets() {
        let s = square();
        assert_eq!(s.vertices(), &[vec![q(1, 1), q(-1, 1)], vec![q(1, 1), q(1, 1)]]);
        let c: ConvexBody<Rational> = ConvexBody::cross_polytope(2);
        let fs: Vec<Vec<Rational>> = c.facets().iter().map(|f| f.coeffs().to_vec()).collect();
        assert_eq!(fs, vec![vec![q(1, 1), q(-1, 1)], vec![q(1, 1), q(1, 1)]]);
    }

    #[test]
    fn redundant_inputs_are_removed() {
        let mut fs: Vec<Functional<Rational>> = square().facets().to_vec();
        fs.push(Functional::new(vec![q(1, 2), q(1, 2)]).unwrap());
        fs.push(Functional::new(vec![q(-1, 1), q(0, 1)]).unwrap());
        let b = ConvexBody::from_hrep(2, fs).unwrap();
        assert_eq!(b, square());
        let b = ConvexBody::from_vrep(
            2,
            vec![vec![q(1, 1), q(1, 1)], vec![q(1, 1), q(-1, 1)], vec![q(1, 2), q(0, 1)]],
        )
        .unwrap();
        assert_eq!(b, square());
    }

    #[test]
    fn lower_dimensional_and_unbounded_inputs() {
        let seg = ConvexBody::from_vrep(2, vec![vec![q(1, 1), q(0, 1)]]);
        assert_eq!(seg.unwrap_err(), Error::LowerDimensional);
        let slab = ConvexBody::<Rational>::from_hrep(2, vec![Functional::coordinate(2, 0)]);
        assert_eq!(slab.unwrap_err(), Error::Unbounded);
        assert!(Functional::<Rational>::new(vec![q(0, 1), q(0, 1)]).is_err());
    }

    #[test]
    fn slab_section_and_hull() {
        let d = square()
            .scaled(&q(2, 1))
            .unwrap()
            .intersect_slab(&square(), 1, &q(1, 2))
            .unwrap();
        assert_eq!(d.vertices(), &[vec![q(2, 1), q(-1, 2)], vec![q(2, 1), q(1, 2)]]);
        let thin = square().intersect_slab(&square(), 1, &q(1, 2)).unwrap();
        assert_eq!(thin.gauge(&[q(0, 1), q(1, 2)]), q(1, 1));
        // loose slab leaves the body alone
        assert_eq!(square().intersect_slab(&square(), 1, &q(3, 1)).unwrap(), square());
        assert_eq!(square().hull_union(&square()).unwrap(), square());
        let big = square().scaled(&q(2, 1)).unwrap();
        assert_eq!(square().hull_union(&big).unwrap(), big);
        let sec = square().section(1).unwrap();
        assert_eq!(sec, ConvexBody::unit_cube(1));
        assert!(matches!(square().section(2), Err(Error::DegenerateSection { .. })));
    }

    #[test]
    fn lp_gauge_agrees_with_facets() {
        let c: ConvexBody<Rational> = ConvexBody::cross_polytope(3);
        let x = vec![q(1, 2), q(-1, 3), q(2, 1)];
        assert_eq!(c.gauge(&x), q(17, 6));
        assert_eq!(c.gauge_lp(&x).unwrap(), q(17, 6));
    }

    #[test]
    fn basis_constants_of_standard_balls() {
        for m in 2..5 {
            assert_eq!(ConvexBody::<Rational>::unit_cube(m).basis_constant(), q(1, 1));
            assert_eq!(ConvexBody::<Rational>::cross_polytope(m).basis_constant(), q(1, 1));
        }
        // a skewed parallelogram has a nontrivial head projection
        let b = ConvexBody::from_vrep(2, vec![vec![q(1, 1), q(2, 1)], vec![q(0, 1), q(1, 1)]]).unwrap();
        assert_eq!(b.basis_constant(), q(3, 1));
    }

    #[test]
    fn document_round_trip_is_bit_exact() {
        let b = ConvexBody::from_vrep(
            3,
            vec![
                vec![q(1, 1), q(0, 1), q(1, 3)],
                vec![q(0, 1), q(2, 7), q(-1, 1)],
                vec![q(-1, 2), q(1, 1), q(1, 1)],
            ],
        )
        .unwrap();
        let s = b.to_json();
        let back = ConvexBody::from_json(&s).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.to_json(), s);
        let h_only = BodyDocument {
            dimension: 2,
            kind: RepKind::H,
            hrep: Some(vec![vec!["1/1".into(), "0/1".into()], vec!["0".into(), "1".into()]]),
            vrep: None,
        };
        assert_eq!(ConvexBody::from_document(&h_only).unwrap(), square());
    }

    #[test]
    fn inconsistent_document_is_rejected() {
        let mut doc = square().to_document();
        doc.vrep = Some(vec![vec!["2/1".into(), "2/1".into()], vec!["2/1".into(), "-2/1".into()]]);
        assert!(matches!(ConvexBody::from_document(&doc), Err(Error::Representation(_))));
    }

    #[test]
    fn float_bodies_work_with_tolerance() {
        let b = square().to_f64().unwrap();
        assert_eq!(b.vertices().len(), 2);
        assert!((b.gauge(&[0.5, -0.75]) - 0.75).abs() < 1e-15);
    }
}
