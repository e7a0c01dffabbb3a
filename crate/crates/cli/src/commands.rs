//! The five subcommands. Each returns its text output; the binary decides
//! where it goes.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use renorm::scalar::{format_rational, parse_rational};
use renorm::{ExactBody, Functional, Rational, Scalar};
use serde::Serialize;
use serde_json::json;

use crate::checks::run_suite;
use crate::config::RunConfig;
use crate::pipeline::Pipeline;
use crate::report::VerificationReport;
use crate::CliError;

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, text)?;
    Ok(path)
}

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("document serializes");
    s.push('\n');
    s
}

/// Builds the tower and plans `λ` and `δ`; writes `plan.json`.
pub fn cmd_plan(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let p = Pipeline::build(cfg)?;
    let text = pretty(&p.plan_document());
    write(out, "plan.json", &text)?;
    Ok(text)
}

#[derive(Debug, Serialize)]
struct GlueLevelDocument {
    level: usize,
    delta: String,
    /// Smoothing exponent; absent for the piecewise-linear family.
    exponent: Option<u32>,
    rows: Vec<Vec<String>>,
}

/// Writes the tower, the plan, and the glued family (or the numeric tower in
/// oracle mode). Returns the list of written files.
pub fn cmd_build(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let p = Pipeline::build(cfg)?;
    let mut written = vec![write(out, "plan.json", &pretty(&p.plan_document()))?];
    if let Some(run) = &p.exact {
        written.push(write(out, "tower.json", &pretty(&run.tower.to_document()))?);
    }
    if let Some(g) = p.glue() {
        let levels: Vec<GlueLevelDocument> = (0..=g.top())
            .map(|n| GlueLevelDocument {
                level: n,
                delta: format_rational(&g.plan().delta[n]),
                exponent: g.level(n).norm.exponent(),
                rows: g.exact_rows(n).iter().map(|r| r.iter().map(format_rational).collect()).collect(),
            })
            .collect();
        let doc = json!({ "mode": cfg.mode.name(), "levels": levels });
        written.push(write(out, "glue.json", &pretty(&doc))?);
    }
    if let Some(fin) = p.polyhedral_final()? {
        written.push(write(out, "final.json", &pretty(&fin.body.to_document()))?);
    }
    if let Some(t) = &p.numeric {
        let doc = json!({
            "lambda": t.lambdas.iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>(),
            "gamma": t.gammas[1..].iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>(),
            "basis_constant": t.basis_constants.iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>(),
            "checks": t.checks.iter().map(|c| json!({
                "level": c.level,
                "sandwich": format!("{:.6e}", c.sandwich),
                "tail": format!("{:.6e}", c.tail),
                "head": format!("{:.6e}", c.head),
                "witnesses": c.witnesses,
            })).collect::<Vec<_>>(),
        });
        written.push(write(out, "numeric.json", &pretty(&doc))?);
    }
    let mut text = String::new();
    for w in written {
        writeln!(text, "wrote {}", w.display()).unwrap();
    }
    Ok(text)
}

/// Runs the suite; writes `report.jsonl` and `summary.txt`.
pub fn cmd_verify(cfg: &RunConfig, out: &Path) -> Result<VerificationReport, CliError> {
    let p = Pipeline::build(cfg)?;
    let report = run_suite(&p);
    write(out, "report.jsonl", &report.to_jsonl())?;
    write(out, "summary.txt", &report.to_text())?;
    Ok(report)
}

/// Parses one vector from `a,b,c` or whitespace-separated decimals.
pub fn parse_vector(s: &str, dim: usize) -> Result<Vec<f64>, CliError> {
    let v: Vec<f64> = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| CliError::Config(format!("not a number: {t:?}"))))
        .collect::<Result<_, _>>()?;
    if v.len() != dim {
        return Err(CliError::Config(format!("vector {s:?} has {} entries, expected {dim}", v.len())));
    }
    if v.iter().any(|t| !t.is_finite()) {
        return Err(CliError::Config(format!("vector {s:?} is not finite")));
    }
    Ok(v)
}

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

/// CSV with columns `x1..xM, value, g1..gM`; the gradient at the origin is
/// written as `undefined`.
pub fn cmd_eval(cfg: &RunConfig, vectors: &[Vec<f64>]) -> Result<String, CliError> {
    let p = Pipeline::build(cfg)?;
    let m = cfg.dimension;
    let mut out = String::new();
    let xs: Vec<String> = (1..=m).map(|i| format!("x{i}")).collect();
    let gs: Vec<String> = (1..=m).map(|i| format!("g{i}")).collect();
    writeln!(out, "{},value,{}", xs.join(","), gs.join(",")).unwrap();
    for x in vectors {
        if x.len() != m {
            return Err(CliError::Config(format!("vector has {} entries, expected {m}", x.len())));
        }
        let (value, grad) = match (p.glue(), &p.numeric) {
            (Some(g), _) => {
                let e = g.evaluate(x)?;
                (e.value, e.gradient)
            }
            (None, Some(t)) => {
                let top = t.levels.last().expect("seed level");
                if x.iter().all(|v| *v == 0.0) {
                    (0.0, None)
                } else {
                    let v = top.eval(x)?;
                    (v.value(), Some(v.subgradient))
                }
            }
            (None, None) => return Err(CliError::Run("nothing to evaluate".into())),
        };
        let xs: Vec<String> = x.iter().map(|v| fmt(*v)).collect();
        let gs: Vec<String> = match grad {
            Some(g) => g.iter().map(|v| fmt(*v)).collect(),
            None => vec!["undefined".to_string(); m],
        };
        writeln!(out, "{},{},{}", xs.join(","), fmt(value), gs.join(",")).unwrap();
    }
    Ok(out)
}

/// A 2-plane through the origin.
#[derive(Debug, Clone, PartialEq)]
pub enum Plane {
    /// Basis indices, counted from 1.
    Axes(usize, usize),
    Vectors(Vec<String>, Vec<String>),
}

impl Plane {
    fn spanning(&self, dim: usize) -> Result<(Vec<Rational>, Vec<Rational>), CliError> {
        let (u, v) = match self {
            Plane::Axes(i, j) => {
                if *i == 0 || *j == 0 || *i > dim || *j > dim || i == j {
                    return Err(CliError::Config(format!("axes must be two distinct indices in 1..={dim}")));
                }
                let e = |k: usize| (0..dim).map(|t| Rational::from_integer(((t + 1 == k) as i64).into())).collect();
                (e(*i), e(*j))
            }
            Plane::Vectors(u, v) => {
                let parse = |w: &[String]| -> Result<Vec<Rational>, CliError> {
                    if w.len() != dim {
                        return Err(CliError::Config(format!("plane vector needs {dim} entries")));
                    }
                    w.iter()
                        .map(|s| parse_rational(s).map_err(|e| CliError::Config(e.to_string())))
                        .collect()
                };
                (parse(u)?, parse(v)?)
            }
        };
        let independent = (0..dim).any(|a| (0..dim).any(|b| &u[a] * &v[b] != &u[b] * &v[a]));
        if !independent {
            return Err(CliError::Config("plane vectors are linearly dependent".into()));
        }
        Ok((u, v))
    }
}

/// What `slice` draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BodyName {
    Seed,
    /// Unit ball of `‖·‖_n`.
    Level(usize),
    /// Unit ball of `|||·|||_n`.
    Rescaled(usize),
    /// Unit ball of `|||·|||_∞`.
    Sup,
    /// Unit ball of the final norm.
    Final,
    /// The step pieces `D`, `C` of level `n`.
    Slab(usize),
    Hull(usize),
}

impl std::str::FromStr for BodyName {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("unknown body {s:?}; try seed, level:N, rescaled:N, sup, final, d:N, c:N"));
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a.parse::<usize>().map_err(|_| bad())?)),
            None => (s, None),
        };
        match (head, arg) {
            ("seed", None) => Ok(BodyName::Seed),
            ("sup", None) => Ok(BodyName::Sup),
            ("final", None) => Ok(BodyName::Final),
            ("level", Some(n)) => Ok(BodyName::Level(n)),
            ("rescaled", Some(n)) => Ok(BodyName::Rescaled(n)),
            ("d", Some(n)) if n >= 1 => Ok(BodyName::Slab(n)),
            ("c", Some(n)) if n >= 1 => Ok(BodyName::Hull(n)),
            _ => Err(bad()),
        }
    }
}

/// Exact polygon `{(s, t) : s·u + t·v ∈ B}` for a polytope `B`.
fn polygon(body: &ExactBody, u: &[Rational], v: &[Rational]) -> Result<Vec<(f64, f64)>, CliError> {
    let dot = |a: &[Rational], b: &[Rational]| a.iter().zip(b).fold(Rational::from_integer(0.into()), |acc, (x, y)| acc + x * y);
    let rows: Vec<Functional<Rational>> = body
        .facets()
        .iter()
        .filter_map(|f| Functional::new(vec![dot(f.coeffs(), u), dot(f.coeffs(), v)]).ok())
        .collect();
    let poly = ExactBody::from_hrep(2, rows)?;
    let mut pts: Vec<(f64, f64)> = poly
        .vertices()
        .iter()
        .map(|p| (p[0].to_f64_lossy(), p[1].to_f64_lossy()))
        .chain(poly.vertices().iter().map(|p| (-p[0].to_f64_lossy(), -p[1].to_f64_lossy())))
        .collect();
    pts.sort_by(|a, b| angle(*a).total_cmp(&angle(*b)));
    pts.dedup();
    Ok(pts)
}

/// Angle in `[0, 2π)`.
fn angle(p: (f64, f64)) -> f64 {
    let a = p.1.atan2(p.0);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Boundary points along `points` equally spaced directions.
fn sampled(
    gauge: &dyn Fn(&[f64]) -> Result<f64, CliError>,
    u: &[f64],
    v: &[f64],
    points: usize,
) -> Result<Vec<(f64, f64)>, CliError> {
    (0..points)
        .map(|j| {
            let th = 2.0 * PI * j as f64 / points as f64;
            let (c, s) = (th.cos(), th.sin());
            let x: Vec<f64> = u.iter().zip(v).map(|(a, b)| c * a + s * b).collect();
            let rho = gauge(&x)?;
            Ok((c / rho, s / rho))
        })
        .collect()
}

/// Angle-ordered boundary of a body's trace on a 2-plane, as CSV with
/// columns `s, t, x1..xM` where `x = s·u + t·v`. Polytopes are traced
/// exactly (their vertices); smooth and oracle norms are sampled.
pub fn cmd_slice(cfg: &RunConfig, body: BodyName, plane: &Plane, points: usize) -> Result<String, CliError> {
    let p = Pipeline::build(cfg)?;
    let m = cfg.dimension;
    let (u, v) = plane.spanning(m)?;
    let uf: Vec<f64> = u.iter().map(|c| c.to_f64_lossy()).collect();
    let vf: Vec<f64> = v.iter().map(|c| c.to_f64_lossy()).collect();
    let level_ok = |n: usize| {
        if n > p.levels {
            Err(CliError::Config(format!("level {n} exceeds the {} stored levels", p.levels)))
        } else {
            Ok(n)
        }
    };
    let pts = match (&p.exact, body) {
        (Some(run), BodyName::Seed) => polygon(run.tower.body(0), &u, &v)?,
        (Some(run), BodyName::Level(n)) => polygon(run.tower.body(level_ok(n)?), &u, &v)?,
        (Some(run), BodyName::Slab(n)) => polygon(&run.tower.certificate(level_ok(n)?).d, &u, &v)?,
        (Some(run), BodyName::Hull(n)) => polygon(&run.tower.certificate(level_ok(n)?).c, &u, &v)?,
        (Some(run), BodyName::Rescaled(n)) => {
            let n = level_ok(n)?;
            let b = run.tower.body(n).scaled(&(Rational::from_integer(1.into()) / run.tower.scale(n)))?;
            polygon(&b, &u, &v)?
        }
        (Some(run), BodyName::Sup) => {
            let t = &run.tower;
            let rows: Vec<Functional<Rational>> = (0..=t.levels())
                .flat_map(|n| t.body(n).facets().iter().map(move |f| f.scaled(t.scale(n))))
                .collect();
            polygon(&ExactBody::from_hrep(m, rows)?, &u, &v)?
        }
        (Some(_), BodyName::Final) => match (p.polyhedral_final()?, p.glue()) {
            (Some(fin), _) => polygon(&fin.body, &u, &v)?,
            (None, Some(g)) => sampled(&|x: &[f64]| Ok(g.final_gauge(x)?), &uf, &vf, points)?,
            (None, None) => return Err(CliError::Config("no final norm in oracle mode".into())),
        },
        (None, BodyName::Seed) => {
            let t = p.numeric.as_ref().expect("oracle run");
            sampled(&|x: &[f64]| Ok(t.norm(0, x)?), &uf, &vf, points)?
        }
        (None, BodyName::Level(n)) => {
            let n = level_ok(n)?;
            let t = p.numeric.as_ref().expect("oracle run");
            sampled(&|x: &[f64]| Ok(t.norm(n, x)?), &uf, &vf, points)?
        }
        (None, _) => return Err(CliError::Config("the Euclidean seed supports seed and level:N slices".into())),
    };
    let mut out = String::new();
    let xs: Vec<String> = (1..=m).map(|i| format!("x{i}")).collect();
    writeln!(out, "s,t,{}", xs.join(",")).unwrap();
    for (s, t) in pts {
        let x: Vec<String> = uf.iter().zip(&vf).map(|(a, b)| fmt(s * a + t * b)).collect();
        writeln!(out, "{},{},{}", fmt(s), fmt(t), x.join(",")).unwrap();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> RunConfig {
        RunConfig::parse("dimension = 2\nseed_norm = \"ellinf\"\nepsilon = [\"1/2\", \"1/4\", \"1/8\"]\n", false).unwrap()
    }

    #[test]
    fn seed_slice_is_the_square() {
        let csv = cmd_slice(&fixture(), BodyName::Seed, &Plane::Axes(1, 2), 16).unwrap();
        let rows: Vec<Vec<f64>> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').take(2).map(|t| t.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows, vec![vec![1.0, 1.0], vec![-1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0]]);
    }

    #[test]
    fn eval_at_origin_flags_gradient() {
        let csv = cmd_eval(&fixture(), &[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x1,x2,value,g1,g2");
        assert!(lines[1].ends_with(",undefined,undefined"));
        assert!(lines[1].contains(",0.00000000000000000e0,"));
        assert!(!lines[2].contains("undefined"));
    }

    #[test]
    fn body_names_parse() {
        assert_eq!("level:2".parse::<BodyName>().unwrap(), BodyName::Level(2));
        assert_eq!("final".parse::<BodyName>().unwrap(), BodyName::Final);
        assert!("c:0".parse::<BodyName>().is_err());
        assert!("nope".parse::<BodyName>().is_err());
    }

    #[test]
    fn vectors_parse_with_commas_or_spaces() {
        assert_eq!(parse_vector("1, -2.5", 2).unwrap(), vec![1.0, -2.5]);
        assert_eq!(parse_vector("1 2 3", 3).unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(parse_vector("1,2", 3).is_err());
        assert!(parse_vector("1,x", 2).is_err());
    }
}
