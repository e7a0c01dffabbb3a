//! Run configuration, read from TOML or JSON.
//!
//! Rationals are written as `"p/q"` strings; floats are plain decimals.

use std::path::{Path, PathBuf};

use renorm::body::BodyDocument;
use renorm::scalar::parse_rational;
use renorm::{ExactBody, Rational};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable that overrides the workspace directory.
pub const WORKSPACE_ENV: &str = "RENORM_WORKSPACE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Smooth,
    Polyhedral,
    Oracle,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Smooth => "smooth",
            Mode::Polyhedral => "polyhedral",
            Mode::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    /// `ell1`, `ellinf`, or `ell2` (oracle mode only).
    Preset(String),
    /// Inline polytope document.
    Custom(BodyDocument),
    /// Polytope document stored in a file, relative to the config.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Samples {
    /// Tail vectors per level for the distortion bound.
    pub tail: usize,
    /// Random points for value-level checks.
    pub random: usize,
    /// Constructed small-tail witnesses per instance and level.
    pub witnesses: usize,
    /// Points for the gradient check.
    pub gradient: usize,
    /// Points per body for the oracle comparison.
    pub oracle: usize,
}

impl Default for Samples {
    fn default() -> Self {
        Self { tail: 200, random: 200, witnesses: 50, gradient: 50, oracle: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance on floating gauge values.
    pub gauge: f64,
    /// Relative error allowed between the gradient and central differences.
    pub gradient: f64,
    pub finite_difference_step: f64,
    pub euler: f64,
    /// Relative agreement between oracle and exact gauges.
    pub oracle: f64,
    /// Relative accuracy of the final-norm root.
    pub root: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gauge: 1e-10,
            gradient: 1e-6,
            finite_difference_step: 1e-5,
            euler: 1e-9,
            oracle: 1e-8,
            root: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    /// Directory for artifacts, relative to the workspace.
    pub dir: PathBuf,
}

impl Default for Output {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    pub seed_norm: SeedSpec,
    pub epsilon: Vec<String>,
    /// Stored tower levels; defaults to `min(len(ε) − 1, dimension)`.
    #[serde(default)]
    pub levels: Option<usize>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub samples: Samples,
    #[serde(default)]
    pub random_seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Output,
}

fn default_mode() -> Mode {
    Mode::Smooth
}

/// The seed after parsing: a polytope, or the Euclidean ball for oracle runs.
#[derive(Debug, Clone)]
pub enum Seed {
    Polytope(ExactBody),
    Euclidean,
}

impl RunConfig {
    /// Loads a config; the format follows the extension (`.json` or TOML).
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text, path.extension().and_then(|e| e.to_str()) == Some("json"))?;
        if let SeedSpec::File { path: p } = &cfg.seed_norm {
            if p.is_relative() {
                let base = path.parent().unwrap_or_else(|| Path::new("."));
                cfg.seed_norm = SeedSpec::File { path: base.join(p) };
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str, json: bool) -> Result<Self, CliError> {
        if json {
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn epsilon(&self) -> Result<Vec<Rational>, CliError> {
        self.epsilon
            .iter()
            .map(|s| parse_rational(s).map_err(|e| CliError::Config(format!("ε entry {s:?}: {e}"))))
            .collect()
    }

    pub fn levels(&self) -> usize {
        self.levels
            .unwrap_or_else(|| self.epsilon.len().saturating_sub(1).min(self.dimension))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.dimension < 2 {
            return Err(CliError::Config("dimension must be at least 2".into()));
        }
        let eps = self.epsilon()?;
        if eps.is_empty() {
            return Err(CliError::Config("ε sequence is empty".into()));
        }
        if eps.iter().any(|e| *e <= Rational::from_integer(0.into())) {
            return Err(CliError::Config("ε must be positive".into()));
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(CliError::Config("ε must be strictly decreasing".into()));
        }
        let levels = self.levels();
        if levels > self.dimension || levels + 1 > eps.len() {
            return Err(CliError::Config(format!(
                "{levels} levels need ε_0..ε_{levels} and at most {} levels",
                self.dimension
            )));
        }
        let t = &self.tolerances;
        let tols = [t.gauge, t.gradient, t.finite_difference_step, t.euler, t.oracle, t.root];
        if tols.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        match self.seed()? {
            Seed::Euclidean if self.mode != Mode::Oracle => {
                Err(CliError::Config("the ell2 seed is only available in oracle mode".into()))
            }
            Seed::Polytope(b) if b.dim() != self.dimension => Err(CliError::Config(format!(
                "seed polytope has dimension {}, config says {}",
                b.dim(),
                self.dimension
            ))),
            _ => Ok(()),
        }
    }

    pub fn seed(&self) -> Result<Seed, CliError> {
        let m = self.dimension;
        let doc = match &self.seed_norm {
            SeedSpec::Preset(name) => {
                return match name.as_str() {
                    "ellinf" => Ok(Seed::Polytope(ExactBody::unit_cube(m))),
                    "ell1" => Ok(Seed::Polytope(ExactBody::cross_polytope(m))),
                    "ell2" => Ok(Seed::Euclidean),
                    other => Err(CliError::Config(format!("unknown seed preset {other:?}"))),
                }
            }
            SeedSpec::Custom(doc) => doc.clone(),
            SeedSpec::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?
            }
        };
        ExactBody::from_document(&doc)
            .map(Seed::Polytope)
            .map_err(|e| CliError::Config(format!("seed polytope: {e}")))
    }

    /// Output directory: `--out` wins, then the workspace variable, then the
    /// config's relative directory.
    pub fn output_dir(&self, out: Option<&Path>) -> PathBuf {
        if let Some(o) = out {
            return o.to_path_buf();
        }
        match std::env::var_os(WORKSPACE_ENV) {
            Some(ws) => PathBuf::from(ws).join(&self.output.dir),
            None => self.output.dir.clone(),
        }
    }
}
