use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use renorm_cli::commands::{cmd_build, cmd_eval, cmd_plan, cmd_slice, cmd_verify, parse_vector, BodyName, Plane};
use renorm_cli::config::WORKSPACE_ENV;
use renorm_cli::{CliError, Mode, RunConfig};

/// Tail-improving renormings: plan, build, verify, evaluate and slice.
#[derive(Debug, Parser)]
#[command(name = "renorm", version)]
struct Cli {
    /// Run configuration (TOML, or JSON by extension). Relative paths are
    /// resolved against the workspace directory when it is set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured mode.
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    /// Output directory (default: the config's output.dir under the workspace).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Workspace directory.
    #[arg(long, global = true, env = WORKSPACE_ENV)]
    workspace: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Plan λ and δ and print the parameter document.
    Plan,
    /// Build the tower and the glued family and write them out.
    Build,
    /// Run the verification suite; exits 1 if any check fails.
    Verify,
    /// Evaluate the final norm and its gradient.
    Eval {
        /// A vector such as `1,0.5,-2`; repeatable.
        #[arg(long = "point", allow_hyphen_values = true)]
        points: Vec<String>,
        /// File with one vector per line.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Write the angle-ordered boundary of a body on a 2-plane as CSV.
    Slice {
        /// seed, level:N, rescaled:N, sup, final, d:N or c:N.
        #[arg(long, default_value = "seed")]
        body: String,
        /// Two basis indices counted from 1, e.g. `1,2`.
        #[arg(long, conflicts_with_all = ["u", "v"])]
        axes: Option<String>,
        /// First spanning vector (rationals or decimals).
        #[arg(long, requires = "v", allow_hyphen_values = true)]
        u: Option<String>,
        /// Second spanning vector.
        #[arg(long, requires = "u", allow_hyphen_values = true)]
        v: Option<String>,
        /// Directions sampled for smooth norms.
        #[arg(long, default_value_t = 360)]
        points: usize,
    },
}

fn split(s: &str) -> Vec<String> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let resolve = |p: PathBuf| match (&cli.workspace, p.is_relative()) {
        (Some(ws), true) => ws.join(p),
        _ => p,
    };
    let path = cli.config.clone().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(&resolve(path))?;
    if let Some(s) = cli.seed {
        cfg.random_seed = s;
    }
    if let Some(m) = cli.mode {
        cfg.mode = m;
    }
    cfg.validate()?;
    let out = match &cli.out {
        Some(o) => o.clone(),
        None => match &cli.workspace {
            Some(ws) => ws.join(&cfg.output.dir),
            None => cfg.output.dir.clone(),
        },
    };
    match cli.command {
        Command::Plan => print!("{}", cmd_plan(&cfg, &out)?),
        Command::Build => print!("{}", cmd_build(&cfg, &out)?),
        Command::Verify => {
            let report = cmd_verify(&cfg, &out)?;
            print!("{}", report.to_text());
            return Ok(report.all_passed());
        }
        Command::Eval { points, input } => {
            let mut lines = points;
            if let Some(f) = input {
                let text = std::fs::read_to_string(resolve(f))?;
                lines.extend(text.lines().filter(|l| !l.trim().is_empty()).map(str::to_string));
            }
            if lines.is_empty() {
                return Err(CliError::Config("eval needs --point or --input".into()));
            }
            let vectors = lines
                .iter()
                .map(|l| parse_vector(l, cfg.dimension))
                .collect::<Result<Vec<_>, _>>()?;
            print!("{}", cmd_eval(&cfg, &vectors)?);
        }
        Command::Slice { body, axes, u, v, points } => {
            let body: BodyName = body.parse()?;
            let plane = match (axes, u, v) {
                (Some(a), None, None) => {
                    let idx: Vec<usize> = split(&a)
                        .iter()
                        .map(|t| t.parse().map_err(|_| CliError::Config(format!("bad axis {t:?}"))))
                        .collect::<Result<_, _>>()?;
                    match idx[..] {
                        [i, j] => Plane::Axes(i, j),
                        _ => return Err(CliError::Config("--axes takes two indices".into())),
                    }
                }
                (None, Some(u), Some(v)) => Plane::Vectors(split(&u), split(&v)),
                (None, None, None) => Plane::Axes(1, 2),
                _ => return Err(CliError::Config("give --axes or both --u and --v".into())),
            };
            if points < 3 {
                return Err(CliError::Config("--points must be at least 3".into()));
            }
            print!("{}", cmd_slice(&cfg, body, &plane, points)?);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("renorm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
