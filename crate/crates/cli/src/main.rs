//! `stackel-lab`: runs one verification experiment per invocation and writes
//! a JSON summary plus CSV series into the output directory.
//!
//! Exit status: 0 all enforced criteria pass, 1 a criterion failed,
//! 2 usage or configuration error, 3 numerical or I/O failure.

mod commands;
mod config;
mod summary;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use commands::{Command, Outcome};
use config::{load_document, output_dir, parse_k, Resolver};
use summary::{Status, Summary, TOOL, VERSION};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(stackel_core::Error),
    Io(anyhow::Error),
}

impl From<stackel_core::Error> for Failure {
    fn from(e: stackel_core::Error) -> Self {
        Failure::Numerical(e)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) => write!(f, "usage error: {msg}"),
            Failure::Numerical(e) => write!(f, "numerical failure: {e}"),
            Failure::Io(e) => write!(f, "i/o failure: {e:#}"),
        }
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numerical(_) | Failure::Io(_) => 3,
        }
    }
}

/// Flags override keys from `--config`; unset keys fall back to
/// per-command defaults. All effective values are echoed in the summary.
#[derive(Debug, Parser)]
#[command(name = TOOL, version, about = "Verification experiments for deformed Coulomb and TTW systems")]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; defaults to $STACKEL_LAB_OUT, then ./stackel-out.
    #[arg(long)]
    out: Option<PathBuf>,

    /// System family: dc or ttw.
    #[arg(long)]
    family: Option<String>,
    /// Rational index as c/d.
    #[arg(long, value_parser = validate_k)]
    k: Option<String>,
    /// Coulomb strength.
    #[arg(long = "Q")]
    q: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Angular exponent with alpha = a(a-1).
    #[arg(long)]
    a: Option<f64>,
    /// Angular exponent with beta = b(b-1).
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    omega2: Option<f64>,
    /// Energy of the initial point.
    #[arg(long = "E", allow_hyphen_values = true)]
    energy: Option<f64>,
    /// Separation constant of the initial point.
    #[arg(long = "A")]
    separation: Option<f64>,
    #[arg(long)]
    radial_frac: Option<f64>,
    #[arg(long)]
    angular_frac: Option<f64>,
    /// Explicit initial state `q1,q2,p1,p2`.
    #[arg(long, allow_hyphen_values = true)]
    state: Option<String>,
    /// Duration in radial periods (maximum periods for closure).
    #[arg(long)]
    periods: Option<f64>,
    /// Criterion tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Integrator tolerance.
    #[arg(long)]
    int_tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of random states.
    #[arg(long)]
    samples: Option<u32>,
    /// Highest level for degeneracy.
    #[arg(long = "N-max")]
    level_max: Option<u32>,
    #[arg(long = "n-max")]
    n_max: Option<u32>,
    #[arg(long = "m-max")]
    m_max: Option<u32>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    n2: Option<u32>,
    #[arg(long)]
    m2: Option<u32>,
    /// Finite-difference step.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    nr: Option<u32>,
    #[arg(long)]
    nphi: Option<u32>,
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    /// Radial gauge: decaying or growing.
    #[arg(long)]
    gauge: Option<String>,
}

fn validate_k(text: &str) -> Result<String, String> {
    parse_k(text).map(|_| text.to_string())
}

impl Cli {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut put = |key: &'static str, value: Option<String>| {
            if let Some(v) = value {
                out.push((key, v));
            }
        };
        let s = |v: Option<f64>| v.map(|x| x.to_string());
        let u = |v: Option<u32>| v.map(|x| x.to_string());
        put("family", self.family.clone());
        put("k", self.k.clone());
        put("Q", s(self.q));
        put("alpha", s(self.alpha));
        put("beta", s(self.beta));
        put("a", s(self.a));
        put("b", s(self.b));
        put("omega2", s(self.omega2));
        put("E", s(self.energy));
        put("A", s(self.separation));
        put("radial_frac", s(self.radial_frac));
        put("angular_frac", s(self.angular_frac));
        put("state", self.state.clone());
        put("periods", s(self.periods));
        put("tol", s(self.tol));
        put("int_tol", s(self.int_tol));
        put("seed", self.seed.map(|x| x.to_string()));
        put("samples", u(self.samples));
        put("N_max", u(self.level_max));
        put("n_max", u(self.n_max));
        put("m_max", u(self.m_max));
        put("n", u(self.n));
        put("m", u(self.m));
        put("n2", u(self.n2));
        put("m2", u(self.m2));
        put("h", s(self.h));
        put("nr", u(self.nr));
        put("nphi", u(self.nphi));
        put("r_min", s(self.r_min));
        put("r_max", s(self.r_max));
        put("gauge", self.gauge.clone());
        out
    }
}

fn write_outputs(dir: &Path, name: &str, summary: &Summary, artifacts: &[(String, String)]) -> Result<(), Failure> {
    for (file, contents) in artifacts {
        summary::write_atomic(dir, file, contents)
            .with_context(|| format!("writing {}", dir.join(file).display()))
            .map_err(Failure::Io)?;
    }
    let file = format!("{name}.summary.json");
    summary::write_atomic(dir, &file, &summary.to_json())
        .with_context(|| format!("writing {}", dir.join(&file).display()))
        .map_err(Failure::Io)
}

fn run(cli: Cli) -> Result<Status, Failure> {
    let doc = load_document(cli.config.as_deref(), &cli.overrides())?;
    let dir = output_dir(cli.out.clone());
    let name = cli.command.name();
    let mut resolver = Resolver::new(&doc);
    let result = commands::run(cli.command, &mut resolver);
    let config = resolver.into_echo();
    let outcome = match result {
        Ok(outcome) => outcome,
        Err(Failure::Numerical(e)) => {
            // Keep a record of the failed run before reporting it.
            let summary = Summary {
                tool: TOOL,
                version: VERSION,
                command: name.to_string(),
                config,
                tolerance: None,
                status: Status::Error,
                criteria: Vec::new(),
                results: serde_json::Value::Null,
                artifacts: Vec::new(),
                error: Some(e.to_string()),
            };
            write_outputs(&dir, name, &summary, &[])?;
            return Err(Failure::Numerical(e));
        }
        Err(other) => return Err(other),
    };
    let Outcome { tolerance, criteria, results, artifacts } = outcome;
    let status = Summary::status_of(&criteria);
    let summary = Summary {
        tool: TOOL,
        version: VERSION,
        command: name.to_string(),
        config,
        tolerance,
        status,
        criteria,
        results,
        artifacts: artifacts.iter().map(|(f, _)| f.clone()).collect(),
        error: None,
    };
    write_outputs(&dir, name, &summary, &artifacts)?;
    for c in &summary.criteria {
        let verdict = match (c.passed, c.enforced) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "NOTE",
        };
        println!("{verdict} {:<28} {:e} (threshold {:e})", c.name, c.measured, c.threshold);
    }
    println!("{name}: {:?}; summary in {}", status, dir.join(format!("{name}.summary.json")).display());
    Ok(status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("stackel-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
