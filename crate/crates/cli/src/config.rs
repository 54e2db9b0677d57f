//! Run configuration: flat `key = value` files merged with command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use arw_core::{ArwError, JumpDistribution};
use clap::ValueEnum;
use serde::Serialize;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Check,
    Stabilize,
    Directed,
    Traps,
    Ghosts,
    Soc,
    MuC,
    Sweep,
    FLambda,
    Animals,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Stabilize => "stabilize",
            Command::Directed => "directed",
            Command::Traps => "traps",
            Command::Ghosts => "ghosts",
            Command::Soc => "soc",
            Command::MuC => "mu-c",
            Command::Sweep => "sweep",
            Command::FLambda => "f-lambda",
            Command::Animals => "animals",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
pub enum Suite {
    Abelian,
    LeastAction,
    Recursion,
    Monotonicity,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Abelian => "abelian",
            Suite::LeastAction => "least-action",
            Suite::Recursion => "recursion",
            Suite::Monotonicity => "monotonicity",
        }
    }
}

/// Named jump law: `directed`, `symmetric`, or `biased:q` (weight `q` on `+e_1`).
#[derive(Clone, Debug, PartialEq)]
pub struct JumpSpec {
    pub name: String,
    pub dist: JumpDistribution,
}

impl JumpSpec {
    pub fn parse(text: &str, dim: usize) -> Result<Self, CliError> {
        let bad = |why: String| CliError::Invalid { key: "jumps".into(), why };
        let dist = match (text, dim) {
            ("directed", 1) => JumpDistribution::directed_1d(),
            ("directed", _) => return Err(bad("directed jumps are one-dimensional".into())),
            ("symmetric", 1) => JumpDistribution::symmetric_1d(),
            ("symmetric", 2) => JumpDistribution::symmetric_2d(),
            _ => {
                let q = text
                    .strip_prefix("biased:")
                    .ok_or_else(|| bad(format!("unknown jump law {text:?}")))?
                    .parse::<f64>()
                    .map_err(|e| bad(e.to_string()))?;
                match dim {
                    1 => JumpDistribution::biased_1d(q),
                    2 => JumpDistribution::biased_2d(q),
                    _ => return Err(bad(format!("no jump laws in dimension {dim}"))),
                }
                .map_err(|e| bad(e.to_string()))?
            }
        };
        Ok(JumpSpec { name: text.to_string(), dist })
    }
}

/// Every key accepted in a config file, each also a `--flag`.
pub const KEYS: &[&str] = &[
    "dim", "lambda", "lambdas", "mu", "jumps", "L", "reps", "seed", "cap", "out", "format", "suite", "n",
    "additions", "size-cap", "samples", "sample-every",
];

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::ConfigSyntax { line: i + 1, text: raw.to_string() })?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(CliError::UnknownKey(k.to_string()));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(CliError::Invalid { key: k.into(), why: "given twice".into() });
        }
    }
    Ok(map)
}

/// Sleep rate as text: a positive real or `inf`.
pub fn parse_lambda(text: &str) -> Result<f64, CliError> {
    let bad = |why: String| CliError::Invalid { key: "lambda".into(), why };
    if text.eq_ignore_ascii_case("inf") {
        return Ok(f64::INFINITY);
    }
    let v: f64 = text.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad(format!("{text} is not a positive rate (use `inf` for the jump-only limit)")))
    }
}

fn lambda_text(l: f64) -> String {
    if l.is_infinite() {
        "inf".into()
    } else {
        format!("{l}")
    }
}

fn parse_num<T: FromStr>(key: &str, text: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    text.parse().map_err(|e: T::Err| CliError::Invalid { key: key.into(), why: format!("{text:?}: {e}") })
}

fn parse_list<T: FromStr>(key: &str, text: &str) -> Result<Vec<T>, CliError>
where
    T::Err: fmt::Display,
{
    text.split(',').map(|s| parse_num(key, s.trim())).collect()
}

/// Fully validated settings for one run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub dim: usize,
    pub lambda: f64,
    pub lambdas: Vec<f64>,
    pub mu: f64,
    pub jumps: JumpSpec,
    pub l: Vec<i32>,
    pub reps: u64,
    pub seed: u64,
    pub cap: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub suite: Suite,
    pub n: u32,
    pub additions: u64,
    pub size_cap: usize,
    pub samples: u64,
    pub sample_every: u64,
}

struct Defaults {
    dim: usize,
    lambda: &'static str,
    mu: f64,
    jumps: &'static str,
    l: &'static str,
    reps: u64,
}

fn defaults(c: Command) -> Defaults {
    let d = |dim, lambda, mu, jumps, l, reps| Defaults { dim, lambda, mu, jumps, l, reps };
    match c {
        Command::Check => d(1, "1", 1.0, "symmetric", "32", 200),
        Command::Stabilize => d(1, "1", 1.0, "symmetric", "32", 1),
        Command::Directed => d(1, "1", 0.5, "directed", "1024", 100),
        Command::Traps => d(1, "1", 0.25, "symmetric", "0", 200),
        Command::Ghosts => d(2, "inf", 1.0, "symmetric", "0", 2000),
        Command::Soc => d(1, "1", 0.0, "directed", "1024", 1),
        Command::MuC | Command::Sweep => d(1, "1", 0.0, "directed", "", 0),
        Command::FLambda => d(1, "1", 0.0, "directed", "0", 1),
        Command::Animals => d(2, "1", 0.05, "symmetric", "64", 100),
    }
}

/// Help text listing the defaults, shown by `--help`.
pub const DEFAULTS_HELP: &str = "\
Defaults by command (flags override config-file values):
  check      suite=abelian reps=200 seed=0
  stabilize  dim=1 L=32 mu=1 lambda=1 jumps=symmetric reps=1
  directed   L=1024 mu=0.5 lambda=1 reps=100
  traps      n=20 mu=0.25 lambda=1 reps=200 cap=16777216
  ghosts     n=24 mu=1 reps=2000
  soc        dim=1 L=1024 lambda=1 jumps=directed additions=100000 mu=0 (empty start) sample-every=100
  mu-c       dim=1 lambda=1 jumps=directed; L, reps, cap from the bisection protocol for the jump law
  sweep      as mu-c over lambdas=0.5,1,2,3
  f-lambda   lambda=1 jumps=directed samples=100000
  animals    L=64 mu=0.05 size-cap=10 reps=100
Common: seed=0 format=csv, output to stdout unless out= is given.";

impl RunConfig {
    /// Validate the merged key-value settings for `command`.
    pub fn from_map(command: Command, map: &BTreeMap<String, String>) -> Result<Self, CliError> {
        for k in map.keys() {
            if !KEYS.contains(&k.as_str()) {
                return Err(CliError::UnknownKey(k.clone()));
            }
        }
        let d = defaults(command);
        let get = |k: &str| map.get(k).map(String::as_str);
        let dim: usize = get("dim").map(|v| parse_num("dim", v)).transpose()?.unwrap_or(d.dim);
        if !(1..=2).contains(&dim) {
            return Err(CliError::Invalid { key: "dim".into(), why: format!("{dim} (supported: 1, 2)") });
        }
        let lambda = parse_lambda(get("lambda").unwrap_or(d.lambda))?;
        let lambdas = match get("lambdas") {
            Some(v) => v.split(',').map(|s| parse_lambda(s.trim())).collect::<Result<Vec<_>, _>>()?,
            None => vec![0.5, 1.0, 2.0, 3.0],
        };
        let mu: f64 = get("mu").map(|v| parse_num("mu", v)).transpose()?.unwrap_or(d.mu);
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(ArwError::InvalidDensity(mu).into());
        }
        let jumps = JumpSpec::parse(get("jumps").unwrap_or(d.jumps), dim)?;
        let l: Vec<i32> = match get("L").unwrap_or(d.l) {
            "" => Vec::new(),
            v => parse_list("L", v)?,
        };
        if l.iter().any(|&x| x < 0) {
            return Err(CliError::Invalid { key: "L".into(), why: "window sizes must be nonnegative".into() });
        }
        let reps = get("reps").map(|v| parse_num("reps", v)).transpose()?.unwrap_or(d.reps);
        let seed = get("seed").map(|v| parse_num("seed", v)).transpose()?.unwrap_or(0);
        let cap: Option<u64> = get("cap").map(|v| parse_num("cap", v)).transpose()?;
        if cap == Some(0) {
            return Err(CliError::Invalid { key: "cap".into(), why: "must be positive".into() });
        }
        let format = match get("format") {
            None | Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            Some(v) => return Err(CliError::Invalid { key: "format".into(), why: format!("{v:?} (csv or json)") }),
        };
        let suite = match get("suite") {
            None => Suite::Abelian,
            Some(v) => Suite::from_str(v, true).map_err(|_| CliError::Invalid {
                key: "suite".into(),
                why: format!("{v:?} (abelian, least-action, recursion, monotonicity)"),
            })?,
        };
        let cfg = RunConfig {
            command,
            dim,
            lambda,
            lambdas,
            mu,
            jumps,
            l,
            reps,
            seed,
            cap,
            out: get("out").map(PathBuf::from),
            format,
            suite,
            n: get("n").map(|v| parse_num("n", v)).transpose()?.unwrap_or(if command == Command::Traps { 20 } else { 24 }),
            additions: get("additions").map(|v| parse_num("additions", v)).transpose()?.unwrap_or(100_000),
            size_cap: get("size-cap").map(|v| parse_num("size-cap", v)).transpose()?.unwrap_or(10),
            samples: get("samples").map(|v| parse_num("samples", v)).transpose()?.unwrap_or(100_000),
            sample_every: get("sample-every").map(|v| parse_num("sample-every", v)).transpose()?.unwrap_or(100),
        };
        cfg.check_command()?;
        Ok(cfg)
    }

    fn check_command(&self) -> Result<(), CliError> {
        let need = |ok: bool, key: &str, why: &str| {
            if ok {
                Ok(())
            } else {
                Err(CliError::Invalid { key: key.into(), why: why.into() })
            }
        };
        let positive_mu = || -> Result<(), CliError> {
            if self.mu > 0.0 {
                Ok(())
            } else {
                Err(ArwError::InvalidDensity(self.mu).into())
            }
        };
        match self.command {
            Command::Check | Command::Stabilize | Command::Traps | Command::Ghosts | Command::Animals => {
                need(self.reps > 0, "reps", "must be positive")?
            }
            _ => {}
        }
        match self.command {
            Command::Stabilize => need(self.l.len() == 1 && self.l[0] >= 1, "L", "one window side >= 1")?,
            Command::Directed => {
                positive_mu()?;
                need(self.lambda.is_finite(), "lambda", "the recursion needs a finite sleep rate")?;
                need(self.l.len() == 1 && self.l[0] >= 1, "L", "one length >= 1")?;
                need(self.reps > 0, "reps", "must be positive")?;
            }
            Command::Traps => {
                positive_mu()?;
                need(self.lambda.is_finite(), "lambda", "trap certification needs a finite sleep rate")?;
                need(self.dim == 1, "dim", "trap certification is one-dimensional")?;
            }
            Command::Ghosts => {
                positive_mu()?;
                need(self.dim == 2, "dim", "ghost counting runs in two dimensions")?;
                need(self.n >= 1, "n", "ball radius must be at least 1")?;
            }
            Command::Soc => {
                need(self.l.len() == 1 && self.l[0] >= 3, "L", "one box side >= 3")?;
                need(self.sample_every > 0, "sample-every", "must be positive")?;
            }
            Command::MuC | Command::Sweep => {
                need(self.l.is_empty() || self.l.len() >= 2, "L", "at least two window sizes")?;
                need(self.reps == 0 || self.reps % 2 == 1, "reps", "must be odd")?;
            }
            Command::FLambda => {
                need(self.lambda.is_finite(), "lambda", "F needs a finite sleep rate")?;
                need(self.samples > 0, "samples", "must be positive")?;
            }
            Command::Animals => {
                positive_mu()?;
                need(self.dim == 2, "dim", "lattice animals are two-dimensional")?;
                need(self.l.len() == 1 && self.l[0] >= 1, "L", "one window side >= 1")?;
                need(self.size_cap <= 12, "size-cap", "at most 12")?;
            }
            Command::Check => {}
        }
        Ok(())
    }

    /// Canonical parameter string carried by every output row.
    pub fn params(&self) -> String {
        let l: Vec<String> = self.l.iter().map(|x| x.to_string()).collect();
        let mut p = vec![format!("dim={}", self.dim), format!("jumps={}", self.jumps.name)];
        match self.command {
            Command::Sweep => {
                let ls: Vec<String> = self.lambdas.iter().map(|&x| lambda_text(x)).collect();
                p.push(format!("lambdas={}", ls.join(":")));
            }
            Command::Check => {
                p = vec![format!("suite={}", self.suite.name())];
            }
            _ => p.push(format!("lambda={}", lambda_text(self.lambda))),
        }
        match self.command {
            Command::Check | Command::MuC | Command::Sweep | Command::FLambda => {}
            _ => p.push(format!("mu={}", self.mu)),
        }
        if !l.is_empty() && !matches!(self.command, Command::Check | Command::Traps | Command::Ghosts | Command::FLambda) {
            p.push(format!("L={}", l.join(":")));
        }
        match self.command {
            Command::Traps | Command::Ghosts => p.push(format!("n={}", self.n)),
            Command::Soc => {
                p.push(format!("additions={}", self.additions));
                p.push(format!("sample-every={}", self.sample_every));
            }
            Command::FLambda => p.push(format!("samples={}", self.samples)),
            Command::Animals => p.push(format!("size-cap={}", self.size_cap)),
            _ => {}
        }
        p.push(format!("reps={}", self.reps));
        if let Some(c) = self.cap {
            p.push(format!("cap={c}"));
        }
        p.join(";")
    }
}
