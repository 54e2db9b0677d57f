use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use arw_cli::config::DEFAULTS_HELP;
use arw_cli::{parse_config_text, run_command, CliError, Command, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "arw", version, about = "Activated random walk simulations", after_help = DEFAULTS_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Exact property suites: abelian, least-action, recursion, monotonicity.
    Check(Flags),
    /// Stabilize random configurations and report odometers.
    Stabilize(Flags),
    /// Directed one-dimensional recursion for N_L.
    Directed(Flags),
    /// Trap certificates for a zero origin odometer.
    Traps(Flags),
    /// Ghost counting in a two-dimensional ball.
    Ghosts(Flags),
    /// Driven-dissipative run in a box.
    Soc(Flags),
    /// Bisection estimate of the critical density.
    MuC(Flags),
    /// Critical density over several sleep rates.
    Sweep(Flags),
    /// Monte Carlo estimate of F(lambda).
    FLambda(Flags),
    /// Exhaustive lattice-animal maxima.
    Animals(Flags),
}

#[derive(Args)]
#[command(after_help = DEFAULTS_HELP)]
struct Flags {
    /// Flat `key = value` file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Lattice dimension, 1 or 2.
    #[arg(long, allow_hyphen_values = true)]
    dim: Option<String>,
    /// Sleep rate, a positive real or `inf`.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    /// Comma-separated sleep rates for `sweep`.
    #[arg(long, allow_hyphen_values = true)]
    lambdas: Option<String>,
    /// Particle density.
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    /// Jump law: directed, symmetric, biased:q.
    #[arg(long)]
    jumps: Option<String>,
    /// Window size, or comma-separated sizes for `mu-c`.
    #[arg(long = "L", allow_hyphen_values = true)]
    l: Option<String>,
    /// Replicates.
    #[arg(long, allow_hyphen_values = true)]
    reps: Option<String>,
    /// Master seed; replicate r uses hash(seed, r).
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
    /// Toppling or step cap.
    #[arg(long, allow_hyphen_values = true)]
    cap: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<String>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Property suite for `check`.
    #[arg(long)]
    suite: Option<String>,
    /// Particles per side (`traps`) or ball radius (`ghosts`).
    #[arg(long, allow_hyphen_values = true)]
    n: Option<String>,
    /// Particles added in `soc`.
    #[arg(long, allow_hyphen_values = true)]
    additions: Option<String>,
    /// Largest animal size for `animals` (at most 12).
    #[arg(long = "size-cap", allow_hyphen_values = true)]
    size_cap: Option<String>,
    /// Walks sampled by `f-lambda`.
    #[arg(long, allow_hyphen_values = true)]
    samples: Option<String>,
    /// Additions between density samples in `soc`.
    #[arg(long = "sample-every", allow_hyphen_values = true)]
    sample_every: Option<String>,
}

impl Flags {
    fn merged(self) -> Result<BTreeMap<String, String>, CliError> {
        let mut map = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid {
                    key: "config".into(),
                    why: format!("{}: {e}", path.display()),
                })?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        let flags = [
            ("dim", self.dim),
            ("lambda", self.lambda),
            ("lambdas", self.lambdas),
            ("mu", self.mu),
            ("jumps", self.jumps),
            ("L", self.l),
            ("reps", self.reps),
            ("seed", self.seed),
            ("cap", self.cap),
            ("out", self.out),
            ("format", self.format),
            ("suite", self.suite),
            ("n", self.n),
            ("additions", self.additions),
            ("size-cap", self.size_cap),
            ("samples", self.samples),
            ("sample-every", self.sample_every),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                map.insert(k.to_string(), v);
            }
        }
        Ok(map)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match cli.command {
        Sub::Check(f) => (Command::Check, f),
        Sub::Stabilize(f) => (Command::Stabilize, f),
        Sub::Directed(f) => (Command::Directed, f),
        Sub::Traps(f) => (Command::Traps, f),
        Sub::Ghosts(f) => (Command::Ghosts, f),
        Sub::Soc(f) => (Command::Soc, f),
        Sub::MuC(f) => (Command::MuC, f),
        Sub::Sweep(f) => (Command::Sweep, f),
        Sub::FLambda(f) => (Command::FLambda, f),
        Sub::Animals(f) => (Command::Animals, f),
    };
    let result = flags.merged().and_then(|m| RunConfig::from_map(command, &m)).and_then(|cfg| run_command(&cfg));
    match result {
        Ok(outcome) => {
            if let Some(s) = &outcome.summary {
                eprintln!("{s}");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
