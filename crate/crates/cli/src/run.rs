//! Dispatch of a validated configuration to the library.

use arw_core::engine::harness::{check_abelian, check_least_action, odometer_profile, InstanceSpec, WindowShape};
use arw_core::engine::default_cap;
use arw_core::experiments::animals::greedy_animal_max;
use arw_core::experiments::ghosts::ghost_experiment;
use arw_core::experiments::map_replicates;
use arw_core::experiments::phase::{estimate_mu_c, PhaseEstimate, PhaseProtocol, Verdict};
use arw_core::experiments::recursion::{directed_recursion, recursion_vs_engine};
use arw_core::experiments::taggi::estimate_f;
use arw_core::experiments::traps::{trap_certify, TrapFailure, TrapOutcome};
use arw_core::models::{soc_run, SocParams};
use arw_core::rng::{self, domain};
use arw_core::{sample_initial, stabilize, Arena, BoundaryMode, InitialLaw, InstructionField, Policy, Result as CoreResult};
use arw_core::{ArwError, StabilizationStatus};
use rand::Rng;

use crate::config::{Command, RunConfig, Suite};
use crate::error::CliError;
use crate::output::{ResultRow, Rows, Sink};

/// What a completed run produced.
pub struct Outcome {
    pub rows: Vec<ResultRow>,
    /// Human-readable summary for stderr.
    pub summary: Option<String>,
    /// A checked property failed somewhere.
    pub violation: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.violation {
            1
        } else {
            0
        }
    }
}

fn runtime(e: ArwError) -> CliError {
    CliError::Runtime(e)
}

/// Run the command and write its rows to the configured sink.
pub fn run_command(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sink = Sink::open(cfg)?;
    let outcome = compute(cfg)?;
    sink.finish(&outcome.rows)?;
    Ok(outcome)
}

/// Run the command without writing anything.
pub fn compute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut rows = Rows::new(cfg);
    let (summary, violation) = match cfg.command {
        Command::Check => check(cfg, &mut rows)?,
        Command::Stabilize => (stabilize_cmd(cfg, &mut rows)?, false),
        Command::Directed => (directed(cfg, &mut rows)?, false),
        Command::Traps => (traps(cfg, &mut rows)?, false),
        Command::Ghosts => (ghosts(cfg, &mut rows)?, false),
        Command::Soc => (soc(cfg, &mut rows)?, false),
        Command::MuC => (mu_c(cfg, &mut rows)?, false),
        Command::Sweep => (sweep(cfg, &mut rows)?, false),
        Command::FLambda => (f_lambda(cfg, &mut rows)?, false),
        Command::Animals => (animals(cfg, &mut rows)?, false),
    };
    Ok(Outcome { rows: rows.rows, summary: Some(summary), violation })
}

fn collect<T: Send>(reps: u64, f: impl Fn(u64) -> CoreResult<T> + Sync + Send) -> Result<Vec<T>, CliError> {
    map_replicates(reps, f).into_iter().collect::<CoreResult<Vec<_>>>().map_err(runtime)
}

fn check(cfg: &RunConfig, rows: &mut Rows) -> Result<(String, bool), CliError> {
    let cap = cfg.cap.unwrap_or(1 << 32);
    let name = cfg.suite.name();
    let per_rep: Vec<Vec<(&str, f64)>> = match cfg.suite {
        Suite::Abelian => collect(cfg.reps, |r| {
            let s = rng::replicate_seed(cfg.seed, r);
            let inst = InstanceSpec::random(s, 32, 32).build(s)?;
            let rep = check_abelian(&inst.config, &inst.field, &[Policy::Fifo, Policy::Lifo, Policy::UniformRandom(s)], cap)?;
            Ok(vec![
                ("ok", (rep.exact && rep.all_stable) as u8 as f64),
                ("max_odometer_discrepancy", rep.max_odometer_discrepancy as f64),
            ])
        })?,
        Suite::LeastAction => collect(cfg.reps, |r| {
            let s = rng::replicate_seed(cfg.seed, r);
            let inst = InstanceSpec::random(s, 32, 32).build(s)?;
            let rep = check_least_action(&inst.config, &inst.field, s, 2, cap)?;
            Ok(vec![("ok", rep.holds as u8 as f64), ("strict", rep.strict as u8 as f64)])
        })?,
        Suite::Recursion => collect(cfg.reps, |r| {
            let s = rng::replicate_seed(cfg.seed, r);
            let mut g = rng::sequential_rng(s, domain::HARNESS);
            let l = g.random_range(1..=128u32);
            let mu = 2.0 * (1.0 - g.random::<f64>());
            let lambda = [0.5, 1.0, 2.0, 3.0][g.random_range(0..4)];
            let c = recursion_vs_engine(l, &InitialLaw::Poisson(mu), lambda, s, &Policy::Fifo)?;
            Ok(vec![("ok", c.equal as u8 as f64), ("n_l", c.recursion_count as f64)])
        })?,
        Suite::Monotonicity => collect(cfg.reps, |r| {
            let s = rng::replicate_seed(cfg.seed, r);
            let spec = InstanceSpec::random(s, 16, 8);
            let field = InstructionField::new(s, spec.lambda, spec.jumps.clone())?;
            let p = odometer_profile(&InitialLaw::Poisson(spec.mu), &field, &[2, 4, 8], WindowShape::Centered, s, Some(cap))?;
            let ok = p.iter().all(|e| e.status == StabilizationStatus::Stable)
                && p.windows(2).all(|w| w[0].origin_odometer <= w[1].origin_odometer);
            Ok(vec![("ok", ok as u8 as f64)])
        })?,
    };
    let mut passed = 0;
    for (r, metrics) in per_rep.iter().enumerate() {
        for &(m, v) in metrics {
            rows.push(r, m, v);
        }
        passed += (metrics[0].1 == 1.0) as u64;
    }
    rows.aggregate("passed", passed as f64);
    let mut summary = format!("{name}: {passed}/{} exact", cfg.reps);
    if cfg.suite == Suite::LeastAction {
        let strict = per_rep.iter().filter(|m| m[1].1 == 1.0).count();
        summary = format!("{name}: {passed}/{} hold, {strict} strict", cfg.reps);
        rows.aggregate("strict", strict as f64);
    }
    Ok((summary, passed != cfg.reps))
}

fn stabilize_cmd(cfg: &RunConfig, rows: &mut Rows) -> Result<String, CliError> {
    let jumps = &cfg.jumps.dist;
    let arena = WindowShape::for_jumps(jumps).arena(cfg.dim, cfg.l[0], jumps.range()).map_err(runtime)?;
    let law = InitialLaw::Poisson(cfg.mu);
    let cap = cfg.cap.unwrap_or_else(|| default_cap(arena.window_len(), cfg.mu));
    let results = collect(cfg.reps, |r| {
        let s = rng::replicate_seed(cfg.seed, r);
        let config = sample_initial(&law, &arena, s)?;
        let field = InstructionField::new(s, cfg.lambda, jumps.clone())?;
        let initial = config.window_particles();
        let res = stabilize(config, &field, &Policy::Fifo, cap)?;
        Ok((initial, res))
    })?;
    let mut stable = 0;
    for (r, (initial, res)) in results.iter().enumerate() {
        let is_stable = res.status == StabilizationStatus::Stable;
        stable += is_stable as u64;
        rows.push(r, "initial_particles", *initial as f64);
        rows.push(r, "final_particles", res.final_config.window_particles() as f64);
        rows.push(r, "topplings", res.topplings_total as f64);
        rows.push(r, "origin_odometer", res.origin_odometer as f64);
        rows.push(r, "stable", is_stable as u8 as f64);
    }
    Ok(format!("stabilize: {stable}/{} stable within the cap", cfg.reps))
}

fn directed(cfg: &RunConfig, rows: &mut Rows) -> Result<String, CliError> {
    let s = directed_recursion(cfg.l[0] as u32, cfg.mu, cfg.lambda, cfg.seed, cfg.reps).map_err(runtime)?;
    for (r, &n) in s.n_l.iter().enumerate() {
        rows.push(r, "n_l", n as f64);
    }
    rows.aggregate("n_l_median", s.median as f64);
    rows.aggregate("n_l_mean", s.mean.value);
    rows.aggregate("n_l_mean_ci_low", s.mean.ci_low);
    rows.aggregate("n_l_mean_ci_high", s.mean.ci_high);
    Ok(format!("directed: median N_L = {} over {} replicates", s.median, cfg.reps))
}

fn traps(cfg: &RunConfig, rows: &mut Rows) -> Result<String, CliError> {
    let step_cap = cfg.cap.unwrap_or(1 << 24);
    let outcomes = collect(cfg.reps, |r| {
        trap_certify(cfg.mu, cfg.lambda, &cfg.jumps.dist, cfg.n, rng::replicate_seed(cfg.seed, r), step_cap)
    })?;
    let mut successes = 0;
    for (r, o) in outcomes.iter().enumerate() {
        match o {
            TrapOutcome::Success(c) => {
                successes += 1;
                rows.push(r, "success", 1.0);
                let gap_mean = c.gaps.iter().map(|&g| g as f64).sum::<f64>() / c.gaps.len().max(1) as f64;
                rows.push(r, "gap_mean", gap_mean);
                rows.push(r, "corrupted", c.corrupted as f64);
                rows.push(r, "replay_origin_odometer", c.replay_origin_odometer as f64);
                rows.push(r, "legal_origin_odometer", c.legal_origin_odometer as f64);
            }
            TrapOutcome::Failure(f) => {
                rows.push(r, "success", 0.0);
                let code = match f {
                    TrapFailure::OccupiedOrigin => 1.0,
                    TrapFailure::NoTrap { .. } => 2.0,
                    TrapFailure::StepCap { .. } => 3.0,
                };
                rows.push(r, "failure_kind", code);
            }
        }
    }
    rows.aggregate("success_rate", successes as f64 / cfg.reps as f64);
    Ok(format!("traps: {successes}/{} certified", cfg.reps))
}

fn ghosts(cfg: &RunConfig, rows: &mut Rows) -> Result<String, CliError> {
    let g = ghost_experiment(cfg.n as i32, cfg.mu, cfg.seed, cfg.reps).map_err(runtime)?;
    for (r, c) in g.runs.iter().enumerate() {
        rows.push(r, "w", c.w as f64);
        rows.push(r, "l", c.l as f64);
        rows.push(r, "l_tilde", c.l_tilde as f64);
    }
    rows.aggregate("mean_w", g.mean_w.value);
    rows.aggregate("mean_l_tilde", g.mean_l_tilde.value);
    rows.aggregate("var_w", g.var_w);
    rows.aggregate("var_l_tilde", g.var_l_tilde);
    rows.aggregate("ratio", g.ratio);
    rows.aggregate("p_w_exceeds_l_tilde", g.p_w_exceeds_l_tilde);
    Ok(format!("ghosts: E[W]/E[L~] = {:.4} (mu = {})", g.ratio, cfg.mu))
}

fn soc(cfg: &RunConfig, rows: &mut Rows) -> Result<String, CliError> {
    let mut p = SocParams::new(cfg.l[0], cfg.dim, cfg.lambda, cfg.jumps.dist.clone(), cfg.additions, cfg.seed);
    p.sample_every = cfg.sample_every;
    if cfg.mu > 0.0 {
        p.initial = Some(InitialLaw::Poisson(cfg.mu));
    }
    if let Some(c) = cfg.cap {
        p.relaxation_cap = c;
    }
    let t = soc_run(&p).map_err(runtime)?;
    for s in &t.samples {
        rows.push(0, format!("density@{}", s.additions), s.density);
        rows.push(0, format!("dissipated@{}", s.additions), s.dissipated as f64);
    }
    rows.aggregate("plateau_density", t.plateau_density);
    rows.aggregate("plateau_slope", t.plateau_slope);
    rows.aggregate("converged", t.converged as u8 as f64);
    Ok(format!("soc: plateau density {:.4}", t.plateau_density))
}

fn protocol(cfg: &RunConfig, lambda: f64) -> PhaseProtocol {
    let mut p = PhaseProtocol::default_for(&cfg.jumps.dist, lambda);
    if !cfg.l.is_empty() {
        p.l_list = cfg.l.clone();
    }
    if cfg.reps > 0 {
        p.reps = cfg.reps;
    }
    if cfg.cap.is_some() {
        p.cap = cfg.cap;
    }
    p
}

fn verdict_code(v: Verdict) -> f64 {
    match v {
        Verdict::Active => 1.0,
        Verdict::Fixating => 0.0,
        Verdict::Undecided => -1.0,
    }
}

fn push_estimate(rows: &mut Rows, replicate: &str, e: &PhaseEstimate) {
    rows.push(replicate, "lambda", e.lambda);
    rows.push(replicate, "mu_c_hat", e.mu_c_hat);
    rows.push(replicate, "ci_low", e.ci_low);
    rows.push(replicate, "ci_high", e.ci_high);
}

fn mu_c(cfg: &RunConfig, rows: &mut Rows) -> Result<String, CliError> {
    let e = estimate_mu_c(cfg.lambda, cfg.dim, &cfg.jumps.dist, &protocol(cfg, cfg.lambda), cfg.seed).map_err(runtime)?;
    push_estimate(rows, "all", &e);
    for (i, p) in e.probes.iter().enumerate() {
        rows.push(format!("probe{i}"), "mu", p.mu);
        rows.push(format!("probe{i}"), "verdict", verdict_code(p.verdict));
        rows.push(format!("probe{i}"), "reps", p.reps as f64);
    }
    Ok(format!("mu-c: [{:.4}, {:.4}] at lambda = {}", e.ci_low, e.ci_high, cfg.lambda))
}

fn sweep(cfg: &RunConfig, rows: &mut Rows) -> Result<String, CliError> {
    let mut parts = Vec::new();
    for (i, &lambda) in cfg.lambdas.iter().enumerate() {
        let e = estimate_mu_c(lambda, cfg.dim, &cfg.jumps.dist, &protocol(cfg, lambda), cfg.seed).map_err(runtime)?;
        push_estimate(rows, &format!("lambda{i}"), &e);
        parts.push(format!("{lambda}: [{:.4}, {:.4}]", e.ci_low, e.ci_high));
    }
    Ok(format!("sweep: {}", parts.join(", ")))
}

fn f_lambda(cfg: &RunConfig, rows: &mut Rows) -> Result<String, CliError> {
    let f = estimate_f(cfg.lambda, &cfg.jumps.dist, cfg.samples, cfg.seed, cfg.cap).map_err(runtime)?;
    rows.aggregate("f", f.f.value);
    rows.aggregate("f_ci_low", f.f.ci_low);
    rows.aggregate("f_ci_high", f.f.ci_high);
    rows.aggregate("one_minus_f", 1.0 - f.f.value);
    rows.aggregate("horizon_cut", f.horizon_cut as f64);
    Ok(format!("f-lambda: F = {:.5}, 1 - F = {:.5}", f.f.value, 1.0 - f.f.value))
}

fn animals(cfg: &RunConfig, rows: &mut Rows) -> Result<String, CliError> {
    let side = cfg.l[0];
    let lo = -(side / 2);
    let arena = Arena::rect((lo, lo), (lo + side - 1, lo + side - 1), 0, BoundaryMode::Frozen).map_err(runtime)?;
    let law = InitialLaw::Poisson(cfg.mu);
    let reports = collect(cfg.reps, |r| {
        let config = sample_initial(&law, &arena, rng::replicate_seed(cfg.seed, r))?;
        greedy_animal_max(&config, cfg.size_cap)
    })?;
    let mut below = 0;
    for (r, rep) in reports.iter().enumerate() {
        for (k, (&ratio, &fill)) in rep.max_ratio.iter().zip(&rep.fillable).enumerate() {
            rows.push(r, format!("max_ratio@{}", k + 1), ratio);
            rows.push(r, format!("fillable@{}", k + 1), fill as u8 as f64);
        }
        below += rep.max_ratio.last().is_some_and(|&x| x < 1.0) as u64;
    }
    Ok(format!("animals: max ratio below 1 at size {} in {below}/{}", cfg.size_cap, cfg.reps))
}
