//! The `bwk` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use bwk_core::env::scenario_names;
use bwk_core::episode::{run_episode, AssertLevel, EpisodeOptions};
use bwk_core::oracle::{analyze, payoff_bound};
use bwk_core::rng::cell_seed;
use clap::{Parser, Subcommand, ValueEnum};

use crate::config::ExperimentConfig;
use crate::sweep::{run_sweep, write_outputs, Cell, SweepOptions};
use crate::verify::run_verify;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "bwk", version, about = "Bandits with knapsacks experiments")]
pub struct Cli {
    /// Override the config's master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Maximum number of episodes run concurrently.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Invariant checking level.
    #[arg(long = "assert", value_enum, global = true)]
    pub assert_level: Option<AssertArg>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AssertArg {
    Off,
    Invariants,
    Paranoid,
}

impl From<AssertArg> for AssertLevel {
    fn from(a: AssertArg) -> Self {
        match a {
            AssertArg::Off => AssertLevel::Off,
            AssertArg::Invariants => AssertLevel::Invariants,
            AssertArg::Paranoid => AssertLevel::Paranoid,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One episode per policy at the first budget of the grid.
    Run { config: PathBuf },
    /// Every (policy, budget, replication) cell; writes the CSV.
    Sweep { config: PathBuf },
    /// Gap table and non-degeneracy audit of the configured instance.
    Analyze { config: PathBuf },
    /// LP self-checks on random instances.
    Verify {
        #[arg(long, default_value_t = 200)]
        instances: usize,
    },
    /// List the built-in scenarios.
    Scenarios,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit status.
pub fn dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn load(cli: &Cli, path: &Path) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(a) = cli.assert_level {
        cfg.assert = a.into();
    }
    Ok(cfg)
}

fn io(e: std::io::Error) -> Error {
    Error::Runtime(e.to_string())
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Scenarios => {
            for name in scenario_names() {
                writeln!(out, "{name}").map_err(io)?;
            }
            Ok(0)
        }
        Command::Verify { instances } => {
            let r = run_verify(*instances, cli.seed.unwrap_or(0));
            writeln!(
                out,
                "{} instances: max value error {:.3e}, max duality gap {:.3e}, max adjugate error {:.3e}",
                r.instances, r.max_value_error, r.max_duality_gap, r.max_adjugate_error
            )
            .map_err(io)?;
            for f in &r.failures {
                writeln!(out, "FAIL {f}").map_err(io)?;
            }
            writeln!(out, "{}", if r.passed() { "ok" } else { "FAILED" }).map_err(io)?;
            Ok(if r.passed() { 0 } else { 3 })
        }
        Command::Analyze { config } => {
            let cfg = load(cli, config)?;
            let inst = cfg.instance_at(cfg.b_grid[0])?;
            let eps = cfg.audit_level();
            let table = analyze(&inst, eps)?;
            writeln!(out, "obj* {}", table.optimal.objective).map_err(io)?;
            writeln!(out, "x* {}", table.optimal.basis).map_err(io)?;
            writeln!(out, "xi* {:?}", table.optimal.xi).map_err(io)?;
            writeln!(out, "rank {}", table.rho).map_err(io)?;
            writeln!(out, "delta_min {}", table.delta_min).map_err(io)?;
            writeln!(out, "{:<24} {:>12} {:>12}", "basis", "objective", "gap").map_err(io)?;
            for g in &table.gaps {
                writeln!(
                    out,
                    "{:<24} {:>12.6} {:>12.6}",
                    g.basis.to_string(),
                    g.objective,
                    g.gap
                )
                .map_err(io)?;
            }
            for (i, &b) in cfg.b_grid.iter().enumerate() {
                let bound = payoff_bound(&cfg.instance_at(b)?)?;
                writeln!(out, "payoff bound at B[{i}]={b}: {bound}").map_err(io)?;
            }
            writeln!(
                out,
                "non-degeneracy audit at {eps}: {}",
                if table.audit.passed { "pass" } else { "fail" }
            )
            .map_err(io)?;
            for f in table.audit.failures() {
                writeln!(
                    out,
                    "  {} det {:.3e} margin {:.3e}",
                    f.basis, f.det, f.margin
                )
                .map_err(io)?;
            }
            Ok(0)
        }
        Command::Run { config } => {
            let cfg = load(cli, config)?;
            let inst = cfg.instance_at(cfg.b_grid[0])?;
            let opts = EpisodeOptions {
                assert_level: cfg.assert,
                record_trace: cfg.trace.is_some(),
                horizon_cap: cfg.horizon_cap,
            };
            let mut episodes = Vec::new();
            let mut violations = 0;
            for (p, policy) in cfg.policies.iter().enumerate() {
                let seed = cell_seed(cfg.seed, p, 0, 0);
                let ep = run_episode(&inst, policy, seed, &opts)?;
                writeln!(
                    out,
                    "{}: tau* {} payoff {} pulls {:?} violations {}",
                    policy.id,
                    ep.tau_star,
                    ep.total_payoff,
                    ep.arm_pulls(),
                    ep.violations.len()
                )
                .map_err(io)?;
                violations += ep.violations.len();
                episodes.push((
                    Cell {
                        policy: p,
                        budget: 0,
                        rep: 0,
                    },
                    ep,
                ));
            }
            let result = crate::sweep::SweepResult {
                rows: Vec::new(),
                growth: Vec::new(),
                failures: Vec::new(),
                episodes,
            };
            if let Some(path) = &cfg.trace {
                let file = crate::sweep::create(path)?;
                crate::trace::write_trace(&cfg, &result.episodes, std::io::BufWriter::new(file))?;
            }
            Ok(if violations == 0 { 0 } else { 3 })
        }
        Command::Sweep { config } => {
            let cfg = load(cli, config)?;
            let opts = SweepOptions {
                jobs: cli.jobs,
                record_trace: cfg.trace.is_some(),
                keep_episodes: false,
            };
            let result = run_sweep(&cfg, &opts)?;
            write_outputs(&cfg, &result)?;
            writeln!(
                out,
                "{:<16} {:>12} {:>6} {:>14} {:>14} {:>12}",
                "policy", "B", "reps", "mean payoff", "regret ub", "mean tau"
            )
            .map_err(io)?;
            for r in &result.rows {
                let e = r.estimate.as_ref();
                writeln!(
                    out,
                    "{:<16} {:>12} {:>6} {:>14.4} {:>14.4} {:>12.1}",
                    r.policy_id,
                    r.budget,
                    r.reps,
                    e.map_or(f64::NAN, |e| e.mean_realized_payoff),
                    e.map_or(f64::NAN, |e| e.pseudo_regret_ub),
                    e.map_or(f64::NAN, |e| e.mean_tau),
                )
                .map_err(io)?;
                if r.horizon_cap_hits > 0 {
                    writeln!(out, "  horizon cap hit in {} episodes", r.horizon_cap_hits)
                        .map_err(io)?;
                }
            }
            for (id, g) in &result.growth {
                if let Some(g) = g {
                    writeln!(
                        out,
                        "{id}: ln fit slope {:.4}, sqrt fit slope {:.4}, preferred {}",
                        g.ln_fit.slope, g.sqrt_fit.slope, g.preferred
                    )
                    .map_err(io)?;
                }
            }
            for f in &result.failures {
                writeln!(
                    out,
                    "failed cell policy {} budget {} rep {}: {}",
                    f.cell.policy, f.cell.budget, f.cell.rep, f.error
                )
                .map_err(io)?;
            }
            let violations = result.total_violations();
            if violations > 0 {
                writeln!(out, "{violations} invariant violations").map_err(io)?;
            }
            Ok(if violations == 0 && result.failures.is_empty() {
                0
            } else {
                3
            })
        }
    }
}
