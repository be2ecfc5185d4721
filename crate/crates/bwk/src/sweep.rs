//! Seeded Monte-Carlo sweeps over policies and budget scales.

use std::io::Write;
use std::path::Path;

use bwk_core::episode::{run_episode, EpisodeOptions, EpisodeResult};
use bwk_core::oracle::{growth_diagnostics, regret_report, GrowthReport, RegretEstimate};
use bwk_core::rng::cell_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::trace::write_trace;
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 11] = [
    "policy_id",
    "B",
    "reps",
    "mean_payoff",
    "payoff_ci",
    "regret_ub",
    "regret_ci",
    "mean_tau",
    "tau_bound",
    "ln_ratio",
    "sqrt_ratio",
];

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
    pub record_trace: bool,
    /// Keep every episode result in the returned [`SweepResult`].
    pub keep_episodes: bool,
}

/// Coordinates of one episode in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub policy: usize,
    pub budget: usize,
    pub rep: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub cell: Cell,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub policy_id: String,
    pub budget: f64,
    /// Episodes that completed.
    pub reps: usize,
    pub estimate: Option<RegretEstimate>,
    pub violations: usize,
    pub horizon_cap_hits: usize,
    pub swaps: u64,
}

impl SweepRow {
    pub fn regret(&self) -> Option<f64> {
        self.estimate.as_ref().map(|e| e.pseudo_regret_ub)
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Policy-major, then budget.
    pub rows: Vec<SweepRow>,
    pub growth: Vec<(String, Option<GrowthReport>)>,
    pub failures: Vec<CellFailure>,
    /// Every episode, in cell order, when requested.
    pub episodes: Vec<(Cell, EpisodeResult)>,
}

impl SweepResult {
    pub fn total_violations(&self) -> usize {
        self.rows.iter().map(|r| r.violations).sum()
    }

    pub fn row(&self, policy_id: &str, budget: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.policy_id == policy_id && r.budget == budget)
    }

    /// Regret curve of one policy across the grid.
    pub fn curve(&self, policy_id: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.policy_id == policy_id)
            .filter_map(|r| r.regret().map(|g| (r.budget, g)))
            .collect()
    }
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| Error::Runtime(e.to_string()))
}

pub fn run_sweep(cfg: &ExperimentConfig, opts: &SweepOptions) -> Result<SweepResult> {
    let instances = cfg
        .b_grid
        .iter()
        .map(|&b| cfg.instance_at(b))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<Cell> = (0..cfg.policies.len())
        .flat_map(|policy| {
            (0..cfg.b_grid.len()).flat_map(move |budget| {
                (0..cfg.reps).map(move |rep| Cell {
                    policy,
                    budget,
                    rep,
                })
            })
        })
        .collect();
    let episode_opts = EpisodeOptions {
        assert_level: cfg.assert,
        record_trace: opts.record_trace,
        horizon_cap: cfg.horizon_cap,
    };
    let outcomes: Vec<(Cell, std::result::Result<EpisodeResult, String>)> = pool(opts.jobs)?
        .install(|| {
            cells
                .par_iter()
                .map(|&cell| {
                    let seed = cell_seed(cfg.seed, cell.policy, cell.budget, cell.rep);
                    let r = run_episode(
                        &instances[cell.budget],
                        &cfg.policies[cell.policy],
                        seed,
                        &episode_opts,
                    )
                    .map_err(|e| e.to_string());
                    (cell, r)
                })
                .collect()
        });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut episodes = Vec::new();
    let mut it = outcomes.into_iter().peekable();
    for (p, policy) in cfg.policies.iter().enumerate() {
        for (bi, &budget) in cfg.b_grid.iter().enumerate() {
            let mut done = Vec::with_capacity(cfg.reps);
            while let Some((cell, _)) = it.peek() {
                if cell.policy != p || cell.budget != bi {
                    break;
                }
                let (cell, r) = it.next().expect("peeked");
                match r {
                    Ok(ep) => done.push((cell, ep)),
                    Err(error) => failures.push(CellFailure { cell, error }),
                }
            }
            let results: Vec<EpisodeResult> = done.iter().map(|(_, e)| e.clone()).collect();
            let estimate = if results.is_empty() {
                None
            } else {
                Some(regret_report(&results, &instances[bi])?)
            };
            rows.push(SweepRow {
                policy_id: policy.id.clone(),
                budget,
                reps: results.len(),
                estimate,
                violations: results.iter().map(|e| e.violations.len()).sum(),
                horizon_cap_hits: results
                    .iter()
                    .filter(|e| e.diagnostics.horizon_cap_hit)
                    .count(),
                swaps: results.iter().map(|e| e.diagnostics.swaps).sum(),
            });
            if opts.keep_episodes || opts.record_trace {
                episodes.extend(done);
            }
        }
    }
    let growth = cfg
        .policies
        .iter()
        .map(|p| {
            let curve: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.policy_id == p.id)
                .filter_map(|r| r.regret().map(|g| (r.budget, g)))
                .collect();
            (p.id.clone(), growth_diagnostics(&curve).ok())
        })
        .collect();
    Ok(SweepResult {
        rows,
        growth,
        failures,
        episodes,
    })
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Writes the per-(policy, B) table. Undefined entries are left empty.
pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &result.rows {
        let e = r.estimate.as_ref();
        let regret = e.map(|e| e.pseudo_regret_ub);
        let ln_b = r.budget.ln();
        let record = [
            r.policy_id.clone(),
            num(r.budget),
            r.reps.to_string(),
            opt(e.map(|e| e.mean_realized_payoff)),
            opt(e.and_then(|e| e.ci_halfwidth)),
            opt(regret),
            opt(e.and_then(|e| e.ci_halfwidth)),
            opt(e.map(|e| e.mean_tau)),
            opt(e.and_then(|e| e.tau_bound)),
            opt(regret.filter(|_| ln_b > 0.0).map(|g| g / ln_b)),
            opt(regret.map(|g| g / r.budget.sqrt())),
        ];
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::Runtime(e.to_string()))?;
    Ok(())
}

/// Writes the CSV and, when configured and recorded, the trace.
pub fn write_outputs(cfg: &ExperimentConfig, result: &SweepResult) -> Result<()> {
    if let Some(path) = &cfg.output {
        let file = create(path)?;
        write_csv(result, std::io::BufWriter::new(file))?;
    }
    if let Some(path) = &cfg.trace {
        if !result.episodes.is_empty() {
            let file = create(path)?;
            write_trace(cfg, &result.episodes, std::io::BufWriter::new(file))?;
        }
    }
    Ok(())
}

pub(crate) fn create(path: &Path) -> Result<std::fs::File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Write {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::File::create(path).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(reps: usize) -> ExperimentConfig {
        ExperimentConfig::from_toml(&format!(
            r#"
spec_version = 1
b_grid = [50.0, 100.0, 200.0]
reps = {reps}
seed = 3

[instance]
case = "case3"
[instance.scenario]
name = "bernoulli"
rewards = [0.9, 0.3]
costs = [[0.8], [0.2]]
budget_ratios = [0.5]

[[policies]]
id = "ucb"
kind = "ucb-simplex"
kappa = 0.5

[[policies]]
id = "static"
kind = "static-lp"
"#
        ))
        .unwrap()
    }

    #[test]
    fn counts_rows_and_episodes() {
        let opts = SweepOptions {
            keep_episodes: true,
            ..Default::default()
        };
        let r = run_sweep(&cfg(4), &opts).unwrap();
        assert_eq!(r.rows.len(), 6);
        assert_eq!(r.episodes.len(), 24);
        assert!(r.failures.is_empty());
        assert_eq!(r.total_violations(), 0);
        assert!(r.growth.iter().all(|(_, g)| g.is_some()));
    }

    #[test]
    fn single_rep_leaves_ci_empty() {
        let r = run_sweep(&cfg(1), &SweepOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().nth(1).unwrap();
        let fields: Vec<&str> = first.split(',').collect();
        assert_eq!(fields.len(), 11);
        assert_eq!(fields[4], "");
        assert_eq!(fields[6], "");
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let one = run_sweep(
            &cfg(3),
            &SweepOptions {
                jobs: Some(1),
                ..Default::default()
            },
        )
        .unwrap();
        let many = run_sweep(
            &cfg(3),
            &SweepOptions {
                jobs: Some(4),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(one.rows, many.rows);
    }
}
