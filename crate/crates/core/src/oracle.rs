//! Clairvoyant quantities computed from the true means: the LP payoff bound,
//! the optimal basis and gap table, Monte-Carlo regret summaries and growth
//! fits. Nothing here is visible to policies.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::env::{true_mean_lp, Case, Instance};
use crate::episode::EpisodeResult;
use crate::lp::{
    audit_nondegeneracy, optimal_basis, rank, AuditReport, BasicSolution, PseudoBasis, RANK_TOL,
};
use crate::math::{ln, sqrt};
use crate::{Error, Result};

/// Gaps below this are treated as ties between bases.
const GAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub basis: PseudoBasis,
    pub objective: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapTable {
    pub optimal: BasicSolution,
    /// One entry per feasible basis, canonical order.
    pub gaps: Vec<GapEntry>,
    /// Smallest positive gap; zero when every feasible basis ties.
    pub delta_min: f64,
    /// Rank of the mean cost matrix.
    pub rho: usize,
    pub audit: AuditReport,
}

impl GapTable {
    pub fn gap_of(&self, basis: &PseudoBasis) -> Option<f64> {
        self.gaps.iter().find(|g| &g.basis == basis).map(|g| g.gap)
    }
}

/// Optimal basis, gaps of every feasible basis, rank and the
/// non-degeneracy audit at level `audit_eps`.
pub fn analyze(instance: &Instance, audit_eps: f64) -> Result<GapTable> {
    let lp = true_mean_lp(instance);
    let (optimal, all) = optimal_basis(&lp)?;
    let best = optimal.objective;
    let gaps: Vec<GapEntry> = all
        .iter()
        .filter(|s| s.is_feasible)
        .map(|s| GapEntry {
            basis: s.basis.clone(),
            objective: s.objective,
            gap: (best - s.objective).max(0.0),
        })
        .collect();
    let delta_min = gaps
        .iter()
        .map(|g| g.gap)
        .filter(|&g| g > GAP_TOL)
        .fold(f64::INFINITY, f64::min);
    Ok(GapTable {
        optimal,
        gaps,
        delta_min: if delta_min.is_finite() {
            delta_min
        } else {
            0.0
        },
        rho: rank(lp.constraints(), RANK_TOL),
        audit: audit_nondegeneracy(&lp, audit_eps)?,
    })
}

/// `B * obj* + max_k max_i mu^r_k / mu^c_k(i)` over positive mean costs.
pub fn payoff_bound(instance: &Instance) -> Result<f64> {
    let lp = true_mean_lp(instance);
    let (opt, _) = optimal_basis(&lp)?;
    let mut constant = 0.0f64;
    for arm in instance.arms() {
        for &c in &arm.mean_costs {
            if c > 0.0 {
                constant = constant.max(arm.mean_reward / c);
            }
        }
    }
    Ok(instance.scale() * opt.objective + constant)
}

/// Upper bound on the stopping time, for the cases that have one.
pub fn tau_bound(instance: &Instance) -> Option<f64> {
    let positive = |f: &dyn Fn(&[f64]) -> f64| {
        instance
            .arms()
            .iter()
            .map(|a| f(&a.mean_costs))
            .filter(|&c| c > 0.0)
            .fold(f64::INFINITY, f64::min)
    };
    match instance.case() {
        Case::Case1 => {
            let eps = positive(&|c| c[0]);
            Some((instance.budget(0) + 1.0) / eps)
        }
        Case::Case2 => {
            let eps = instance
                .arms()
                .iter()
                .flat_map(|a| a.mean_costs.iter().copied())
                .filter(|&c| c > 0.0)
                .fold(f64::INFINITY, f64::min);
            let total: f64 = instance.budgets().iter().sum();
            Some(total / eps + 1.0)
        }
        _ => None,
    }
}

/// Monte-Carlo summary of a batch of episodes. The regret figure is an
/// upper bound measured against the LP payoff bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretEstimate {
    pub episodes: usize,
    pub lp_payoff_bound: f64,
    pub mean_realized_payoff: f64,
    pub pseudo_regret_ub: f64,
    /// 95% normal half-width; `None` for a single episode.
    pub ci_halfwidth: Option<f64>,
    pub mean_tau: f64,
    pub tau_ci_halfwidth: Option<f64>,
    pub max_tau: u64,
    pub tau_bound: Option<f64>,
}

/// Mean and 95% normal half-width.
pub fn mean_ci(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, Some(1.96 * sqrt(var / n as f64)))
}

pub fn regret_report(episodes: &[EpisodeResult], instance: &Instance) -> Result<RegretEstimate> {
    if episodes.is_empty() {
        return Err(Error::InvalidParameter(
            "regret report over no episodes".into(),
        ));
    }
    let bound = payoff_bound(instance)?;
    let payoffs: Vec<f64> = episodes.iter().map(|e| e.total_payoff).collect();
    let taus: Vec<f64> = episodes.iter().map(|e| e.tau_star as f64).collect();
    let (mean, ci) = mean_ci(&payoffs);
    let (mean_tau, tau_ci) = mean_ci(&taus);
    Ok(RegretEstimate {
        episodes: episodes.len(),
        lp_payoff_bound: bound,
        mean_realized_payoff: mean,
        pseudo_regret_ub: bound - mean,
        ci_halfwidth: ci,
        mean_tau,
        tau_ci_halfwidth: tau_ci,
        max_tau: episodes.iter().map(|e| e.tau_star).max().unwrap_or(0),
        tau_bound: tau_bound(instance),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    pub rss: f64,
    /// Slope indistinguishable from zero.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub budgets: Vec<f64>,
    pub regrets: Vec<f64>,
    pub ln_fit: Fit,
    pub sqrt_fit: Fit,
    /// `regret(B) / ln B` across the grid.
    pub ln_ratios: Vec<f64>,
    /// `regret(B) / sqrt(B)` across the grid.
    pub sqrt_ratios: Vec<f64>,
    /// All regrets equal: neither fit says anything.
    pub degenerate: bool,
    /// `"ln"` or `"sqrt"`, whichever fit has the smaller residual sum.
    pub preferred: String,
}

fn least_squares(x: &[f64], y: &[f64]) -> Fit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| b - slope * a - intercept)
        .collect();
    let rss = residuals.iter().map(|r| r * r).sum();
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    Fit {
        slope,
        intercept,
        residuals,
        rss,
        degenerate: slope.abs() * sqrt(sxx) <= 1e-12 * scale,
    }
}

/// Fits `a ln B + c` and `a sqrt(B) + c` to a regret curve.
pub fn growth_diagnostics(curve: &[(f64, f64)]) -> Result<GrowthReport> {
    if curve.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "growth fit needs at least 3 points, got {}",
            curve.len()
        )));
    }
    if curve.windows(2).any(|w| !(w[1].0 > w[0].0)) || curve.iter().any(|p| !(p.0 > 1.0)) {
        return Err(Error::InvalidParameter(
            "budgets must be increasing and above 1".into(),
        ));
    }
    let budgets: Vec<f64> = curve.iter().map(|p| p.0).collect();
    let regrets: Vec<f64> = curve.iter().map(|p| p.1).collect();
    let lns: Vec<f64> = budgets.iter().map(|&b| ln(b)).collect();
    let roots: Vec<f64> = budgets.iter().map(|&b| sqrt(b)).collect();
    let ln_fit = least_squares(&lns, &regrets);
    let sqrt_fit = least_squares(&roots, &regrets);
    let first = regrets[0];
    let degenerate = regrets
        .iter()
        .all(|&r| (r - first).abs() <= 1e-12 * first.abs().max(1.0));
    let preferred = if ln_fit.rss <= sqrt_fit.rss {
        "ln"
    } else {
        "sqrt"
    };
    Ok(GrowthReport {
        ln_ratios: regrets.iter().zip(&lns).map(|(r, l)| r / l).collect(),
        sqrt_ratios: regrets.iter().zip(&roots).map(|(r, s)| r / s).collect(),
        budgets,
        regrets,
        ln_fit,
        sqrt_fit,
        degenerate,
        preferred: preferred.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_scenario, ScenarioSpec, ValueDist};
    use crate::lp::solve_basic;
    use alloc::vec;

    fn case3() -> Instance {
        make_scenario(
            &ScenarioSpec::Pricing {
                prices: vec![0.3, 0.6],
                valuation: ValueDist::uniform(0.0, 1.0),
                inventory_ratio: 0.5,
                horizon: true,
            },
            1000.0,
            Case::Case3,
        )
        .unwrap()
    }

    fn two_arm_table() -> Instance {
        use crate::env::Outcome;
        let arm = |p: f64, r: f64, c: f64| {
            vec![
                Outcome {
                    prob: p,
                    reward: r / p,
                    costs: vec![c / p],
                },
                Outcome {
                    prob: 1.0 - p,
                    reward: 0.0,
                    costs: vec![0.0],
                },
            ]
        };
        make_scenario(
            &ScenarioSpec::Tabular {
                arms: vec![arm(0.5, 0.45, 0.4), arm(0.5, 0.3, 0.1)],
                budget_ratios: vec![0.25],
                horizon: true,
            },
            1000.0,
            Case::Case3,
        )
        .unwrap()
    }

    #[test]
    fn gap_table_matches_independent_solves() {
        let inst = case3();
        let table = analyze(&inst, 0.0).unwrap();
        let lp = true_mean_lp(&inst);
        assert!(table.gaps.iter().any(|g| g.gap == 0.0));
        for g in &table.gaps {
            let s = solve_basic(&lp, &g.basis).unwrap();
            assert!((table.optimal.objective - s.objective - g.gap).abs() <= 1e-12);
            assert!(g.gap >= 0.0);
        }
        assert_eq!(table.rho, 2);
        assert!(table.delta_min > 0.0);
    }

    #[test]
    fn payoff_bound_adds_best_ratio() {
        let inst = two_arm_table();
        let lp = true_mean_lp(&inst);
        let (opt, _) = optimal_basis(&lp).unwrap();
        // reward/cost ratios 0.45/0.4 and 0.3/0.1; time ratios are smaller
        let b = payoff_bound(&inst).unwrap();
        assert!((b - (1000.0 * opt.objective + 3.0)).abs() < 1e-9);
    }

    #[test]
    fn time_only_bound() {
        let inst = make_scenario(
            &ScenarioSpec::Bernoulli {
                rewards: vec![0.7],
                costs: vec![vec![]],
                budget_ratios: vec![],
                horizon: true,
            },
            100.0,
            Case::Case1,
        )
        .unwrap();
        assert!((payoff_bound(&inst).unwrap() - (100.0 * 0.7 + 0.7)).abs() < 1e-12);
        let t = analyze(&inst, 0.0).unwrap();
        assert!((t.optimal.objective - 0.7).abs() < 1e-15);
        assert_eq!(t.delta_min, 0.7);
    }

    #[test]
    fn synthetic_log_curve() {
        let curve: Vec<(f64, f64)> = [1e3, 1e4, 1e5].iter().map(|&b| (b, 10.0 * ln(b))).collect();
        let g = growth_diagnostics(&curve).unwrap();
        assert!(g.ln_fit.rss < 1e-18);
        assert!(g.ln_ratios.iter().all(|r| (r - 10.0).abs() < 1e-12));
        assert_eq!(g.preferred, "ln");
        assert!(!g.degenerate);
    }

    #[test]
    fn synthetic_sqrt_curve() {
        let curve: Vec<(f64, f64)> = [1e3, 1e4, 1e5]
            .iter()
            .map(|&b| (b, 2.0 * sqrt(b)))
            .collect();
        let g = growth_diagnostics(&curve).unwrap();
        assert_eq!(g.preferred, "sqrt");
        assert!(g.ln_ratios.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn constant_curve_is_degenerate() {
        let g = growth_diagnostics(&[(10.0, 4.0), (100.0, 4.0), (1000.0, 4.0)]).unwrap();
        assert!(g.degenerate && g.ln_fit.degenerate && g.sqrt_fit.degenerate);
        assert!(growth_diagnostics(&[(10.0, 1.0), (100.0, 2.0)]).is_err());
    }

    #[test]
    fn ci_needs_two_samples() {
        assert_eq!(mean_ci(&[3.0]), (3.0, None));
        let (m, ci) = mean_ci(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((ci.unwrap() - 1.96).abs() < 1e-12);
    }
}
