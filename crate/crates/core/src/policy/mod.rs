//! Decision rules: UCB-Simplex with its load balancers, and the UCB1 and
//! LP-based baselines.

mod balance;
mod config;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use balance::{
    alg2, alg3, alg3_order, alg4, argmax, pacing_feasible, ratio_argmax, Alg3Roles, Pacing,
};
pub use config::{Balancer, InitRule, PolicyConfig, PolicyKind, ResolvedConfig, TieBreak};

use crate::env::{true_mean_lp, Instance};
use crate::estimator::{ActionArm, ArmStats, BasisStats, EstimatorState};
use crate::lp::{optimal_basis, rank, BasisSolver, DenseMatrix, PseudoBasis, RANK_TOL};
use crate::math::{ceil, ln, sqrt};
use crate::rng::PolicyRng;
use crate::{Error, Result};

/// What to play this round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub action: ActionArm,
    /// Index of the selected basis in [`Policy::basis`], if any.
    pub basis: Option<usize>,
}

/// Side information about the last decision.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundInfo {
    pub pacing_delta: Option<f64>,
    pub pacing_violation: Option<f64>,
    /// Pacing distribution over the basis arms; the remainder is a skip.
    pub pacing: Option<Vec<f64>>,
    pub swapped: bool,
    /// The optimizer chose the empty basis.
    pub empty_basis: bool,
}

/// The per-round optimistic LP and its optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcbLpSnapshot {
    pub round: u64,
    pub radii: Vec<f64>,
    /// `r + lambda * eps` per arm.
    pub objective: Vec<f64>,
    /// Adjusted costs, one row per resource.
    pub costs: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub basis: PseudoBasis,
    /// Optimal solution, indexed by arm.
    pub xi: Vec<f64>,
    /// Empirical part `sum_k r_k xi_k` of the optimum.
    pub empirical: f64,
    /// Exploration part `lambda * sum_k eps_k xi_k`.
    pub exploration: f64,
}

/// A configured policy bound to the shape of one instance.
#[derive(Debug, Clone)]
pub struct Policy {
    cfg: ResolvedConfig,
    arms: usize,
    resources: usize,
    time: Option<usize>,
    ratios: Vec<f64>,
    budgets: Vec<f64>,
    solver: Option<BasisSolver>,
    eps: Vec<f64>,
    obj: Vec<f64>,
    mat: Vec<f64>,
    rhs: Vec<f64>,
    static_xi: Vec<f64>,
    rho: Option<usize>,
    init_target: u64,
    round: u64,
    info: RoundInfo,
    counts: Vec<u64>,
    weights: Vec<f64>,
}

impl Policy {
    pub fn new(config: &PolicyConfig, instance: &Instance) -> Result<Self> {
        let cfg = config.resolve(instance)?;
        let (k, c) = (instance.num_arms(), instance.num_resources());
        let solver = match cfg.kind {
            PolicyKind::UcbSimplex | PolicyKind::AdaptiveLp => Some(BasisSolver::new(k, c)?),
            _ => None,
        };
        let static_xi = if cfg.kind == PolicyKind::StaticLp {
            optimal_basis(&true_mean_lp(instance))?.0.xi
        } else {
            Vec::new()
        };
        let init_target = match (cfg.init_rule, instance.horizon()) {
            (InitRule::LogPullsEach, Some(t)) => {
                let n = ceil(cfg.c_init * ln(t as f64));
                if n.is_finite() && n >= 1.0 {
                    n as u64
                } else {
                    1
                }
            }
            _ => 1,
        };
        Ok(Self {
            arms: k,
            resources: c,
            time: instance.time_index(),
            ratios: instance.budget_ratios().to_vec(),
            budgets: instance.budgets(),
            solver,
            eps: vec![0.0; k],
            obj: vec![0.0; k],
            mat: vec![0.0; k * c],
            rhs: instance.budget_ratios().to_vec(),
            static_xi,
            rho: None,
            init_target,
            round: 0,
            info: RoundInfo::default(),
            counts: Vec::with_capacity(k + 1),
            weights: Vec::with_capacity(k + 1),
            cfg,
        })
    }

    pub fn config(&self) -> &ResolvedConfig {
        &self.cfg
    }

    pub fn id(&self) -> &str {
        &self.cfg.id
    }

    /// Pulls per arm demanded by the initialization rule (`ceil(c ln T)` for
    /// the logarithmic rule, otherwise the per-pass target).
    pub fn init_target(&self) -> u64 {
        match self.cfg.init_rule {
            InitRule::LogPullsEach => self.init_target,
            InitRule::RhoPullsEach => self.rho.map_or(1, |r| r as u64),
            _ => 1,
        }
    }

    /// Rank of the observed cost matrix, fixed once initialization ends.
    pub fn rho(&self) -> Option<usize> {
        self.rho
    }

    pub fn basis(&self, idx: usize) -> &PseudoBasis {
        self.solver
            .as_ref()
            .expect("basis indices come from the solver")
            .basis(idx)
    }

    pub fn last_info(&self) -> &RoundInfo {
        &self.info
    }

    fn observed_rank(&self, est: &EstimatorState) -> usize {
        let mut m = DenseMatrix::zeros(self.resources, self.arms);
        for (k, a) in est.arms.iter().enumerate() {
            for (i, &c) in a.mean_costs.iter().enumerate() {
                m.set(i, k, c);
            }
        }
        rank(&m, RANK_TOL).max(1)
    }

    /// Round-robin choice among arms still below `target` pulls.
    fn below(est: &EstimatorState, target: u64) -> Option<usize> {
        let (k, n) = est
            .arms
            .iter()
            .enumerate()
            .min_by_key(|(k, a)| (a.pulls, *k))
            .map(|(k, a)| (k, a.pulls))?;
        (n < target).then_some(k)
    }

    /// Next initialization pull, or `None` once initialization is over.
    pub fn next_init_arm(&mut self, est: &EstimatorState) -> Result<Option<usize>> {
        let next = match self.cfg.init_rule {
            InitRule::None => None,
            InitRule::OnePullEach => Self::below(est, 1),
            InitRule::LogPullsEach => Self::below(est, self.init_target),
            InitRule::RhoPullsEach => match Self::below(est, 1) {
                Some(k) => Some(k),
                None => {
                    if self.rho.is_none() {
                        self.rho = Some(self.observed_rank(est));
                    }
                    Self::below(est, self.rho.unwrap_or(1) as u64)
                }
            },
            InitRule::UntilNonzeroCost => {
                let non_time = self.resources - usize::from(self.time.is_some());
                let done = |a: &ArmStats| {
                    if non_time == 0 {
                        a.pulls > 0
                    } else {
                        a.mean_costs[..non_time].iter().any(|&c| c > 0.0)
                    }
                };
                let pending = est
                    .arms
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| !done(a))
                    .min_by_key(|(k, a)| (a.pulls, *k));
                match pending {
                    Some((k, a)) if a.pulls >= self.cfg.init_cap => {
                        return Err(Error::InitNonterminating {
                            arm: k,
                            rounds: a.pulls,
                        })
                    }
                    Some((k, _)) => Some(k),
                    None => None,
                }
            }
        };
        if next.is_none() && self.rho.is_none() {
            self.rho = Some(self.observed_rank(est));
        }
        Ok(next)
    }

    /// Chooses the action for round `t`. `consumed` is the budget spent so far.
    pub fn select(
        &mut self,
        est: &mut EstimatorState,
        t: u64,
        consumed: &[f64],
        rng: &mut PolicyRng,
    ) -> Result<Decision> {
        self.round = t;
        self.info = RoundInfo::default();
        if self.rho.is_none() {
            self.rho = Some(self.observed_rank(est));
        }
        match self.cfg.kind {
            PolicyKind::UcbSimplex => self.select_simplex(est, t, rng),
            PolicyKind::Ucb1 => {
                self.fill_radii(est, t)?;
                for (k, a) in est.arms.iter().enumerate() {
                    self.obj[k] = a.mean_reward + self.eps[k];
                }
                Ok(Decision {
                    action: ActionArm::Arm(argmax(&self.obj)),
                    basis: None,
                })
            }
            PolicyKind::StaticLp => Ok(Decision {
                action: match rng.categorical(&self.static_xi) {
                    Some(k) => ActionArm::Arm(k),
                    None => ActionArm::Skip,
                },
                basis: None,
            }),
            PolicyKind::AdaptiveLp => self.select_adaptive(est, t, consumed, rng),
        }
    }

    fn fill_radii(&mut self, est: &EstimatorState, t: u64) -> Result<()> {
        let two_ln_t = 2.0 * ln(t as f64);
        for (k, a) in est.arms.iter().enumerate() {
            if a.pulls == 0 {
                return Err(Error::UnpulledArm(k));
            }
            self.eps[k] = sqrt(two_ln_t / a.pulls as f64).max(0.0);
        }
        Ok(())
    }

    fn select_simplex(
        &mut self,
        est: &mut EstimatorState,
        t: u64,
        rng: &mut PolicyRng,
    ) -> Result<Decision> {
        self.fill_radii(est, t)?;
        let (k, c) = (self.arms, self.resources);
        let lambda = self.cfg.lambda;
        for (j, a) in est.arms.iter().enumerate() {
            self.obj[j] = a.mean_reward + lambda * self.eps[j];
            for i in 0..c {
                self.mat[i * k + j] = a.mean_costs[i] - self.cfg.eta[i] * self.eps[j];
            }
        }
        let solver = self.solver.as_mut().expect("simplex policy owns a solver");
        let idx = solver.solve_slices(&self.obj, &self.mat, &self.rhs)?;
        let basis = solver.basis(idx);
        if basis.is_empty() {
            self.info.empty_basis = true;
            let action = if self.time.is_some() && self.cfg.skip_rounds_allowed {
                ActionArm::Skip
            } else {
                ActionArm::Arm(argmax(&self.obj))
            };
            return Ok(Decision {
                action,
                basis: Some(idx),
            });
        }
        let xi = solver.xi_compact(idx);
        let stats = est.basis_mut(basis);
        if stats.frozen_xi.is_none() {
            stats.frozen_xi = Some(xi.to_vec());
        }
        let action = match self.cfg.balancer {
            Balancer::Alg2 => {
                self.counts.clear();
                self.counts.extend(
                    basis
                        .arms()
                        .iter()
                        .map(|&a| stats.pulls_of(ActionArm::Arm(a))),
                );
                let frozen = stats.frozen_xi.as_deref().unwrap_or(xi);
                ActionArm::Arm(basis.arms()[alg2(frozen, stats.selections, &self.counts)])
            }
            Balancer::Alg5 | Balancer::Alg6 => {
                self.counts.clear();
                self.counts
                    .extend(basis.arms().iter().map(|&a| est.arms[a].pulls));
                let stats = est.basis(basis).expect("created above");
                let weights = match self.cfg.balancer {
                    Balancer::Alg5 => stats.frozen_xi.as_deref().unwrap_or(xi),
                    _ => xi,
                };
                ActionArm::Arm(basis.arms()[ratio_argmax(weights, &self.counts)])
            }
            Balancer::Alg3 => {
                let col = |j: usize| self.mat[j];
                let roles = match (basis.arms(), basis.resources()) {
                    (&[a, b], _) => {
                        alg3_order((ActionArm::Arm(a), col(a)), (ActionArm::Arm(b), col(b)))
                    }
                    (&[a], &[0]) => alg3_order((ActionArm::Arm(a), col(a)), (ActionArm::Skip, 0.0)),
                    (&[a], _) => {
                        alg3_order((ActionArm::Shadow(a), 1.0), (ActionArm::Arm(a), col(a)))
                    }
                    _ => return Err(Error::InvalidBasis(format!("alg3 cannot balance {basis}"))),
                };
                if let Some(prev) = stats.last_high {
                    if prev != roles.high {
                        stats.swaps += 1;
                        self.info.swapped = true;
                    }
                }
                stats.last_high = Some(roles.high);
                let mut pick = alg3(&roles, stats.consumed[0], stats.selections, self.ratios[0]);
                if pick == ActionArm::Skip && !self.cfg.skip_rounds_allowed {
                    pick = if roles.high == ActionArm::Skip {
                        roles.low
                    } else {
                        roles.high
                    };
                }
                pick
            }
            Balancer::Alg4 => {
                let time = self.time.expect("validated: alg4 has a horizon");
                let basis = solver.basis(idx);
                let stats = est.basis(basis).expect("created above");
                let pacing = pace(
                    basis,
                    stats,
                    &self.mat,
                    &self.ratios,
                    k,
                    c,
                    time,
                    self.cfg.delta_max,
                )?;
                self.info.pacing_delta = Some(pacing.delta);
                self.info.pacing_violation = Some(pacing.violation);
                let d = basis.size();
                let real = &pacing.p[..d];
                self.info.pacing = Some(real.to_vec());
                self.weights.clear();
                self.weights.extend(real.iter().map(|&x| x.max(0.0)));
                let drawn = rng.categorical(&self.weights);
                match drawn {
                    Some(j) => ActionArm::Arm(basis.arms()[j]),
                    None if self.cfg.skip_rounds_allowed => ActionArm::Skip,
                    None => {
                        let total: f64 = self.weights.iter().sum();
                        if total > 0.0 {
                            self.weights.iter_mut().for_each(|w| *w /= total);
                            let j = rng.categorical(&self.weights).unwrap_or(d - 1);
                            ActionArm::Arm(basis.arms()[j])
                        } else {
                            let j = basis
                                .arms()
                                .iter()
                                .copied()
                                .max_by(|&a, &b| {
                                    self.obj[a]
                                        .partial_cmp(&self.obj[b])
                                        .unwrap_or(core::cmp::Ordering::Equal)
                                        .then(b.cmp(&a))
                                })
                                .expect("nonempty basis");
                            ActionArm::Arm(j)
                        }
                    }
                }
            }
        };
        Ok(Decision {
            action,
            basis: Some(idx),
        })
    }

    fn select_adaptive(
        &mut self,
        est: &EstimatorState,
        t: u64,
        consumed: &[f64],
        rng: &mut PolicyRng,
    ) -> Result<Decision> {
        self.fill_radii(est, t)?;
        let (k, c) = (self.arms, self.resources);
        let time = self.time.expect("validated: adaptive-lp has a horizon");
        let left_rounds = (self.budgets[time] - consumed[time]).max(1.0);
        for (j, a) in est.arms.iter().enumerate() {
            self.obj[j] = a.mean_reward + self.eps[j];
            for i in 0..c {
                self.mat[i * k + j] = if i == time {
                    1.0
                } else {
                    (a.mean_costs[i] - self.eps[j]).max(0.0)
                };
            }
        }
        for i in 0..c {
            self.rhs[i] = if i == time {
                1.0
            } else {
                (1.0 - self.cfg.gamma) * (self.budgets[i] - consumed[i]).max(0.0) / left_rounds
            };
        }
        let solver = self.solver.as_mut().expect("adaptive policy owns a solver");
        let idx = solver.solve_slices(&self.obj, &self.mat, &self.rhs)?;
        let basis = solver.basis(idx);
        let action = match rng.categorical(solver.xi_compact(idx)) {
            Some(j) => ActionArm::Arm(basis.arms()[j]),
            None => ActionArm::Skip,
        };
        Ok(Decision {
            action,
            basis: None,
        })
    }

    /// The optimistic LP of the last simplex round.
    pub fn snapshot(&self) -> Option<UcbLpSnapshot> {
        if self.cfg.kind != PolicyKind::UcbSimplex {
            return None;
        }
        let solver = self.solver.as_ref()?;
        let idx = solver.best();
        let sol = solver.solution(idx);
        let (k, c) = (self.arms, self.resources);
        let lambda = self.cfg.lambda;
        let mut empirical = 0.0;
        let mut exploration = 0.0;
        for j in 0..k {
            empirical += (self.obj[j] - lambda * self.eps[j]) * sol.xi[j];
            exploration += lambda * self.eps[j] * sol.xi[j];
        }
        Some(UcbLpSnapshot {
            round: self.round,
            radii: self.eps.clone(),
            objective: self.obj.clone(),
            costs: (0..c)
                .map(|i| self.mat[i * k..(i + 1) * k].to_vec())
                .collect(),
            rhs: self.rhs.clone(),
            basis: sol.basis,
            xi: sol.xi,
            empirical,
            exploration,
        })
    }
}

/// Builds the (possibly skip-augmented) basis system and runs the pacing
/// step. Columns are the basis arms followed by skip when time is not
/// already binding.
#[allow(clippy::too_many_arguments)]
fn pace(
    basis: &PseudoBasis,
    stats: &BasisStats,
    mat: &[f64],
    ratios: &[f64],
    k: usize,
    c: usize,
    time: usize,
    delta_max: f64,
) -> Result<Pacing> {
    let augmented = !basis.contains_resource(time);
    let mut rows: Vec<usize> = basis.resources().to_vec();
    if augmented {
        rows.push(time);
    }
    let d = rows.len();
    let entry = |i: usize, col: usize| -> f64 {
        if col < basis.size() {
            mat[i * k + basis.arms()[col]]
        } else if i == time {
            1.0
        } else {
            0.0
        }
    };
    let mut a = vec![0.0; d * d];
    let mut rhs = vec![0.0; d];
    let mut e = vec![0.0; d];
    let n_x = stats.selections as f64;
    for (r, &i) in rows.iter().enumerate() {
        for col in 0..d {
            a[r * d + col] = entry(i, col);
        }
        rhs[r] = ratios[i];
        e[r] = if i == time {
            0.0
        } else if stats.consumed[i] >= n_x * ratios[i] {
            -1.0
        } else {
            1.0
        };
    }
    let mut off_rows = Vec::new();
    let mut off_rhs = Vec::new();
    for i in (0..c).filter(|i| !rows.contains(i)) {
        off_rows.extend((0..d).map(|col| entry(i, col)));
        off_rhs.push(ratios[i]);
    }
    alg4(&a, &rhs, &e, &off_rows, &off_rhs, delta_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_scenario, Case, Environment, ScenarioSpec};
    use crate::estimator::Selection;

    fn time_only() -> Instance {
        make_scenario(
            &ScenarioSpec::Bernoulli {
                rewards: vec![0.2, 0.8, 0.5],
                costs: vec![vec![], vec![], vec![]],
                budget_ratios: vec![],
                horizon: true,
            },
            200.0,
            Case::Case1,
        )
        .unwrap()
    }

    fn drive(instance: &Instance, cfg: &PolicyConfig, seed: u64) -> (Policy, EstimatorState) {
        let mut policy = Policy::new(cfg, instance).unwrap();
        let mut env = Environment::new(instance, seed);
        let mut est = EstimatorState::new(instance.num_arms(), instance.num_resources());
        let mut rng = PolicyRng::new(seed);
        while !env.terminated() {
            if let Some(k) = policy.next_init_arm(&est).unwrap() {
                let obs = env.step(k).unwrap();
                est.record(ActionArm::Arm(k), &obs, &Selection::Init);
                continue;
            }
            let t = env.next_round();
            let consumed = env.state().consumed.clone();
            let d = policy.select(&mut est, t, &consumed, &mut rng).unwrap();
            let obs = match d.action.payoff_arm() {
                Some(k) => env.step(k).unwrap(),
                None => env.skip(),
            };
            let sel = match d.basis {
                Some(i) => Selection::Basis(policy.basis(i).clone()),
                None => Selection::Direct,
            };
            est.record(d.action, &obs, &sel);
        }
        (policy, est)
    }

    #[test]
    fn time_only_reduces_to_ucb1() {
        let inst = time_only();
        let simplex = PolicyConfig::ucb_simplex("s").with_kappa(0.0);
        let ucb = PolicyConfig::new("u", PolicyKind::Ucb1);
        let (_, a) = drive(&inst, &simplex, 3);
        let (_, b) = drive(&inst, &ucb, 3);
        let pulls = |e: &EstimatorState| e.arms.iter().map(|a| a.pulls).collect::<Vec<_>>();
        assert_eq!(pulls(&a), pulls(&b));
    }

    #[test]
    fn static_lp_plays_optimal_mix() {
        let inst = time_only();
        let (_, est) = drive(&inst, &PolicyConfig::new("s", PolicyKind::StaticLp), 1);
        assert_eq!(est.arms[1].pulls, est.rounds);
    }

    #[test]
    fn rho_from_observed_costs() {
        let inst = make_scenario(
            &ScenarioSpec::Sensors {
                rewards: vec![0.5, 0.6, 0.7],
                energy: vec![0.4, 0.5, 0.6],
                battery_ratios: vec![0.1, 0.1, 0.1],
                horizon: true,
            },
            100.0,
            Case::Case2,
        )
        .unwrap();
        let (policy, est) = drive(&inst, &PolicyConfig::ucb_simplex("s"), 9);
        assert_eq!(policy.rho(), Some(3));
        assert!(est.arms.iter().all(|a| a.pulls >= 3));
        assert!(est.counters_conserved());
    }

    #[test]
    fn case3_runs_with_shadows_and_skips() {
        let inst = make_scenario(
            &ScenarioSpec::Pricing {
                prices: vec![0.3, 0.6, 0.9],
                valuation: crate::env::ValueDist::uniform(0.0, 1.0),
                inventory_ratio: 0.3,
                horizon: true,
            },
            300.0,
            Case::Case3,
        )
        .unwrap();
        let (_, est) = drive(&inst, &PolicyConfig::ucb_simplex("s").with_kappa(0.5), 4);
        assert!(est.counters_conserved());
        assert!(est.rounds <= 301);
        assert!(est.bases.values().any(|b| b.selections > 0));
    }

    #[test]
    fn case4_pacing_is_feasible() {
        let inst = make_scenario(
            &ScenarioSpec::Bernoulli {
                rewards: vec![0.6, 0.5, 0.3],
                costs: vec![vec![0.6, 0.2], vec![0.2, 0.6], vec![0.1, 0.1]],
                budget_ratios: vec![0.3, 0.3],
                horizon: true,
            },
            300.0,
            Case::Case4,
        )
        .unwrap();
        let cfg = PolicyConfig::ucb_simplex("s")
            .with_epsilon(0.05)
            .with_lambda(2.0)
            .with_c_init(1.0);
        let mut policy = Policy::new(&cfg, &inst).unwrap();
        assert_eq!(policy.init_target(), ceil(ln(300.0)) as u64);
        let mut env = Environment::new(&inst, 2);
        let mut est = EstimatorState::new(3, 3);
        let mut rng = PolicyRng::new(2);
        while !env.terminated() {
            if let Some(k) = policy.next_init_arm(&est).unwrap() {
                let obs = env.step(k).unwrap();
                est.record(ActionArm::Arm(k), &obs, &Selection::Init);
                continue;
            }
            let t = env.next_round();
            let consumed = env.state().consumed.clone();
            let d = policy.select(&mut est, t, &consumed, &mut rng).unwrap();
            if let Some(v) = policy.last_info().pacing_violation {
                assert!(v <= 1e-9);
            }
            let obs = match d.action.payoff_arm() {
                Some(k) => env.step(k).unwrap(),
                None => env.skip(),
            };
            let sel = Selection::Basis(policy.basis(d.basis.unwrap()).clone());
            est.record(d.action, &obs, &sel);
        }
        assert!(est.counters_conserved());
    }
}
