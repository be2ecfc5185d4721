//! One episode: a policy against an environment until some budget runs out.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::env::{Environment, Instance, Observation};
use crate::estimator::{ActionArm, BasisStats, EstimatorState, Selection, SelectionRef};
use crate::lp::FEASIBILITY_TOL;
use crate::policy::{Balancer, Policy, PolicyConfig, PolicyKind};
use crate::rng::{hash_words, PolicyRng};
use crate::Result;

/// How much checking happens while an episode runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssertLevel {
    Off,
    #[default]
    Invariants,
    /// Also re-checks counter conservation every round.
    Paranoid,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOptions {
    pub assert_level: AssertLevel,
    pub record_trace: bool,
    /// Round limit for instances without a time resource. `None` uses
    /// `10 * sum_i B(i) / (smallest positive mean cost)`.
    pub horizon_cap: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub round: u64,
    pub action: ActionArm,
    pub observation: Observation,
    pub selection: Selection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub round: u64,
    pub check: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub swaps: u64,
    pub empty_basis_rounds: u64,
    pub pacing_rounds: u64,
    pub max_pacing_violation: f64,
    pub mean_pacing_delta: f64,
    pub horizon_cap_hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub policy_id: String,
    pub seed: u64,
    /// Round at which some budget was first exceeded, or the last round
    /// played when the episode was cut off.
    pub tau_star: u64,
    pub stopped: bool,
    pub total_payoff: f64,
    pub consumed: Vec<f64>,
    pub rho: Option<usize>,
    pub estimator: EstimatorState,
    pub diagnostics: Diagnostics,
    pub violations: Vec<Violation>,
    pub trace: Option<Vec<TraceRecord>>,
}

impl EpisodeResult {
    pub fn arm_pulls(&self) -> Vec<u64> {
        self.estimator.arms.iter().map(|a| a.pulls).collect()
    }
}

/// Round cap used when time is not a resource.
pub fn default_horizon_cap(instance: &Instance) -> u64 {
    let non_time = instance.num_resources() - usize::from(instance.time_is_resource());
    let min_cost = instance
        .arms()
        .iter()
        .flat_map(|a| a.mean_costs[..non_time].iter().copied())
        .filter(|&c| c > 0.0)
        .fold(f64::INFINITY, f64::min);
    let total: f64 = (0..non_time).map(|i| instance.budget(i)).sum();
    let cap = 10.0 * total / min_cost;
    if cap.is_finite() && cap >= 1.0 {
        cap as u64
    } else {
        u64::MAX
    }
}

/// Largest `|b_x(i) - n_x b(i)|` over the resources of `basis`, divided by `n_x`.
pub fn pacing_deviation(stats: &BasisStats, resources: &[usize], ratios: &[f64]) -> f64 {
    if stats.selections == 0 {
        return 0.0;
    }
    let n = stats.selections as f64;
    resources
        .iter()
        .map(|&i| (stats.consumed[i] - n * ratios[i]).abs())
        .fold(0.0, f64::max)
        / n
}

/// Seeds of the environment and the policy for one episode seed.
fn split_seed(seed: u64) -> (u64, u64) {
    (hash_words(&[seed, 1]), hash_words(&[seed, 2]))
}

pub fn run_episode(
    instance: &Instance,
    config: &PolicyConfig,
    seed: u64,
    options: &EpisodeOptions,
) -> Result<EpisodeResult> {
    let mut policy = Policy::new(config, instance)?;
    let (env_seed, policy_seed) = split_seed(seed);
    let mut env = Environment::new(instance, env_seed);
    let mut rng = PolicyRng::new(policy_seed);
    let (k, c) = (instance.num_arms(), instance.num_resources());
    let mut est = EstimatorState::new(k, c);
    let cap = if instance.time_is_resource() {
        u64::MAX
    } else {
        options
            .horizon_cap
            .unwrap_or_else(|| default_horizon_cap(instance))
    };
    let check = options.assert_level != AssertLevel::Off;
    let paranoid = options.assert_level == AssertLevel::Paranoid;
    let band_check = check
        && policy.config().kind == PolicyKind::UcbSimplex
        && policy.config().balancer == Balancer::Alg2;

    let mut obs = Observation::empty(c);
    let mut trace = options.record_trace.then(Vec::new);
    let mut violations = Vec::new();
    let mut diag = Diagnostics::default();
    let mut payoff = 0.0;
    let mut delta_sum = 0.0;

    while !env.terminated() {
        if env.state().round >= cap {
            diag.horizon_cap_hit = true;
            break;
        }
        let t = env.next_round();
        let (action, basis) = match policy.next_init_arm(&est)? {
            Some(arm) => (ActionArm::Arm(arm), None),
            None => {
                let d = policy.select(&mut est, t, &env.state().consumed, &mut rng)?;
                (d.action, Some(d))
            }
        };
        match action.payoff_arm() {
            Some(arm) => env.step_into(arm, &mut obs)?,
            None => env.skip_into(&mut obs),
        }
        if obs.payoff {
            payoff += obs.reward;
        }
        let selection = match basis {
            None => SelectionRef::Init,
            Some(d) => match d.basis {
                Some(idx) => SelectionRef::Basis(policy.basis(idx)),
                None => SelectionRef::Direct,
            },
        };
        est.record_ref(action, &obs, selection);

        if basis.is_some() {
            let info = policy.last_info();
            diag.swaps += u64::from(info.swapped);
            diag.empty_basis_rounds += u64::from(info.empty_basis);
            if let Some(v) = info.pacing_violation {
                diag.pacing_rounds += 1;
                diag.max_pacing_violation = diag.max_pacing_violation.max(v);
                delta_sum += info.pacing_delta.unwrap_or(0.0);
                if check && v > FEASIBILITY_TOL {
                    violations.push(Violation {
                        round: t,
                        check: "pacing-feasibility".into(),
                        detail: format!("violation {v:e}"),
                    });
                }
            }
        }
        if band_check {
            if let SelectionRef::Basis(x) = selection {
                if let Some(v) = band_violation(&est, x, policy.rho().unwrap_or(1)) {
                    violations.push(Violation {
                        round: t,
                        check: "ratio-band".into(),
                        detail: v,
                    });
                }
            }
        }
        if paranoid && !est.counters_conserved() {
            violations.push(Violation {
                round: t,
                check: "counter-conservation".into(),
                detail: String::new(),
            });
        }
        if let Some(tr) = trace.as_mut() {
            tr.push(TraceRecord {
                round: t,
                action,
                observation: obs.clone(),
                selection: selection.to_owned(),
            });
        }
    }
    if check && !est.counters_conserved() {
        violations.push(Violation {
            round: env.state().round,
            check: "counter-conservation".into(),
            detail: String::new(),
        });
    }
    if diag.pacing_rounds > 0 {
        diag.mean_pacing_delta = delta_sum / diag.pacing_rounds as f64;
    }
    let state = env.state();
    Ok(EpisodeResult {
        policy_id: policy.id().into(),
        seed,
        tau_star: state.stop_time.unwrap_or(state.round),
        stopped: state.stop_time.is_some(),
        total_payoff: payoff,
        consumed: state.consumed.clone(),
        rho: policy.rho(),
        estimator: est,
        diagnostics: diag,
        violations,
        trace,
    })
}

/// Checks `n_x xi_k / sum(xi) - rho <= n^x_k <= n_x xi_k / sum(xi) + 1`.
fn band_violation(
    est: &EstimatorState,
    basis: &crate::lp::PseudoBasis,
    rho: usize,
) -> Option<String> {
    let stats = est.basis(basis)?;
    let xi = stats.frozen_xi.as_ref()?;
    let total: f64 = xi.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let n = stats.selections as f64;
    for (&arm, &x) in basis.arms().iter().zip(xi) {
        let target = n * x / total;
        let got = stats.pulls_of(ActionArm::Arm(arm)) as f64;
        if got > target + 1.0 + 1e-9 || got < target - rho as f64 - 1e-9 {
            return Some(format!(
                "basis {basis}, arm {}: {got} pulls against target {target:.3}",
                arm + 1
            ));
        }
    }
    None
}
