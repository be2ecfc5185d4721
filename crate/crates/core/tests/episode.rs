use bwk_core::env::{make_scenario, Case, Instance, Outcome, ScenarioSpec, ValueDist};
use bwk_core::episode::{run_episode, AssertLevel, EpisodeOptions};
use bwk_core::estimator::Selection;
use bwk_core::oracle::{payoff_bound, regret_report};
use bwk_core::policy::{PolicyConfig, PolicyKind};
use proptest::prelude::*;

fn paranoid() -> EpisodeOptions {
    EpisodeOptions {
        assert_level: AssertLevel::Paranoid,
        record_trace: true,
        horizon_cap: None,
    }
}

#[test]
fn unit_reward_unit_time_stops_after_the_horizon() {
    let inst = make_scenario(
        &ScenarioSpec::Tabular {
            arms: vec![vec![Outcome {
                prob: 1.0,
                reward: 1.0,
                costs: vec![],
            }]],
            budget_ratios: vec![],
            horizon: true,
        },
        10.0,
        Case::Case1,
    )
    .unwrap();
    for cfg in [
        PolicyConfig::ucb_simplex("s").with_kappa(1.0),
        PolicyConfig::new("u", PolicyKind::Ucb1),
        PolicyConfig::new("st", PolicyKind::StaticLp),
    ] {
        let ep = run_episode(&inst, &cfg, 1, &paranoid()).unwrap();
        assert_eq!(ep.tau_star, 11, "{}", cfg.id);
        assert_eq!(ep.total_payoff, 10.0, "{}", cfg.id);
        assert!(ep.stopped);
    }
}

fn pricing(scale: f64) -> Instance {
    make_scenario(
        &ScenarioSpec::Pricing {
            prices: vec![0.2, 0.5, 0.7],
            valuation: ValueDist::uniform(0.0, 1.0),
            inventory_ratio: 0.25,
            horizon: true,
        },
        scale,
        Case::Case3,
    )
    .unwrap()
}

fn sensors(scale: f64, horizon: bool) -> Instance {
    make_scenario(
        &ScenarioSpec::Sensors {
            rewards: vec![0.3, 0.5, 0.6, 0.8],
            energy: vec![0.2, 0.5, 0.4, 0.9],
            battery_ratios: vec![0.1, 0.2, 0.15, 0.3],
            horizon,
        },
        scale,
        Case::Case2,
    )
    .unwrap()
}

fn bernoulli_case4(scale: f64) -> Instance {
    make_scenario(
        &ScenarioSpec::Bernoulli {
            rewards: vec![0.8, 0.8, 0.5],
            costs: vec![vec![0.8, 0.2], vec![0.2, 0.8], vec![0.6, 0.5]],
            budget_ratios: vec![0.4, 0.4],
            horizon: true,
        },
        scale,
        Case::Case4,
    )
    .unwrap()
}

fn policies() -> Vec<PolicyConfig> {
    vec![
        PolicyConfig::ucb_simplex("ucb-simplex").with_kappa(1.0),
        PolicyConfig::new("ucb1", PolicyKind::Ucb1),
        PolicyConfig::new("static-lp", PolicyKind::StaticLp),
        PolicyConfig::new("adaptive-lp", PolicyKind::AdaptiveLp),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Rewards are at most one per round, only rounds before the stop
    /// count, and every budget is respected up to the stopping round.
    #[test]
    fn payoff_and_budget_accounting(seed in any::<u64>(), scale in 50.0f64..400.0, p in 0usize..4) {
        let inst = pricing(scale);
        let cfg = &policies()[p];
        let ep = run_episode(&inst, cfg, seed, &paranoid()).unwrap();
        prop_assert!(ep.violations.is_empty(), "{:?}", ep.violations);
        prop_assert!(ep.total_payoff <= (ep.tau_star - 1) as f64 + 1e-9);
        let trace = ep.trace.as_ref().unwrap();
        prop_assert_eq!(trace.len() as u64, ep.tau_star);
        let mut spent = vec![0.0; inst.num_resources()];
        let mut payoff = 0.0;
        for r in trace {
            if r.observation.payoff {
                payoff += r.observation.reward;
                for (s, c) in spent.iter_mut().zip(&r.observation.costs) {
                    *s += c;
                }
            }
        }
        prop_assert!((payoff - ep.total_payoff).abs() < 1e-9);
        for (i, s) in spent.iter().enumerate() {
            prop_assert!(*s <= inst.budget(i) + 1e-9);
        }
        prop_assert!(ep.consumed.iter().enumerate().any(|(i, c)| *c > inst.budget(i)));
    }

    /// With deterministic costs the stopping time never exceeds the total
    /// budget divided by the smallest positive cost, plus one.
    #[test]
    fn deterministic_stopping_time_bound(seed in any::<u64>(), scale in 20.0f64..2000.0, horizon in any::<bool>()) {
        let inst = sensors(scale, horizon);
        let ep = run_episode(&inst, &PolicyConfig::ucb_simplex("s"), seed, &paranoid()).unwrap();
        prop_assert!(ep.violations.is_empty(), "{:?}", ep.violations);
        let m = inst.mean_cost_matrix();
        let mut eps = f64::INFINITY;
        for i in 0..inst.num_resources() {
            for k in 0..inst.num_arms() {
                if m.get(i, k) > 0.0 {
                    eps = eps.min(m.get(i, k));
                }
            }
        }
        let bound = inst.budgets().iter().sum::<f64>() / eps + 1.0;
        prop_assert!(ep.tau_star as f64 <= bound);
    }

    /// Replaying a trace through a fresh estimator gives the same counters.
    #[test]
    fn trace_replay_reproduces_counters(seed in any::<u64>(), scale in 50.0f64..300.0) {
        let inst = bernoulli_case4(scale);
        let cfg = PolicyConfig::ucb_simplex("s").with_lambda(2.0).with_c_init(0.5);
        let ep = run_episode(&inst, &cfg, seed, &paranoid()).unwrap();
        let trace = ep.trace.as_ref().unwrap();
        let again = bwk_core::estimator::EstimatorState::replay(
            inst.num_arms(),
            inst.num_resources(),
            trace.iter().map(|r| (r.action, &r.observation, &r.selection)),
        );
        prop_assert!(again.counter_distance(&ep.estimator) <= 1e-12);
        prop_assert!(ep.estimator.counters_conserved());
    }

    #[test]
    fn seeds_fully_determine_episodes(seed in any::<u64>(), p in 0usize..4) {
        let inst = pricing(150.0);
        let cfg = &policies()[p];
        let a = run_episode(&inst, cfg, seed, &paranoid()).unwrap();
        let b = run_episode(&inst, cfg, seed, &paranoid()).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn case4_pacing_steps_are_feasible() {
    let inst = bernoulli_case4(2000.0);
    let cfg = PolicyConfig::ucb_simplex("s")
        .with_lambda(2.0)
        .with_c_init(0.5);
    let ep = run_episode(&inst, &cfg, 4, &paranoid()).unwrap();
    assert!(ep.violations.is_empty(), "{:?}", ep.violations);
    assert!(ep.diagnostics.pacing_rounds > 0);
    assert!(ep.diagnostics.max_pacing_violation <= 1e-9);
}

#[test]
fn initialization_rounds_come_first() {
    let inst = sensors(500.0, true);
    let ep = run_episode(&inst, &PolicyConfig::ucb_simplex("s"), 2, &paranoid()).unwrap();
    let trace = ep.trace.unwrap();
    let init = trace
        .iter()
        .take_while(|r| matches!(r.selection, Selection::Init))
        .count();
    assert_eq!(init as u64, ep.estimator.init_pulls);
    assert_eq!(ep.rho.unwrap() as u64 * 4, ep.estimator.init_pulls);
    assert!(trace[init..]
        .iter()
        .all(|r| !matches!(r.selection, Selection::Init)));
}

#[test]
fn regret_is_bound_minus_mean_payoff() {
    let inst = pricing(200.0);
    let cfg = PolicyConfig::ucb_simplex("s").with_kappa(1.0);
    let eps: Vec<_> = (0..8)
        .map(|s| run_episode(&inst, &cfg, s, &EpisodeOptions::default()).unwrap())
        .collect();
    let r = regret_report(&eps, &inst).unwrap();
    let mean = eps.iter().map(|e| e.total_payoff).sum::<f64>() / 8.0;
    let bound = payoff_bound(&inst).unwrap();
    assert_eq!(r.lp_payoff_bound, bound);
    assert!((r.pseudo_regret_ub - (bound - mean)).abs() < 1e-9);
    assert!(r.ci_halfwidth.is_some());
}
