//! Ground-truth environments: instances, joint sampling and budget
//! accounting with the stopping rule.

mod arm;
mod dist;
mod scenario;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub use arm::{ArmKind, ArmModel, Outcome, RewardModel, ShelfItem};
pub use dist::ValueDist;
pub use scenario::{make_scenario, scenario_names, ScenarioSpec};

use crate::lp::{DenseMatrix, LpProblem};
use crate::rng::StreamRng;
use crate::{Error, Result};

/// Which structural regime an instance belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    /// A single limited resource.
    Case1,
    /// Arbitrarily many resources, deterministic costs.
    Case2,
    /// One stochastic resource plus a time horizon.
    Case3,
    /// Arbitrarily many resources, the last one being time.
    Case4,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::Case1 => "case1",
            Case::Case2 => "case2",
            Case::Case3 => "case3",
            Case::Case4 => "case4",
        })
    }
}

/// A validated BwK problem. When time is a resource it is the last one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    arms: Vec<ArmModel>,
    budget_ratios: Vec<f64>,
    scale: f64,
    time_is_resource: bool,
    case: Case,
}

impl Instance {
    /// `budget_ratios` covers every resource, time included (as 1).
    pub fn new(
        kinds: Vec<ArmKind>,
        budget_ratios: Vec<f64>,
        scale: f64,
        time_is_resource: bool,
        case: Case,
    ) -> Result<Self> {
        if kinds.is_empty() {
            return Err(Error::Dimension("instance without arms".into()));
        }
        let c = budget_ratios.len();
        if c == 0 {
            return Err(Error::Dimension("instance without resources".into()));
        }
        let non_time = c - usize::from(time_is_resource);
        for (k, kind) in kinds.iter().enumerate() {
            if kind.resources() != non_time {
                return Err(Error::Dimension(format!(
                    "arm {} consumes {} resources, expected {non_time}",
                    k + 1,
                    kind.resources()
                )));
            }
        }
        if budget_ratios.iter().any(|&b| !(b > 0.0 && b <= 1.0)) {
            return Err(Error::InvalidParameter(
                "budget ratios must lie in (0, 1]".into(),
            ));
        }
        if time_is_resource && budget_ratios[c - 1] != 1.0 {
            return Err(Error::InvalidParameter(
                "the time resource must have budget ratio 1".into(),
            ));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!("budget scale {scale}")));
        }
        let arms = kinds
            .into_iter()
            .map(|k| ArmModel::new(k, time_is_resource))
            .collect::<Result<Vec<_>>>()?;
        match case {
            Case::Case1 if c != 1 => {
                return Err(Error::InvalidParameter(format!(
                    "case1 needs a single resource, got {c}"
                )))
            }
            Case::Case2 if !arms.iter().all(|a| a.kind.deterministic_costs()) => {
                return Err(Error::InvalidParameter(
                    "case2 needs deterministic costs".into(),
                ))
            }
            Case::Case3 if !(c == 2 && time_is_resource) => {
                return Err(Error::InvalidParameter(
                    "case3 needs one resource plus time".into(),
                ))
            }
            Case::Case4 if !time_is_resource => {
                return Err(Error::InvalidParameter(
                    "case4 needs time as the last resource".into(),
                ))
            }
            _ => {}
        }
        Ok(Self {
            arms,
            budget_ratios,
            scale,
            time_is_resource,
            case,
        })
    }

    pub fn arms(&self) -> &[ArmModel] {
        &self.arms
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn num_resources(&self) -> usize {
        self.budget_ratios.len()
    }

    pub fn budget_ratios(&self) -> &[f64] {
        &self.budget_ratios
    }

    /// `b = min_i b(i)`.
    pub fn min_ratio(&self) -> f64 {
        self.budget_ratios
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Budget of resource `i`, `b(i) * B`.
    pub fn budget(&self, i: usize) -> f64 {
        self.budget_ratios[i] * self.scale
    }

    pub fn budgets(&self) -> Vec<f64> {
        (0..self.num_resources()).map(|i| self.budget(i)).collect()
    }

    pub fn time_is_resource(&self) -> bool {
        self.time_is_resource
    }

    /// Index of the time resource, if any.
    pub fn time_index(&self) -> Option<usize> {
        self.time_is_resource.then(|| self.num_resources() - 1)
    }

    /// Horizon `T` when time is a resource.
    pub fn horizon(&self) -> Option<u64> {
        self.time_index()
            .map(|i| libm::floor(self.budget(i)) as u64)
    }

    pub fn case(&self) -> Case {
        self.case
    }

    /// Same instance at another budget scale.
    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!("budget scale {scale}")));
        }
        Ok(Self {
            scale,
            ..self.clone()
        })
    }

    /// Mean cost matrix, `C x K`.
    pub fn mean_cost_matrix(&self) -> DenseMatrix {
        let (k, c) = (self.num_arms(), self.num_resources());
        let mut m = DenseMatrix::zeros(c, k);
        for (j, arm) in self.arms.iter().enumerate() {
            for i in 0..c {
                m.set(i, j, arm.mean_costs[i]);
            }
        }
        m
    }

    pub fn mean_rewards(&self) -> Vec<f64> {
        self.arms.iter().map(|a| a.mean_reward).collect()
    }
}

/// The clairvoyant LP built from true means.
pub fn true_mean_lp(instance: &Instance) -> LpProblem {
    LpProblem::new(
        instance.mean_rewards(),
        instance.mean_cost_matrix(),
        instance.budget_ratios.clone(),
    )
    .expect("validated instance yields a valid LP")
}

/// One round of feedback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub round: u64,
    /// `None` for a skipped round.
    pub arm: Option<usize>,
    pub reward: f64,
    /// Costs on every resource, time included.
    pub costs: Vec<f64>,
    /// Whether the reward counts toward the payoff (round before the stop).
    pub payoff: bool,
}

impl Observation {
    pub fn empty(resources: usize) -> Self {
        Self {
            round: 0,
            arm: None,
            reward: 0.0,
            costs: vec![0.0; resources],
            payoff: false,
        }
    }
}

/// Budget accounting of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub consumed: Vec<f64>,
    /// Rounds played so far.
    pub round: u64,
    pub terminated: bool,
    /// First round at which some resource went over budget.
    pub stop_time: Option<u64>,
}

/// An episode's environment: instance, random stream and state.
#[derive(Debug, Clone)]
pub struct Environment<'a> {
    instance: &'a Instance,
    rng: StreamRng,
    budgets: Vec<f64>,
    state: EnvState,
}

impl<'a> Environment<'a> {
    pub fn new(instance: &'a Instance, seed: u64) -> Self {
        Self {
            instance,
            rng: StreamRng::new(seed),
            budgets: instance.budgets(),
            state: EnvState {
                consumed: vec![0.0; instance.num_resources()],
                round: 0,
                terminated: false,
                stop_time: None,
            },
        }
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn terminated(&self) -> bool {
        self.state.terminated
    }

    /// Round number the next pull will be played at (1-based).
    pub fn next_round(&self) -> u64 {
        self.state.round + 1
    }

    /// Pulls `arm`, allocating a fresh observation.
    pub fn step(&mut self, arm: usize) -> Result<Observation> {
        let mut obs = Observation::empty(self.instance.num_resources());
        self.step_into(arm, &mut obs)?;
        Ok(obs)
    }

    /// Pulls `arm` and writes the outcome into `obs`.
    pub fn step_into(&mut self, arm: usize, obs: &mut Observation) -> Result<()> {
        let k = self.instance.num_arms();
        if arm >= k {
            return Err(Error::InvalidArm { arm, arms: k });
        }
        let round = self.state.round + 1;
        let c = self.instance.num_resources();
        obs.costs.resize(c, 0.0);
        let non_time = c - usize::from(self.instance.time_is_resource);
        obs.reward = self.instance.arms[arm].kind.sample(
            &mut self.rng,
            round,
            arm,
            &mut obs.costs[..non_time],
        );
        if self.instance.time_is_resource {
            obs.costs[c - 1] = 1.0;
        }
        obs.arm = Some(arm);
        self.advance(round, obs);
        Ok(())
    }

    /// Skips the round: no reward, one unit of time when time is limited.
    pub fn skip(&mut self) -> Observation {
        let mut obs = Observation::empty(self.instance.num_resources());
        self.skip_into(&mut obs);
        obs
    }

    pub fn skip_into(&mut self, obs: &mut Observation) {
        let round = self.state.round + 1;
        let c = self.instance.num_resources();
        obs.costs.resize(c, 0.0);
        obs.costs.iter_mut().for_each(|x| *x = 0.0);
        if self.instance.time_is_resource {
            obs.costs[c - 1] = 1.0;
        }
        obs.reward = 0.0;
        obs.arm = None;
        self.advance(round, obs);
    }

    fn advance(&mut self, round: u64, obs: &mut Observation) {
        let was_terminated = self.state.terminated;
        let mut over = false;
        for (i, (acc, &c)) in self.state.consumed.iter_mut().zip(&obs.costs).enumerate() {
            *acc += c;
            if *acc > self.budgets[i] {
                over = true;
            }
        }
        self.state.round = round;
        obs.round = round;
        if over && !was_terminated {
            self.state.terminated = true;
            self.state.stop_time = Some(round);
        }
        obs.payoff = !self.state.terminated;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det_instance(cost: f64, scale: f64, time: bool) -> Instance {
        let costs = if time { vec![] } else { vec![cost] };
        Instance::new(
            vec![ArmKind::DeterministicCost {
                reward: RewardModel::Bernoulli { p: 1.0 },
                costs,
            }],
            vec![1.0],
            scale,
            time,
            Case::Case1,
        )
        .unwrap()
    }

    #[test]
    fn half_cost_stops_at_twenty_one() {
        let inst = det_instance(0.5, 10.0, false);
        let mut env = Environment::new(&inst, 1);
        for t in 1..=20 {
            let o = env.step(0).unwrap();
            assert!(o.payoff, "round {t}");
        }
        assert!(!env.terminated());
        let o = env.step(0).unwrap();
        assert!(!o.payoff);
        assert_eq!(env.state().stop_time, Some(21));
    }

    #[test]
    fn time_only_horizon() {
        let inst = det_instance(0.0, 5.0, true);
        let mut env = Environment::new(&inst, 1);
        while !env.terminated() {
            env.step(0).unwrap();
        }
        assert_eq!(env.state().stop_time, Some(6));
    }

    #[test]
    fn certain_bernoulli_cost_boundary() {
        let inst = Instance::new(
            vec![ArmKind::BernoulliJoint {
                reward: 0.5,
                costs: vec![1.0],
            }],
            vec![1.0],
            3.0,
            false,
            Case::Case1,
        )
        .unwrap();
        let mut env = Environment::new(&inst, 9);
        while !env.terminated() {
            env.step(0).unwrap();
        }
        assert_eq!(env.state().stop_time, Some(4));
    }

    #[test]
    fn rejects_bad_arm_and_bad_case() {
        let inst = det_instance(0.5, 10.0, false);
        let mut env = Environment::new(&inst, 1);
        assert_eq!(
            env.step(3).unwrap_err(),
            Error::InvalidArm { arm: 3, arms: 1 }
        );
        let err = Instance::new(
            vec![ArmKind::BernoulliJoint {
                reward: 0.5,
                costs: vec![0.5],
            }],
            vec![1.0],
            3.0,
            false,
            Case::Case2,
        );
        assert!(err.is_err());
    }

    #[test]
    fn skip_consumes_time_only() {
        let inst = Instance::new(
            vec![ArmKind::BernoulliJoint {
                reward: 0.5,
                costs: vec![1.0],
            }],
            vec![0.5, 1.0],
            4.0,
            true,
            Case::Case3,
        )
        .unwrap();
        let mut env = Environment::new(&inst, 2);
        let o = env.skip();
        assert_eq!(o.costs, vec![0.0, 1.0]);
        assert_eq!(o.reward, 0.0);
        assert_eq!(env.state().consumed, vec![0.0, 1.0]);
    }

    #[test]
    fn single_arm_time_lp() {
        let lp = true_mean_lp(&det_instance(0.0, 5.0, true));
        assert_eq!(lp.constraints().to_rows(), vec![vec![1.0]]);
        assert_eq!(lp.rhs(), &[1.0]);
    }
}
