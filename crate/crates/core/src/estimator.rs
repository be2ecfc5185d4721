//! Online sufficient statistics: per-arm running means and confidence
//! radii, plus per-basis selection and consumption counters.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::env::Observation;
use crate::lp::PseudoBasis;
use crate::math::{ln, sqrt};
use crate::{Error, Result};

/// What the load balancer decided to play.
///
/// Numbered `0` (skip), `1..=K` (real arms) and `K+1..=2K` (unit-cost
/// shadows) in reports; stored zero-based here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionArm {
    Skip,
    Arm(usize),
    Shadow(usize),
}

impl ActionArm {
    /// The arm the environment sees, if any.
    pub fn payoff_arm(self) -> Option<usize> {
        match self {
            ActionArm::Skip => None,
            ActionArm::Arm(k) | ActionArm::Shadow(k) => Some(k),
        }
    }

    /// Report numbering: 0 for skip, `k+1` for arm `k`, `K+k+1` for its shadow.
    pub fn number(self, arms: usize) -> usize {
        match self {
            ActionArm::Skip => 0,
            ActionArm::Arm(k) => k + 1,
            ActionArm::Shadow(k) => arms + k + 1,
        }
    }
}

impl fmt::Display for ActionArm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionArm::Skip => f.write_str("skip"),
            ActionArm::Arm(k) => write!(f, "arm {}", k + 1),
            ActionArm::Shadow(k) => write!(f, "shadow {}", k + 1),
        }
    }
}

/// How a round's pull is attributed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Initialization pull; updates arm statistics only.
    Init,
    /// Pull made on behalf of the selected basis.
    Basis(PseudoBasis),
    /// Pull made by a policy that does not select bases.
    Direct,
}

impl Selection {
    pub fn as_ref(&self) -> SelectionRef<'_> {
        match self {
            Selection::Init => SelectionRef::Init,
            Selection::Basis(x) => SelectionRef::Basis(x),
            Selection::Direct => SelectionRef::Direct,
        }
    }
}

/// Borrowed form of [`Selection`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionRef<'a> {
    Init,
    Basis(&'a PseudoBasis),
    Direct,
}

impl SelectionRef<'_> {
    pub fn to_owned(self) -> Selection {
        match self {
            SelectionRef::Init => Selection::Init,
            SelectionRef::Basis(x) => Selection::Basis(x.clone()),
            SelectionRef::Direct => Selection::Direct,
        }
    }
}

/// Running means of one arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmStats {
    pub pulls: u64,
    pub mean_reward: f64,
    pub mean_costs: Vec<f64>,
}

impl ArmStats {
    pub fn new(resources: usize) -> Self {
        Self {
            pulls: 0,
            mean_reward: 0.0,
            mean_costs: vec![0.0; resources],
        }
    }

    pub fn update(&mut self, reward: f64, costs: &[f64]) {
        self.pulls += 1;
        let inv = 1.0 / self.pulls as f64;
        self.mean_reward += (reward - self.mean_reward) * inv;
        for (m, &c) in self.mean_costs.iter_mut().zip(costs) {
            *m += (c - *m) * inv;
        }
    }
}

/// Counters of one basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisStats {
    /// `n_x`: rounds in which the basis was selected.
    pub selections: u64,
    /// `n^x_k`: pulls made on behalf of the basis, per action.
    pub per_arm: BTreeMap<ActionArm, u64>,
    /// `b_x(i)`: resources consumed on behalf of the basis.
    pub consumed: Vec<f64>,
    /// Target ratios frozen at the first selection, aligned with the basis arms.
    pub frozen_xi: Option<Vec<f64>>,
    /// Rounds whose cost ordering contradicted the pacing direction.
    pub swaps: u64,
    /// High-cost member at the previous selection (one-resource balancing).
    #[serde(default)]
    pub last_high: Option<ActionArm>,
}

impl BasisStats {
    pub fn new(resources: usize) -> Self {
        Self {
            selections: 0,
            per_arm: BTreeMap::new(),
            consumed: vec![0.0; resources],
            frozen_xi: None,
            swaps: 0,
            last_high: None,
        }
    }

    pub fn pulls_of(&self, action: ActionArm) -> u64 {
        self.per_arm.get(&action).copied().unwrap_or(0)
    }
}

/// All statistics of an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorState {
    pub arms: Vec<ArmStats>,
    pub bases: BTreeMap<PseudoBasis, BasisStats>,
    pub init_pulls: u64,
    pub direct_pulls: u64,
    /// Rounds recorded so far (`t - 1` before round `t`).
    pub rounds: u64,
    resources: usize,
}

impl EstimatorState {
    pub fn new(arms: usize, resources: usize) -> Self {
        Self {
            arms: (0..arms).map(|_| ArmStats::new(resources)).collect(),
            bases: BTreeMap::new(),
            init_pulls: 0,
            direct_pulls: 0,
            rounds: 0,
            resources,
        }
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn num_resources(&self) -> usize {
        self.resources
    }

    pub fn pulls(&self, arm: usize) -> u64 {
        self.arms[arm].pulls
    }

    /// `epsilon_{k,t} = sqrt(2 ln t / n_{k,t})`.
    pub fn radius(&self, arm: usize, t: u64) -> Result<f64> {
        let a = self.arms.get(arm).ok_or(Error::InvalidArm {
            arm,
            arms: self.arms.len(),
        })?;
        if a.pulls == 0 {
            return Err(Error::UnpulledArm(arm));
        }
        Ok(radius(t, a.pulls))
    }

    /// Statistics of `basis`, created on first access.
    pub fn basis_mut(&mut self, basis: &PseudoBasis) -> &mut BasisStats {
        if !self.bases.contains_key(basis) {
            self.bases
                .insert(basis.clone(), BasisStats::new(self.resources));
        }
        self.bases.get_mut(basis).expect("inserted above")
    }

    pub fn basis(&self, basis: &PseudoBasis) -> Option<&BasisStats> {
        self.bases.get(basis)
    }

    /// Folds one round into the statistics.
    pub fn record(&mut self, action: ActionArm, obs: &Observation, selection: &Selection) {
        self.record_ref(action, obs, selection.as_ref());
    }

    pub fn record_ref(
        &mut self,
        action: ActionArm,
        obs: &Observation,
        selection: SelectionRef<'_>,
    ) {
        if let Some(k) = obs.arm {
            self.arms[k].update(obs.reward, &obs.costs);
        }
        self.rounds += 1;
        match selection {
            SelectionRef::Init => self.init_pulls += 1,
            SelectionRef::Direct => self.direct_pulls += 1,
            SelectionRef::Basis(x) => {
                let stats = self.basis_mut(x);
                stats.selections += 1;
                *stats.per_arm.entry(action).or_insert(0) += 1;
                for (acc, &c) in stats.consumed.iter_mut().zip(&obs.costs) {
                    *acc += c;
                }
            }
        }
    }

    /// Checks `sum_k n^x_k = n_x` per basis and that every round is accounted for.
    pub fn counters_conserved(&self) -> bool {
        let selected: u64 = self.bases.values().map(|b| b.selections).sum();
        self.bases
            .values()
            .all(|b| b.per_arm.values().sum::<u64>() == b.selections)
            && selected + self.init_pulls + self.direct_pulls == self.rounds
    }

    /// Largest difference between the counters of `self` and `other`:
    /// pulls and selections must agree exactly, means and consumption
    /// within the returned distance.
    pub fn counter_distance(&self, other: &Self) -> f64 {
        if self.arms.len() != other.arms.len()
            || self.rounds != other.rounds
            || self.init_pulls != other.init_pulls
            || self.direct_pulls != other.direct_pulls
            || self.bases.len() != other.bases.len()
        {
            return f64::INFINITY;
        }
        let mut d = 0.0f64;
        for (a, b) in self.arms.iter().zip(&other.arms) {
            if a.pulls != b.pulls {
                return f64::INFINITY;
            }
            d = d.max((a.mean_reward - b.mean_reward).abs());
            for (x, y) in a.mean_costs.iter().zip(&b.mean_costs) {
                d = d.max((x - y).abs());
            }
        }
        for ((xa, a), (xb, b)) in self.bases.iter().zip(&other.bases) {
            if xa != xb || a.selections != b.selections || a.per_arm != b.per_arm {
                return f64::INFINITY;
            }
            for (x, y) in a.consumed.iter().zip(&b.consumed) {
                d = d.max((x - y).abs());
            }
        }
        d
    }

    /// Rebuilds the statistics from a recorded trace.
    pub fn replay<'a, I>(arms: usize, resources: usize, trace: I) -> Self
    where
        I: IntoIterator<Item = (ActionArm, &'a Observation, &'a Selection)>,
    {
        let mut s = Self::new(arms, resources);
        for (action, obs, sel) in trace {
            s.record(action, obs, sel);
        }
        s
    }
}

/// `sqrt(2 ln t / n)`.
#[inline]
pub fn radius(t: u64, pulls: u64) -> f64 {
    sqrt(2.0 * ln(t as f64) / pulls as f64).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn obs(arm: usize, reward: f64, costs: &[f64]) -> Observation {
        Observation {
            round: 0,
            arm: Some(arm),
            reward,
            costs: costs.to_vec(),
            payoff: true,
        }
    }

    #[test]
    fn running_means() {
        let mut s = EstimatorState::new(1, 1);
        s.record(ActionArm::Arm(0), &obs(0, 0.4, &[1.0]), &Selection::Init);
        assert_eq!(s.arms[0].pulls, 1);
        assert!((s.arms[0].mean_reward - 0.4).abs() < 1e-15);
        let mut s = EstimatorState::new(1, 1);
        s.record(ActionArm::Arm(0), &obs(0, 0.2, &[1.0]), &Selection::Init);
        s.record(ActionArm::Arm(0), &obs(0, 0.6, &[1.0]), &Selection::Init);
        assert!((s.arms[0].mean_reward - 0.4).abs() < 1e-15);
        assert!(s.bases.is_empty());
    }

    #[test]
    fn basis_counters() {
        let x = PseudoBasis::new(vec![0, 1], vec![0, 1]).unwrap();
        let mut s = EstimatorState::new(2, 2);
        s.record(
            ActionArm::Arm(0),
            &obs(0, 1.0, &[0.5, 1.0]),
            &Selection::Basis(x.clone()),
        );
        s.record(
            ActionArm::Arm(1),
            &obs(1, 0.0, &[0.25, 1.0]),
            &Selection::Basis(x.clone()),
        );
        let b = s.basis(&x).unwrap();
        assert_eq!(b.selections, 2);
        assert_eq!(b.pulls_of(ActionArm::Arm(0)), 1);
        assert_eq!(b.pulls_of(ActionArm::Arm(1)), 1);
        assert_eq!(b.consumed, vec![0.75, 2.0]);
        assert!(s.counters_conserved());
    }

    #[test]
    fn radius_closed_forms() {
        let mut s = EstimatorState::new(1, 1);
        assert_eq!(s.radius(0, 3), Err(Error::UnpulledArm(0)));
        s.record(ActionArm::Arm(0), &obs(0, 0.0, &[1.0]), &Selection::Init);
        s.record(ActionArm::Arm(0), &obs(0, 0.0, &[1.0]), &Selection::Init);
        let e = core::f64::consts::E;
        // t = e is not an integer; use the closed form directly
        assert!((sqrt(2.0 * ln(e) / 2.0) - 1.0).abs() < 1e-15);
        assert!((sqrt(2.0 * ln(e * e) / 4.0) - 1.0).abs() < 1e-15);
        assert_eq!(radius(1, 5), 0.0);
        assert!(s.radius(0, 100).unwrap() > radius(100, 3));
    }

    #[test]
    fn shadow_pull_updates_real_arm() {
        let x = PseudoBasis::new(vec![0], vec![1]).unwrap();
        let mut s = EstimatorState::new(1, 2);
        s.record(
            ActionArm::Shadow(0),
            &obs(0, 1.0, &[0.3, 1.0]),
            &Selection::Basis(x.clone()),
        );
        assert_eq!(s.arms[0].pulls, 1);
        assert_eq!(s.basis(&x).unwrap().pulls_of(ActionArm::Shadow(0)), 1);
        assert_eq!(ActionArm::Shadow(0).number(1), 2);
        assert_eq!(ActionArm::Skip.payoff_arm(), None);
    }

    proptest! {
        #[test]
        fn radius_decreases_in_pulls(t in 2u64..1_000_000, n in 1u64..10_000) {
            prop_assert!(radius(t, n + 1) < radius(t, n));
            prop_assert!(radius(t, n) >= 0.0);
        }

        #[test]
        fn means_match_batch_average(xs in proptest::collection::vec(0.0f64..1.0, 1..500)) {
            let mut s = EstimatorState::new(1, 1);
            for &x in &xs {
                s.record(ActionArm::Arm(0), &obs(0, x, &[1.0 - x]), &Selection::Direct);
            }
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            prop_assert!((s.arms[0].mean_reward - mean).abs() <= 1e-12);
            prop_assert!((s.arms[0].mean_costs[0] - (1.0 - mean)).abs() <= 1e-12);
        }
    }
}
