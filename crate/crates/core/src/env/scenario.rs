use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::arm::{ArmKind, Outcome, RewardModel, ShelfItem};
use super::dist::ValueDist;
use super::{Case, Instance};
use crate::{Error, Result};

fn yes() -> bool {
    true
}

/// Built-in instance generators. Budget ratios list the non-time resources;
/// the time resource (ratio 1) is appended when `horizon` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum ScenarioSpec {
    /// Posted prices against i.i.d. buyer valuations with limited inventory.
    Pricing {
        prices: Vec<f64>,
        valuation: ValueDist,
        inventory_ratio: f64,
        #[serde(default = "yes")]
        horizon: bool,
    },
    /// Bidding in second-price auctions with a spending budget.
    Auction {
        bids: Vec<f64>,
        utility: ValueDist,
        competitor: ValueDist,
        budget_ratio: f64,
        #[serde(default = "yes")]
        horizon: bool,
    },
    /// Posted prices to sellers with a procurement budget.
    Procurement {
        prices: Vec<f64>,
        valuation: ValueDist,
        budget_ratio: f64,
        #[serde(default = "yes")]
        horizon: bool,
    },
    /// Ads paid per click, one budget per advertiser, plus time.
    AdAlloc {
        cost_per_click: Vec<f64>,
        click_probs: Vec<f64>,
        budget_ratios: Vec<f64>,
    },
    /// Sensor `k` drains only its own battery by a fixed amount.
    Sensors {
        rewards: Vec<f64>,
        energy: Vec<f64>,
        battery_ratios: Vec<f64>,
        #[serde(default = "yes")]
        horizon: bool,
    },
    /// Promotion-space allocation; every resource costs 1 per round.
    Shelf {
        arms: Vec<Vec<ShelfItem>>,
        perish_ratios: Vec<f64>,
        revenue_scale: f64,
    },
    /// Bernoulli rewards with a fixed cost matrix (one row per arm).
    Deterministic {
        rewards: Vec<f64>,
        costs: Vec<Vec<f64>>,
        budget_ratios: Vec<f64>,
        #[serde(default = "yes")]
        horizon: bool,
    },
    /// Independent Bernoulli rewards and costs.
    Bernoulli {
        rewards: Vec<f64>,
        costs: Vec<Vec<f64>>,
        budget_ratios: Vec<f64>,
        #[serde(default = "yes")]
        horizon: bool,
    },
    /// Explicit joint outcome tables.
    Tabular {
        arms: Vec<Vec<Outcome>>,
        budget_ratios: Vec<f64>,
        #[serde(default = "yes")]
        horizon: bool,
    },
}

/// Names accepted in the `name` field of a scenario.
pub fn scenario_names() -> &'static [&'static str] {
    &[
        "pricing",
        "auction",
        "procurement",
        "ad-alloc",
        "sensors",
        "shelf",
        "deterministic",
        "bernoulli",
        "tabular",
    ]
}

fn with_time(mut ratios: Vec<f64>, horizon: bool) -> Vec<f64> {
    if horizon {
        ratios.push(1.0);
    }
    ratios
}

fn same_len(what: &str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(format!("{what}: {a} vs {b}")));
    }
    Ok(())
}

impl ScenarioSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioSpec::Pricing { .. } => "pricing",
            ScenarioSpec::Auction { .. } => "auction",
            ScenarioSpec::Procurement { .. } => "procurement",
            ScenarioSpec::AdAlloc { .. } => "ad-alloc",
            ScenarioSpec::Sensors { .. } => "sensors",
            ScenarioSpec::Shelf { .. } => "shelf",
            ScenarioSpec::Deterministic { .. } => "deterministic",
            ScenarioSpec::Bernoulli { .. } => "bernoulli",
            ScenarioSpec::Tabular { .. } => "tabular",
        }
    }
}

/// Builds the instance described by `spec` at budget scale `scale`.
pub fn make_scenario(spec: &ScenarioSpec, scale: f64, case: Case) -> Result<Instance> {
    match spec {
        ScenarioSpec::Pricing {
            prices,
            valuation,
            inventory_ratio,
            horizon,
        } => {
            let arms = prices
                .iter()
                .map(|&price| ArmKind::Pricing {
                    price,
                    valuation: valuation.clone(),
                    consumption: vec![1.0],
                })
                .collect();
            Instance::new(
                arms,
                with_time(vec![*inventory_ratio], *horizon),
                scale,
                *horizon,
                case,
            )
        }
        ScenarioSpec::Auction {
            bids,
            utility,
            competitor,
            budget_ratio,
            horizon,
        } => {
            let arms = bids
                .iter()
                .map(|&bid| ArmKind::Auction {
                    bid,
                    utility: utility.clone(),
                    competitor: competitor.clone(),
                })
                .collect();
            Instance::new(
                arms,
                with_time(vec![*budget_ratio], *horizon),
                scale,
                *horizon,
                case,
            )
        }
        ScenarioSpec::Procurement {
            prices,
            valuation,
            budget_ratio,
            horizon,
        } => {
            let arms = prices
                .iter()
                .map(|&price| ArmKind::Procurement {
                    price,
                    valuation: valuation.clone(),
                })
                .collect();
            Instance::new(
                arms,
                with_time(vec![*budget_ratio], *horizon),
                scale,
                *horizon,
                case,
            )
        }
        ScenarioSpec::AdAlloc {
            cost_per_click,
            click_probs,
            budget_ratios,
        } => {
            let k = cost_per_click.len();
            same_len("click probabilities", click_probs.len(), k)?;
            same_len("advertiser budgets", budget_ratios.len(), k)?;
            let arms = (0..k)
                .map(|j| {
                    let p = cost_per_click[j];
                    let mut hit = vec![0.0; k];
                    hit[j] = p;
                    ArmKind::Tabular {
                        outcomes: vec![
                            Outcome {
                                prob: click_probs[j],
                                reward: p,
                                costs: hit,
                            },
                            Outcome {
                                prob: 1.0 - click_probs[j],
                                reward: 0.0,
                                costs: vec![0.0; k],
                            },
                        ],
                    }
                })
                .collect();
            Instance::new(
                arms,
                with_time(budget_ratios.clone(), true),
                scale,
                true,
                case,
            )
        }
        ScenarioSpec::Sensors {
            rewards,
            energy,
            battery_ratios,
            horizon,
        } => {
            let k = rewards.len();
            same_len("sensor energies", energy.len(), k)?;
            same_len("battery ratios", battery_ratios.len(), k)?;
            let arms = (0..k)
                .map(|j| {
                    let mut costs = vec![0.0; k];
                    costs[j] = energy[j];
                    ArmKind::DeterministicCost {
                        reward: RewardModel::Bernoulli { p: rewards[j] },
                        costs,
                    }
                })
                .collect();
            Instance::new(
                arms,
                with_time(battery_ratios.clone(), *horizon),
                scale,
                *horizon,
                case,
            )
        }
        ScenarioSpec::Shelf {
            arms,
            perish_ratios,
            revenue_scale,
        } => {
            let m = perish_ratios.len();
            let kinds = arms
                .iter()
                .map(|items| ArmKind::DeterministicCost {
                    reward: RewardModel::Shelf {
                        items: items.clone(),
                        scale: *revenue_scale,
                    },
                    costs: vec![1.0; m],
                })
                .collect();
            Instance::new(
                kinds,
                with_time(perish_ratios.clone(), true),
                scale,
                true,
                case,
            )
        }
        ScenarioSpec::Deterministic {
            rewards,
            costs,
            budget_ratios,
            horizon,
        } => {
            same_len("cost rows", costs.len(), rewards.len())?;
            let arms = rewards
                .iter()
                .zip(costs)
                .map(|(&p, c)| ArmKind::DeterministicCost {
                    reward: RewardModel::Bernoulli { p },
                    costs: c.clone(),
                })
                .collect();
            Instance::new(
                arms,
                with_time(budget_ratios.clone(), *horizon),
                scale,
                *horizon,
                case,
            )
        }
        ScenarioSpec::Bernoulli {
            rewards,
            costs,
            budget_ratios,
            horizon,
        } => {
            same_len("cost rows", costs.len(), rewards.len())?;
            let arms = rewards
                .iter()
                .zip(costs)
                .map(|(&reward, c)| ArmKind::BernoulliJoint {
                    reward,
                    costs: c.clone(),
                })
                .collect();
            Instance::new(
                arms,
                with_time(budget_ratios.clone(), *horizon),
                scale,
                *horizon,
                case,
            )
        }
        ScenarioSpec::Tabular {
            arms,
            budget_ratios,
            horizon,
        } => {
            let kinds = arms
                .iter()
                .map(|outcomes| ArmKind::Tabular {
                    outcomes: outcomes.clone(),
                })
                .collect();
            Instance::new(
                kinds,
                with_time(budget_ratios.clone(), *horizon),
                scale,
                *horizon,
                case,
            )
        }
    }
}
