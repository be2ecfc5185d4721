use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::dist::ValueDist;
use crate::rng::StreamRng;
use crate::{Error, Result};

/// One joint outcome of a tabular arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub prob: f64,
    pub reward: f64,
    pub costs: Vec<f64>,
}

/// One product placed by a shelf arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShelfItem {
    /// Product index; arms offering the same product share its demand draw.
    pub product: usize,
    pub units: f64,
    pub price: f64,
    /// Demand at this price, in units.
    pub demand: ValueDist,
}

/// Reward of an arm whose costs are deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum RewardModel {
    Bernoulli {
        p: f64,
    },
    /// `scale * sum price * min(demand, units)`.
    Shelf {
        items: Vec<ShelfItem>,
        scale: f64,
    },
}

/// Joint reward/cost law of an arm, excluding the time resource.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ArmKind {
    /// Independent Bernoulli reward and Bernoulli costs.
    BernoulliJoint {
        reward: f64,
        costs: Vec<f64>,
    },
    DeterministicCost {
        reward: RewardModel,
        costs: Vec<f64>,
    },
    /// Sale iff `price <= v`: reward `price`, costs `consumption`.
    Pricing {
        price: f64,
        valuation: ValueDist,
        consumption: Vec<f64>,
    },
    /// Win iff `bid >= m`: reward `v`, cost `m`.
    Auction {
        bid: f64,
        utility: ValueDist,
        competitor: ValueDist,
    },
    /// Purchase iff `price >= v`: reward 1, cost `price`.
    Procurement {
        price: f64,
        valuation: ValueDist,
    },
    Tabular {
        outcomes: Vec<Outcome>,
    },
}

fn in_unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

fn bernoulli(u: f64, p: f64) -> f64 {
    if u < p {
        1.0
    } else {
        0.0
    }
}

impl ArmKind {
    /// Number of non-time resources this arm consumes.
    pub fn resources(&self) -> usize {
        match self {
            ArmKind::BernoulliJoint { costs, .. } | ArmKind::DeterministicCost { costs, .. } => {
                costs.len()
            }
            ArmKind::Pricing { consumption, .. } => consumption.len(),
            ArmKind::Auction { .. } | ArmKind::Procurement { .. } => 1,
            ArmKind::Tabular { outcomes } => outcomes.first().map_or(0, |o| o.costs.len()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("{what} outside [0, 1]")));
        match self {
            ArmKind::BernoulliJoint { reward, costs } => {
                if !in_unit(*reward) || !costs.iter().all(|c| in_unit(*c)) {
                    return bad("bernoulli parameter");
                }
            }
            ArmKind::DeterministicCost { reward, costs } => {
                if !costs.iter().all(|c| in_unit(*c)) {
                    return bad("deterministic cost");
                }
                match reward {
                    RewardModel::Bernoulli { p } if !in_unit(*p) => {
                        return bad("reward probability")
                    }
                    RewardModel::Shelf { items, scale } => {
                        if *scale < 0.0 {
                            return bad("shelf revenue scale");
                        }
                        let mut top = 0.0;
                        for it in items {
                            it.demand.validate(f64::MAX)?;
                            if it.units < 0.0 || it.price < 0.0 {
                                return bad("shelf units or price");
                            }
                            top += it.price * it.units;
                        }
                        if scale * top > 1.0 + 1e-12 {
                            return Err(Error::InvalidParameter(format!(
                                "shelf revenue can reach {}, rescale to [0, 1]",
                                scale * top
                            )));
                        }
                    }
                    _ => {}
                }
            }
            ArmKind::Pricing {
                price,
                valuation,
                consumption,
            } => {
                valuation.validate(1.0)?;
                if !in_unit(*price) || !consumption.iter().all(|c| in_unit(*c)) {
                    return bad("price or consumption");
                }
            }
            ArmKind::Auction {
                bid,
                utility,
                competitor,
            } => {
                utility.validate(1.0)?;
                competitor.validate(1.0)?;
                if !in_unit(*bid) {
                    return bad("bid");
                }
            }
            ArmKind::Procurement { price, valuation } => {
                valuation.validate(1.0)?;
                if !in_unit(*price) {
                    return bad("price");
                }
            }
            ArmKind::Tabular { outcomes } => {
                if outcomes.is_empty() {
                    return Err(Error::InvalidParameter(
                        "tabular arm without outcomes".into(),
                    ));
                }
                let width = outcomes[0].costs.len();
                let mut total = 0.0;
                for o in outcomes {
                    if o.costs.len() != width {
                        return Err(Error::Dimension("tabular outcomes differ in width".into()));
                    }
                    if !in_unit(o.prob)
                        || !in_unit(o.reward)
                        || !o.costs.iter().all(|c| in_unit(*c))
                    {
                        return bad("tabular outcome");
                    }
                    total += o.prob;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "tabular probabilities sum to {total}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn mean_reward(&self) -> f64 {
        match self {
            ArmKind::BernoulliJoint { reward, .. } => *reward,
            ArmKind::DeterministicCost { reward, .. } => match reward {
                RewardModel::Bernoulli { p } => *p,
                RewardModel::Shelf { items, scale } => {
                    scale
                        * items
                            .iter()
                            .map(|it| it.price * it.demand.capped_mean(it.units))
                            .sum::<f64>()
                }
            },
            ArmKind::Pricing {
                price, valuation, ..
            } => price * valuation.prob_at_least(*price),
            ArmKind::Auction {
                bid,
                utility,
                competitor,
            } => utility.mean() * competitor.prob_at_most(*bid),
            ArmKind::Procurement { price, valuation } => valuation.prob_at_most(*price),
            ArmKind::Tabular { outcomes } => outcomes.iter().map(|o| o.prob * o.reward).sum(),
        }
    }

    pub fn mean_costs(&self) -> Vec<f64> {
        match self {
            ArmKind::BernoulliJoint { costs, .. } | ArmKind::DeterministicCost { costs, .. } => {
                costs.clone()
            }
            ArmKind::Pricing {
                price,
                valuation,
                consumption,
            } => {
                let sale = valuation.prob_at_least(*price);
                consumption.iter().map(|c| c * sale).collect()
            }
            ArmKind::Auction {
                bid, competitor, ..
            } => vec![competitor.partial_mean_at_most(*bid)],
            ArmKind::Procurement { price, valuation } => {
                vec![price * valuation.prob_at_most(*price)]
            }
            ArmKind::Tabular { outcomes } => {
                let mut m = vec![0.0; self.resources()];
                for o in outcomes {
                    for (acc, c) in m.iter_mut().zip(&o.costs) {
                        *acc += o.prob * c;
                    }
                }
                m
            }
        }
    }

    /// True when every cost component is almost surely constant.
    pub fn deterministic_costs(&self) -> bool {
        match self {
            ArmKind::DeterministicCost { .. } => true,
            ArmKind::BernoulliJoint { costs, .. } => costs.iter().all(|&c| c == 0.0 || c == 1.0),
            ArmKind::Tabular { outcomes } => outcomes
                .iter()
                .filter(|o| o.prob > 0.0)
                .all(|o| o.costs == outcomes.iter().find(|o| o.prob > 0.0).unwrap().costs),
            ArmKind::Pricing { consumption, .. } => consumption.iter().all(|&c| c == 0.0),
            ArmKind::Auction { .. } | ArmKind::Procurement { .. } => false,
        }
    }

    /// Draws one joint sample for `round`. Writes the non-time costs into
    /// `costs` and returns the reward. Slot 0 is the shared latent, slot
    /// `1 + arm` is private to the arm.
    pub fn sample(&self, rng: &mut StreamRng, round: u64, arm: usize, costs: &mut [f64]) -> f64 {
        let own = 1 + arm as u64;
        match self {
            ArmKind::BernoulliJoint { reward, costs: p } => {
                let mut d = rng.at(round, own);
                let r = bernoulli(d.uniform(), *reward);
                for (c, &pc) in costs.iter_mut().zip(p) {
                    *c = bernoulli(d.uniform(), pc);
                }
                r
            }
            ArmKind::DeterministicCost { reward, costs: det } => {
                costs.copy_from_slice(det);
                match reward {
                    RewardModel::Bernoulli { p } => bernoulli(rng.at(round, own).uniform(), *p),
                    RewardModel::Shelf { items, scale } => {
                        let mut total = 0.0;
                        for it in items {
                            // words of the shared address are indexed by product
                            let mut d = rng.at(round, 0);
                            let mut u = 0.0;
                            for _ in 0..=it.product {
                                u = d.uniform();
                            }
                            total += it.price * it.demand.sample(u).min(it.units);
                        }
                        (scale * total).min(1.0)
                    }
                }
            }
            ArmKind::Pricing {
                price,
                valuation,
                consumption,
            } => {
                let v = valuation.sample(rng.at(round, 0).uniform());
                let sale = *price <= v;
                for (c, &q) in costs.iter_mut().zip(consumption) {
                    *c = if sale { q } else { 0.0 };
                }
                if sale {
                    *price
                } else {
                    0.0
                }
            }
            ArmKind::Auction {
                bid,
                utility,
                competitor,
            } => {
                let mut d = rng.at(round, 0);
                let v = utility.sample(d.uniform());
                let m = competitor.sample(d.uniform());
                if *bid >= m {
                    costs[0] = m;
                    v
                } else {
                    costs[0] = 0.0;
                    0.0
                }
            }
            ArmKind::Procurement { price, valuation } => {
                let v = valuation.sample(rng.at(round, 0).uniform());
                if *price >= v {
                    costs[0] = *price;
                    1.0
                } else {
                    costs[0] = 0.0;
                    0.0
                }
            }
            ArmKind::Tabular { outcomes } => {
                let u = rng.at(round, own).uniform();
                let mut acc = 0.0;
                let mut pick = &outcomes[outcomes.len() - 1];
                for o in outcomes {
                    acc += o.prob;
                    if u < acc {
                        pick = o;
                        break;
                    }
                }
                costs.copy_from_slice(&pick.costs);
                pick.reward
            }
        }
    }
}

/// An arm with its ground-truth means. `mean_costs` covers every resource of
/// the instance, time included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmModel {
    pub kind: ArmKind,
    pub mean_reward: f64,
    pub mean_costs: Vec<f64>,
}

impl ArmModel {
    pub fn new(kind: ArmKind, time_is_resource: bool) -> Result<Self> {
        kind.validate()?;
        let mut mean_costs = kind.mean_costs();
        if time_is_resource {
            mean_costs.push(1.0);
        }
        if !mean_costs.iter().any(|&c| c > 0.0) {
            return Err(Error::InvalidParameter(
                "arm has zero mean cost on every resource".into(),
            ));
        }
        Ok(Self {
            mean_reward: kind.mean_reward(),
            kind,
            mean_costs,
        })
    }
}
