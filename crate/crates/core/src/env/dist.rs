use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Scalar distribution on `[0, 1]` for valuations, competing bids and demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ValueDist {
    Uniform { lo: f64, hi: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

impl ValueDist {
    pub fn uniform(lo: f64, hi: f64) -> Self {
        ValueDist::Uniform { lo, hi }
    }

    /// Checks support and normalization. `max` is the largest admissible
    /// value (1 for valuations, larger for unit demand counts).
    pub fn validate(&self, max: f64) -> Result<()> {
        match self {
            ValueDist::Uniform { lo, hi } => {
                if !(0.0 <= *lo && lo <= hi && *hi <= max) {
                    return Err(Error::InvalidParameter(format!(
                        "uniform support [{lo}, {hi}] outside [0, {max}]"
                    )));
                }
            }
            ValueDist::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(Error::InvalidParameter(
                        "discrete distribution needs matching nonempty values and probs".into(),
                    ));
                }
                if values.iter().any(|v| !(0.0..=max).contains(v))
                    || probs.iter().any(|p| !(0.0..=1.0).contains(p))
                {
                    return Err(Error::InvalidParameter(format!(
                        "discrete distribution outside [0, {max}] or with invalid probabilities"
                    )));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "discrete probabilities sum to {total}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match self {
            ValueDist::Uniform { lo, hi } => 0.5 * (lo + hi),
            ValueDist::Discrete { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| v * p).sum()
            }
        }
    }

    /// `P(V <= x)`.
    pub fn prob_at_most(&self, x: f64) -> f64 {
        match self {
            ValueDist::Uniform { lo, hi } => {
                if x < *lo {
                    0.0
                } else if x >= *hi {
                    1.0
                } else {
                    (x - lo) / (hi - lo)
                }
            }
            ValueDist::Discrete { values, probs } => values
                .iter()
                .zip(probs)
                .filter(|(v, _)| **v <= x)
                .map(|(_, p)| p)
                .sum(),
        }
    }

    /// `P(V >= x)`.
    pub fn prob_at_least(&self, x: f64) -> f64 {
        match self {
            ValueDist::Uniform { lo, hi } => {
                if x <= *lo {
                    1.0
                } else if x > *hi {
                    0.0
                } else if hi == lo {
                    1.0
                } else {
                    (hi - x) / (hi - lo)
                }
            }
            ValueDist::Discrete { values, probs } => values
                .iter()
                .zip(probs)
                .filter(|(v, _)| **v >= x)
                .map(|(_, p)| p)
                .sum(),
        }
    }

    /// `E[V * 1{V <= x}]`.
    pub fn partial_mean_at_most(&self, x: f64) -> f64 {
        match self {
            ValueDist::Uniform { lo, hi } => {
                if x < *lo {
                    0.0
                } else if x >= *hi {
                    self.mean()
                } else {
                    (x * x - lo * lo) / (2.0 * (hi - lo))
                }
            }
            ValueDist::Discrete { values, probs } => values
                .iter()
                .zip(probs)
                .filter(|(v, _)| **v <= x)
                .map(|(v, p)| v * p)
                .sum(),
        }
    }

    /// `E[min(V, cap)]`.
    pub fn capped_mean(&self, cap: f64) -> f64 {
        match self {
            ValueDist::Uniform { lo, hi } => {
                if cap <= *lo {
                    cap
                } else if cap >= *hi {
                    self.mean()
                } else {
                    (0.5 * (cap * cap - lo * lo) + cap * (hi - cap)) / (hi - lo)
                }
            }
            ValueDist::Discrete { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| v.min(cap) * p).sum()
            }
        }
    }

    /// Inverse-CDF sample from a uniform `u` in `[0, 1)`.
    pub fn sample(&self, u: f64) -> f64 {
        match self {
            ValueDist::Uniform { lo, hi } => lo + (hi - lo) * u,
            ValueDist::Discrete { values, probs } => {
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().expect("validated nonempty")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn uniform_closed_forms() {
        let d = ValueDist::uniform(0.0, 1.0);
        assert!((d.prob_at_least(0.3) - 0.7).abs() < 1e-15);
        assert!((d.prob_at_most(0.5) - 0.5).abs() < 1e-15);
        assert!((d.partial_mean_at_most(0.5) - 0.125).abs() < 1e-15);
        assert!((d.capped_mean(0.5) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn discrete_inverse_cdf() {
        let d = ValueDist::Discrete {
            values: vec![0.2, 0.8],
            probs: vec![0.25, 0.75],
        };
        d.validate(1.0).unwrap();
        assert_eq!(d.sample(0.1), 0.2);
        assert_eq!(d.sample(0.3), 0.8);
        assert!((d.mean() - 0.65).abs() < 1e-15);
        assert!((d.prob_at_least(0.8) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_support() {
        assert!(ValueDist::uniform(0.5, 1.5).validate(1.0).is_err());
        let d = ValueDist::Discrete {
            values: vec![0.1],
            probs: vec![0.5],
        };
        assert!(d.validate(1.0).is_err());
    }
}
