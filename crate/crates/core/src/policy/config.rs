use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::env::{Case, Instance};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    UcbSimplex,
    Ucb1,
    StaticLp,
    AdaptiveLp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitRule {
    /// Pull each arm until it shows a nonzero cost.
    UntilNonzeroCost,
    /// One pass, then passes up to the rank of the observed cost matrix.
    RhoPullsEach,
    OnePullEach,
    /// `ceil(c_init * ln T)` pulls per arm.
    LogPullsEach,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Balancer {
    Alg2,
    Alg3,
    Alg4,
    #[serde(rename = "alg5-alt")]
    Alg5,
    #[serde(rename = "alg6-alt")]
    Alg6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    #[default]
    Canonical,
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

fn default_init_cap() -> u64 {
    1_000_000
}

/// User-facing policy description. Unset fields take the case defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub id: String,
    pub kind: PolicyKind,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub eta: Option<Vec<f64>>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub epsilon_known: Option<f64>,
    #[serde(default)]
    pub init_rule: Option<InitRule>,
    #[serde(default)]
    pub balancer: Option<Balancer>,
    #[serde(default = "yes")]
    pub skip_rounds_allowed: bool,
    #[serde(default)]
    pub c_init: Option<f64>,
    #[serde(default = "one")]
    pub delta_max: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "default_init_cap")]
    pub init_cap: u64,
    #[serde(default)]
    pub tie_break: TieBreak,
}

impl PolicyConfig {
    pub fn new(id: &str, kind: PolicyKind) -> Self {
        Self {
            id: id.into(),
            kind,
            lambda: None,
            eta: None,
            kappa: None,
            epsilon_known: None,
            init_rule: None,
            balancer: None,
            skip_rounds_allowed: true,
            c_init: None,
            delta_max: 1.0,
            gamma: 0.0,
            init_cap: default_init_cap(),
            tie_break: TieBreak::Canonical,
        }
    }

    pub fn ucb_simplex(id: &str) -> Self {
        Self::new(id, PolicyKind::UcbSimplex)
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = Some(kappa);
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.epsilon_known = Some(eps);
        self
    }

    pub fn with_balancer(mut self, b: Balancer) -> Self {
        self.balancer = Some(b);
        self
    }

    pub fn with_c_init(mut self, c: f64) -> Self {
        self.c_init = Some(c);
        self
    }

    /// Fills in the case defaults for `instance` and validates the result.
    pub fn resolve(&self, instance: &Instance) -> Result<ResolvedConfig> {
        let c = instance.num_resources();
        let case = instance.case();
        let need = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| Error::InvalidParameter(format!("{}: {case} needs `{name}`", self.id)))
        };
        let (default_lambda, default_eta, default_init, default_balancer) = match case {
            _ if self.kind != PolicyKind::UcbSimplex => {
                (1.0, vec![0.0; c], InitRule::OnePullEach, Balancer::Alg2)
            }
            Case::Case1 => {
                let lambda = match self.lambda {
                    Some(l) => l,
                    None => 1.0 + need("kappa", self.kappa)?,
                };
                (
                    lambda,
                    vec![0.0; c],
                    InitRule::UntilNonzeroCost,
                    Balancer::Alg2,
                )
            }
            Case::Case2 => (1.0, vec![0.0; c], InitRule::RhoPullsEach, Balancer::Alg2),
            Case::Case3 => {
                let lambda = match self.lambda {
                    Some(l) => l,
                    None => 1.0 + 2.0 * need("kappa", self.kappa)?,
                };
                (
                    lambda,
                    vec![1.0, 0.0],
                    InitRule::OnePullEach,
                    Balancer::Alg3,
                )
            }
            Case::Case4 => {
                let lambda = match self.lambda {
                    Some(l) => l,
                    None => {
                        let eps = need("epsilon_known", self.epsilon_known)?;
                        let f = factorial(c + 1);
                        1.0 + 2.0 * f * f / eps
                    }
                };
                (lambda, vec![0.0; c], InitRule::LogPullsEach, Balancer::Alg4)
            }
        };
        let init_rule = self.init_rule.unwrap_or(match self.kind {
            PolicyKind::UcbSimplex => default_init,
            PolicyKind::Ucb1 | PolicyKind::AdaptiveLp => InitRule::OnePullEach,
            PolicyKind::StaticLp => InitRule::None,
        });
        let c_init = match (self.c_init, init_rule) {
            (Some(v), _) => v,
            (None, InitRule::LogPullsEach) => {
                let eps = need("epsilon_known", self.epsilon_known)?;
                16.0 / (eps * eps)
            }
            (None, _) => 0.0,
        };
        let resolved = ResolvedConfig {
            id: self.id.clone(),
            kind: self.kind,
            lambda: self.lambda.unwrap_or(default_lambda),
            eta: self.eta.clone().unwrap_or(default_eta),
            init_rule,
            balancer: self.balancer.unwrap_or(default_balancer),
            skip_rounds_allowed: self.skip_rounds_allowed,
            c_init,
            delta_max: self.delta_max,
            gamma: self.gamma,
            init_cap: self.init_cap,
        };
        resolved.validate(instance)?;
        Ok(resolved)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// A policy configuration with every parameter fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub id: String,
    pub kind: PolicyKind,
    pub lambda: f64,
    pub eta: Vec<f64>,
    pub init_rule: InitRule,
    pub balancer: Balancer,
    pub skip_rounds_allowed: bool,
    pub c_init: f64,
    pub delta_max: f64,
    pub gamma: f64,
    pub init_cap: u64,
}

impl ResolvedConfig {
    fn validate(&self, instance: &Instance) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(format!("{}: {m}", self.id)));
        if !(self.lambda >= 1.0 && self.lambda.is_finite()) {
            return bad(format!("lambda {} must be >= 1", self.lambda));
        }
        if self.eta.len() != instance.num_resources() || self.eta.iter().any(|&e| !(e >= 0.0)) {
            return bad("eta needs one nonnegative entry per resource".into());
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1)", self.gamma));
        }
        if !(self.delta_max >= 0.0) {
            return bad("delta_max must be nonnegative".into());
        }
        if !(self.c_init >= 0.0 && self.c_init.is_finite()) {
            return bad("c_init must be finite and nonnegative".into());
        }
        if self.kind == PolicyKind::UcbSimplex {
            match self.balancer {
                Balancer::Alg3 if instance.case() != Case::Case3 => {
                    return bad("alg3 balances one resource plus time (case3)".into())
                }
                Balancer::Alg4 if !instance.time_is_resource() => {
                    return bad("alg4 needs time as the last resource".into())
                }
                _ => {}
            }
        }
        if self.init_rule == InitRule::LogPullsEach && !instance.time_is_resource() {
            return bad("log-pulls-each needs a horizon".into());
        }
        if self.kind == PolicyKind::AdaptiveLp && !instance.time_is_resource() {
            return bad("adaptive-lp needs a horizon".into());
        }
        Ok(())
    }
}
