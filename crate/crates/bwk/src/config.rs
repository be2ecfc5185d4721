//! Experiment configuration files.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use bwk_core::env::{make_scenario, Case, Instance, ScenarioSpec};
use bwk_core::episode::AssertLevel;
use bwk_core::policy::PolicyConfig;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const SPEC_VERSION: u32 = 1;
pub const DEFAULT_AUDIT_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub case: Case,
    pub scenario: ScenarioSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub instance: InstanceConfig,
    pub policies: Vec<PolicyConfig>,
    /// Budget scales `B`, strictly increasing.
    pub b_grid: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    #[serde(default)]
    pub assert: AssertLevel,
    /// CSV output path, relative to the config file.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// JSON-lines trace path, relative to the config file.
    #[serde(default)]
    pub trace: Option<PathBuf>,
    #[serde(default)]
    pub horizon_cap: Option<u64>,
    /// Level of the non-degeneracy audit printed by `analyze`.
    #[serde(default)]
    pub audit_epsilon: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config; relative output paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::ReadConfig {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.output, &mut cfg.trace].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.spec_version != SPEC_VERSION {
            return bad(format!(
                "spec_version {} is not supported (expected {SPEC_VERSION})",
                self.spec_version
            ));
        }
        if self.b_grid.is_empty() {
            return bad("b_grid is empty".into());
        }
        if self.b_grid.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return bad("b_grid entries must be positive".into());
        }
        if self.b_grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("b_grid must be strictly increasing".into());
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.policies.is_empty() {
            return bad("no policies".into());
        }
        let mut ids = BTreeSet::new();
        for p in &self.policies {
            if !ids.insert(p.id.as_str()) {
                return bad(format!("duplicate policy id `{}`", p.id));
            }
        }
        let inst = self
            .instance_at(self.b_grid[0])
            .map_err(|e| Error::Config(e.to_string()))?;
        for p in &self.policies {
            p.resolve(&inst).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn instance_at(&self, scale: f64) -> Result<Instance> {
        Ok(make_scenario(
            &self.instance.scenario,
            scale,
            self.instance.case,
        )?)
    }

    /// Audit level: explicit, else the smallest known epsilon of any
    /// policy, else [`DEFAULT_AUDIT_EPSILON`].
    pub fn audit_level(&self) -> f64 {
        self.audit_epsilon.unwrap_or_else(|| {
            self.policies
                .iter()
                .filter_map(|p| p.epsilon_known)
                .reduce(f64::min)
                .unwrap_or(DEFAULT_AUDIT_EPSILON)
                .clamp(0.0, 1.0)
        })
    }
}
