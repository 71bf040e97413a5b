use serde::{Deserialize, Serialize};

use crate::complexity::Caps;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    Euclidean,
    Entropic,
    Lp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Lipschitz,
    Smooth,
    UniformlyConvex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    /// `x_t = eps_t e_1`.
    SignConstant,
    /// `x_t = eps_t u_t` with `u_t` uniform on the unit sphere.
    RandomUnit,
    /// `x_t` uniform on `{-1, +1}^d`.
    SignCube,
    Zero,
    /// Smoothed absolute loss with labels from a fixed `h*`, `||h*|| = 1/2`.
    SmoothedAbs,
    /// As above with `+-1/2` label noise.
    SmoothedAbsNoisy,
    /// Linear losses with `||x|| = 1/2` plus a `sigma`-ridge.
    RidgeLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityRule {
    Erm,
    Rerm,
    Sgd,
    AveragedMd,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// `x = 0.3 e_1 + 0.7 u`, `u` uniform on the sphere; linear losses.
    LinearBall,
    /// Biased hidden-coordinate losses.
    HiddenCoord,
}

/// Flat experiment configuration; every key is optional and unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub geometry: GeometryKind,
    pub d: usize,
    pub radius: f64,
    pub r: f64,
    pub policy: PolicyKind,
    pub adversary: AdversaryKind,
    pub n_grid: Vec<usize>,
    pub m_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Explicit per-trial seeds; derived from `seed` when empty.
    pub seeds: Vec<u64>,
    pub alpha: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub mc_draws: usize,
    pub erm_budget: usize,
    pub rule: StabilityRule,
    pub sampler: SamplerKind,
    /// Finite class rows for the complexity and experts subcommands.
    pub class: Vec<Vec<f64>>,
    pub depth: usize,
    pub max_scale: usize,
    pub noise: f64,
    pub caps: Caps,
    pub threads: usize,
    pub record_runtime: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            geometry: GeometryKind::Euclidean,
            d: 8,
            radius: 1.0,
            r: 1.5,
            policy: PolicyKind::Lipschitz,
            adversary: AdversaryKind::SignConstant,
            n_grid: vec![64, 256, 1024],
            m_grid: vec![4, 16, 64],
            trials: 10,
            seed: 0,
            seeds: vec![],
            alpha: 1.0,
            lambda: 1.0,
            sigma: 1.0,
            mc_draws: 100_000,
            erm_budget: 2000,
            rule: StabilityRule::Rerm,
            sampler: SamplerKind::LinearBall,
            class: vec![],
            depth: 2,
            max_scale: 4,
            noise: 0.0,
            caps: Caps::default(),
            threads: 0,
            record_runtime: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key=value` overrides. Values are parsed as JSON, falling back to a string.
    pub fn with_overrides(self, overrides: &[(String, String)]) -> Result<Self> {
        let mut v = serde_json::to_value(&self)?;
        let map = v.as_object_mut().expect("config serializes to an object");
        for (k, raw) in overrides {
            if !map.contains_key(k) {
                return Err(Error::arg(format!("unknown config key `{k}`")));
            }
            let parsed = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.clone()));
            map.insert(k.clone(), parsed);
        }
        let cfg: Self = serde_json::from_value(v)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::arg("trials must be >= 1"));
        }
        if !self.seeds.is_empty() && self.seeds.len() < self.trials {
            return Err(Error::arg(format!(
                "{} seeds given for {} trials",
                self.seeds.len(),
                self.trials
            )));
        }
        for (name, grid) in [("n_grid", &self.n_grid), ("m_grid", &self.m_grid)] {
            if grid.contains(&0) || grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::arg(format!("{name} must be positive and strictly increasing")));
            }
        }
        if self.d == 0 {
            return Err(Error::arg("d must be >= 1"));
        }
        Ok(())
    }

    /// Seed of trial `i`.
    pub fn trial_seed(&self, i: usize) -> u64 {
        self.seeds.get(i).copied().unwrap_or_else(|| split_seed(self.seed, i as u64))
    }
}

/// Counter-based seed derivation: splitmix64 finalizer applied to `master + (i+1) * golden`.
pub fn split_seed(master: u64, i: u64) -> u64 {
    let mut z = master.wrapping_add(i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
