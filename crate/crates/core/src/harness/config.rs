use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::controller::{AgentConfig, Method};
use crate::env::{AppType, HvacConfig, LearningConfig, WaterConfig};
use crate::error::{Error, Result};
use crate::qnet::TrainConfig;

/// Every knob of one experiment run. Missing JSON fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub app_type: AppType,
    pub method: Method,
    pub n_humans: usize,
    pub ticks: usize,
    pub warmup: usize,
    pub seed: u64,
    pub zeta: f64,
    /// Ledger increment.
    pub delta: f64,
    /// Weight step per decision.
    pub delta_w: f64,
    pub weight_floor: f64,
    /// Trailing ticks used for evaluation metrics.
    pub window: usize,
    pub qnet: TrainConfig,
    pub hvac: HvacConfig,
    pub water: WaterConfig,
    pub learning: LearningConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            app_type: AppType::Hvac,
            method: Method::Fairo,
            n_humans: 3,
            ticks: 15_000,
            warmup: 1200,
            seed: 0,
            zeta: 0.5,
            delta: 0.01,
            delta_w: 0.05,
            weight_floor: crate::controller::DEFAULT_FLOOR,
            window: 3000,
            qnet: TrainConfig::default(),
            hvac: HvacConfig::default(),
            water: WaterConfig::default(),
            learning: LearningConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn new(app_type: AppType, method: Method, seed: u64) -> Self {
        ExperimentConfig {
            app_type,
            method,
            seed,
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_humans < 2 {
            return bad(format!("n_humans must be at least 2, got {}", self.n_humans));
        }
        if self.ticks <= self.warmup {
            return bad(format!("ticks ({}) must exceed warmup ({})", self.ticks, self.warmup));
        }
        if !self.method.supports(self.app_type) {
            return bad(format!(
                "method {} is not available for {}",
                self.method.as_str(),
                self.app_type.as_str()
            ));
        }
        if !(0.0..=1.0).contains(&self.zeta) {
            return bad(format!("zeta must lie in [0, 1], got {}", self.zeta));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.delta_w > 0.0 && self.delta_w < 1.0) {
            return bad(format!("delta_w must lie in (0, 1), got {}", self.delta_w));
        }
        if !(self.weight_floor >= 0.0) || self.weight_floor * self.n_humans as f64 > 1.0 {
            return bad(format!("weight_floor {} is infeasible", self.weight_floor));
        }
        if self.window == 0 {
            return bad("window must be positive".into());
        }
        self.qnet.validate()?;
        match self.app_type {
            AppType::Hvac => self.hvac.validate(),
            AppType::Water => self.water.validate(),
            AppType::Learning => self.learning.validate(),
        }
    }

    pub fn agent_config(&self) -> AgentConfig {
        AgentConfig {
            zeta: self.zeta,
            delta_w: self.delta_w,
            warmup: self.warmup,
            weight_floor: self.weight_floor,
            train: self.qnet.clone(),
        }
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 over the crate version and the canonical config JSON.
    pub fn provenance_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(env!("CARGO_PKG_VERSION").as_bytes());
        h.update(b"\n");
        h.update(serde_json::to_string(self).expect("config serializes").as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
