use serde::{Deserialize, Serialize};

use super::{baseline_action, option_reward, weighted_action, Direction, Method, Phase, Policy, StepDecision, WeightVector};
use crate::env::{AppType, Observation};
use crate::error::{Error, Result};
use crate::fairness::{fairness_reward_term, SatisfactionLedger};
use crate::qnet::{QNetwork, TrainConfig};
use crate::rng::{stream, substream, Rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub zeta: f64,
    pub delta_w: f64,
    pub warmup: usize,
    pub weight_floor: f64,
    pub train: TrainConfig,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            zeta: 0.5,
            delta_w: 0.05,
            warmup: 1200,
            weight_floor: super::DEFAULT_FLOOR,
            train: TrainConfig::default(),
        }
    }
}

/// Transition waiting for its reward.
#[derive(Debug, Clone)]
pub(super) struct Pending {
    pub option: usize,
    pub input: Vec<f64>,
    pub action: usize,
    pub closeness_before: Vec<f64>,
}

/// One option per human. The option of the human with the smallest
/// closeness runs; its network nudges that human's weight and learns from a
/// mix of fairness improvement and the human's own performance.
pub struct FairoAgent {
    app: AppType,
    config: AgentConfig,
    nets: Vec<QNetwork>,
    weights: WeightVector,
    active: Option<usize>,
    pending: Option<Pending>,
    explore: Rng,
}

impl FairoAgent {
    pub fn new(app: AppType, n: usize, config: AgentConfig, seed: u64) -> Result<Self> {
        config.train.validate()?;
        if !(0.0..=1.0).contains(&config.zeta) || !(config.delta_w > 0.0) {
            return Err(Error::Config("zeta must lie in [0, 1] and delta_w be positive".into()));
        }
        let nets = (0..n)
            .map(|i| {
                let mut rng = substream(seed, Stream::Init, i as u64);
                QNetwork::from_rng(n + 1, config.train.hidden, seed, config.train.zero_head, &mut rng)
            })
            .collect();
        Ok(FairoAgent {
            app,
            weights: WeightVector::uniform(n, config.weight_floor)?,
            config,
            nets,
            active: None,
            pending: None,
            explore: stream(seed, Stream::Explore),
        })
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn networks(&self) -> &[QNetwork] {
        &self.nets
    }
}

impl Policy for FairoAgent {
    fn decide(&mut self, tick: usize, ledger: &SatisfactionLedger, obs: &Observation) -> Result<StepDecision> {
        if tick < self.config.warmup {
            let (action, _) = baseline_action(Method::RoundRobin, self.app, tick, obs)?;
            return Ok(StepDecision {
                action,
                phase: Phase::Warmup,
                active_option: None,
                weights: self.weights.as_slice().to_vec(),
                dqn_action: None,
            });
        }
        if tick == self.config.warmup {
            self.weights.reset_uniform();
        }
        let state = ledger.fairness_state();
        let i = state.dispatch(self.active);
        self.active = Some(i);
        let input = state.augment(ledger, i).to_input();
        let epsilon = self.config.train.epsilon_at(tick - self.config.warmup);
        let a = self.nets[i].select_action(&input, epsilon, &mut self.explore)?;
        let direction = Direction::from_index(a);
        self.weights.adjust(i, direction, self.config.delta_w);
        let action = weighted_action(self.app, self.weights.as_slice(), obs)?;
        self.pending = Some(Pending {
            option: i,
            input,
            action: a,
            closeness_before: state.closeness,
        });
        Ok(StepDecision {
            action,
            phase: Phase::Decision,
            active_option: Some(i),
            weights: self.weights.as_slice().to_vec(),
            dqn_action: Some(direction),
        })
    }

    fn learn(&mut self, tick: usize, ledger: &SatisfactionLedger, performance: &[f64]) -> Result<()> {
        let Some(p) = self.pending.take() else {
            return Ok(());
        };
        let i = p.option;
        let after = ledger.fairness_state();
        let f = fairness_reward_term(p.closeness_before[i], after.closeness[i]);
        let reward = checked_reward(tick, self.config.zeta, f, performance[i])?;
        let next = after.augment(ledger, i).to_input();
        self.nets[i]
            .td_update(&p.input, p.action, reward, &next, &self.config.train)
            .map_err(|e| e.at_tick(tick))?;
        Ok(())
    }
}

pub(super) fn checked_reward(tick: usize, zeta: f64, f: f64, p: f64) -> Result<f64> {
    if !f.is_finite() || !p.is_finite() {
        return Err(Error::NonFinite {
            tick,
            what: format!("reward terms F={f} P={p}"),
        });
    }
    option_reward(zeta, f, p)
}
