use serde::{Deserialize, Serialize};

use super::agent::checked_reward;
use super::{baseline_action, weighted_action, AgentConfig, Direction, Method, Phase, Policy, StepDecision, WeightVector};
use crate::env::{AppType, Observation};
use crate::error::{Error, Result};
use crate::fairness::{fairness_reward_term, FairnessState, SatisfactionLedger};
use crate::qnet::{QNetwork, TrainConfig};
use crate::rng::{stream, substream, Rng, Stream};

/// What the single network sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MonoInput {
    /// The closeness vector only.
    Closeness,
    /// The closeness vector plus the index of the least-close human scaled to `[0, 1]`.
    ClosenessAndIndex,
}

/// One network for everyone: it nudges the weight of the least-close human
/// and is rewarded with population averages.
pub struct MonoDqn {
    app: AppType,
    input: MonoInput,
    config: AgentConfig,
    net: QNetwork,
    weights: WeightVector,
    active: Option<usize>,
    pending: Option<(Vec<f64>, usize, f64)>,
    explore: Rng,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

impl MonoDqn {
    pub fn new(app: AppType, n: usize, input: MonoInput, config: AgentConfig, seed: u64) -> Result<Self> {
        config.train.validate()?;
        if !(0.0..=1.0).contains(&config.zeta) || !(config.delta_w > 0.0) {
            return Err(Error::Config("zeta must lie in [0, 1] and delta_w be positive".into()));
        }
        let dim = match input {
            MonoInput::Closeness => n,
            MonoInput::ClosenessAndIndex => n + 1,
        };
        let TrainConfig { hidden, zero_head, .. } = config.train;
        let net = QNetwork::from_rng(dim, hidden, seed, zero_head, &mut substream(seed, Stream::Init, 0));
        Ok(MonoDqn {
            app,
            input,
            weights: WeightVector::uniform(n, config.weight_floor)?,
            config,
            net,
            active: None,
            pending: None,
            explore: stream(seed, Stream::Explore),
        })
    }

    pub fn method(&self) -> Method {
        match self.input {
            MonoInput::Closeness => Method::MonoDqn3in,
            MonoInput::ClosenessAndIndex => Method::MonoDqn4in,
        }
    }

    fn encode(&self, state: &FairnessState, i: usize) -> Vec<f64> {
        let mut x = state.closeness.clone();
        if self.input == MonoInput::ClosenessAndIndex {
            x.push(i as f64 / (state.len() - 1) as f64);
        }
        x
    }
}

impl Policy for MonoDqn {
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
        let x = self.encode(&state, i);
        let epsilon = self.config.train.epsilon_at(tick - self.config.warmup);
        let a = self.net.select_action(&x, epsilon, &mut self.explore)?;
        let direction = Direction::from_index(a);
        self.weights.adjust(i, direction, self.config.delta_w);
        let action = weighted_action(self.app, self.weights.as_slice(), obs)?;
        self.pending = Some((x, a, mean(&state.closeness)));
        Ok(StepDecision {
            action,
            phase: Phase::Decision,
            active_option: Some(i),
            weights: self.weights.as_slice().to_vec(),
            dqn_action: Some(direction),
        })
    }

    fn learn(&mut self, tick: usize, ledger: &SatisfactionLedger, performance: &[f64]) -> Result<()> {
        let Some((x, a, mean_before)) = self.pending.take() else {
            return Ok(());
        };
        let after = ledger.fairness_state();
        let f = fairness_reward_term(mean_before, mean(&after.closeness));
        let reward = checked_reward(tick, self.config.zeta, f, mean(performance))?;
        let next = self.encode(&after, after.dispatch(self.active));
        self.net
            .td_update(&x, a, reward, &next, &self.config.train)
            .map_err(|e| e.at_tick(tick))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_encodings() {
        let cfg = AgentConfig {
            warmup: 0,
            ..AgentConfig::default()
        };
        let m3 = MonoDqn::new(AppType::Hvac, 3, MonoInput::Closeness, cfg.clone(), 1).unwrap();
        let m4 = MonoDqn::new(AppType::Hvac, 3, MonoInput::ClosenessAndIndex, cfg, 1).unwrap();
        let s = FairnessState::new(vec![0.9, 0.8, 0.95]);
        assert_eq!(m3.encode(&s, 1), vec![0.9, 0.8, 0.95]);
        assert_eq!(m4.encode(&s, 1), vec![0.9, 0.8, 0.95, 0.5]);
        assert_eq!(m3.method(), Method::MonoDqn3in);
    }
}
