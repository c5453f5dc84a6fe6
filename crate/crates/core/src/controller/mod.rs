//! Decision making: the option-based FAIRO agent and the baselines it is
//! compared against.

mod agent;
mod baseline;
mod mono;
mod weights;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use agent::{AgentConfig, FairoAgent};
pub use baseline::{baseline_action, Baseline};
pub use mono::{MonoDqn, MonoInput};
pub use weights::{Direction, WeightVector, DEFAULT_FLOOR};

use crate::env::{AppType, GlobalAction, Observation};
use crate::error::{check_len, Error, Result};
use crate::fairness::SatisfactionLedger;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fairo,
    Average,
    WeightedAverage,
    RoundRobin,
    WeightedRr,
    MonoDqn3in,
    MonoDqn4in,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Fairo,
        Method::Average,
        Method::WeightedAverage,
        Method::RoundRobin,
        Method::WeightedRr,
        Method::MonoDqn3in,
        Method::MonoDqn4in,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Fairo => "fairo",
            Method::Average => "average",
            Method::WeightedAverage => "weighted_average",
            Method::RoundRobin => "round_robin",
            Method::WeightedRr => "weighted_rr",
            Method::MonoDqn3in => "mono_dqn_3in",
            Method::MonoDqn4in => "mono_dqn_4in",
        }
    }

    /// Demand-weighted variants only make sense when splitting a resource.
    pub fn supports(self, app: AppType) -> bool {
        !matches!(self, Method::WeightedAverage | Method::WeightedRr) || app == AppType::Water
    }

    pub fn learns(self) -> bool {
        matches!(self, Method::Fairo | Method::MonoDqn3in | Method::MonoDqn4in)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Warmup,
    Decision,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Warmup => "warmup",
            Phase::Decision => "decision",
        }
    }
}

/// Everything a policy decided on one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDecision {
    pub action: GlobalAction,
    pub phase: Phase,
    pub active_option: Option<usize>,
    /// Effective share of each human in the decision.
    pub weights: Vec<f64>,
    pub dqn_action: Option<Direction>,
}

/// A decision rule driven tick by tick by the harness.
pub trait Policy: Send {
    fn decide(&mut self, tick: usize, ledger: &SatisfactionLedger, obs: &Observation) -> Result<StepDecision>;

    /// Called after the environment applied the decision and the ledger was
    /// updated. `performance` holds each human's performance term.
    fn learn(&mut self, _tick: usize, _ledger: &SatisfactionLedger, _performance: &[f64]) -> Result<()> {
        Ok(())
    }
}

/// Weighted sum of numerical preferences.
pub fn global_action_type1(w: &[f64], d: &[f64]) -> Result<f64> {
    check_len(w.len(), d.len())?;
    Ok(w.iter().zip(d).map(|(w, d)| w * d).sum())
}

/// Weighted shares of a resource.
pub fn global_allocation_type2(w: &[f64], resource: f64) -> Result<Vec<f64>> {
    if !(resource >= 0.0) {
        return Err(Error::InvalidArgument(format!("resource must be nonnegative, got {resource}")));
    }
    Ok(w.iter().map(|w| w * resource).collect())
}

/// Index of the human whose desired categorical action wins: the largest
/// weighted effect, lowest index on ties.
pub fn global_action_type3(w: &[f64], k: &[f64]) -> Result<usize> {
    check_len(w.len(), k.len())?;
    let scores: Vec<f64> = w.iter().zip(k).map(|(w, k)| w * k).collect();
    Ok(crate::qnet::argmax(&scores))
}

/// `zeta * F + (1 - zeta) * P`.
pub fn option_reward(zeta: f64, fairness: f64, performance: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&zeta) {
        return Err(Error::InvalidArgument(format!("zeta {zeta} out of range")));
    }
    for (name, x) in [("fairness", fairness), ("performance", performance)] {
        if !(-1.0..=1.0).contains(&x) {
            return Err(Error::InvalidArgument(format!("{name} term {x} out of range")));
        }
    }
    Ok(zeta * fairness + (1.0 - zeta) * performance)
}

/// Composes the global action from a weight vector for the given application.
pub fn weighted_action(app: AppType, w: &[f64], obs: &Observation) -> Result<GlobalAction> {
    match app {
        AppType::Hvac => Ok(GlobalAction::Setpoint(global_action_type1(w, &obs.desired)?)),
        AppType::Water => {
            let r = obs
                .resource
                .ok_or_else(|| Error::InvalidArgument("water observation lacks a resource".into()))?;
            Ok(GlobalAction::Allocation(global_allocation_type2(w, r)?))
        }
        AppType::Learning => {
            let k = obs
                .effects
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("learning observation lacks effects".into()))?;
            let j = global_action_type3(w, k)?;
            Ok(GlobalAction::Categorical(obs.desired[j] as usize))
        }
    }
}
