use super::{Method, Phase, Policy, StepDecision};
use crate::env::{AppType, GlobalAction, Observation};
use crate::error::{Error, Result};
use crate::fairness::SatisfactionLedger;

fn resource(obs: &Observation) -> Result<f64> {
    obs.resource
        .ok_or_else(|| Error::InvalidArgument("water observation lacks a resource".into()))
}

fn effects(obs: &Observation) -> Result<&[f64]> {
    obs.effects
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("learning observation lacks effects".into()))
}

/// Splits `amount` over `idx` in proportion to `demand`, equally if they demand nothing.
fn split_proportional(out: &mut [f64], idx: &[usize], demand: &[f64], amount: f64) {
    let total: f64 = idx.iter().map(|&j| demand[j]).sum();
    for &j in idx {
        out[j] += if total > 0.0 {
            amount * demand[j] / total
        } else {
            amount / idx.len() as f64
        };
    }
}

/// Decision of a fixed baseline and each human's effective share in it.
pub fn baseline_action(method: Method, app: AppType, tick: usize, obs: &Observation) -> Result<(GlobalAction, Vec<f64>)> {
    if method.learns() || !method.supports(app) {
        return Err(Error::Config(format!(
            "{} is not a fixed baseline for {}",
            method.as_str(),
            app.as_str()
        )));
    }
    let d = &obs.desired;
    let n = d.len();
    let uniform = vec![1.0 / n as f64; n];
    let chosen = tick % n;
    let one_hot: Vec<f64> = (0..n).map(|i| if i == chosen { 1.0 } else { 0.0 }).collect();
    match (app, method) {
        (AppType::Hvac, Method::Average) => Ok((GlobalAction::Setpoint(d.iter().sum::<f64>() / n as f64), uniform)),
        (AppType::Hvac, Method::RoundRobin) => Ok((GlobalAction::Setpoint(d[chosen]), one_hot)),
        (AppType::Water, _) => {
            let r = resource(obs)?;
            let mut s = vec![0.0; n];
            match method {
                Method::Average => s.iter_mut().for_each(|x| *x = r / n as f64),
                Method::WeightedAverage => split_proportional(&mut s, &(0..n).collect::<Vec<_>>(), d, r),
                _ => {
                    s[chosen] = d[chosen].min(r);
                    let others: Vec<usize> = (0..n).filter(|&j| j != chosen).collect();
                    let leftover = r - s[chosen];
                    if method == Method::WeightedRr {
                        split_proportional(&mut s, &others, d, leftover);
                    } else {
                        for &j in &others {
                            s[j] = leftover / others.len() as f64;
                        }
                    }
                }
            }
            let shares = if r > 0.0 { s.iter().map(|x| x / r).collect() } else { uniform };
            Ok((GlobalAction::Allocation(s), shares))
        }
        (AppType::Learning, Method::Average) => {
            // The human with the median effect; equal weights make this the median weighted effect.
            let k = effects(obs)?;
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| k[a].total_cmp(&k[b]));
            let j = order[(n - 1) / 2];
            Ok((GlobalAction::Categorical(d[j] as usize), uniform))
        }
        (AppType::Learning, Method::RoundRobin) => Ok((GlobalAction::Categorical(d[chosen] as usize), one_hot)),
        _ => unreachable!("validity checked above"),
    }
}

/// A fixed policy that ignores the ledger.
pub struct Baseline {
    method: Method,
    app: AppType,
    warmup: usize,
}

impl Baseline {
    pub fn new(method: Method, app: AppType, warmup: usize) -> Result<Self> {
        if method.learns() || !method.supports(app) {
            return Err(Error::Config(format!(
                "{} is not a fixed baseline for {}",
                method.as_str(),
                app.as_str()
            )));
        }
        Ok(Baseline { method, app, warmup })
    }
}

impl Policy for Baseline {
    fn decide(&mut self, tick: usize, _ledger: &SatisfactionLedger, obs: &Observation) -> Result<StepDecision> {
        let (action, weights) = baseline_action(self.method, self.app, tick, obs)?;
        Ok(StepDecision {
            action,
            phase: if tick < self.warmup { Phase::Warmup } else { Phase::Decision },
            active_option: None,
            weights,
            dqn_action: None,
        })
    }
}
