//! Learners sharing one VR study session.
//!
//! Each learner is an 8-state MDP whose state encodes alertness and comfort
//! (state 8 is best). The session applies one of `break`, `vr_on`, `vr_off`
//! to everyone per tick. States are 0-based internally: index 0 is state 1.

use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{AppType, Environment, GlobalAction, Observation, Outcome};
use crate::error::{Error, Result};
use crate::rng::{stream, Rng, Stream};

pub const N_STATES: usize = 8;
pub const DEFAULT_MDP_TEXT: &str = include_str!("../../data/learner_mdp.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerAction {
    Break,
    VrOn,
    VrOff,
}

impl LearnerAction {
    /// Also the tie-break order.
    pub const ALL: [LearnerAction; 3] = [LearnerAction::Break, LearnerAction::VrOn, LearnerAction::VrOff];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerAction::Break => "break",
            LearnerAction::VrOn => "vr_on",
            LearnerAction::VrOff => "vr_off",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("learner action index {i} out of range")))
    }
}

impl FromStr for LearnerAction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown learner action {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerProfile {
    Tolerant,
    Intermediate,
    Sensitive,
}

impl LearnerProfile {
    pub const ALL: [LearnerProfile; 3] = [
        LearnerProfile::Tolerant,
        LearnerProfile::Intermediate,
        LearnerProfile::Sensitive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerProfile::Tolerant => "tolerant",
            LearnerProfile::Intermediate => "intermediate",
            LearnerProfile::Sensitive => "sensitive",
        }
    }
}

impl FromStr for LearnerProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown learner profile {s:?}")))
    }
}

/// Transition rows `p[action][state][next]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerMdp {
    pub p: [[[f64; N_STATES]; N_STATES]; 3],
}

impl LearnerMdp {
    pub fn validate(&self) -> Result<()> {
        for (a, m) in self.p.iter().enumerate() {
            for (s, row) in m.iter().enumerate() {
                let sum: f64 = row.iter().sum();
                if row.iter().any(|x| !(*x >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::Parse(format!(
                        "transition row for action {} state {} is not a distribution",
                        LearnerAction::ALL[a].as_str(),
                        s + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn row(&self, action: LearnerAction, state: usize) -> &[f64; N_STATES] {
        &self.p[action.index()][state]
    }

    /// Expected value of the next state.
    pub fn expected_value(&self, action: LearnerAction, state: usize, values: &ValueMap) -> f64 {
        self.row(action, state)
            .iter()
            .zip(&values.0)
            .map(|(p, v)| p * v)
            .sum()
    }

    /// Action with the highest expected next-state value; ties follow
    /// `break < vr_on < vr_off`.
    pub fn desired_action(&self, state: usize, values: &ValueMap) -> LearnerAction {
        let mut best = LearnerAction::Break;
        let mut best_v = self.expected_value(best, state, values);
        for a in [LearnerAction::VrOn, LearnerAction::VrOff] {
            let v = self.expected_value(a, state, values);
            if v > best_v {
                best = a;
                best_v = v;
            }
        }
        best
    }

    pub fn sample(&self, action: LearnerAction, state: usize, rng: &mut Rng) -> usize {
        let u: f64 = rng.gen();
        let row = self.row(action, state);
        let mut acc = 0.0;
        for (s, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return s;
            }
        }
        // Rounding left a sliver of mass; return the last reachable state.
        row.iter().rposition(|p| *p > 0.0).unwrap_or(state)
    }
}

/// Value of each state.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueMap(pub [f64; N_STATES]);

impl Default for ValueMap {
    /// Linear from 0 at state 1 to 0.5 at state 8.
    fn default() -> Self {
        let mut v = [0.0; N_STATES];
        for (s, x) in v.iter_mut().enumerate() {
            *x = 0.5 * s as f64 / (N_STATES - 1) as f64;
        }
        ValueMap(v)
    }
}

/// Parses blocks of `profile <name> action <name>` followed by eight rows of
/// eight probabilities. Blank lines and `#` comments are ignored. Every
/// profile/action pair must appear exactly once.
pub fn parse_mdp_text(text: &str) -> Result<[LearnerMdp; 3]> {
    let mut slots: [[Option<[[f64; N_STATES]; N_STATES]>; 3]; 3] = Default::default();
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    while let Some(header) = lines.next() {
        let words: Vec<&str> = header.split_whitespace().collect();
        let [_, profile, _, action] = words[..] else {
            return Err(Error::Parse(format!("bad matrix header {header:?}")));
        };
        if words[0] != "profile" || words[2] != "action" {
            return Err(Error::Parse(format!("bad matrix header {header:?}")));
        }
        let p: LearnerProfile = profile.parse()?;
        let a: LearnerAction = action.parse()?;
        let mut m = [[0.0; N_STATES]; N_STATES];
        for row in m.iter_mut() {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("matrix {profile}/{action} is truncated")))?;
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|x| x.parse::<f64>().map_err(|e| Error::Parse(format!("{x:?}: {e}"))))
                .collect::<Result<_>>()?;
            if vals.len() != N_STATES {
                return Err(Error::Parse(format!("matrix {profile}/{action} row has {} entries", vals.len())));
            }
            row.copy_from_slice(&vals);
        }
        let slot = &mut slots[p as usize][a.index()];
        if slot.is_some() {
            return Err(Error::Parse(format!("matrix {profile}/{action} appears twice")));
        }
        *slot = Some(m);
    }
    let mut out = Vec::with_capacity(3);
    for (pi, profile) in slots.into_iter().enumerate() {
        let mut p = [[[0.0; N_STATES]; N_STATES]; 3];
        for (ai, m) in profile.into_iter().enumerate() {
            p[ai] = m.ok_or_else(|| {
                Error::Parse(format!(
                    "missing matrix {}/{}",
                    LearnerProfile::ALL[pi].as_str(),
                    LearnerAction::ALL[ai].as_str()
                ))
            })?;
        }
        let mdp = LearnerMdp { p };
        mdp.validate()?;
        out.push(mdp);
    }
    Ok(out.try_into().expect("three profiles"))
}

/// Change in value plus the current value, clamped to `[-1, 1]`.
pub fn learning_experience(prev: usize, cur: usize, values: &ValueMap) -> f64 {
    ((values.0[cur] - values.0[prev]) + values.0[cur]).clamp(-1.0, 1.0)
}

/// Expected value change summed over everyone except `proposer` if `action` is applied.
pub fn effect(proposer: usize, action: LearnerAction, humans: &[(&LearnerMdp, usize)], values: &ValueMap) -> f64 {
    humans
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != proposer)
        .map(|(_, (mdp, s))| mdp.expected_value(action, *s, values) - values.0[*s])
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningConfig {
    pub profiles: Vec<LearnerProfile>,
    pub day_length: usize,
    /// Matrix file overriding the bundled defaults.
    pub mdp_file: Option<PathBuf>,
}

impl Default for LearningConfig {
    fn default() -> Self {
        LearningConfig {
            profiles: LearnerProfile::ALL.to_vec(),
            day_length: 240,
            mdp_file: None,
        }
    }
}

impl LearningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.profiles.is_empty() {
            return Err(Error::Config("learning.profiles must not be empty".into()));
        }
        if self.day_length == 0 {
            return Err(Error::Config("learning.day_length must be positive".into()));
        }
        Ok(())
    }
}

pub struct LearningEnv {
    config: LearningConfig,
    mdps: Vec<LearnerMdp>,
    values: ValueMap,
    states: Vec<usize>,
    desired: Vec<LearnerAction>,
    env_rng: Rng,
    reset_rng: Rng,
}

impl LearningEnv {
    pub fn new(config: LearningConfig, n: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let text = match &config.mdp_file {
            Some(p) => std::fs::read_to_string(p)?,
            None => DEFAULT_MDP_TEXT.to_string(),
        };
        let table = parse_mdp_text(&text)?;
        let mdps = (0..n)
            .map(|i| table[config.profiles[i % config.profiles.len()] as usize].clone())
            .collect();
        Self::with_mdps(config, mdps, seed)
    }

    pub fn with_mdps(config: LearningConfig, mdps: Vec<LearnerMdp>, seed: u64) -> Result<Self> {
        config.validate()?;
        if mdps.len() < 2 {
            return Err(Error::Config("learning needs at least 2 learners".into()));
        }
        for m in &mdps {
            m.validate()?;
        }
        let n = mdps.len();
        Ok(LearningEnv {
            config,
            mdps,
            values: ValueMap::default(),
            states: vec![0; n],
            desired: vec![LearnerAction::Break; n],
            env_rng: stream(seed, Stream::Env),
            reset_rng: stream(seed, Stream::Reset),
        })
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn values(&self) -> &ValueMap {
        &self.values
    }
}

impl Environment for LearningEnv {
    fn app_type(&self) -> AppType {
        AppType::Learning
    }

    fn n_humans(&self) -> usize {
        self.mdps.len()
    }

    fn observe(&mut self, tick: usize) -> Result<Observation> {
        if tick % self.config.day_length == 0 {
            for s in &mut self.states {
                *s = if self.reset_rng.gen_bool(0.5) { 0 } else { 2 };
            }
        }
        self.desired = self
            .mdps
            .iter()
            .zip(&self.states)
            .map(|(m, &s)| m.desired_action(s, &self.values))
            .collect();
        let humans: Vec<(&LearnerMdp, usize)> = self.mdps.iter().zip(self.states.iter().copied()).collect();
        let effects = self
            .desired
            .iter()
            .enumerate()
            .map(|(i, &a)| effect(i, a, &humans, &self.values))
            .collect();
        Ok(Observation {
            desired: self.desired.iter().map(|a| a.index() as f64).collect(),
            resource: None,
            effects: Some(effects),
        })
    }

    fn apply(&mut self, _tick: usize, action: &GlobalAction) -> Result<Outcome> {
        let GlobalAction::Categorical(a) = *action else {
            return Err(Error::InvalidArgument("learning expects a categorical action".into()));
        };
        let a = LearnerAction::from_index(a)?;
        let mut out = Outcome {
            satisfied: Vec::with_capacity(self.states.len()),
            app_value: Vec::with_capacity(self.states.len()),
            app_score: Vec::with_capacity(self.states.len()),
        };
        for (mdp, s) in self.mdps.iter().zip(self.states.iter_mut()) {
            let prev = *s;
            *s = mdp.sample(a, prev, &mut self.env_rng);
            let le = learning_experience(prev, *s, &self.values);
            out.satisfied.push(le > 0.0);
            out.app_value.push(le);
            out.app_score.push(le);
        }
        Ok(out)
    }

    fn format_desired(&self, value: f64) -> String {
        LearnerAction::from_index(value as usize)
            .map(|a| a.as_str().to_string())
            .unwrap_or_else(|_| super::format_num(value))
    }
}
