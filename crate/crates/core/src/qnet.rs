//! A one-hidden-layer Q-value network with hand-derived gradients.
//!
//! Parameters live in one flat vector laid out as `W1 (hidden x input)`,
//! `b1 (hidden)`, `W2 (output x hidden)`, `b2 (output)`, all row-major. The
//! flat layout keeps snapshots and finite-difference checks trivial.

use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::rng::Rng;

pub const N_ACTIONS: usize = 3;
const SNAPSHOT_MAGIC: &[u8; 4] = b"FQN1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Number of training steps over which epsilon decays linearly.
    pub epsilon_decay_steps: usize,
    /// Element-wise bound on each gradient component.
    pub grad_clip: f64,
    pub hidden: usize,
    /// Start with an all-zero output layer so every Q-value is initially 0.
    pub zero_head: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 1e-3,
            gamma: 0.9,
            epsilon_start: 0.2,
            epsilon_end: 0.01,
            epsilon_decay_steps: 10_000,
            grad_clip: 1.0,
            hidden: 32,
            zero_head: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("qnet.alpha must be positive");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("qnet.gamma must lie in [0, 1)");
        }
        for e in [self.epsilon_start, self.epsilon_end] {
            if !(0.0..=1.0).contains(&e) {
                return bad("qnet epsilon values must lie in [0, 1]");
            }
        }
        if !(self.grad_clip > 0.0) {
            return bad("qnet.grad_clip must be positive");
        }
        if self.hidden == 0 {
            return bad("qnet.hidden must be at least 1");
        }
        Ok(())
    }

    /// Exploration probability after `step` training steps.
    pub fn epsilon_at(&self, step: usize) -> f64 {
        if self.epsilon_decay_steps == 0 || step >= self.epsilon_decay_steps {
            return self.epsilon_end;
        }
        let frac = step as f64 / self.epsilon_decay_steps as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    input_dim: usize,
    hidden: usize,
    seed: u64,
    params: Vec<f64>,
}

impl QNetwork {
    /// Builds a network with parameters drawn uniformly from
    /// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` using a stream seeded by `seed`.
    pub fn new(input_dim: usize, hidden: usize, seed: u64, zero_head: bool) -> Result<Self> {
        if input_dim == 0 || hidden == 0 {
            return Err(Error::InvalidArgument(
                "network dimensions must be positive".into(),
            ));
        }
        let mut rng = crate::rng::substream(seed, crate::rng::Stream::Init, 0);
        Ok(Self::from_rng(input_dim, hidden, seed, zero_head, &mut rng))
    }

    pub(crate) fn from_rng(
        input_dim: usize,
        hidden: usize,
        seed: u64,
        zero_head: bool,
        rng: &mut Rng,
    ) -> Self {
        let mut net = QNetwork {
            input_dim,
            hidden,
            seed,
            params: vec![0.0; hidden * input_dim + hidden + N_ACTIONS * hidden + N_ACTIONS],
        };
        let b1 = 1.0 / (input_dim as f64).sqrt();
        let b2 = 1.0 / (hidden as f64).sqrt();
        let head_start = net.w2().start;
        for (k, p) in net.params.iter_mut().enumerate() {
            let bound = if k < head_start { b1 } else { b2 };
            *p = rng.gen_range(-bound..=bound);
        }
        if zero_head {
            let head = head_start..net.params.len();
            net.params[head].fill(0.0);
        }
        net
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn w1(&self) -> Range<usize> {
        0..self.hidden * self.input_dim
    }

    fn b1(&self) -> Range<usize> {
        let s = self.w1().end;
        s..s + self.hidden
    }

    fn w2(&self) -> Range<usize> {
        let s = self.b1().end;
        s..s + N_ACTIONS * self.hidden
    }

    fn b2(&self) -> Range<usize> {
        let s = self.w2().end;
        s..s + N_ACTIONS
    }

    fn forward(&self, x: &[f64]) -> (Vec<f64>, [f64; N_ACTIONS]) {
        let w1 = &self.params[self.w1()];
        let b1 = &self.params[self.b1()];
        let w2 = &self.params[self.w2()];
        let b2 = &self.params[self.b2()];
        let h: Vec<f64> = (0..self.hidden)
            .map(|j| {
                let row = &w1[j * self.input_dim..(j + 1) * self.input_dim];
                let z: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b1[j];
                z.tanh()
            })
            .collect();
        let mut q = [0.0; N_ACTIONS];
        for (a, qa) in q.iter_mut().enumerate() {
            let row = &w2[a * self.hidden..(a + 1) * self.hidden];
            *qa = row.iter().zip(&h).map(|(w, hj)| w * hj).sum::<f64>() + b2[a];
        }
        (h, q)
    }

    pub fn predict_q(&self, state: &[f64]) -> Result<[f64; N_ACTIONS]> {
        check_len(self.input_dim, state.len())?;
        Ok(self.forward(state).1)
    }

    /// Gradient of `Q(state, action)` with respect to every parameter.
    pub fn q_gradient(&self, state: &[f64], action: usize) -> Result<Vec<f64>> {
        check_len(self.input_dim, state.len())?;
        if action >= N_ACTIONS {
            return Err(Error::InvalidArgument(format!("action {action} out of range")));
        }
        let (h, _) = self.forward(state);
        let mut g = vec![0.0; self.params.len()];
        let w2 = &self.params[self.w2()];
        let (w1r, b1r, w2r, b2r) = (self.w1(), self.b1(), self.w2(), self.b2());
        g[b2r.start + action] = 1.0;
        for j in 0..self.hidden {
            g[w2r.start + action * self.hidden + j] = h[j];
            let dz = w2[action * self.hidden + j] * (1.0 - h[j] * h[j]);
            g[b1r.start + j] = dz;
            for (i, xi) in state.iter().enumerate() {
                g[w1r.start + j * self.input_dim + i] = dz * xi;
            }
        }
        Ok(g)
    }

    /// One semi-gradient step on `0.5 * (target - Q(s, a))^2` with
    /// `target = r + gamma * max Q(s_next)` held constant. Every gradient
    /// component is clipped to `[-grad_clip, grad_clip]` before the step.
    /// Returns the TD error `target - Q(s, a)` measured before the step.
    pub fn td_update(
        &mut self,
        state: &[f64],
        action: usize,
        reward: f64,
        next_state: &[f64],
        config: &TrainConfig,
    ) -> Result<f64> {
        check_len(self.input_dim, next_state.len())?;
        let q_next = self.forward(next_state).1;
        let max_next = q_next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let target = reward + config.gamma * max_next;
        let q = self.predict_q(state)?;
        let td = target - q[action];
        if !td.is_finite() {
            return Err(Error::NonFinite {
                tick: 0,
                what: format!("TD error {td} (reward {reward}, target {target})"),
            });
        }
        let grad = self.q_gradient(state, action)?;
        for (p, g) in self.params.iter_mut().zip(grad) {
            let dloss = (-td * g).clamp(-config.grad_clip, config.grad_clip);
            *p -= config.alpha * dloss;
        }
        Ok(td)
    }

    /// Epsilon-greedy choice. A uniform draw decides between exploring and
    /// acting greedily; greedy ties go to the lowest index.
    pub fn select_action(&self, state: &[f64], epsilon: f64, rng: &mut Rng) -> Result<usize> {
        let q = self.predict_q(state)?;
        if rng.gen::<f64>() < epsilon {
            return Ok(rng.gen_range(0..N_ACTIONS));
        }
        Ok(argmax(&q))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 8 * self.params.len());
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&(self.input_dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.hidden as u32).to_le_bytes());
        out.extend_from_slice(&(N_ACTIONS as u32).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let parse_err = |m: &str| Error::Parse(format!("network snapshot: {m}"));
        if bytes.len() < 32 || &bytes[..4] != SNAPSHOT_MAGIC {
            return Err(parse_err("bad header"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let (input_dim, hidden, outputs) = (u32_at(4), u32_at(8), u32_at(12));
        let seed = u64_at(16);
        let count = u64_at(24) as usize;
        if outputs != N_ACTIONS || input_dim == 0 || hidden == 0 {
            return Err(parse_err("unsupported dimensions"));
        }
        let mut net = QNetwork {
            input_dim,
            hidden,
            seed,
            params: Vec::new(),
        };
        let expected = hidden * input_dim + hidden + N_ACTIONS * hidden + N_ACTIONS;
        if count != expected || bytes.len() != 32 + 8 * count {
            return Err(parse_err("parameter count does not match dimensions"));
        }
        net.params = bytes[32..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::File::create(path)?.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
