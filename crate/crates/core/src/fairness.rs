//! Satisfaction ledgers and the fairness state derived from them.
//!
//! Every human owns a 2-D record `(u, v)` on the unit circle: `u` accumulates
//! unsatisfied outcomes and `v` satisfied ones. The fairness state is the
//! vector of mean pairwise cosine closeness between one record and all the
//! others; the all-ones vector means every human has the same satisfaction
//! history direction.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Default ledger increment.
pub const DEFAULT_DELTA: f64 = 0.01;

/// One human's satisfaction history direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionRecord {
    /// Unsatisfied mass.
    pub u: f64,
    /// Satisfied mass.
    pub v: f64,
}

impl SatisfactionRecord {
    pub const NEUTRAL: SatisfactionRecord = SatisfactionRecord {
        u: std::f64::consts::FRAC_1_SQRT_2,
        v: std::f64::consts::FRAC_1_SQRT_2,
    };

    pub fn new(u: f64, v: f64) -> Result<Self> {
        if !(u >= 0.0 && v >= 0.0) || (u == 0.0 && v == 0.0) || !u.is_finite() || !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "record components must be finite, nonnegative and not both zero, got ({u}, {v})"
            )));
        }
        Ok(SatisfactionRecord { u, v })
    }

    pub fn norm(&self) -> f64 {
        self.u.hypot(self.v)
    }

    /// `v / (u + v)`, the per-human satisfaction metric.
    pub fn satisfaction(&self) -> f64 {
        self.v / (self.u + self.v)
    }

    fn normalized(self) -> Self {
        let n = self.norm();
        SatisfactionRecord {
            u: self.u / n,
            v: self.v / n,
        }
    }

    fn cosine(&self, other: &SatisfactionRecord) -> f64 {
        ((self.u * other.u + self.v * other.v) / (self.norm() * other.norm())).min(1.0)
    }
}

/// Per-human satisfaction records plus the increment applied on each update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionLedger {
    records: Vec<SatisfactionRecord>,
    delta: f64,
}

impl SatisfactionLedger {
    /// Creates `n` records at the neutral direction `(1/√2, 1/√2)`.
    pub fn new(n: usize, delta: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "a ledger needs at least 2 humans, got {n}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "ledger delta must lie in (0, 1), got {delta}"
            )));
        }
        Ok(SatisfactionLedger {
            records: vec![SatisfactionRecord::NEUTRAL; n],
            delta,
        })
    }

    /// Builds a ledger from explicit records. Records are normalized.
    pub fn from_records(records: Vec<SatisfactionRecord>, delta: f64) -> Result<Self> {
        let mut ledger = SatisfactionLedger::new(records.len(), delta)?;
        ledger.records = records.into_iter().map(SatisfactionRecord::normalized).collect();
        Ok(ledger)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn records(&self) -> &[SatisfactionRecord] {
        &self.records
    }

    pub fn record(&self, i: usize) -> &SatisfactionRecord {
        &self.records[i]
    }

    /// Adds `delta` to `v` for satisfied humans and to `u` otherwise, then
    /// renormalizes every record to unit length.
    pub fn update(&mut self, satisfied: &[bool]) -> Result<()> {
        check_len(self.records.len(), satisfied.len())?;
        for (rec, &ok) in self.records.iter_mut().zip(satisfied) {
            if ok {
                rec.v += self.delta;
            } else {
                rec.u += self.delta;
            }
            *rec = rec.normalized();
        }
        Ok(())
    }

    pub fn satisfaction(&self) -> Vec<f64> {
        self.records.iter().map(SatisfactionRecord::satisfaction).collect()
    }

    /// Mean cosine closeness of each record to all the others.
    pub fn fairness_state(&self) -> FairnessState {
        let n = self.records.len();
        let closeness = (0..n)
            .map(|i| {
                let sum: f64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| self.records[i].cosine(&self.records[j]))
                    .sum();
                sum / (n - 1) as f64
            })
            .collect();
        FairnessState { closeness }
    }
}

/// Closeness vector `(L_1, ..., L_N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessState {
    pub closeness: Vec<f64>,
}

impl FairnessState {
    pub fn new(closeness: Vec<f64>) -> Self {
        FairnessState { closeness }
    }

    pub fn len(&self) -> usize {
        self.closeness.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closeness.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.closeness.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.closeness.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the option whose initiation set contains this state: the
    /// lowest index attaining the minimum closeness.
    pub fn active_option(&self) -> usize {
        let mut best = 0;
        for (i, &l) in self.closeness.iter().enumerate().skip(1) {
            if l < self.closeness[best] {
                best = i;
            }
        }
        best
    }

    /// An option terminates once its human no longer holds the minimum.
    pub fn is_terminated(&self, option: usize) -> bool {
        self.closeness[option] > self.min()
    }

    /// Keeps `previous` active until it terminates, then hands over to
    /// [`active_option`](Self::active_option). Ties with a lower index do not
    /// preempt a running option.
    pub fn dispatch(&self, previous: Option<usize>) -> usize {
        match previous {
            Some(i) if i < self.len() && !self.is_terminated(i) => i,
            _ => self.active_option(),
        }
    }

    pub fn augment(&self, ledger: &SatisfactionLedger, option: usize) -> AugmentedState {
        let vmax = ledger
            .records()
            .iter()
            .map(|r| r.v)
            .fold(f64::NEG_INFINITY, f64::max);
        AugmentedState {
            closeness: self.closeness.clone(),
            favored: ledger.record(option).v >= vmax,
        }
    }
}

/// Network input for an option: the closeness vector plus a flag telling
/// whether the option's human currently holds the largest satisfied mass.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState {
    pub closeness: Vec<f64>,
    pub favored: bool,
}

impl AugmentedState {
    pub fn to_input(&self) -> Vec<f64> {
        let mut x = self.closeness.clone();
        x.push(if self.favored { 1.0 } else { 0.0 });
        x
    }
}

/// Staircase magnitude for a change in closeness.
pub fn improvement_step(abs_change: f64) -> f64 {
    match abs_change {
        d if d <= 0.001 => 0.0,
        d if d <= 0.005 => 0.25,
        d if d <= 0.01 => 0.5,
        d if d <= 0.015 => 0.75,
        _ => 1.0,
    }
}

/// Absolute fairness `2L - 1` plus a signed staircase bonus for the change
/// since the previous step, clamped to `[-1, 1]`. Improvement is rewarded.
pub fn fairness_reward_term(l_prev: f64, l_cur: f64) -> f64 {
    let change = l_cur - l_prev;
    let bonus = if change > 0.0 {
        improvement_step(change)
    } else if change < 0.0 {
        -improvement_step(-change)
    } else {
        0.0
    };
    ((2.0 * l_cur - 1.0) + bonus).clamp(-1.0, 1.0)
}
