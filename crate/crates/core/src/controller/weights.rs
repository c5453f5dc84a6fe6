use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_FLOOR: f64 = 0.01;

/// Step applied to one weight by an option's network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Raise,
    Lower,
    Hold,
}

impl Direction {
    /// Network output index to direction.
    pub fn from_index(a: usize) -> Self {
        match a {
            0 => Direction::Raise,
            1 => Direction::Lower,
            _ => Direction::Hold,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Direction::Raise => 1.0,
            Direction::Lower => -1.0,
            Direction::Hold => 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Raise => "raise",
            Direction::Lower => "lower",
            Direction::Hold => "hold",
        }
    }
}

/// Per-human contribution weights on the simplex, each at least `floor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    w: Vec<f64>,
    floor: f64,
}

impl WeightVector {
    pub fn uniform(n: usize, floor: f64) -> Result<Self> {
        if n == 0 || !(floor >= 0.0) || floor * n as f64 > 1.0 {
            return Err(Error::InvalidArgument(format!(
                "cannot place {n} weights with floor {floor} on the simplex"
            )));
        }
        Ok(WeightVector {
            w: vec![1.0 / n as f64; n],
            floor,
        })
    }

    /// Accepts any weights already on the simplex and above the floor.
    pub fn from_weights(w: Vec<f64>, floor: f64) -> Result<Self> {
        let mut out = Self::uniform(w.len(), floor)?;
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || w.iter().any(|x| !(*x >= floor - 1e-12 && *x <= 1.0)) {
            return Err(Error::InvalidArgument(format!("{w:?} is not a valid weight vector")));
        }
        out.w = w;
        Ok(out)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn reset_uniform(&mut self) {
        let n = self.w.len() as f64;
        self.w.iter_mut().for_each(|x| *x = 1.0 / n);
    }

    /// Steps `w_i` by `direction * delta_w`, clamps it to `[floor, 1]` and
    /// renormalizes. Weights that renormalization would push under the
    /// floor are pinned there and the rest rescaled to fill the remainder.
    pub fn adjust(&mut self, i: usize, direction: Direction, delta_w: f64) {
        if direction == Direction::Hold {
            return;
        }
        self.w[i] = (self.w[i] + direction.sign() * delta_w).clamp(self.floor, 1.0);
        let sum: f64 = self.w.iter().sum();
        self.w.iter_mut().for_each(|x| *x /= sum);
        self.enforce_floor();
    }

    fn enforce_floor(&mut self) {
        let n = self.w.len();
        let mut pinned = vec![false; n];
        loop {
            let mut changed = false;
            for k in 0..n {
                if !pinned[k] && self.w[k] < self.floor {
                    pinned[k] = true;
                    changed = true;
                }
            }
            if !changed {
                return;
            }
            let n_pinned = pinned.iter().filter(|p| **p).count() as f64;
            let free: f64 = (0..n).filter(|&k| !pinned[k]).map(|k| self.w[k]).sum();
            let scale = (1.0 - n_pinned * self.floor) / free;
            for k in 0..n {
                self.w[k] = if pinned[k] { self.floor } else { self.w[k] * scale };
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn raise_from_center() {
        let mut w = WeightVector::uniform(3, DEFAULT_FLOOR).unwrap();
        w.adjust(0, Direction::Raise, 0.01);
        let third = 1.0 / 3.0;
        assert_abs_diff_eq!(w.as_slice()[0], (third + 0.01) / 1.01, epsilon = 1e-15);
        assert_abs_diff_eq!(w.as_slice()[1], third / 1.01, epsilon = 1e-15);
        assert_abs_diff_eq!(w.as_slice()[0], 0.33993, epsilon = 1e-5);
        assert_abs_diff_eq!(w.as_slice()[2], 0.33003, epsilon = 1e-5);
    }

    #[test]
    fn hold_is_identity() {
        let mut w = WeightVector::from_weights(vec![0.2, 0.5, 0.3], DEFAULT_FLOOR).unwrap();
        let before = w.clone();
        w.adjust(1, Direction::Hold, 0.05);
        assert_eq!(w, before);
    }

    #[test]
    fn lowering_at_floor_is_a_no_op() {
        let mut w = WeightVector::from_weights(vec![0.01, 0.495, 0.495], DEFAULT_FLOOR).unwrap();
        w.adjust(0, Direction::Lower, 0.05);
        assert_abs_diff_eq!(w.as_slice()[0], 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(w.as_slice()[1], 0.495, epsilon = 1e-15);
    }

    #[test]
    fn raising_near_the_top_keeps_others_at_floor() {
        let mut w = WeightVector::from_weights(vec![0.98, 0.01, 0.01], DEFAULT_FLOOR).unwrap();
        w.adjust(0, Direction::Raise, 0.05);
        assert_abs_diff_eq!(w.as_slice()[1], 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(w.as_slice()[0], 0.98, epsilon = 1e-12);
        assert_abs_diff_eq!(w.as_slice().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_impossible_floor() {
        assert!(WeightVector::uniform(3, 0.5).is_err());
        assert!(WeightVector::from_weights(vec![0.5, 0.6], 0.01).is_err());
    }
}
