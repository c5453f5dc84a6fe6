//! Simulated human-in-the-loop applications.
//!
//! Each environment exposes the humans' desired actions for a tick and then
//! applies one shared global action, reporting who was satisfied and how well
//! the application served each human.

pub mod activity;
pub mod hvac;
pub mod learning;
pub mod pmv;
pub mod water;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use activity::{Activity, ProfileKind, Schedule};
pub use hvac::{HvacConfig, HvacEnv};
pub use learning::{LearnerAction, LearnerProfile, LearningConfig, LearningEnv};
pub use water::{WaterConfig, WaterEnv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppType {
    /// Numerical preferences merged into one value (thermostat setpoint).
    Hvac,
    /// A shared resource split into per-human allocations (water supply).
    Water,
    /// Categorical preferences, one of which is applied (learning activity).
    Learning,
}

impl AppType {
    pub fn as_str(self) -> &'static str {
        match self {
            AppType::Hvac => "hvac",
            AppType::Water => "water",
            AppType::Learning => "learning",
        }
    }
}

/// What the environment reports before the controller decides.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Desired value per human: setpoint in °F, demand in gallons, or a
    /// categorical action index.
    pub desired: Vec<f64>,
    /// Shared resource available this tick (water only).
    pub resource: Option<f64>,
    /// Effect of each human's desired action on everyone else (learning only).
    pub effects: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GlobalAction {
    Setpoint(f64),
    Allocation(Vec<f64>),
    Categorical(usize),
}

/// Result of applying a global action.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub satisfied: Vec<bool>,
    /// Raw application signal per human: PMV, balance rate, or learning experience.
    pub app_value: Vec<f64>,
    /// Application signal mapped to `[-1, 1]`.
    pub app_score: Vec<f64>,
}

pub trait Environment: Send {
    fn app_type(&self) -> AppType;

    fn n_humans(&self) -> usize;

    fn observe(&mut self, tick: usize) -> Result<Observation>;

    fn apply(&mut self, tick: usize, action: &GlobalAction) -> Result<Outcome>;

    /// Renders a desired value or the per-human view of a global action for traces.
    fn format_desired(&self, value: f64) -> String {
        format_num(value)
    }
}

/// Performance of one human: `0.2 * v/(u+v) + 0.8 * app_score`.
pub fn performance(satisfaction: f64, app_score: f64) -> f64 {
    0.2 * satisfaction + 0.8 * app_score
}

/// Shortest decimal that round-trips, used for every number in CSV output.
pub fn format_num(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}
