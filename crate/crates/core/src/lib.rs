//! Fairness-aware sequential decision making for shared human-in-the-loop
//! systems.
//!
//! Every human keeps a satisfaction record; the fairness state measures how
//! aligned those records are. One option per human (a small Q-network)
//! adjusts that human's weight in the shared decision whenever the human is
//! the least aligned. Three simulated applications, fixed baselines, a
//! metrics engine and a seeded experiment harness are included.

pub mod controller;
pub mod env;
pub mod error;
pub mod fairness;
pub mod harness;
pub mod metrics;
pub mod qnet;
pub mod rng;

pub use controller::{Direction, FairoAgent, Method, Phase, Policy, StepDecision, WeightVector};
pub use env::{AppType, Environment, GlobalAction, Observation, Outcome};
pub use error::{Error, Result};
pub use fairness::{AugmentedState, FairnessState, SatisfactionLedger, SatisfactionRecord};
pub use harness::{ExperimentConfig, RunArtifact};
pub use qnet::{QNetwork, TrainConfig};
