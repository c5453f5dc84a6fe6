//! Multi-room house sharing one thermostat setpoint.
//!
//! Each human occupies a room. All rooms receive the same commanded setpoint
//! but differ in occupant heat, so their temperatures drift apart. Rooms are
//! first-order lumped models integrated with explicit Euler substeps.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::activity::{self, Activity, ProfileKind, Schedule, TICKS_PER_DAY};
use super::pmv::{comfort_score, Comfort, ComfortParams};
use super::{AppType, Environment, GlobalAction, Observation, Outcome};
use crate::error::{Error, Result};
use crate::rng::{substream, Stream};

/// Desired setpoint in °F per activity.
pub const SETPOINTS: [f64; 4] = [62.0, 77.0, 72.0, 67.0];

/// Minutes per tick.
pub const TICK_MINUTES: f64 = 6.0;

pub fn desired_setpoint(activity: Activity) -> f64 {
    SETPOINTS[activity.index()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HvacConfig {
    /// Routine predictability per human; cycled if shorter than the population.
    pub profiles: Vec<ProfileKind>,
    pub outdoor_mean_f: f64,
    pub outdoor_amplitude_f: f64,
    /// Envelope time constant in minutes.
    pub tau_env_min: f64,
    /// Time constant of the heater/cooler flow in minutes.
    pub tau_hvac_min: f64,
    pub heater_flow_f: f64,
    pub cooler_flow_f: f64,
    /// Thermostat engages outside `setpoint ± band_f`; also the satisfaction threshold.
    pub band_f: f64,
    pub substep_seconds: f64,
    /// Occupant heat gain in °F per minute, indexed by activity.
    pub occupant_heat: [f64; 4],
    pub initial_temp_f: f64,
    pub comfort: ComfortParams,
    /// Replay schedules from a `tick,human,activity` CSV instead of generating them.
    pub schedule_csv: Option<PathBuf>,
}

impl Default for HvacConfig {
    fn default() -> Self {
        HvacConfig {
            profiles: vec![
                ProfileKind::Organized,
                ProfileKind::Intermediate,
                ProfileKind::Random,
            ],
            outdoor_mean_f: 50.0,
            outdoor_amplitude_f: 10.0,
            tau_env_min: 120.0,
            tau_hvac_min: 15.0,
            heater_flow_f: 122.0,
            cooler_flow_f: 50.0,
            band_f: 2.5,
            substep_seconds: 30.0,
            occupant_heat: [0.01, 0.015, 0.03, 0.02],
            initial_temp_f: 68.0,
            comfort: ComfortParams::default(),
            schedule_csv: None,
        }
    }
}

impl HvacConfig {
    pub fn validate(&self) -> Result<()> {
        if self.profiles.is_empty() {
            return Err(Error::Config("hvac.profiles must not be empty".into()));
        }
        if !(self.tau_env_min > 0.0 && self.tau_hvac_min > 0.0 && self.substep_seconds > 0.0) {
            return Err(Error::Config("hvac time constants must be positive".into()));
        }
        if self.substep_seconds > TICK_MINUTES * 60.0 {
            return Err(Error::Config("hvac.substep_seconds exceeds the tick length".into()));
        }
        if !(self.band_f >= 0.0) {
            return Err(Error::Config("hvac.band_f must be nonnegative".into()));
        }
        if self.occupant_heat.iter().any(|q| !(*q >= 0.0)) {
            return Err(Error::Config("hvac.occupant_heat must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn outdoor_temp(&self, tick: usize) -> f64 {
        let hour = (tick % TICKS_PER_DAY) as f64 * TICK_MINUTES / 60.0;
        self.outdoor_mean_f
            + self.outdoor_amplitude_f * (2.0 * std::f64::consts::PI * (hour - 10.0) / 24.0).sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HvacMode {
    Heat,
    Cool,
    Idle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoomThermalState {
    pub indoor_temp: f64,
    pub mode: HvacMode,
}

/// One Euler step of `dt_min` minutes. The mode is chosen from the
/// temperature at the start of the step.
pub fn thermal_step(
    room: RoomThermalState,
    setpoint: f64,
    outdoor: f64,
    occupant_heat: f64,
    config: &HvacConfig,
    dt_min: f64,
) -> RoomThermalState {
    let t = room.indoor_temp;
    let mode = if t < setpoint - config.band_f {
        HvacMode::Heat
    } else if t > setpoint + config.band_f {
        HvacMode::Cool
    } else {
        HvacMode::Idle
    };
    let hvac = match mode {
        HvacMode::Heat => (config.heater_flow_f - t) / config.tau_hvac_min,
        HvacMode::Cool => (config.cooler_flow_f - t) / config.tau_hvac_min,
        HvacMode::Idle => 0.0,
    };
    let drift = (outdoor - t) / config.tau_env_min + hvac + occupant_heat;
    RoomThermalState {
        indoor_temp: t + dt_min * drift,
        mode,
    }
}

pub struct HvacEnv {
    config: HvacConfig,
    comfort: Comfort,
    schedules: Vec<Schedule>,
    rooms: Vec<RoomThermalState>,
    current: Vec<Activity>,
}

impl HvacEnv {
    pub fn new(config: HvacConfig, n: usize, ticks: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let schedules = match &config.schedule_csv {
            Some(path) => activity::read_schedules(std::fs::File::open(path)?)?,
            None => (0..n)
                .map(|i| {
                    let kind = config.profiles[i % config.profiles.len()];
                    Schedule::generate(kind, ticks, &mut substream(seed, Stream::Schedule, i as u64))
                })
                .collect(),
        };
        Self::with_schedules(config, schedules, ticks)
    }

    pub fn with_schedules(config: HvacConfig, schedules: Vec<Schedule>, ticks: usize) -> Result<Self> {
        config.validate()?;
        if schedules.len() < 2 {
            return Err(Error::Config("hvac needs at least 2 schedules".into()));
        }
        if schedules.iter().any(|s| s.len() < ticks) {
            return Err(Error::Config(format!("every schedule must cover {ticks} ticks")));
        }
        let comfort = Comfort::calibrate(&config.comfort, SETPOINTS)?;
        let n = schedules.len();
        let room = RoomThermalState {
            indoor_temp: config.initial_temp_f,
            mode: HvacMode::Idle,
        };
        Ok(HvacEnv {
            config,
            comfort,
            rooms: vec![room; n],
            current: vec![Activity::Sleeping; n],
            schedules,
        })
    }

    pub fn schedules(&self) -> &[Schedule] {
        &self.schedules
    }

    pub fn rooms(&self) -> &[RoomThermalState] {
        &self.rooms
    }

    pub fn comfort(&self) -> &Comfort {
        &self.comfort
    }
}

impl Environment for HvacEnv {
    fn app_type(&self) -> AppType {
        AppType::Hvac
    }

    fn n_humans(&self) -> usize {
        self.schedules.len()
    }

    fn observe(&mut self, tick: usize) -> Result<Observation> {
        self.current = self
            .schedules
            .iter()
            .map(|s| s.activity_at(tick))
            .collect::<Result<_>>()?;
        Ok(Observation {
            desired: self.current.iter().map(|&a| desired_setpoint(a)).collect(),
            resource: None,
            effects: None,
        })
    }

    fn apply(&mut self, tick: usize, action: &GlobalAction) -> Result<Outcome> {
        let GlobalAction::Setpoint(setpoint) = *action else {
            return Err(Error::InvalidArgument("hvac expects a setpoint".into()));
        };
        let outdoor = self.config.outdoor_temp(tick);
        let dt = self.config.substep_seconds / 60.0;
        let substeps = (TICK_MINUTES / dt).round().max(1.0) as usize;
        let dt = TICK_MINUTES / substeps as f64;
        let mut out = Outcome {
            satisfied: Vec::with_capacity(self.rooms.len()),
            app_value: Vec::with_capacity(self.rooms.len()),
            app_score: Vec::with_capacity(self.rooms.len()),
        };
        for (room, &act) in self.rooms.iter_mut().zip(&self.current) {
            let q = self.config.occupant_heat[act.index()];
            for _ in 0..substeps {
                *room = thermal_step(*room, setpoint, outdoor, q, &self.config, dt);
            }
            let pmv = self.comfort.pmv(room.indoor_temp, act);
            out.satisfied
                .push((desired_setpoint(act) - setpoint).abs() <= self.config.band_f);
            out.app_value.push(pmv);
            out.app_score.push(comfort_score(pmv));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> HvacConfig {
        HvacConfig::default()
    }

    #[test]
    fn setpoint_table() {
        assert_eq!(desired_setpoint(Activity::Sleeping), 62.0);
        assert_eq!(desired_setpoint(Activity::Relaxing), 77.0);
        assert_eq!(desired_setpoint(Activity::DomesticWork), 72.0);
        assert_eq!(desired_setpoint(Activity::WorkFromHome), 67.0);
    }

    #[test]
    fn equilibrium_is_fixed() {
        let room = RoomThermalState {
            indoor_temp: 70.0,
            mode: HvacMode::Idle,
        };
        let next = thermal_step(room, 70.0, 70.0, 0.0, &cfg(), 0.5);
        assert_eq!(next, room);
    }

    #[test]
    fn heats_when_cold() {
        let room = RoomThermalState {
            indoor_temp: 60.0,
            mode: HvacMode::Idle,
        };
        let next = thermal_step(room, 70.0, 40.0, 0.0, &cfg(), 0.5);
        assert_eq!(next.mode, HvacMode::Heat);
        assert!(next.indoor_temp > 60.0);
    }

    #[test]
    fn converges_into_band() {
        let c = cfg();
        for (sp, start, out) in [(62.0, 80.0, 90.0), (77.0, 50.0, 30.0), (70.0, 70.0, 50.0)] {
            let mut room = RoomThermalState {
                indoor_temp: start,
                mode: HvacMode::Idle,
            };
            for step in 0..2000 {
                room = thermal_step(room, sp, out, 0.02, &c, 0.5);
                if step > 500 {
                    // Band plus one substep of overshoot.
                    assert!((room.indoor_temp - sp).abs() <= c.band_f + 2.5, "{room:?}");
                }
            }
        }
    }

    #[test]
    fn rise_time_is_about_half_an_hour() {
        // First-order response with the heater engaged.
        let c = cfg();
        let tau = 1.0 / (1.0 / c.tau_env_min + 1.0 / c.tau_hvac_min);
        let rise = tau * (0.9f64.ln() - 0.1f64.ln());
        assert!((rise - 30.0).abs() < 3.0, "{rise}");
    }

    #[test]
    fn satisfaction_is_inclusive_and_symmetric() {
        let schedules = vec![
            Schedule::new(vec![Activity::Sleeping; 4]),
            Schedule::new(vec![Activity::WorkFromHome; 4]),
            Schedule::new(vec![Activity::Relaxing; 4]),
        ];
        let mut env = HvacEnv::with_schedules(cfg(), schedules, 4).unwrap();
        let obs = env.observe(0).unwrap();
        assert_eq!(obs.desired, vec![62.0, 67.0, 77.0]);
        let out = env.apply(0, &GlobalAction::Setpoint(64.5)).unwrap();
        assert_eq!(out.satisfied, vec![true, true, false]);
        env.observe(1).unwrap();
        let out = env.apply(1, &GlobalAction::Setpoint(59.5)).unwrap();
        assert_eq!(out.satisfied, vec![true, false, false]);
        assert!(out.app_score.iter().all(|s| (-1.0..=1.0).contains(s)));
        assert!(env.apply(2, &GlobalAction::Categorical(0)).is_err());
    }

    #[test]
    fn outdoor_cycle() {
        let c = cfg();
        assert!((c.outdoor_temp(40) - 40.0).abs() < 1e-9);
        assert!((c.outdoor_temp(160) - 60.0).abs() < 1e-9);
        assert_eq!(c.outdoor_temp(17), c.outdoor_temp(17 + TICKS_PER_DAY));
    }
}
