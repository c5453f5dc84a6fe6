//! Households sharing an insufficient water supply.
//!
//! Every tick the utility offers `1.5 x` the largest household demand, which
//! is less than the total demand whenever two or more households need water
//! at once. Households keep surplus in a tank and draw on it later.

use std::io::{Read, Write};
use std::path::PathBuf;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::activity::{ProfileKind, Schedule, TICKS_PER_DAY};
use super::{AppType, Environment, GlobalAction, Observation, Outcome};
use crate::error::{check_len, Error, Result};
use crate::rng::{substream, Stream};

/// Balance rates are reported up to this ceiling.
pub const BR_CEILING: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaterConfig {
    pub profiles: Vec<ProfileKind>,
    /// Gallons per tick for each activity.
    pub demand_per_activity: [f64; 4],
    /// Relative uniform noise applied to each tick's demand.
    pub demand_noise: f64,
    pub resource_factor: f64,
    /// Tank capacity in gallons; defaults to twice a household's mean daily demand.
    pub tank_capacity: Option<f64>,
    pub initial_level: f64,
    /// Minimum balance rate that counts as satisfied.
    pub satisfied_br: f64,
    /// Replay demands from a `tick,household,gallons` CSV.
    pub demand_csv: Option<PathBuf>,
}

impl Default for WaterConfig {
    fn default() -> Self {
        WaterConfig {
            profiles: vec![
                ProfileKind::Organized,
                ProfileKind::Intermediate,
                ProfileKind::Random,
            ],
            demand_per_activity: [0.5, 2.0, 8.0, 3.0],
            demand_noise: 0.0,
            resource_factor: 1.5,
            tank_capacity: None,
            initial_level: 0.0,
            satisfied_br: 0.8,
            demand_csv: None,
        }
    }
}

impl WaterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.profiles.is_empty() {
            return Err(Error::Config("water.profiles must not be empty".into()));
        }
        if self.demand_per_activity.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::Config("water demands must be nonnegative".into()));
        }
        if !(0.0..1.0).contains(&self.demand_noise) {
            return Err(Error::Config("water.demand_noise must lie in [0, 1)".into()));
        }
        if !(self.resource_factor >= 0.0) || !(self.initial_level >= 0.0) {
            return Err(Error::Config("water resource factor and level must be nonnegative".into()));
        }
        if matches!(self.tank_capacity, Some(c) if !(c >= 0.0)) {
            return Err(Error::Config("water.tank_capacity must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tank {
    pub level: f64,
    pub capacity: f64,
}

/// Supply is consumed first, then the reserve; what remains is stored up to
/// capacity. Returns the new tank and the unmet demand.
pub fn tank_step(tank: Tank, supply: f64, demand: f64) -> (Tank, f64) {
    let available = supply + tank.level;
    let consumed = available.min(demand);
    let level = (available - consumed).min(tank.capacity);
    (
        Tank {
            level,
            capacity: tank.capacity,
        },
        demand - consumed,
    )
}

/// `(supply + reserve) / demand`, capped at [`BR_CEILING`]; zero demand counts as balanced.
pub fn balance_rate(supply: f64, reserve: f64, demand: f64) -> f64 {
    if demand <= 0.0 {
        return 1.0;
    }
    ((supply + reserve) / demand).min(BR_CEILING)
}

pub fn resource_at(demands: &[f64], factor: f64) -> f64 {
    factor * demands.iter().copied().fold(0.0, f64::max)
}

/// Balance score: -1 at BR = 0 rising linearly to 1 at BR >= 1.
pub fn balance_score(br: f64) -> f64 {
    2.0 * br.clamp(0.0, 1.0) - 1.0
}

pub struct WaterEnv {
    config: WaterConfig,
    /// `demands[tick][household]`.
    demands: Vec<Vec<f64>>,
    tanks: Vec<Tank>,
}

impl WaterEnv {
    pub fn new(config: WaterConfig, n: usize, ticks: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let demands = match &config.demand_csv {
            Some(path) => read_demands(std::fs::File::open(path)?)?,
            None => {
                let per_household: Vec<Vec<f64>> = (0..n)
                    .map(|i| {
                        let mut rng = substream(seed, Stream::Schedule, i as u64);
                        let kind = config.profiles[i % config.profiles.len()];
                        let schedule = Schedule::generate(kind, ticks, &mut rng);
                        schedule
                            .activities()
                            .iter()
                            .map(|a| {
                                let base = config.demand_per_activity[a.index()];
                                if config.demand_noise > 0.0 {
                                    base * (1.0 + config.demand_noise * rng.gen_range(-1.0..=1.0))
                                } else {
                                    base
                                }
                            })
                            .collect()
                    })
                    .collect();
                (0..ticks)
                    .map(|t| per_household.iter().map(|d| d[t]).collect())
                    .collect()
            }
        };
        Self::with_demands(config, demands, ticks)
    }

    pub fn with_demands(config: WaterConfig, demands: Vec<Vec<f64>>, ticks: usize) -> Result<Self> {
        config.validate()?;
        if demands.len() < ticks {
            return Err(Error::Config(format!("demand trace shorter than {ticks} ticks")));
        }
        let n = demands.first().map_or(0, Vec::len);
        if n < 2 || demands.iter().any(|row| row.len() != n) {
            return Err(Error::Config("demand trace needs at least 2 households on every tick".into()));
        }
        if demands.iter().flatten().any(|d| !(*d >= 0.0)) {
            return Err(Error::Config("demands must be nonnegative".into()));
        }
        let tanks = (0..n)
            .map(|i| {
                let capacity = config.tank_capacity.unwrap_or_else(|| {
                    let mean = demands.iter().map(|row| row[i]).sum::<f64>() / demands.len() as f64;
                    2.0 * mean * TICKS_PER_DAY as f64
                });
                Tank {
                    level: config.initial_level.min(capacity),
                    capacity,
                }
            })
            .collect();
        Ok(WaterEnv {
            config,
            demands,
            tanks,
        })
    }

    pub fn demands(&self) -> &[Vec<f64>] {
        &self.demands
    }

    pub fn tanks(&self) -> &[Tank] {
        &self.tanks
    }

    fn row(&self, tick: usize) -> Result<&[f64]> {
        self.demands
            .get(tick)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::InvalidArgument(format!("tick {tick} beyond demand trace")))
    }
}

impl Environment for WaterEnv {
    fn app_type(&self) -> AppType {
        AppType::Water
    }

    fn n_humans(&self) -> usize {
        self.tanks.len()
    }

    fn observe(&mut self, tick: usize) -> Result<Observation> {
        let d = self.row(tick)?.to_vec();
        let resource = resource_at(&d, self.config.resource_factor);
        Ok(Observation {
            desired: d,
            resource: Some(resource),
            effects: None,
        })
    }

    fn apply(&mut self, tick: usize, action: &GlobalAction) -> Result<Outcome> {
        let GlobalAction::Allocation(supply) = action else {
            return Err(Error::InvalidArgument("water expects an allocation".into()));
        };
        check_len(self.tanks.len(), supply.len())?;
        let demands = self.row(tick)?.to_vec();
        let resource = resource_at(&demands, self.config.resource_factor);
        let total: f64 = supply.iter().sum();
        if supply.iter().any(|s| !(*s >= 0.0)) || (total - resource).abs() > 1e-9 * resource.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "allocation {supply:?} does not split the resource {resource}"
            )));
        }
        let mut out = Outcome {
            satisfied: Vec::with_capacity(supply.len()),
            app_value: Vec::with_capacity(supply.len()),
            app_score: Vec::with_capacity(supply.len()),
        };
        for ((tank, &s), &d) in self.tanks.iter_mut().zip(supply).zip(&demands) {
            let br = balance_rate(s, tank.level, d);
            *tank = tank_step(*tank, s, d).0;
            out.satisfied.push(br >= self.config.satisfied_br);
            out.app_value.push(br);
            out.app_score.push(balance_score(br));
        }
        Ok(out)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DemandRow {
    tick: usize,
    household: usize,
    gallons: f64,
}

pub fn write_demands<W: Write>(demands: &[Vec<f64>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (tick, row) in demands.iter().enumerate() {
        for (household, &gallons) in row.iter().enumerate() {
            w.serialize(DemandRow {
                tick,
                household,
                gallons,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads `tick,household,gallons` rows into `demands[tick][household]`.
pub fn read_demands<R: Read>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<Option<f64>>> = Vec::new();
    let mut n = 0;
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: DemandRow = row?;
        if row.tick >= out.len() {
            out.resize_with(row.tick + 1, Vec::new);
        }
        let r = &mut out[row.tick];
        if row.household >= r.len() {
            r.resize(row.household + 1, None);
        }
        r[row.household] = Some(row.gallons);
        n = n.max(row.household + 1);
    }
    out.into_iter()
        .enumerate()
        .map(|(t, mut r)| {
            r.resize(n, None);
            r.into_iter()
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| Error::Parse(format!("demand trace is missing households at tick {t}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resource_examples() {
        assert_eq!(resource_at(&[10.0, 20.0, 30.0], 1.5), 45.0);
        assert_eq!(resource_at(&[0.0, 0.0, 0.0], 1.5), 0.0);
        assert_eq!(resource_at(&[5.0, 5.0, 5.0], 1.5), 7.5);
    }

    #[test]
    fn tank_examples() {
        let t = Tank { level: 5.0, capacity: 100.0 };
        assert_eq!(tank_step(t, 3.0, 10.0), (Tank { level: 0.0, capacity: 100.0 }, 2.0));
        let t = Tank { level: 0.0, capacity: 100.0 };
        assert_eq!(tank_step(t, 10.0, 4.0), (Tank { level: 6.0, capacity: 100.0 }, 0.0));
        let t = Tank { level: 95.0, capacity: 100.0 };
        assert_eq!(tank_step(t, 10.0, 0.0).0.level, 100.0);
    }

    #[test]
    fn balance_rate_examples() {
        assert!((balance_rate(8.0, 0.0, 10.0) - 0.8).abs() < 1e-15);
        assert_eq!(balance_rate(10.0, 5.0, 10.0), 1.5);
        assert_eq!(balance_rate(0.0, 0.0, 10.0), 0.0);
        assert_eq!(balance_rate(0.0, 0.0, 0.0), 1.0);
        assert_eq!(balance_rate(100.0, 0.0, 1.0), BR_CEILING);
        assert_eq!(balance_score(0.0), -1.0);
        assert_eq!(balance_score(1.0), 1.0);
        assert_eq!(balance_score(1.7), 1.0);
    }

    #[test]
    fn equal_split_of_equal_demand_is_half_balanced() {
        let demands = vec![vec![6.0, 6.0, 6.0]; 2];
        let mut env = WaterEnv::with_demands(WaterConfig::default(), demands, 2).unwrap();
        let obs = env.observe(0).unwrap();
        let r = obs.resource.unwrap();
        let out = env.apply(0, &GlobalAction::Allocation(vec![r / 3.0; 3])).unwrap();
        assert_eq!(out.app_value, vec![0.5; 3]);
        assert_eq!(out.satisfied, vec![false; 3]);
        assert!(env.tanks().iter().all(|t| t.level == 0.0));
    }

    #[test]
    fn boundary_and_conservation() {
        let demands = vec![vec![10.0, 5.0]; 2];
        let mut env = WaterEnv::with_demands(WaterConfig::default(), demands, 2).unwrap();
        env.observe(0).unwrap();
        let out = env.apply(0, &GlobalAction::Allocation(vec![8.0, 7.0])).unwrap();
        assert_eq!(out.satisfied, vec![true, true]);
        assert_eq!(env.tanks()[1].level, 2.0);
        assert!(env.apply(1, &GlobalAction::Allocation(vec![8.0, 8.0])).is_err());
        assert!(env.apply(1, &GlobalAction::Setpoint(3.0)).is_err());
    }

    #[test]
    fn demand_csv_round_trip() {
        let env = WaterEnv::new(WaterConfig { demand_noise: 0.2, ..WaterConfig::default() }, 3, 50, 9).unwrap();
        let mut buf = Vec::new();
        write_demands(env.demands(), &mut buf).unwrap();
        assert!(buf.starts_with(b"tick,household,gallons\n"));
        assert_eq!(read_demands(buf.as_slice()).unwrap(), env.demands());
    }
}
