//! Occupant activity schedules.
//!
//! A tick is six simulated minutes, so a day is 240 ticks and a week 1680.
//! Schedules are generated up front so environments can replay, export and
//! import them.

use std::io::{Read, Write};
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

pub const TICKS_PER_DAY: usize = 240;
pub const TICKS_PER_WEEK: usize = 7 * TICKS_PER_DAY;
const TICKS_PER_HOUR: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    Sleeping,
    Relaxing,
    DomesticWork,
    WorkFromHome,
}

impl Activity {
    pub const ALL: [Activity; 4] = [
        Activity::Sleeping,
        Activity::Relaxing,
        Activity::DomesticWork,
        Activity::WorkFromHome,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Activity::Sleeping => "sleeping",
            Activity::Relaxing => "relaxing",
            Activity::DomesticWork => "domestic_work",
            Activity::WorkFromHome => "work_from_home",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for Activity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Activity::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown activity {s:?}")))
    }
}

/// How predictable a human's daily routine is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// The same weekly routine every week.
    Organized,
    /// An organized routine with some hours replaced at random.
    Intermediate,
    /// Random activities in random-length blocks.
    Random,
}

/// One human's activity per tick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    activities: Vec<Activity>,
}

/// Hour-by-hour template for a weekday and a weekend day.
fn routine(hour: usize, weekend: bool) -> Activity {
    use Activity::*;
    if weekend {
        match hour {
            0..=8 => Sleeping,
            9..=10 => DomesticWork,
            11..=13 => Relaxing,
            14..=15 => DomesticWork,
            16..=22 => Relaxing,
            _ => Sleeping,
        }
    } else {
        match hour {
            0..=6 => Sleeping,
            7 => DomesticWork,
            8..=11 => WorkFromHome,
            12 => DomesticWork,
            13..=16 => WorkFromHome,
            17..=18 => Relaxing,
            19 => DomesticWork,
            20..=22 => Relaxing,
            _ => Sleeping,
        }
    }
}

fn organized_at(tick: usize, shift: usize) -> Activity {
    let t = (tick + TICKS_PER_WEEK - shift) % TICKS_PER_WEEK;
    let day = t / TICKS_PER_DAY;
    let hour = (t % TICKS_PER_DAY) / TICKS_PER_HOUR;
    routine(hour, day >= 5)
}

fn random_activity(rng: &mut Rng) -> Activity {
    Activity::ALL[rng.gen_range(0..Activity::ALL.len())]
}

impl Schedule {
    pub fn new(activities: Vec<Activity>) -> Self {
        Schedule { activities }
    }

    /// Generates `ticks` activities. Organized routines are shifted by up to
    /// two hours per human so two organized humans are not identical.
    pub fn generate(kind: ProfileKind, ticks: usize, rng: &mut Rng) -> Self {
        let shift = rng.gen_range(0..=2 * TICKS_PER_HOUR);
        let activities = match kind {
            ProfileKind::Organized => (0..ticks).map(|t| organized_at(t, shift)).collect(),
            ProfileKind::Intermediate => {
                let mut out = Vec::with_capacity(ticks);
                while out.len() < ticks {
                    let t = out.len();
                    let block = TICKS_PER_HOUR.min(ticks - t);
                    if rng.gen_bool(0.3) {
                        let a = random_activity(rng);
                        out.extend(std::iter::repeat(a).take(block));
                    } else {
                        out.extend((t..t + block).map(|k| organized_at(k, shift)));
                    }
                }
                out
            }
            ProfileKind::Random => {
                let mut out = Vec::with_capacity(ticks);
                while out.len() < ticks {
                    let len = rng.gen_range(5..=30).min(ticks - out.len());
                    let a = random_activity(rng);
                    out.extend(std::iter::repeat(a).take(len));
                }
                out
            }
        };
        Schedule { activities }
    }

    pub fn len(&self) -> usize {
        self.activities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activities.is_empty()
    }

    pub fn activity_at(&self, tick: usize) -> Result<Activity> {
        self.activities.get(tick).copied().ok_or_else(|| {
            Error::InvalidArgument(format!(
                "tick {tick} beyond schedule of {} ticks",
                self.activities.len()
            ))
        })
    }

    pub fn activities(&self) -> &[Activity] {
        &self.activities
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ScheduleRow {
    tick: usize,
    human: usize,
    activity: String,
}

/// Writes schedules as `tick,human,activity` rows.
pub fn write_schedules<W: Write>(schedules: &[Schedule], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let ticks = schedules.iter().map(Schedule::len).max().unwrap_or(0);
    for tick in 0..ticks {
        for (human, s) in schedules.iter().enumerate() {
            if let Some(a) = s.activities.get(tick) {
                w.serialize(ScheduleRow {
                    tick,
                    human,
                    activity: a.as_str().to_string(),
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads `tick,human,activity` rows. Every human must have a contiguous
/// run of ticks starting at 0.
pub fn read_schedules<R: Read>(input: R) -> Result<Vec<Schedule>> {
    let mut per_human: Vec<Vec<(usize, Activity)>> = Vec::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: ScheduleRow = row?;
        if row.human >= per_human.len() {
            per_human.resize_with(row.human + 1, Vec::new);
        }
        per_human[row.human].push((row.tick, row.activity.parse()?));
    }
    per_human
        .into_iter()
        .enumerate()
        .map(|(h, mut rows)| {
            rows.sort_by_key(|r| r.0);
            if rows.iter().enumerate().any(|(k, r)| r.0 != k) {
                return Err(Error::Parse(format!(
                    "schedule for human {h} does not cover ticks 0..n contiguously"
                )));
            }
            Ok(Schedule::new(rows.into_iter().map(|r| r.1).collect()))
        })
        .collect()
}
