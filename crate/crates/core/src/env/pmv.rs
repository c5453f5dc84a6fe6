//! Fanger's predicted mean vote (ISO 7730 steady-state heat balance).

use serde::{Deserialize, Serialize};

use super::activity::Activity;
use crate::error::{Error, Result};

pub fn fahrenheit_to_celsius(f: f64) -> f64 {
    (f - 32.0) / 1.8
}

/// Inputs to the comfort model that do not change within a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComfortParams {
    /// Metabolic rate in met, indexed by activity.
    pub met: [f64; 4],
    /// Clothing insulation in clo per activity. `None` fits each value so
    /// that the activity's desired setpoint is thermally neutral.
    pub clo: Option<[f64; 4]>,
    pub air_velocity: f64,
    pub relative_humidity: f64,
}

impl Default for ComfortParams {
    fn default() -> Self {
        ComfortParams {
            met: [0.8, 1.0, 2.0, 1.2],
            clo: None,
            air_velocity: 0.1,
            relative_humidity: 50.0,
        }
    }
}

/// Unclamped PMV. Temperatures in °C, air velocity in m/s, humidity in
/// percent; mean radiant temperature equals air temperature and external
/// work is zero.
pub fn pmv_raw(ta: f64, met: f64, clo: f64, vel: f64, rh: f64) -> f64 {
    let tr = ta;
    let pa = rh * 10.0 * (16.6536 - 4030.183 / (ta + 235.0)).exp();
    let icl = 0.155 * clo;
    let m = met * 58.15;
    let mw = m;
    let fcl = if icl <= 0.078 {
        1.0 + 1.29 * icl
    } else {
        1.05 + 0.645 * icl
    };
    let hcf = 12.1 * vel.sqrt();
    let taa = ta + 273.0;
    let tra = tr + 273.0;
    let tcla = taa + (35.5 - ta) / (3.5 * icl + 0.1);

    let p1 = icl * fcl;
    let p2 = p1 * 3.96;
    let p3 = p1 * 100.0;
    let p4 = p1 * taa;
    let p5 = 308.7 - 0.028 * mw + p2 * (tra / 100.0).powi(4);
    let mut xn = tcla / 100.0;
    let mut xf = tcla / 50.0;
    let mut hc = hcf;
    for _ in 0..150 {
        xf = (xf + xn) / 2.0;
        let hcn = 2.38 * (100.0 * xf - taa).abs().powf(0.25);
        hc = hcf.max(hcn);
        xn = (p5 + p4 * hc - p2 * xf.powi(4)) / (100.0 + p3 * hc);
        if (xn - xf).abs() <= 1.5e-4 {
            break;
        }
    }
    let tcl = 100.0 * xn - 273.0;

    let hl1 = 3.05e-3 * (5733.0 - 6.99 * mw - pa);
    let hl2 = if mw > 58.15 { 0.42 * (mw - 58.15) } else { 0.0 };
    let hl3 = 1.7e-5 * m * (5867.0 - pa);
    let hl4 = 0.0014 * m * (34.0 - ta);
    let hl5 = 3.96 * fcl * (xn.powi(4) - (tra / 100.0).powi(4));
    let hl6 = fcl * hc * (tcl - ta);
    let ts = 0.303 * (-0.036 * m).exp() + 0.028;
    ts * (mw - hl1 - hl2 - hl3 - hl4 - hl5 - hl6)
}

/// Comfort model with per-activity clothing resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Comfort {
    pub met: [f64; 4],
    pub clo: [f64; 4],
    pub air_velocity: f64,
    pub relative_humidity: f64,
}

impl Comfort {
    /// Resolves clothing values, fitting any that were not given, and checks
    /// that every activity is comfortable at its own setpoint.
    pub fn calibrate(params: &ComfortParams, setpoints_f: [f64; 4]) -> Result<Self> {
        let clo = match params.clo {
            Some(c) => c,
            None => {
                let mut c = [0.0; 4];
                for a in Activity::ALL {
                    c[a.index()] = fit_clo(
                        fahrenheit_to_celsius(setpoints_f[a.index()]),
                        params.met[a.index()],
                        params.air_velocity,
                        params.relative_humidity,
                    );
                }
                c
            }
        };
        let comfort = Comfort {
            met: params.met,
            clo,
            air_velocity: params.air_velocity,
            relative_humidity: params.relative_humidity,
        };
        for a in Activity::ALL {
            let p = comfort.pmv(setpoints_f[a.index()], a);
            if p.abs() > 0.5 {
                return Err(Error::Config(format!(
                    "comfort parameters give PMV {p:.3} for {} at its own setpoint",
                    a.as_str()
                )));
            }
        }
        Ok(comfort)
    }

    /// PMV clamped to `[-3, 3]` for an indoor temperature in °F.
    pub fn pmv(&self, indoor_f: f64, activity: Activity) -> f64 {
        let i = activity.index();
        pmv_raw(
            fahrenheit_to_celsius(indoor_f),
            self.met[i],
            self.clo[i],
            self.air_velocity,
            self.relative_humidity,
        )
        .clamp(-3.0, 3.0)
    }
}

/// Clothing insulation in `[0, 6]` clo that makes `ta` thermally neutral,
/// found by bisection (PMV rises with insulation).
fn fit_clo(ta: f64, met: f64, vel: f64, rh: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 6.0);
    if pmv_raw(ta, met, lo, vel, rh) >= 0.0 {
        return lo;
    }
    if pmv_raw(ta, met, hi, vel, rh) <= 0.0 {
        return hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if pmv_raw(ta, met, mid, vel, rh) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Comfort score: 1 inside `[-0.5, 0.5]`, falling linearly to -1 at `|PMV| = 3`.
pub fn comfort_score(pmv: f64) -> f64 {
    let a = pmv.abs();
    if a <= 0.5 {
        1.0
    } else {
        (1.0 - 2.0 * (a - 0.5) / 2.5).max(-1.0)
    }
}
