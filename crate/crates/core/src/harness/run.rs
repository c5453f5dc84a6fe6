use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::report::{run_metrics, write_metrics_csv, write_metrics_table};
use crate::controller::{Baseline, Direction, FairoAgent, Method, MonoDqn, MonoInput, Phase, Policy};
use crate::env::{
    format_num, performance, AppType, Environment, GlobalAction, HvacEnv, LearnerAction, LearningEnv, WaterEnv,
};
use crate::error::{Error, Result};
use crate::fairness::SatisfactionLedger;
use crate::metrics::moving_average;

pub const TRACE_HEADER: &str = "tick,phase,human,desired,global_action,weight,L,satisfied,perf,active_option,dqn_action";
pub const SIGNALS_HEADER: &str = "tick,human,satisfaction,app_value";

/// Everything that happened on one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub tick: usize,
    pub phase: Phase,
    pub desired: Vec<f64>,
    pub action: GlobalAction,
    pub weights: Vec<f64>,
    /// Closeness after the ledger update.
    pub closeness: Vec<f64>,
    pub satisfied: Vec<bool>,
    pub performance: Vec<f64>,
    pub active_option: Option<usize>,
    pub dqn_action: Option<Direction>,
    /// `v/(u+v)` after the ledger update.
    pub satisfaction: Vec<f64>,
    pub app_value: Vec<f64>,
}

/// Per-tick, per-human series used by every evaluation metric. Built from an
/// in-memory run or read back from a run directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSeries {
    pub app: AppType,
    pub method: Method,
    pub phases: Vec<Phase>,
    pub closeness: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
    pub satisfied: Vec<Vec<bool>>,
    pub performance: Vec<Vec<f64>>,
    pub satisfaction: Vec<Vec<f64>>,
    pub app_value: Vec<Vec<f64>>,
}

impl RunSeries {
    pub fn n_humans(&self) -> usize {
        self.closeness.first().map_or(0, Vec::len)
    }

    pub fn ticks(&self) -> usize {
        self.phases.len()
    }
}

#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub config: ExperimentConfig,
    pub records: Vec<TickRecord>,
}

pub fn build_env(cfg: &ExperimentConfig) -> Result<Box<dyn Environment>> {
    let env: Box<dyn Environment> = match cfg.app_type {
        AppType::Hvac => Box::new(HvacEnv::new(cfg.hvac.clone(), cfg.n_humans, cfg.ticks, cfg.seed)?),
        AppType::Water => Box::new(WaterEnv::new(cfg.water.clone(), cfg.n_humans, cfg.ticks, cfg.seed)?),
        AppType::Learning => Box::new(LearningEnv::new(cfg.learning.clone(), cfg.n_humans, cfg.seed)?),
    };
    if env.n_humans() != cfg.n_humans {
        return Err(Error::Config(format!(
            "environment has {} humans but n_humans is {}",
            env.n_humans(),
            cfg.n_humans
        )));
    }
    Ok(env)
}

pub fn build_policy(cfg: &ExperimentConfig) -> Result<Box<dyn Policy>> {
    let n = cfg.n_humans;
    Ok(match cfg.method {
        Method::Fairo => Box::new(FairoAgent::new(cfg.app_type, n, cfg.agent_config(), cfg.seed)?),
        Method::MonoDqn3in => Box::new(MonoDqn::new(cfg.app_type, n, MonoInput::Closeness, cfg.agent_config(), cfg.seed)?),
        Method::MonoDqn4in => Box::new(MonoDqn::new(
            cfg.app_type,
            n,
            MonoInput::ClosenessAndIndex,
            cfg.agent_config(),
            cfg.seed,
        )?),
        m => Box::new(Baseline::new(m, cfg.app_type, cfg.warmup)?),
    })
}

fn check_finite(tick: usize, what: &str, xs: &[f64]) -> Result<()> {
    match xs.iter().find(|x| !x.is_finite()) {
        Some(x) => Err(Error::NonFinite {
            tick,
            what: format!("{what} = {x}"),
        }),
        None => Ok(()),
    }
}

/// Runs warmup and then the configured method for every tick.
pub fn run(cfg: &ExperimentConfig) -> Result<RunArtifact> {
    cfg.validate()?;
    let mut env = build_env(cfg)?;
    let mut policy = build_policy(cfg)?;
    let mut ledger = SatisfactionLedger::new(cfg.n_humans, cfg.delta)?;
    let mut records = Vec::with_capacity(cfg.ticks);
    for tick in 0..cfg.ticks {
        let obs = env.observe(tick)?;
        let decision = policy.decide(tick, &ledger, &obs)?;
        if let GlobalAction::Setpoint(x) = decision.action {
            check_finite(tick, "global action", &[x])?;
        }
        let outcome = env.apply(tick, &decision.action)?;
        check_finite(tick, "application value", &outcome.app_value)?;
        ledger.update(&outcome.satisfied)?;
        let satisfaction = ledger.satisfaction();
        let perf: Vec<f64> = satisfaction
            .iter()
            .zip(&outcome.app_score)
            .map(|(s, a)| performance(*s, *a))
            .collect();
        check_finite(tick, "performance", &perf)?;
        policy.learn(tick, &ledger, &perf)?;
        records.push(TickRecord {
            tick,
            phase: decision.phase,
            desired: obs.desired,
            action: decision.action,
            weights: decision.weights,
            closeness: ledger.fairness_state().closeness,
            satisfied: outcome.satisfied,
            performance: perf,
            active_option: decision.active_option,
            dqn_action: decision.dqn_action,
            satisfaction,
            app_value: outcome.app_value,
        });
    }
    Ok(RunArtifact {
        config: cfg.clone(),
        records,
    })
}

fn format_desired(app: AppType, x: f64) -> String {
    match app {
        AppType::Learning => LearnerAction::from_index(x as usize)
            .map(|a| a.as_str().to_string())
            .unwrap_or_else(|_| format_num(x)),
        _ => format_num(x),
    }
}

fn format_action(app: AppType, action: &GlobalAction, human: usize) -> String {
    match action {
        GlobalAction::Setpoint(x) => format_num(*x),
        GlobalAction::Allocation(s) => format_num(s[human]),
        GlobalAction::Categorical(a) => format_desired(app, *a as f64),
    }
}

fn bit(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

#[derive(Serialize, Deserialize)]
struct ConfigEcho {
    config: ExperimentConfig,
    provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct Provenance {
    version: String,
    config_sha256: String,
}

impl RunArtifact {
    pub fn series(&self) -> RunSeries {
        let r = &self.records;
        RunSeries {
            app: self.config.app_type,
            method: self.config.method,
            phases: r.iter().map(|x| x.phase).collect(),
            closeness: r.iter().map(|x| x.closeness.clone()).collect(),
            weights: r.iter().map(|x| x.weights.clone()).collect(),
            satisfied: r.iter().map(|x| x.satisfied.clone()).collect(),
            performance: r.iter().map(|x| x.performance.clone()).collect(),
            satisfaction: r.iter().map(|x| x.satisfaction.clone()).collect(),
            app_value: r.iter().map(|x| x.app_value.clone()).collect(),
        }
    }

    pub fn write_trace<W: Write>(&self, mut out: W) -> Result<()> {
        let app = self.config.app_type;
        writeln!(out, "{TRACE_HEADER}")?;
        for r in &self.records {
            for h in 0..r.desired.len() {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    r.tick,
                    r.phase.as_str(),
                    h,
                    format_desired(app, r.desired[h]),
                    format_action(app, &r.action, h),
                    format_num(r.weights[h]),
                    format_num(r.closeness[h]),
                    bit(r.satisfied[h]),
                    format_num(r.performance[h]),
                    r.active_option.map(|i| i.to_string()).unwrap_or_default(),
                    r.dqn_action.map(Direction::as_str).unwrap_or_default(),
                )?;
            }
        }
        Ok(())
    }

    pub fn write_signals<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{SIGNALS_HEADER}")?;
        for r in &self.records {
            for h in 0..r.satisfaction.len() {
                writeln!(
                    out,
                    "{},{},{},{}",
                    r.tick,
                    h,
                    format_num(r.satisfaction[h]),
                    format_num(r.app_value[h])
                )?;
            }
        }
        Ok(())
    }

    /// Trailing-mean curves of closeness, satisfaction and weight per human.
    pub fn write_curves<W: Write>(&self, mut out: W, width: usize) -> Result<()> {
        let series = self.series();
        let n = series.n_humans();
        let col = |xs: &[Vec<f64>], h: usize| moving_average(&xs.iter().map(|r| r[h]).collect::<Vec<_>>(), width);
        let cols: Vec<[Vec<f64>; 3]> = (0..n)
            .map(|h| [col(&series.closeness, h), col(&series.satisfaction, h), col(&series.weights, h)])
            .collect();
        writeln!(out, "tick,human,L,satisfaction,weight")?;
        for t in 0..series.ticks() {
            for (h, c) in cols.iter().enumerate() {
                writeln!(out, "{t},{h},{},{},{}", format_num(c[0][t]), format_num(c[1][t]), format_num(c[2][t]))?;
            }
        }
        Ok(())
    }

    pub fn config_echo(&self) -> String {
        let echo = ConfigEcho {
            config: self.config.clone(),
            provenance: Provenance {
                version: env!("CARGO_PKG_VERSION").to_string(),
                config_sha256: self.config.provenance_hash(),
            },
        };
        serde_json::to_string_pretty(&echo).expect("config serializes") + "\n"
    }

    /// Writes `trace.csv`, `signals.csv`, `metrics.csv`, `metrics.txt`,
    /// `config.json` and, when `smooth` is given, `curves.csv`.
    pub fn write_dir(&self, dir: &Path, smooth: Option<usize>) -> Result<()> {
        fs::create_dir_all(dir)?;
        let file = |name: &str| -> Result<std::io::BufWriter<fs::File>> {
            Ok(std::io::BufWriter::new(fs::File::create(dir.join(name))?))
        };
        self.write_trace(file("trace.csv")?)?;
        self.write_signals(file("signals.csv")?)?;
        let rows = run_metrics(&self.series(), self.config.window)?;
        write_metrics_csv(&rows, file("metrics.csv")?)?;
        write_metrics_table(&rows, file("metrics.txt")?)?;
        fs::write(dir.join("config.json"), self.config_echo())?;
        if let Some(w) = smooth {
            self.write_curves(file("curves.csv")?, w)?;
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct TraceRow {
    tick: usize,
    phase: String,
    human: usize,
    weight: f64,
    #[serde(rename = "L")]
    l: f64,
    satisfied: u8,
    perf: f64,
}

#[derive(Debug, Deserialize)]
struct SignalRow {
    tick: usize,
    human: usize,
    satisfaction: f64,
    app_value: f64,
}

/// Reads the config echo and series back from a run directory.
pub fn load_run_dir(dir: &Path) -> Result<(ExperimentConfig, RunSeries)> {
    let echo: ConfigEcho = serde_json::from_str(&fs::read_to_string(dir.join("config.json"))?)?;
    let cfg = echo.config;
    let n = cfg.n_humans;
    let ticks = cfg.ticks;
    let mut s = RunSeries {
        app: cfg.app_type,
        method: cfg.method,
        phases: vec![Phase::Warmup; ticks],
        closeness: vec![vec![0.0; n]; ticks],
        weights: vec![vec![0.0; n]; ticks],
        satisfied: vec![vec![false; n]; ticks],
        performance: vec![vec![0.0; n]; ticks],
        satisfaction: vec![vec![0.0; n]; ticks],
        app_value: vec![vec![0.0; n]; ticks],
    };
    let mut seen = 0usize;
    let malformed = |what: &str| Error::Parse(format!("{}: {what}", dir.display()));
    for row in csv::Reader::from_path(dir.join("trace.csv"))?.deserialize() {
        let row: TraceRow = row?;
        if row.tick >= ticks || row.human >= n {
            return Err(malformed("trace row outside the configured run"));
        }
        s.phases[row.tick] = match row.phase.as_str() {
            "warmup" => Phase::Warmup,
            "decision" => Phase::Decision,
            other => return Err(malformed(&format!("unknown phase {other:?}"))),
        };
        s.weights[row.tick][row.human] = row.weight;
        s.closeness[row.tick][row.human] = row.l;
        s.satisfied[row.tick][row.human] = row.satisfied == 1;
        s.performance[row.tick][row.human] = row.perf;
        seen += 1;
    }
    for row in csv::Reader::from_path(dir.join("signals.csv"))?.deserialize() {
        let row: SignalRow = row?;
        if row.tick >= ticks || row.human >= n {
            return Err(malformed("signal row outside the configured run"));
        }
        s.satisfaction[row.tick][row.human] = row.satisfaction;
        s.app_value[row.tick][row.human] = row.app_value;
        seen += 1;
    }
    if seen != 2 * ticks * n {
        return Err(malformed("trace or signals file is incomplete"));
    }
    Ok((cfg, s))
}
