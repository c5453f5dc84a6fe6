use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::run::{run, RunSeries};
use crate::controller::{Method, Phase};
use crate::env::{format_num, AppType};
use crate::error::{Error, Result};
use crate::metrics::{
    avg_abs_pairwise_diff, coefficient_of_variation, fairiot_utility, gaussian_fit, jsd, odds_probs,
    opportunity_probs, Histogram, DEFAULT_BINS,
};

/// One `(metric, scope, subject, value)` line of a report. Scope is
/// `human`, `pair` or `group`; subject is a human index, `i-j`, or `all`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub metric: String,
    pub scope: &'static str,
    pub subject: String,
    pub value: f64,
}

impl MetricRow {
    fn human(metric: &str, h: usize, value: f64) -> Self {
        MetricRow {
            metric: metric.to_string(),
            scope: "human",
            subject: h.to_string(),
            value,
        }
    }

    fn pair(metric: &str, i: usize, j: usize, value: f64) -> Self {
        MetricRow {
            metric: metric.to_string(),
            scope: "pair",
            subject: format!("{i}-{j}"),
            value,
        }
    }

    fn group(metric: &str, value: f64) -> Self {
        MetricRow {
            metric: metric.to_string(),
            scope: "group",
            subject: "all".to_string(),
            value,
        }
    }
}

/// Looks up a metric by name and subject.
pub fn metric(rows: &[MetricRow], name: &str, subject: &str) -> Option<f64> {
    rows.iter()
        .find(|r| r.metric == name && r.subject == subject)
        .map(|r| r.value)
}

fn column<T: Copy>(rows: &[Vec<T>], h: usize) -> Vec<T> {
    rows.iter().map(|r| r[h]).collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Pairwise JSDs between per-human histograms and their average.
fn pairwise_jsd(rows: &mut Vec<MetricRow>, name: &str, samples: &[Vec<f64>], lo: f64, hi: f64) -> Result<()> {
    let hists: Vec<Histogram> = samples
        .iter()
        .map(|s| Histogram::from_samples(lo, hi, DEFAULT_BINS, s))
        .collect::<Result<_>>()?;
    let mut all = Vec::new();
    for i in 0..hists.len() {
        for j in i + 1..hists.len() {
            let d = jsd(&hists[i], &hists[j])?;
            rows.push(MetricRow::pair(name, i, j, d));
            all.push(d);
        }
    }
    rows.push(MetricRow::group(&format!("{name}_avg"), mean(&all)));
    Ok(())
}

fn fraction(xs: &[f64], pred: impl Fn(f64) -> bool) -> f64 {
    xs.iter().filter(|&&x| pred(x)).count() as f64 / xs.len() as f64
}

/// Evaluation metrics over the last `window` ticks (weight utilities use
/// the whole decision phase).
pub fn run_metrics(s: &RunSeries, window: usize) -> Result<Vec<MetricRow>> {
    let n = s.n_humans();
    let ticks = s.ticks();
    if ticks == 0 || n < 2 {
        return Err(Error::InvalidArgument("run has no data".into()));
    }
    let start = ticks.saturating_sub(window);
    let win = |xs: &[Vec<f64>]| -> Vec<Vec<f64>> { (0..n).map(|h| column(&xs[start..], h)).collect() };
    let mut rows = Vec::new();

    let l = &s.closeness[start..];
    let opp = opportunity_probs(l)?;
    let odds = odds_probs(l)?;
    for (h, p) in opp.iter().enumerate() {
        rows.push(MetricRow::human("opportunity_prob", h, *p));
    }
    rows.push(MetricRow::group("opportunity_diff", avg_abs_pairwise_diff(&opp)));
    for (h, p) in odds.iter().enumerate() {
        rows.push(MetricRow::human("odds_prob", h, *p));
    }
    rows.push(MetricRow::group("odds_diff", avg_abs_pairwise_diff(&odds)));

    let closeness = win(&s.closeness);
    for (h, c) in closeness.iter().enumerate() {
        rows.push(MetricRow::human("closeness_mean", h, mean(c)));
    }
    let min_l: Vec<f64> = l.iter().map(|r| r.iter().copied().fold(f64::INFINITY, f64::min)).collect();
    rows.push(MetricRow::group("min_closeness_mean", mean(&min_l)));

    let sat = win(&s.satisfaction);
    for (h, x) in sat.iter().enumerate() {
        let (mu, var) = if x.len() >= 2 { gaussian_fit(x)? } else { (x[0], 0.0) };
        rows.push(MetricRow::human("satisfaction_mu", h, mu));
        rows.push(MetricRow::human("satisfaction_sigma2", h, var));
    }
    pairwise_jsd(&mut rows, "satisfaction_jsd", &sat, 0.0, 1.0)?;

    for h in 0..n {
        let flags = column(&s.satisfied[start..], h);
        rows.push(MetricRow::human(
            "satisfied_fraction",
            h,
            flags.iter().filter(|b| **b).count() as f64 / flags.len() as f64,
        ));
    }
    for (h, p) in win(&s.performance).iter().enumerate() {
        rows.push(MetricRow::human("performance_mean", h, mean(p)));
    }

    let app = win(&s.app_value);
    match s.app {
        AppType::Hvac => {
            pairwise_jsd(&mut rows, "pmv_jsd", &app, -3.0, 3.0)?;
            let comfy: Vec<f64> = app.iter().map(|x| fraction(x, |p| p.abs() <= 0.5)).collect();
            for (h, c) in comfy.iter().enumerate() {
                rows.push(MetricRow::human("comfortable_fraction", h, *c));
            }
            rows.push(MetricRow::group("comfortable_fraction_mean", mean(&comfy)));
        }
        AppType::Water => {
            pairwise_jsd(&mut rows, "br_jsd", &app, 0.0, 2.0)?;
            let over: Vec<f64> = app.iter().map(|x| fraction(x, |br| br > 0.8)).collect();
            for (h, c) in over.iter().enumerate() {
                rows.push(MetricRow::human("br_over_80_fraction", h, *c));
            }
            rows.push(MetricRow::group("br_over_80_fraction_mean", mean(&over)));
        }
        AppType::Learning => {
            let pos: Vec<f64> = app.iter().map(|x| fraction(x, |le| le > 0.0)).collect();
            for (h, c) in pos.iter().enumerate() {
                rows.push(MetricRow::human("positive_le_fraction", h, *c));
            }
            rows.push(MetricRow::group("positive_le_fraction_mean", mean(&pos)));
            for (h, x) in app.iter().enumerate() {
                rows.push(MetricRow::human("le_mean", h, mean(x)));
            }
        }
    }

    // Utilities of each human's weight over the decision phase.
    let first = s.phases.iter().position(|p| *p == Phase::Decision).unwrap_or(0);
    let w = &s.weights[first..];
    if w.len() >= 2 {
        let t = w.len() - 1;
        let utilities: Vec<f64> = (0..n)
            .map(|h| fairiot_utility(&column(w, h), t))
            .collect::<Result<_>>()?;
        for (h, u) in utilities.iter().enumerate() {
            rows.push(MetricRow::human("fairiot_utility", h, *u));
        }
        rows.push(MetricRow::group("utility_cv", coefficient_of_variation(&utilities)?));
    }
    Ok(rows)
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricRow], mut out: W) -> Result<()> {
    writeln!(out, "metric,scope,subject,value")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.metric, r.scope, r.subject, format_num(r.value))?;
    }
    Ok(())
}

pub fn write_metrics_table<W: Write>(rows: &[MetricRow], mut out: W) -> Result<()> {
    writeln!(out, "{:<28} {:<6} {:<8} {:>12}", "metric", "scope", "subject", "value")?;
    for r in rows {
        writeln!(out, "{:<28} {:<6} {:<8} {:>12.6}", r.metric, r.scope, r.subject, r.value)?;
    }
    Ok(())
}

/// Metrics whose FAIRO-vs-baseline reduction `(base - fairo) / base` is reported.
/// For the fractions and closeness a negative reduction is an improvement.
pub fn headline_metrics(app: AppType) -> &'static [&'static str] {
    match app {
        AppType::Hvac => &[
            "opportunity_diff",
            "odds_diff",
            "satisfaction_jsd_avg",
            "pmv_jsd_avg",
            "min_closeness_mean",
            "utility_cv",
        ],
        AppType::Water => &[
            "opportunity_diff",
            "odds_diff",
            "satisfaction_jsd_avg",
            "br_over_80_fraction_mean",
            "min_closeness_mean",
            "utility_cv",
        ],
        AppType::Learning => &[
            "opportunity_diff",
            "odds_diff",
            "satisfaction_jsd_avg",
            "positive_le_fraction_mean",
            "min_closeness_mean",
            "utility_cv",
        ],
    }
}

pub fn reduction(base: f64, fairo: f64) -> f64 {
    if base == fairo {
        0.0
    } else {
        (base - fairo) / base
    }
}

/// A labelled row in a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub row: MetricRow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub app: AppType,
    /// Label of the run reductions are measured for.
    pub reference: String,
    pub rows: Vec<ComparisonRow>,
}

/// Compares runs of the same application and population. The first FAIRO
/// run (or the first run if none) is the reference; every other run gets
/// `reduction:<metric>` rows.
pub fn compare(runs: &[(String, RunSeries)], window: usize) -> Result<Comparison> {
    let Some((_, first)) = runs.first() else {
        return Err(Error::InvalidArgument("nothing to compare".into()));
    };
    for (label, s) in runs {
        if s.app != first.app || s.n_humans() != first.n_humans() {
            return Err(Error::Incompatible(format!(
                "{label} is a {} run with {} humans, expected {} with {}",
                s.app.as_str(),
                s.n_humans(),
                first.app.as_str(),
                first.n_humans()
            )));
        }
    }
    let metrics: Vec<Vec<MetricRow>> = runs.iter().map(|(_, s)| run_metrics(s, window)).collect::<Result<_>>()?;
    let reference = runs.iter().position(|(_, s)| s.method == Method::Fairo).unwrap_or(0);
    let mut rows = Vec::new();
    for ((label, _), m) in runs.iter().zip(&metrics) {
        rows.extend(m.iter().map(|r| ComparisonRow {
            label: label.clone(),
            row: r.clone(),
        }));
    }
    for (k, (label, _)) in runs.iter().enumerate() {
        if k == reference && runs.len() > 1 {
            continue;
        }
        for name in headline_metrics(first.app) {
            let (Some(base), Some(fairo)) = (metric(&metrics[k], name, "all"), metric(&metrics[reference], name, "all"))
            else {
                continue;
            };
            rows.push(ComparisonRow {
                label: label.clone(),
                row: MetricRow::group(&format!("reduction:{name}"), reduction(base, fairo)),
            });
        }
    }
    Ok(Comparison {
        app: first.app,
        reference: runs[reference].0.clone(),
        rows,
    })
}

impl Comparison {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "metric,method,scope,subject,value")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.row.metric,
                r.label,
                r.row.scope,
                r.row.subject,
                format_num(r.row.value)
            )?;
        }
        Ok(())
    }

    /// Group-level metrics as a method-by-metric table.
    pub fn write_table<W: Write>(&self, mut out: W) -> Result<()> {
        let mut labels: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !labels.contains(&r.label.as_str()) {
                labels.push(&r.label);
            }
        }
        let mut names: Vec<&str> = Vec::new();
        for r in self.rows.iter().filter(|r| r.row.scope == "group") {
            if !names.contains(&r.row.metric.as_str()) {
                names.push(&r.row.metric);
            }
        }
        write!(out, "{:<38}", "metric")?;
        for l in &labels {
            write!(out, " {:>16}", l)?;
        }
        writeln!(out)?;
        for name in names {
            write!(out, "{name:<38}")?;
            for l in &labels {
                let v = self
                    .rows
                    .iter()
                    .find(|r| r.label == *l && r.row.metric == name && r.row.scope == "group")
                    .map(|r| format!("{:.4}", r.row.value))
                    .unwrap_or_else(|| "-".to_string());
                write!(out, " {v:>16}")?;
            }
            writeln!(out)?;
        }
        writeln!(out, "reductions are relative to {}", self.reference)?;
        Ok(())
    }
}

/// Mean, min and max of one comparison value across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub label: String,
    pub metric: String,
    pub scope: &'static str,
    pub subject: String,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub per_seed: Vec<Comparison>,
    pub aggregate: Vec<AggregateRow>,
}

/// Runs every method for every seed (in parallel), compares the methods per
/// seed and aggregates each comparison value across seeds. Run directories
/// are written under `out/<method>/seed-<s>` when `out` is given.
pub fn sweep(template: &ExperimentConfig, methods: &[Method], seeds: &[u64], out: Option<&Path>) -> Result<SweepReport> {
    if seeds.is_empty() || methods.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one seed and method".into()));
    }
    let jobs: Vec<(u64, Method)> = seeds.iter().flat_map(|&s| methods.iter().map(move |&m| (s, m))).collect();
    let series: Vec<RunSeries> = jobs
        .par_iter()
        .map(|&(seed, method)| {
            let cfg = ExperimentConfig {
                seed,
                method,
                ..template.clone()
            };
            let artifact = run(&cfg)?;
            if let Some(root) = out {
                artifact.write_dir(&root.join(method.as_str()).join(format!("seed-{seed}")), None)?;
            }
            Ok(artifact.series())
        })
        .collect::<Result<_>>()?;
    let mut per_seed = Vec::with_capacity(seeds.len());
    for (k, _) in seeds.iter().enumerate() {
        let runs: Vec<(String, RunSeries)> = methods
            .iter()
            .enumerate()
            .map(|(j, m)| (m.as_str().to_string(), series[k * methods.len() + j].clone()))
            .collect();
        per_seed.push(compare(&runs, template.window)?);
    }
    let mut acc: BTreeMap<(String, String, String), (&'static str, Vec<f64>)> = BTreeMap::new();
    let mut order = Vec::new();
    for c in &per_seed {
        for r in &c.rows {
            let key = (r.label.clone(), r.row.metric.clone(), r.row.subject.clone());
            let entry = acc.entry(key.clone()).or_insert_with(|| {
                order.push(key);
                (r.row.scope, Vec::new())
            });
            entry.1.push(r.row.value);
        }
    }
    let aggregate = order
        .into_iter()
        .map(|key| {
            let (scope, vals) = &acc[&key];
            AggregateRow {
                label: key.0.clone(),
                metric: key.1.clone(),
                scope,
                subject: key.2.clone(),
                mean: mean(vals),
                min: vals.iter().copied().fold(f64::INFINITY, f64::min),
                max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                count: vals.len(),
            }
        })
        .collect();
    Ok(SweepReport {
        seeds: seeds.to_vec(),
        methods: methods.to_vec(),
        per_seed,
        aggregate,
    })
}

impl SweepReport {
    pub fn write_aggregate_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "metric,method,scope,subject,mean,min,max,count")?;
        for r in &self.aggregate {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.metric,
                r.label,
                r.scope,
                r.subject,
                format_num(r.mean),
                format_num(r.min),
                format_num(r.max),
                r.count
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_formula() {
        assert!((reduction(0.2, 0.05) - 0.75).abs() < 1e-15);
        assert_eq!(reduction(0.0, 0.0), 0.0);
        assert_eq!(reduction(0.3, 0.3), 0.0);
        assert!((reduction(0.254, 0.535) + 1.106).abs() < 1e-3);
    }
}
