use approx::assert_abs_diff_eq;
use fairo_core::controller::{Method, Phase};
use fairo_core::env::AppType;
use fairo_core::harness::{compare, load_run_dir, metric, run, run_metrics, sweep, ExperimentConfig};
use fairo_core::Error;

fn cfg(app: AppType, method: Method, ticks: usize, warmup: usize) -> ExperimentConfig {
    ExperimentConfig {
        ticks,
        warmup,
        window: 200,
        ..ExperimentConfig::new(app, method, 5)
    }
}

#[test]
fn warmup_then_decisions() {
    let a = run(&cfg(AppType::Hvac, Method::Fairo, 1300, 1200)).unwrap();
    let s = a.series();
    assert_eq!(s.ticks(), 1300);
    assert_eq!(s.phases.iter().filter(|p| **p == Phase::Decision).count(), 100);
    assert!(s.phases[..1200].iter().all(|p| *p == Phase::Warmup));
    // Weights reset to uniform when decisions start.
    for (i, r) in a.records[1200..].iter().take(1).enumerate() {
        assert!(r.active_option.is_some(), "tick {}", 1200 + i);
        let moved = r.weights.iter().filter(|w| (**w - 1.0 / 3.0).abs() > 1e-12).count();
        assert!(moved == 0 || moved == 3);
    }
}

#[test]
fn invalid_combination_is_a_config_error() {
    let c = cfg(AppType::Hvac, Method::WeightedRr, 300, 100);
    assert!(matches!(run(&c), Err(Error::Config(_))));
    let c = cfg(AppType::Learning, Method::WeightedAverage, 300, 100);
    assert!(matches!(run(&c), Err(Error::Config(_))));
}

#[test]
fn self_comparison_has_zero_reductions() {
    let s = run(&cfg(AppType::Water, Method::Fairo, 600, 200)).unwrap().series();
    let c = compare(&[("a".into(), s.clone()), ("b".into(), s)], 200).unwrap();
    let red: Vec<f64> = c.rows.iter().filter(|r| r.row.metric.starts_with("reduction:")).map(|r| r.row.value).collect();
    assert_eq!(red.len(), 6);
    assert!(red.iter().all(|x| *x == 0.0));
}

#[test]
fn three_humans_give_three_jsd_pairs() {
    let s = run(&cfg(AppType::Hvac, Method::Average, 600, 200)).unwrap().series();
    let rows = run_metrics(&s, 200).unwrap();
    let pairs: Vec<&str> = rows
        .iter()
        .filter(|r| r.metric == "satisfaction_jsd" && r.scope == "pair")
        .map(|r| r.subject.as_str())
        .collect();
    assert_eq!(pairs, vec!["0-1", "0-2", "1-2"]);
    let pair_mean = rows.iter().filter(|r| r.metric == "satisfaction_jsd").map(|r| r.value).sum::<f64>() / 3.0;
    assert_abs_diff_eq!(metric(&rows, "satisfaction_jsd_avg", "all").unwrap(), pair_mean, epsilon = 1e-15);
}

#[test]
fn run_directory_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    for app in [AppType::Hvac, AppType::Water, AppType::Learning] {
        let a = run(&cfg(app, Method::Fairo, 500, 100)).unwrap();
        let dir = tmp.path().join(app.as_str());
        a.write_dir(&dir, None).unwrap();
        let (back, series) = load_run_dir(&dir).unwrap();
        assert_eq!(back, a.config);
        let orig = a.series();
        assert_eq!(series.phases, orig.phases);
        assert_eq!(series.satisfied, orig.satisfied);
        // CSV numbers are written shortest-round-trip, so values come back exactly.
        assert_eq!(series.closeness, orig.closeness);
        assert_eq!(series.weights, orig.weights);
        assert_eq!(run_metrics(&series, 200).unwrap(), run_metrics(&orig, 200).unwrap());
    }
}

#[test]
fn sweep_aggregates_per_seed_values() {
    let template = cfg(AppType::Water, Method::Fairo, 500, 100);
    let methods = [Method::Fairo, Method::WeightedAverage, Method::RoundRobin];
    let rep = sweep(&template, &methods, &[1, 2, 3], None).unwrap();
    assert_eq!(rep.per_seed.len(), 3);
    for agg in &rep.aggregate {
        let vals: Vec<f64> = rep
            .per_seed
            .iter()
            .filter_map(|c| {
                c.rows
                    .iter()
                    .find(|r| r.label == agg.label && r.row.metric == agg.metric && r.row.subject == agg.subject)
                    .map(|r| r.row.value)
            })
            .collect();
        assert_eq!(vals.len(), agg.count);
        assert_abs_diff_eq!(agg.mean, vals.iter().sum::<f64>() / vals.len() as f64, epsilon = 1e-12);
        assert_eq!(agg.min, vals.iter().copied().fold(f64::INFINITY, f64::min));
        assert_eq!(agg.max, vals.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
}

#[test]
fn single_seed_sweep_equals_the_run() {
    let template = cfg(AppType::Learning, Method::Fairo, 500, 100);
    let rep = sweep(&template, &[Method::Fairo], &[9], None).unwrap();
    let direct = run_metrics(&run(&ExperimentConfig { seed: 9, ..template }).unwrap().series(), 200).unwrap();
    for row in &direct {
        let agg = rep
            .aggregate
            .iter()
            .find(|a| a.metric == row.metric && a.subject == row.subject)
            .unwrap();
        assert_eq!((agg.mean, agg.min, agg.max, agg.count), (row.value, row.value, row.value, 1));
    }
}

#[test]
fn mismatched_runs_do_not_compare() {
    let a = run(&cfg(AppType::Hvac, Method::Fairo, 400, 100)).unwrap().series();
    let b = run(&cfg(AppType::Water, Method::Fairo, 400, 100)).unwrap().series();
    assert!(matches!(compare(&[("a".into(), a), ("b".into(), b)], 100), Err(Error::Incompatible(_))));
}
