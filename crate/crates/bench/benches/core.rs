use criterion::{black_box, criterion_group, criterion_main, Criterion};
use fairo_core::env::{Environment, GlobalAction, HvacConfig, HvacEnv};
use fairo_core::harness::{run, ExperimentConfig};
use fairo_core::{AppType, Method, QNetwork, SatisfactionLedger, TrainConfig};

fn fairness_state(c: &mut Criterion) {
    let mut ledger = SatisfactionLedger::new(8, 0.01).unwrap();
    for k in 0..50 {
        let sat: Vec<bool> = (0..8).map(|i| (i + k) % 3 != 0).collect();
        ledger.update(&sat).unwrap();
    }
    c.bench_function("fairness_state_n8", |b| b.iter(|| black_box(&ledger).fairness_state()));
}

fn td_update(c: &mut Criterion) {
    let cfg = TrainConfig::default();
    let mut net = QNetwork::new(4, cfg.hidden, 7, false).unwrap();
    let s = [0.9, 0.95, 0.97, 1.0];
    let s2 = [0.91, 0.95, 0.96, 0.0];
    c.bench_function("td_update_4x32x3", |b| {
        b.iter(|| net.td_update(black_box(&s), 1, 0.3, black_box(&s2), &cfg).unwrap())
    });
}

fn hvac_step(c: &mut Criterion) {
    let mut env = HvacEnv::new(HvacConfig::default(), 3, 1_000_000, 1).unwrap();
    let mut tick = 0;
    c.bench_function("hvac_tick", |b| {
        b.iter(|| {
            env.observe(tick).unwrap();
            let out = env.apply(tick, &GlobalAction::Setpoint(70.0)).unwrap();
            tick += 1;
            out
        })
    });
}

fn short_run(c: &mut Criterion) {
    let mut cfg = ExperimentConfig::new(AppType::Hvac, Method::Fairo, 3);
    cfg.ticks = 2000;
    cfg.window = 500;
    let mut group = c.benchmark_group("run");
    group.sample_size(10);
    group.bench_function("fairo_hvac_2k", |b| b.iter(|| run(black_box(&cfg)).unwrap()));
    group.finish();
}

criterion_group!(benches, fairness_state, td_update, hvac_step, short_run);
criterion_main!(benches);
