//! Brute-force reference implementations and randomized checks shared by
//! the oracle, property and acceptance suites.

#![allow(dead_code)]

use fairo_core::controller::{
    baseline_action, global_action_type1, global_action_type3, global_allocation_type2, option_reward, Direction,
    Method, WeightVector,
};
use fairo_core::env::learning::{learning_experience, ValueMap, N_STATES};
use fairo_core::env::water::balance_rate;
use fairo_core::env::{AppType, GlobalAction, Observation};
use fairo_core::fairness::{fairness_reward_term, FairnessState, SatisfactionLedger, SatisfactionRecord};
use fairo_core::metrics::{
    coefficient_of_variation, fairiot_utility, gaussian_fit, jsd, odds_probs, opportunity_probs, Histogram,
};
use fairo_core::qnet::{QNetwork, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TOL: f64 = 1e-9;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_records(r: &mut ChaCha8Rng, n: usize) -> Vec<SatisfactionRecord> {
    (0..n)
        .map(|_| {
            let theta = r.gen_range(0.0..std::f64::consts::FRAC_PI_2);
            SatisfactionRecord::new(theta.cos(), theta.sin()).unwrap()
        })
        .collect()
}

/// Closeness from record angles: `cos(theta_i - theta_j)` averaged over the others.
pub fn oracle_closeness(records: &[SatisfactionRecord]) -> Vec<f64> {
    let angles: Vec<f64> = records.iter().map(|r| r.v.atan2(r.u)).collect();
    let n = angles.len();
    (0..n)
        .map(|i| {
            let mut total = 0.0;
            for j in 0..n {
                if j != i {
                    total += (angles[i] - angles[j]).cos();
                }
            }
            total / (n - 1) as f64
        })
        .collect()
}

pub fn oracle_update(rec: SatisfactionRecord, satisfied: bool, delta: f64) -> (f64, f64) {
    let (u, v) = if satisfied { (rec.u, rec.v + delta) } else { (rec.u + delta, rec.v) };
    let len = (u * u + v * v).sqrt();
    (u / len, v / len)
}

/// Water-filling by bisection on the scale `s` in `max(floor, s * x)`.
pub fn oracle_adjust(w: &[f64], i: usize, dir: Direction, delta_w: f64, floor: f64) -> Vec<f64> {
    if dir == Direction::Hold {
        return w.to_vec();
    }
    let mut x = w.to_vec();
    x[i] = (x[i] + dir.sign() * delta_w).clamp(floor, 1.0);
    let total = |s: f64| x.iter().map(|xk| (s * xk).max(floor)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, 1e6);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    x.iter().map(|xk| (s * xk).max(floor)).collect()
}

pub fn oracle_staircase(l_prev: f64, l_cur: f64) -> f64 {
    const STEPS: [(f64, f64); 4] = [(0.001, 0.0), (0.005, 0.25), (0.01, 0.5), (0.015, 0.75)];
    let d = l_cur - l_prev;
    let mag = STEPS.iter().find(|(edge, _)| d.abs() <= *edge).map_or(1.0, |(_, z)| *z);
    let z = if d == 0.0 { 0.0 } else { d.signum() * mag };
    (2.0 * l_cur - 1.0 + z).max(-1.0).min(1.0)
}

/// JSD as the entropy of the mixture minus the mean entropy, in nats then bits.
pub fn oracle_jsd(a: &[f64], b: &[f64], eps: f64) -> f64 {
    let norm = |h: &[f64]| -> Vec<f64> {
        let t: f64 = h.iter().map(|c| c + eps).sum();
        h.iter().map(|c| (c + eps) / t).collect()
    };
    let (p, q) = (norm(a), norm(b));
    let h = |d: &[f64]| -> f64 { -d.iter().filter(|x| **x > 0.0).map(|x| x * x.ln()).sum::<f64>() };
    let m: Vec<f64> = p.iter().zip(&q).map(|(x, y)| 0.5 * (x + y)).collect();
    ((h(&m) - 0.5 * (h(&p) + h(&q))) / std::f64::consts::LN_2).clamp(0.0, 1.0)
}

/// Welford's running mean and population variance.
pub fn oracle_gaussian(xs: &[f64]) -> (f64, f64) {
    let (mut mean, mut m2) = (0.0, 0.0);
    for (k, &x) in xs.iter().enumerate() {
        let d = x - mean;
        mean += d / (k + 1) as f64;
        m2 += d * (x - mean);
    }
    (mean, m2 / xs.len() as f64)
}

pub fn oracle_utility(w: &[f64], t: usize) -> f64 {
    let mut acc = 0.0;
    for j in (0..=t).rev() {
        acc += w[j] * j as f64;
    }
    acc / (t * t) as f64
}

pub fn oracle_cv(u: &[f64]) -> f64 {
    let n = u.len() as f64;
    let mean = u.iter().sum::<f64>() / n;
    let sample_var = u.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    sample_var.sqrt() / mean.abs()
}

pub fn oracle_tie_split(trace: &[Vec<f64>], want_max: bool) -> Vec<f64> {
    let n = trace[0].len();
    let mut out = vec![0.0; n];
    for row in trace {
        let mut sorted = row.clone();
        sorted.sort_by(f64::total_cmp);
        let best = if want_max { sorted[n - 1] } else { sorted[0] };
        let winners: Vec<usize> = (0..n).filter(|&i| row[i] == best).collect();
        for i in &winners {
            out[*i] += 1.0 / winners.len() as f64 / trace.len() as f64;
        }
    }
    out
}

fn max_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_weights(r: &mut ChaCha8Rng, n: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| floor + (1.0 - n as f64 * floor) * x / total).collect()
}

/// Runs one formula family against its oracle on `instances` random inputs
/// and returns the largest absolute disagreement.
pub fn oracle_suite(instances: usize, seed: u64) -> Vec<(&'static str, f64)> {
    let mut r = rng(seed);
    let mut worst: Vec<(&'static str, f64)> = Vec::new();
    let mut record = |name: &'static str, e: f64| match worst.iter_mut().find(|(k, _)| *k == name) {
        Some((_, w)) => *w = w.max(e),
        None => worst.push((name, e)),
    };
    for _ in 0..instances {
        let n = r.gen_range(2..9);

        let recs = random_records(&mut r, n);
        let ledger = SatisfactionLedger::from_records(recs.clone(), 0.01).unwrap();
        record("fairness_state", max_err(&ledger.fairness_state().closeness, &oracle_closeness(&recs)));

        let sat: Vec<bool> = (0..n).map(|_| r.gen_bool(0.5)).collect();
        let delta = r.gen_range(0.001..0.2);
        let mut updated = SatisfactionLedger::from_records(recs.clone(), delta).unwrap();
        updated.update(&sat).unwrap();
        for (k, rec) in updated.records().iter().enumerate() {
            let (u, v) = oracle_update(ledger.records()[k], sat[k], delta);
            record("update_ledger", (rec.u - u).abs().max((rec.v - v).abs()));
        }

        let floor = [0.0, 0.01, 0.05][r.gen_range(0..3)];
        let w0 = random_weights(&mut r, n, floor);
        let i = r.gen_range(0..n);
        let dir = Direction::from_index(r.gen_range(0..3));
        let delta_w = r.gen_range(0.001..0.6);
        let mut wv = WeightVector::from_weights(w0.clone(), floor).unwrap();
        wv.adjust(i, dir, delta_w);
        record("weight_adjust", max_err(wv.as_slice(), &oracle_adjust(&w0, i, dir, delta_w, floor)));

        let d: Vec<f64> = (0..n).map(|_| r.gen_range(50.0..90.0)).collect();
        let dot: f64 = (0..n).rev().map(|k| w0[k] * d[k]).sum();
        record("global_type1", (global_action_type1(&w0, &d).unwrap() - dot).abs());
        let res = r.gen_range(0.0..50.0);
        let alloc = global_allocation_type2(&w0, res).unwrap();
        let expect: Vec<f64> = w0.iter().map(|w| res * w).collect();
        record("global_type2", max_err(&alloc, &expect));
        let k: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..2.0)).collect();
        let scores: Vec<f64> = w0.iter().zip(&k).map(|(a, b)| a * b).collect();
        let best = (0..n).fold(0, |b, j| if scores[j] > scores[b] { j } else { b });
        record("global_type3", (global_action_type3(&w0, &k).unwrap() != best) as u8 as f64);

        let zeta = r.gen_range(0.0..=1.0);
        let (f, p) = (r.gen_range(-1.0..=1.0), r.gen_range(-1.0..=1.0));
        record("option_reward", (option_reward(zeta, f, p).unwrap() - (zeta * f + p - zeta * p)).abs());

        let l_prev = r.gen_range(0.9..1.0);
        let l_cur = (l_prev + r.gen_range(-0.03..0.03f64)).min(1.0);
        record("fairness_reward_term", (fairness_reward_term(l_prev, l_cur) - oracle_staircase(l_prev, l_cur)).abs());

        let (s, res_w, dem) = (r.gen_range(0.0..10.0), r.gen_range(0.0..10.0), r.gen_range(0.01..10.0));
        let ratio: f64 = (s + res_w) / dem;
        record("balance_rate", (balance_rate(s, res_w, dem) - if ratio > 2.0 { 2.0 } else { ratio }).abs());

        let mut vals = [0.0f64; N_STATES];
        vals.iter_mut().for_each(|x| *x = r.gen_range(0.0..1.0));
        let (a, b) = (r.gen_range(0..N_STATES), r.gen_range(0..N_STATES));
        let le = (2.0 * vals[b] - vals[a]).clamp(-1.0, 1.0);
        record("learning_experience", (learning_experience(a, b, &ValueMap(vals)) - le).abs());

        let bins = r.gen_range(2..25);
        let xs: Vec<f64> = (0..r.gen_range(1..60)).map(|_| r.gen_range(-0.1..1.1)).collect();
        let ys: Vec<f64> = (0..r.gen_range(1..60)).map(|_| r.gen_range(-0.1..1.1)).collect();
        let (ha, hb) = (
            Histogram::from_samples(0.0, 1.0, bins, &xs).unwrap(),
            Histogram::from_samples(0.0, 1.0, bins, &ys).unwrap(),
        );
        record("jsd", (jsd(&ha, &hb).unwrap() - oracle_jsd(&ha.counts, &hb.counts, 1e-9)).abs());

        let samples: Vec<f64> = (0..r.gen_range(2..200)).map(|_| r.gen_range(-5.0..5.0)).collect();
        let (mu, var) = gaussian_fit(&samples).unwrap();
        let (mu_o, var_o) = oracle_gaussian(&samples);
        record("gaussian_fit", (mu - mu_o).abs().max((var - var_o).abs()));

        let t = r.gen_range(1..300);
        let wt: Vec<f64> = (0..=t).map(|_| r.gen_range(0.0..1.0)).collect();
        record("fairiot_utility", (fairiot_utility(&wt, t).unwrap() - oracle_utility(&wt, t)).abs());

        let us: Vec<f64> = (0..n).map(|_| r.gen_range(0.01..1.0)).collect();
        record("cv", (coefficient_of_variation(&us).unwrap() - oracle_cv(&us)).abs());

        // Coarse values so ties actually occur.
        let trace: Vec<Vec<f64>> = (0..r.gen_range(1..40))
            .map(|_| (0..n).map(|_| r.gen_range(0..4) as f64 / 4.0).collect())
            .collect();
        record("opportunity_probs", max_err(&opportunity_probs(&trace).unwrap(), &oracle_tie_split(&trace, true)));
        record("odds_probs", max_err(&odds_probs(&trace).unwrap(), &oracle_tie_split(&trace, false)));
    }
    worst
}

/// Largest relative error between analytic and central-difference gradients
/// over `nets` random networks and `transitions` random inputs each.
pub fn gradient_check(nets: usize, transitions: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for k in 0..nets {
        let dim = r.gen_range(2..9);
        let hidden = r.gen_range(4..33);
        let net = QNetwork::new(dim, hidden, seed ^ k as u64, false).unwrap();
        for _ in 0..transitions {
            let x: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
            let a = r.gen_range(0..3);
            let g = net.q_gradient(&x, a).unwrap();
            let mut probe = net.clone();
            for p in 0..g.len() {
                let orig = probe.params()[p];
                probe.params_mut()[p] = orig + h;
                let up = probe.predict_q(&x).unwrap()[a];
                probe.params_mut()[p] = orig - h;
                let down = probe.predict_q(&x).unwrap()[a];
                probe.params_mut()[p] = orig;
                let numeric = (up - down) / (2.0 * h);
                let scale = g[p].abs().max(numeric.abs());
                let err = if scale < 1e-7 { (g[p] - numeric).abs() } else { (g[p] - numeric).abs() / scale };
                worst = worst.max(err);
            }
        }
    }
    worst
}

// Property checks. Each returns an error message on violation.

pub fn check_simplex(w: &[f64], floor: f64) -> Result<(), String> {
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(format!("weights {w:?} sum to {sum}"));
    }
    if let Some(x) = w.iter().find(|x| **x < floor - 1e-12 || **x > 1.0 + 1e-12) {
        return Err(format!("weight {x} outside [{floor}, 1] in {w:?}"));
    }
    Ok(())
}

pub fn prop_weight_closure(raw: &[f64], floor: f64, steps: &[(usize, usize, f64)]) -> Result<(), String> {
    let n = raw.len();
    let total: f64 = raw.iter().sum();
    let w0: Vec<f64> = raw.iter().map(|x| floor + (1.0 - n as f64 * floor) * x / total).collect();
    let mut w = WeightVector::from_weights(w0, floor).map_err(|e| e.to_string())?;
    for &(i, a, dw) in steps {
        w.adjust(i % n, Direction::from_index(a), dw);
        check_simplex(w.as_slice(), floor)?;
    }
    Ok(())
}

pub fn prop_type2_conservation(raw: &[f64], resource: f64) -> Result<(), String> {
    let total: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let alloc = global_allocation_type2(&w, resource).map_err(|e| e.to_string())?;
    let given: f64 = alloc.iter().sum();
    if (given - resource).abs() > 1e-9 * resource.max(1.0) || alloc.iter().any(|x| *x < 0.0) {
        return Err(format!("allocation {alloc:?} does not conserve {resource}"));
    }
    Ok(())
}

pub fn prop_type3_scale_invariance(w: &[f64], k: &[f64], c: f64) -> Result<(), String> {
    let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
    let (a, b) = (global_action_type3(w, k).unwrap(), global_action_type3(&scaled, k).unwrap());
    if a != b {
        return Err(format!("argmax moved from {a} to {b} when scaling weights by {c}"));
    }
    Ok(())
}

/// The dispatched option always holds the minimum, a running option keeps
/// control until it leaves the minimum, and a fresh one starts at the
/// lowest-index minimizer.
pub fn prop_option_consistency(trace: &[Vec<f64>]) -> Result<(), String> {
    let mut active: Option<usize> = None;
    for row in trace {
        let s = FairnessState::new(row.clone());
        let next = s.dispatch(active);
        if s.closeness[next] != s.min() || s.is_terminated(next) {
            return Err(format!("option {next} active outside its initiation set in {row:?}"));
        }
        match active {
            Some(prev) if !s.is_terminated(prev) && next != prev => {
                return Err(format!("option {prev} preempted before terminating"));
            }
            Some(prev) if s.is_terminated(prev) && next != s.active_option() => {
                return Err(format!("handover from {prev} went to {next}"));
            }
            _ => {}
        }
        active = Some(next);
    }
    Ok(())
}

pub fn prop_rr_equal_counts(n: usize, rounds: usize, app: AppType) -> Result<(), String> {
    let mut counts = vec![0usize; n];
    for tick in 0..n * rounds {
        let obs = Observation {
            desired: (0..n).map(|j| j as f64).collect(),
            resource: Some(10.0),
            effects: Some(vec![0.0; n]),
        };
        let (action, shares) = baseline_action(Method::RoundRobin, app, tick, &obs).map_err(|e| e.to_string())?;
        let chosen = match action {
            GlobalAction::Categorical(a) => a,
            _ => (0..n).fold(0, |b, j| if shares[j] > shares[b] { j } else { b }),
        };
        counts[chosen] += 1;
    }
    if counts.iter().any(|c| *c != rounds) {
        return Err(format!("round robin counts {counts:?} after {rounds} rounds"));
    }
    Ok(())
}

pub fn prop_tie_split_closure(trace: &[Vec<f64>]) -> Result<(), String> {
    for p in [opportunity_probs(trace), odds_probs(trace)] {
        let p = p.map_err(|e| e.to_string())?;
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || p.iter().any(|x| *x < 0.0 || *x > 1.0) {
            return Err(format!("probabilities {p:?} sum to {sum}"));
        }
    }
    Ok(())
}

pub fn prop_ledger_unit_norm(flags: &[Vec<bool>], delta: f64) -> Result<(), String> {
    let n = flags[0].len();
    let mut ledger = SatisfactionLedger::new(n, delta).unwrap();
    for f in flags {
        ledger.update(f).unwrap();
        for rec in ledger.records() {
            if (rec.norm() - 1.0).abs() > 1e-12 || rec.u < 0.0 || rec.v < 0.0 {
                return Err(format!("record {rec:?} left the unit quarter circle"));
            }
        }
        if let Some(l) = ledger.fairness_state().closeness.iter().find(|l| !(**l >= 0.0 && **l <= 1.0)) {
            return Err(format!("closeness {l} out of [0, 1]"));
        }
    }
    Ok(())
}

/// A TD step with a loose clip moves every parameter by `alpha * td * dQ/dtheta`.
pub fn td_step_matches(seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut net = QNetwork::new(4, 8, seed, false).unwrap();
    let cfg = TrainConfig {
        alpha: 0.01,
        grad_clip: 1e9,
        ..TrainConfig::default()
    };
    let x: Vec<f64> = (0..4).map(|_| r.gen_range(-1.0..1.0)).collect();
    let xn: Vec<f64> = (0..4).map(|_| r.gen_range(-1.0..1.0)).collect();
    let a = r.gen_range(0..3);
    let reward = r.gen_range(-1.0..1.0);
    let q_next = net.predict_q(&xn).unwrap();
    let target = reward + cfg.gamma * q_next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let td = target - net.predict_q(&x).unwrap()[a];
    let g = net.q_gradient(&x, a).unwrap();
    let before = net.params().to_vec();
    let reported = net.td_update(&x, a, reward, &xn, &cfg).unwrap();
    let mut worst = (reported - td).abs();
    for p in 0..g.len() {
        worst = worst.max((net.params()[p] - (before[p] + cfg.alpha * td * g[p])).abs());
    }
    worst
}
