use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use irs_relay::allocation::{adversary_fill, capped_water_fill, inner_minimax};
use irs_relay::channel::{generate_channels, trial_rng};
use irs_relay::optimizer::{solve_fd, solve_hd};
use irs_relay::rsi_bound::worst_case_rsi_bound;
use irs_relay::tensor_ops::cascade_map;
use irs_relay::{ScenarioConfig, SolveOptions};

fn scenario(m: usize) -> ScenarioConfig {
    ScenarioConfig { n_t: 4, k_r: 5, k_t: 5, n_r: 4, m, ..ScenarioConfig::default() }
}

fn bench_cascade(c: &mut Criterion) {
    let cfg = scenario(100);
    let ch = generate_channels(&cfg, &mut trial_rng(7, 0)).unwrap();
    c.bench_function("cascade_map 25x100", |b| {
        b.iter(|| cascade_map(black_box(&ch.h_tx_to_irs), black_box(&ch.h_irs_to_rx)).unwrap())
    });
    c.bench_function("worst_case_rsi_bound 25x100", |b| {
        b.iter(|| worst_case_rsi_bound(black_box(18.0), &ch.h_tx_to_irs, &ch.h_irs_to_rx).unwrap())
    });
}

fn bench_allocation(c: &mut Criterion) {
    let spec = [9.0, 6.5, 4.0, 2.2, 0.9, 0.3, 0.1, 0.05];
    let den = [1.0, 1.4, 0.9, 2.0, 1.1, 1.0, 3.0, 1.2];
    let gamma_r = [0.4, 0.3, 0.2, 0.1, 0.0, 0.0, 0.0, 0.0];
    c.bench_function("capped_water_fill 8 streams", |b| {
        b.iter(|| capped_water_fill(black_box(&spec), black_box(&den), 5.0).unwrap())
    });
    let gamma_s = capped_water_fill(&spec, &den, 5.0).unwrap().powers;
    c.bench_function("adversary_fill 8 streams", |b| {
        b.iter(|| adversary_fill(black_box(&spec), black_box(&gamma_s), &gamma_r, 2.0, 1.0).unwrap())
    });
    c.bench_function("inner_minimax 8 streams", |b| {
        b.iter(|| inner_minimax(black_box(&spec), black_box(&gamma_r), 2.0, 5.0, 1.0, 1e-8, 50).unwrap())
    });
}

fn bench_solvers(c: &mut Criterion) {
    let opts = SolveOptions::default();
    for m in [0, 100] {
        let cfg = scenario(m);
        let mut ch = generate_channels(&cfg, &mut trial_rng(7, 0)).unwrap();
        ch.t_bounds.tr = 0.75 * ch.hr_power();
        c.bench_function(&format!("solve_fd 4-5-5-4 M={m}"), |b| b.iter(|| solve_fd(&cfg, black_box(&ch), &opts).unwrap()));
    }
    let cfg = scenario(0);
    let ch = generate_channels(&cfg, &mut trial_rng(7, 0)).unwrap();
    c.bench_function("solve_hd 4-5-5-4", |b| b.iter(|| solve_hd(&cfg, black_box(&ch)).unwrap()));
}

criterion_group!(benches, bench_cascade, bench_allocation, bench_solvers);
criterion_main!(benches);
