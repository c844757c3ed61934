//! Criterion benchmarks comparing the sequential and rayon path-generation
//! routes, plus the end-to-end pricing loop.
//!
//! Run with `cargo bench -p cyberbond`. The parallel benches only exist when
//! the `parallel` feature (default) is enabled; building with
//! `--no-default-features` benches the sequential route alone.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use cyberbond::bond::{mc_price_on, BondTerms};
use cyberbond::distributions::DistributionSpec;
use cyberbond::lossmodel::{simulate_paths_seq, SimulationConfig};

fn config(n_paths: usize) -> SimulationConfig {
    SimulationConfig {
        horizon_days: 1095,
        n_paths,
        master_seed: 20_190_815,
        frequency: DistributionSpec::Exponential { rate: 0.0211 },
        severity: DistributionSpec::LogNormal {
            location: 14.9179,
            scale: 2.3434,
        },
    }
}

fn terms() -> BondTerms {
    BondTerms {
        notional: 15e6,
        maturity_days: 1095,
        coupon_days: vec![182, 365, 547, 730, 912, 1095],
        coupon_value: 764_055.87,
        funding_rate: 0.0152,
        coupon_trigger: 2.04e9,
        notional_trigger: 2.04e9,
    }
}

fn bench_simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_paths");
    for n_paths in [1000, 5000] {
        let cfg = config(n_paths);
        group.bench_with_input(BenchmarkId::new("sequential", n_paths), &cfg, |b, cfg| {
            b.iter(|| black_box(simulate_paths_seq(cfg)))
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("rayon", n_paths), &cfg, |b, cfg| {
            b.iter(|| black_box(cyberbond::lossmodel::simulate_paths_par(cfg)))
        });
    }
    group.finish();
}

fn bench_pricing(c: &mut Criterion) {
    let terms = terms();
    let mut group = c.benchmark_group("mc_price");
    for n_paths in [1000, 5000] {
        let cfg = config(n_paths);
        let seq_ensemble = simulate_paths_seq(&cfg);
        group.bench_with_input(
            BenchmarkId::new("evaluate_only", n_paths),
            &seq_ensemble,
            |b, ensemble| b.iter(|| black_box(mc_price_on(ensemble, &terms))),
        );
        group.bench_with_input(
            BenchmarkId::new("simulate_and_price_seq", n_paths),
            &cfg,
            |b, cfg| {
                b.iter(|| {
                    let ensemble = simulate_paths_seq(cfg);
                    black_box(mc_price_on(&ensemble, &terms))
                })
            },
        );
        #[cfg(feature = "parallel")]
        group.bench_with_input(
            BenchmarkId::new("simulate_and_price_rayon", n_paths),
            &cfg,
            |b, cfg| {
                b.iter(|| {
                    let ensemble = cyberbond::lossmodel::simulate_paths_par(cfg);
                    black_box(mc_price_on(&ensemble, &terms))
                })
            },
        );
    }
    group.finish();
}

criterion_group!(benches, bench_simulation, bench_pricing);
criterion_main!(benches);
