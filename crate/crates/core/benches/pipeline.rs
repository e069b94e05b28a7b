//! Criterion suite for the experiment driver and its hot kernels.
//!
//! `experiment/parallel` uses the global rayon pool; `experiment/1-thread`
//! forces a single-thread pool as the in-process sequential baseline. For
//! the fully sequential build (no rayon at all) run
//! `cargo bench -p rff-core --no-default-features`.

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use rff_core::frontend::{iq_gains, iq_modulate, pa_apply, scale_to_rms};
use rff_core::hammerstein::{separate, BasisConfig};
use rff_core::harness::{run_single_experiment, ExperimentConfig};
use rff_core::iq_est::{search_best_combo, KGrid};
use rff_core::ofdm::{build_pilot_symbol, modulate, remove_cp};
use rff_core::with_threads;

fn bench_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::five_transmitter_default();
    cfg.fft_len = 512;
    cfg.cp_len = 128;
    cfg.samples_per_tx = 8;
    cfg.train_split = 4;
    cfg
}

fn kernels(c: &mut Criterion) {
    let cfg = ExperimentConfig::five_transmitter_default();
    let profile = cfg.transmitters[0].to_profile().unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    let pilot = build_pilot_symbol(&mut rng, cfg.fft_len, cfg.constellation_order).unwrap();
    let frame = modulate(&pilot, cfg.cp_len).unwrap();
    let scaled = scale_to_rms(&frame, cfg.input_rms).unwrap();
    let gains = iq_gains(profile.epsilon, profile.phi_deg).unwrap();
    let received = pa_apply(&iq_modulate(&scaled, &gains), &profile);
    let basis = BasisConfig::new(cfg.poly_order, cfg.channel_order_est).unwrap();

    c.bench_function("separate/2560x30", |b| {
        b.iter(|| separate(&received, &frame, &basis).unwrap())
    });

    let est = separate(&received, &frame, &basis).unwrap();
    let r = remove_cp(&received);
    let grid = KGrid::uniform(est.b_hat[0].norm(), cfg.k_grid.rel_span, cfg.k_grid.points).unwrap();
    c.bench_function("search_best_combo/101", |b| {
        b.iter(|| search_best_combo(&r, &est.h_hat, &pilot, &grid).unwrap())
    });
}

fn experiment(c: &mut Criterion) {
    let cfg = bench_config();
    let mut group = c.benchmark_group("experiment");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| run_single_experiment(&cfg, 15.0, 7).unwrap())
    });
    group.bench_function("1-thread", |b| {
        b.iter(|| with_threads(Some(1), || run_single_experiment(&cfg, 15.0, 7).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, kernels, experiment);
criterion_main!(benches);
