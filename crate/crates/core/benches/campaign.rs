use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mtdfind_core::designs::DesignKind;
use mtdfind_core::simulator::{default_scenarios, run_campaign, Mode, ScenarioSource, TrialConfig};

fn campaign(c: &mut Criterion) {
    let source = ScenarioSource::Fixed(default_scenarios().swap_remove(2));
    let config = TrialConfig::default().with_variant(DesignKind::Keyboard, Mode::EiTite);
    let threads = std::thread::available_parallelism().map_or(1, usize::from);

    let mut group = c.benchmark_group("campaign_200_reps");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("sequential", 1), |b| {
        b.iter(|| run_campaign(&config, &source, 200, 1).unwrap())
    });
    group.bench_function(BenchmarkId::new("rayon", threads), |b| {
        b.iter(|| run_campaign(&config, &source, 200, 0).unwrap())
    });
    group.finish();
}

criterion_group!(benches, campaign);
criterion_main!(benches);
