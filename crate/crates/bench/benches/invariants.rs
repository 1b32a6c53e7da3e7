use cmotion::chaos::{scrambled_pair_estimate, ChaosConfig};
use cmotion::invariants::{dphi_rank, series_invariant, SeriesConfig, WeightFunction};
use cmotion::State;
use cmotion_bench::{double_well_map, fig1_map, random_instance};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn series(c: &mut Criterion) {
    let map = double_well_map();
    let x = State::euclidean(vec![0.5]);
    let cfg = SeriesConfig::default();
    let mut g = c.benchmark_group("series_invariant");
    for n in [16usize, 64, 200] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| series_invariant(&map, map.objective(), &WeightFunction::one(), black_box(&x), n, &cfg).unwrap())
        });
    }
    g.finish();
}

fn rank(c: &mut Criterion) {
    let (map, _) = random_instance(11);
    let payoff = map.payoff().unwrap().clone();
    let (e1, e2) = (map.step_sizes()[0], map.step_sizes()[1]);
    c.bench_function("dphi_rank", |b| b.iter(|| dphi_rank(black_box(&payoff), e1, e2)));
}

fn pair_scan(c: &mut Criterion) {
    let map = fig1_map();
    let x = State::bipartite(&[1.0], &[2.0]);
    let y = State::bipartite(&[-3.0], &[0.5]);
    let cfg = ChaosConfig::default();
    c.bench_function("scrambled_pair_1e4", |b| {
        b.iter(|| scrambled_pair_estimate(&map, black_box(&x), &y, 10_000, &cfg, None).unwrap())
    });
}

criterion_group!(benches, series, rank, pair_scan);
criterion_main!(benches);
