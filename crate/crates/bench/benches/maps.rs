use cmotion::dynamics::{orbit, InverseConfig, OrbitConfig};
use cmotion::{PreciseAltPlay, State};
use cmotion_bench::{double_well_map, fig1_map, mwu_map, mwu_state, random_instance, sphere_map};
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn steps(c: &mut Criterion) {
    let mut g = c.benchmark_group("step");
    let alt = fig1_map();
    let z = State::bipartite(&[60.0], &[-25.0]);
    g.bench_function("alt_play", |b| b.iter(|| alt.step(black_box(&z)).unwrap()));
    let gd = double_well_map();
    let x = State::euclidean(vec![0.5]);
    g.bench_function("gd_double_well", |b| b.iter(|| gd.step(black_box(&x)).unwrap()));
    let mwu = mwu_map();
    let p = mwu_state();
    g.bench_function("mwu_exp", |b| b.iter(|| mwu.step(black_box(&p)).unwrap()));
    let rgd = sphere_map();
    let s = State::sphere_normalized(vec![1.0, 2.0, 2.0]).unwrap();
    g.bench_function("rgd_sphere", |b| b.iter(|| rgd.step(black_box(&s)).unwrap()));
    g.finish();
}

fn inverses(c: &mut Criterion) {
    let cfg = InverseConfig::default();
    let mut g = c.benchmark_group("inverse");
    let gd = double_well_map();
    let x = State::euclidean(vec![0.5]);
    g.bench_function("gd_newton", |b| b.iter(|| gd.inverse(black_box(&x), &cfg).unwrap()));
    let mwu = mwu_map();
    let p = mwu_state();
    g.bench_function("mwu_newton", |b| b.iter(|| mwu.inverse(black_box(&p), &cfg).unwrap()));
    g.finish();
}

fn orbits(c: &mut Criterion) {
    let mut g = c.benchmark_group("orbit");
    g.sample_size(20);
    let gd = double_well_map();
    let x = State::euclidean(vec![0.5]);
    g.bench_function("gd_200_each_way", |b| {
        b.iter(|| orbit(&gd, black_box(&x), 200, 200, &OrbitConfig::default()).unwrap())
    });
    let engine = PreciseAltPlay::from_map(&fig1_map()).unwrap();
    g.bench_function("precise_alt_play_1e4", |b| b.iter(|| engine.run(black_box(&[60.0, -25.0]), 10_000, 0).unwrap()));
    let (map, z) = random_instance(7);
    let engine = PreciseAltPlay::from_map(&map).unwrap();
    g.bench_function("precise_random_game_1e3", |b| b.iter(|| engine.run(black_box(z.coords()), 1_000, 0).unwrap()));
    g.finish();
}

criterion_group!(benches, steps, inverses, orbits);
criterion_main!(benches);
