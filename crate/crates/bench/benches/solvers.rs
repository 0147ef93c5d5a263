use criterion::{criterion_group, criterion_main, Criterion};
use robustte::agent::{encode_state, greedy_action, policy_forward, ModelShape, Normalizer, PolicyModel};
use robustte::lp::{solve_mcf, solve_robust_rates};
use robustte::netmodel::{all_pairs, k_shortest_paths, CandidatePathSet};
use robustte_bench::abilene;

fn paths(c: &mut Criterion) {
    let fx = abilene(4, 1);
    let pairs = all_pairs(&fx.topo);
    c.bench_function("k_shortest_paths/abilene/k4/one_pair", |b| {
        b.iter(|| k_shortest_paths(&fx.topo, pairs[7], 4).unwrap())
    });
    c.bench_function("candidate_set/abilene/k4/all_pairs", |b| {
        b.iter(|| CandidatePathSet::k_shortest(&fx.topo, &pairs, 4).unwrap())
    });
}

fn lp(c: &mut Criterion) {
    let fx = abilene(4, 3);
    let mut group = c.benchmark_group("lp");
    group.sample_size(10);
    group.bench_function("solve_mcf/abilene/k4", |b| {
        b.iter(|| solve_mcf(&fx.topo, &fx.trace.matrices[0], &fx.cps).unwrap())
    });
    group.bench_function("solve_robust_rates/abilene/k4/w3", |b| {
        b.iter(|| solve_robust_rates(&fx.topo, &fx.trace.matrices, &fx.cps).unwrap())
    });
    group.finish();
}

fn policy(c: &mut Criterion) {
    let fx = abilene(4, 2);
    let n = fx.topo.node_count();
    let model = PolicyModel::new(ModelShape::new(2, n, fx.cps.total_paths()), 0.1, 1).unwrap();
    let state = encode_state(&fx.trace.matrices, fx.cps.pairs(), n, 2, Normalizer::WindowMax).unwrap();
    c.bench_function("policy_forward/abilene/c2", |b| {
        b.iter(|| policy_forward(&model, &state).unwrap())
    });
    c.bench_function("greedy_action/abilene/r40", |b| {
        b.iter(|| greedy_action(&model, &state, &fx.cps, 40).unwrap())
    });
}

criterion_group!(benches, paths, lp, policy);
criterion_main!(benches);
