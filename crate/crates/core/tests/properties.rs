mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robustte::agent::{policy_forward, safe_guard, sample_action, Action, AgentState, ModelShape, PolicyModel};
use robustte::baselines::measure_churn;
use robustte::dataio::{scale_trace, TrafficTrace};
use robustte::lp::{solve_mcf, solve_robust_rates};
use robustte::netmodel::PathId;

fn id_set() -> impl Strategy<Value = BTreeSet<PathId>> {
    prop::collection::btree_set((0u64..40).prop_map(PathId), 0..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mcf_is_scale_equivariant(seed in 0u64..10_000, factor in prop::sample::select(vec![0.25, 2.0, 4.0, 8.0])) {
        let inst = random_instance(seed, 5, 3, 3, 1);
        let base = solve_mcf(&inst.topo, &inst.dms[0], &inst.cps).unwrap();
        let scaled = solve_mcf(&inst.topo, &inst.dms[0].scaled(factor), &inst.cps).unwrap();
        prop_assert!((scaled.mlu[0] - factor * base.mlu[0]).abs() <= 1e-6 * factor.max(1.0));
        // identical programs after internal scaling give identical split ratios
        prop_assert_eq!(&scaled.rates, &base.rates);
    }

    #[test]
    fn robust_rates_respect_invariants(seed in 0u64..10_000, w in 1usize..4) {
        let inst = random_instance(seed, 5, 3, 3, w);
        let alloc = solve_robust_rates(&inst.topo, &inst.dms, &inst.cps).unwrap();
        for (i, dm) in inst.dms.iter().enumerate() {
            for r in &alloc.rates[i] {
                prop_assert!((r.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
                prop_assert!(r.iter().all(|v| *v >= 0.0));
            }
            let z = max_of(&utilization(&inst.topo, &alloc.paths, dm, &alloc.rates[i]));
            prop_assert!((z - alloc.mlu[i]).abs() <= 1e-6);
        }
        let mean = alloc.mlu.iter().sum::<f64>() / w as f64;
        prop_assert!((mean - alloc.objective).abs() <= 1e-9);
    }

    #[test]
    fn more_paths_never_hurt(seed in 0u64..10_000, drop in 0usize..64) {
        let inst = random_instance(seed, 5, 3, 3, 2);
        let full = solve_robust_rates(&inst.topo, &inst.dms, &inst.cps).unwrap();
        // keep every pair's first path plus a bitmask-chosen subset of the rest
        let keep: Vec<usize> = inst.cps.iter()
            .filter(|(g, pi, _)| *g == inst.cps.global_index(*pi, 0) || (drop >> (g % 6)) & 1 == 0)
            .map(|(g, _, _)| g)
            .collect();
        let sub = solve_robust_rates(&inst.topo, &inst.dms, &inst.cps.restrict(&keep)).unwrap();
        prop_assert!(full.objective <= sub.objective + 1e-7);
    }

    #[test]
    fn churn_is_a_metric(a in id_set(), b in id_set(), c in id_set()) {
        prop_assert_eq!(measure_churn(&a, &a), 0);
        prop_assert_eq!(measure_churn(&a, &b), measure_churn(&b, &a));
        prop_assert!(measure_churn(&a, &c) <= measure_churn(&a, &b) + measure_churn(&b, &c));
        prop_assert_eq!(measure_churn(&a, &BTreeSet::new()), a.len());
    }

    #[test]
    fn scaling_composes(seed in 0u64..10_000, a in 0.1f64..10.0, b in 0.1f64..10.0) {
        let inst = random_instance(seed, 4, 3, 1, 3);
        let trace = TrafficTrace::new(inst.cps.pairs().to_vec(), inst.dms.clone(), 300.0).unwrap();
        let twice = scale_trace(&scale_trace(&trace, a).unwrap(), b).unwrap();
        let once = scale_trace(&trace, a * b).unwrap();
        for (x, y) in twice.matrices.iter().zip(&once.matrices) {
            for (u, v) in x.demand.iter().zip(&y.demand) {
                prop_assert!((u - v).abs() <= 1e-12 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn guard_always_covers(seed in 0u64..10_000, picks in prop::collection::vec(0usize..100, 0..8)) {
        let inst = random_instance(seed, 5, 4, 3, 1);
        let n = inst.cps.total_paths();
        let mut paths: Vec<usize> = picks.iter().map(|p| p % n).collect();
        paths.sort_unstable();
        paths.dedup();
        let action = Action { paths, probs: vec![], log_prob: 0.0, patched: 0 };
        let guarded = safe_guard(action.clone(), &inst.cps);
        prop_assert_eq!(&guarded.paths[..action.paths.len()], &action.paths[..]);
        for pi in 0..inst.cps.pair_count() {
            prop_assert!(guarded.paths.iter().any(|&g| inst.cps.locate(g).0 == pi));
        }
    }

    #[test]
    fn policy_outputs_distributions(seed in 0u64..10_000, r in 1usize..6) {
        let shape = ModelShape { channels: 2, nodes: 4, filters: 3, hidden: 5, outputs: 6 };
        let m = PolicyModel::new(shape, 0.1, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = AgentState {
            channels: 2,
            nodes: 4,
            data: (0..32).map(|i| ((i as u64 * 31 + seed) % 17) as f64 / 16.0).collect(),
        };
        let p = policy_forward(&m, &state).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        prop_assert!(p.iter().all(|v| *v > 0.0));
        let a = sample_action(&m, &state, r, &mut rng).unwrap();
        let distinct: BTreeSet<usize> = a.paths.iter().copied().collect();
        prop_assert_eq!(distinct.len(), r);
        prop_assert!((a.log_prob - a.probs.iter().map(|q| q.ln()).sum::<f64>()).abs() <= 1e-9);
    }
}
