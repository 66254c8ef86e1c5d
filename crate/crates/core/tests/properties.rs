use proptest::prelude::*;

use tensketch::bounds::{cost_report, ContractionLabels};
use tensketch::embed::{
    build_alg1_embedding, build_khatri_rao_embedding, build_tree_embedding, build_tt_embedding, execute_plan_with,
    plan_generic, zi_split_factor, Embedding, SketchPlan,
};
use tensketch::instances::{bind_uniform, random_instance, Instance, RandomNetworkParams};
use tensketch::network::{materialize_network, tn_norm, ContractionState};
use tensketch::plan::validate_constrained;
use tensketch::rng::RandomSource;
use tensketch::set::VertexSet;
use tensketch::{Flops, SketchSpec};

fn params() -> impl Strategy<Value = (RandomNetworkParams, u64)> {
    (2usize..6, 1usize..4, 0usize..3, any::<bool>(), any::<bool>(), any::<u64>()).prop_map(
        |(n_data, max_bond, extra_edges, hyperedges, uniform, seed)| {
            let p = RandomNetworkParams {
                n_data,
                max_bond,
                sketch_size: 4,
                extra_edges,
                hyperedges,
                uniform,
                free_dangling: 0.2,
            };
            (p, seed)
        },
    )
}

fn instance(p: &RandomNetworkParams, seed: u64) -> Instance {
    let mut inst = random_instance(p, &RandomSource::new(seed)).unwrap();
    bind_uniform(&mut inst.network, &RandomSource::new(seed ^ 0x5eed)).unwrap();
    inst
}

fn plans(spec: &SketchSpec, inst: &Instance) -> Vec<(Embedding, SketchPlan)> {
    let mut out =
        vec![build_alg1_embedding(spec, &inst.tree).unwrap(), build_tree_embedding(spec, &inst.tree).unwrap()];
    for e in [build_tt_embedding(spec).unwrap(), build_khatri_rao_embedding(spec).unwrap()] {
        let p = plan_generic(spec, &inst.tree, &e).unwrap();
        out.push((e, p));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn plan_ledgers_add_up_and_refine_the_data_tree((p, seed) in params(), m in 1usize..4) {
        let inst = instance(&p, seed);
        let spec = SketchSpec::new(inst.network.clone(), inst.sketch_edges.clone(), m).unwrap();
        for (_, plan) in plans(&spec, &inst) {
            let sum = plan.per_step_flops.iter().fold(Flops::zero(), |mut acc, f| { acc += f; acc });
            prop_assert_eq!(&sum, &plan.total_flops);
            prop_assert!(validate_constrained(&plan.resulting_tree, &inst.tree));
        }
    }

    #[test]
    fn sketch_is_linear_in_each_data_tensor((p, seed) in params(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let inst = instance(&p, seed);
        let v = (seed % p.n_data as u64) as usize;
        let mut other = inst.network.clone();
        bind_uniform(&mut other, &RandomSource::new(seed.wrapping_add(1))).unwrap();
        let u = inst.network.tensor(v).unwrap().data().to_vec();
        let w = other.tensor(v).unwrap().data().to_vec();
        let with = |vals: Vec<f64>| {
            let mut net = inst.network.clone();
            net.bind(v, vals).unwrap();
            SketchSpec::new(net, inst.sketch_edges.clone(), 3).unwrap()
        };
        let base = with(u.clone());
        for (emb, plan) in plans(&base, &inst) {
            let tensors = emb.instantiate(&RandomSource::new(seed).derive(9)).unwrap();
            let run = |vals: Vec<f64>| execute_plan_with(&plan, &with(vals), &emb, &tensors).unwrap().output;
            let su = run(u.clone());
            let sw = run(w.clone());
            let mix: Vec<f64> = u.iter().zip(&w).map(|(x, y)| a * x + b * y).collect();
            let s = run(mix);
            let scale = su.norm().max(sw.norm()).max(1.0);
            for ((x, y), z) in su.data().iter().zip(sw.data()).zip(s.data()) {
                prop_assert!((a * x + b * y - z).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn tn_never_costs_more_than_tree((p, seed) in params(), m in 1usize..40) {
        let p = RandomNetworkParams { sketch_size: 40, max_bond: 12, ..p };
        let inst = random_instance(&p, &RandomSource::new(seed)).unwrap();
        let spec = inst.spec(m).unwrap();
        let (_, tn) = build_alg1_embedding(&spec, &inst.tree).unwrap();
        let (_, tree) = build_tree_embedding(&spec, &inst.tree).unwrap();
        prop_assert!(tn.total_flops <= tree.total_flops);
        let rep = cost_report(&spec, &inst.tree, tn.total_flops.clone()).unwrap();
        prop_assert!(rep.ratio.is_finite() && rep.ratio > 0.0);
    }

    #[test]
    fn contraction_order_does_not_change_the_tensor((p, seed) in params(), rot in 0usize..6) {
        let inst = instance(&p, seed);
        let n = inst.network.num_vertices();
        let x = materialize_network(&inst.network, None, 1 << 22).unwrap();
        // fold the vertices in a rotated order instead of the greedy schedule
        let order: Vec<usize> = (0..n).map(|i| (i + rot) % n).rev().collect();
        let mut st = ContractionState::new(&inst.network);
        let mut acc = VertexSet::singleton(order[0]);
        for &v in &order[1..] {
            let next = VertexSet::singleton(v);
            st.contract_pair(&acc, &next).unwrap();
            acc = acc.union(&next);
        }
        let y = if n == 1 { inst.network.tensor(0).unwrap().clone() } else { st.finish().unwrap() };
        let y = y.permute(x.labels()).unwrap();
        let diff: f64 = x.data().iter().zip(y.data()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(diff <= 1e-12 * x.norm().max(1.0));
        let norm = tn_norm(&inst.network).unwrap();
        prop_assert!((norm - x.norm()).abs() <= 1e-10 * x.norm().max(1.0));
    }

    #[test]
    fn split_factor_divides_m(a in 1u64..5000, b in 1u64..5000, c in 1u64..5000, d in 1u64..50, m in 1usize..3000) {
        let alpha = zi_split_factor(&ContractionLabels::new(a, b, c, d), m);
        prop_assert!(alpha >= 1 && alpha <= m && m % alpha == 0);
    }
}
