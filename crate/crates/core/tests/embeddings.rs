use tensketch::bounds::{cost_report, lower_bound_uniform};
use tensketch::embed::{
    build_alg1_embedding, build_alg1_embedding_with, build_dense_embedding, build_khatri_rao_embedding,
    build_tree_embedding, build_tt_embedding, check_sufficient_condition, dense_sketch, execute_plan_with,
    plan_generic, Alg1Options, Embedding, MergeShape, SketchPlan,
};
use tensketch::instances::{bind_uniform, kronecker, random_instance, tensor_train, Instance, RandomNetworkParams};
use tensketch::network::tn_norm;
use tensketch::plan::validate_constrained;
use tensketch::rng::RandomSource;
use tensketch::{DenseTensor, Result, SketchSpec};

fn all_builders(spec: &SketchSpec, inst: &Instance) -> Vec<(&'static str, Embedding, SketchPlan)> {
    let t0 = &inst.tree;
    let mut out = Vec::new();
    let (e, p) = build_alg1_embedding(spec, t0).unwrap();
    out.push(("alg1", e, p));
    for (name, shape, strict) in [("compact", MergeShape::Compact, false), ("strict", MergeShape::Split, true)] {
        let (e, p) = build_alg1_embedding_with(spec, t0, Alg1Options { shape, strict }).unwrap();
        out.push((name, e, p));
    }
    let (e, p) = build_tree_embedding(spec, t0).unwrap();
    out.push(("tree", e, p));
    for (name, e) in [
        ("tt", build_tt_embedding(spec).unwrap()),
        ("kr", build_khatri_rao_embedding(spec).unwrap()),
        ("dense", build_dense_embedding(spec).unwrap()),
    ] {
        let p = plan_generic(spec, t0, &e).unwrap();
        out.push((name, e, p));
    }
    out
}

fn rel_err(a: &DenseTensor, b: &DenseTensor) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let num: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    num / b.norm().max(f64::MIN_POSITIVE)
}

fn bound(inst: &Instance, m: usize, seed: u64) -> Result<SketchSpec> {
    let mut net = inst.network.clone();
    bind_uniform(&mut net, &RandomSource::new(seed))?;
    SketchSpec::new(net, inst.sketch_edges.clone(), m)
}

#[test]
fn plans_match_dense_oracle() {
    for seed in 0..12u64 {
        let p = RandomNetworkParams {
            n_data: 3 + (seed as usize % 3),
            max_bond: 3,
            sketch_size: 5,
            extra_edges: 1,
            hyperedges: seed % 2 == 1,
            uniform: seed % 3 != 2,
            free_dangling: 0.3,
        };
        let inst = random_instance(&p, &RandomSource::new(seed)).unwrap();
        let spec = bound(&inst, 3, seed).unwrap();
        for (name, emb, plan) in all_builders(&spec, &inst) {
            let tensors = emb.instantiate(&RandomSource::new(100 + seed)).unwrap();
            let run = execute_plan_with(&plan, &spec, &emb, &tensors).unwrap();
            let oracle = dense_sketch(&spec, &emb, &tensors, 10_000_000).unwrap();
            let err = rel_err(&run.output, &oracle);
            assert!(err <= 1e-10, "{name} seed {seed}: {err}");
            assert_eq!(run.total_flops, plan.total_flops, "{name} seed {seed}");
            assert_eq!(run.step_flops, plan.per_step_flops);
            assert!(validate_constrained(&plan.resulting_tree, &inst.tree), "{name} seed {seed}");
        }
    }
}

#[test]
fn zero_data_gives_zero_sketch() {
    let inst = tensor_train(3, 4, 2).unwrap();
    let mut net = inst.network.clone();
    for v in 0..3 {
        let shape = net.shape(v);
        let n = shape.iter().product();
        net.bind(v, vec![0.0; n]).unwrap();
    }
    let spec = SketchSpec::new(net, inst.sketch_edges.clone(), 2).unwrap();
    let (emb, plan) = build_alg1_embedding(&spec, &inst.tree).unwrap();
    let run = execute_plan_with(&plan, &spec, &emb, &emb.instantiate(&RandomSource::new(1)).unwrap()).unwrap();
    assert!(run.output.data().iter().all(|&x| x == 0.0));
}

#[test]
fn unbiased_for_every_builder() {
    let inst = kronecker(3, 6).unwrap();
    let spec = bound(&inst, 4, 7).unwrap();
    let x = tn_norm(&spec.data).unwrap();
    for (name, emb, plan) in all_builders(&spec, &inst) {
        let trials = 2000;
        let mut mean = 0.0;
        for t in 0..trials {
            let tensors = emb.instantiate(&RandomSource::with_stream(3, t)).unwrap();
            let run = execute_plan_with(&plan, &spec, &emb, &tensors).unwrap();
            mean += (run.output.norm() / x).powi(2);
        }
        mean /= trials as f64;
        assert!((mean - 1.0).abs() < 5.0 / (trials as f64).sqrt() * 1.5, "{name}: {mean}");
    }
}

#[test]
fn condition_checker_verdicts() {
    let inst = tensor_train(4, 16, 3).unwrap();
    let spec = inst.spec(10).unwrap();
    let tt = build_tt_embedding(&spec).unwrap();
    assert!(check_sufficient_condition(&tt, 10).unwrap().satisfied);
    let (tree, _) = build_tree_embedding(&spec, &inst.tree).unwrap();
    assert!(check_sufficient_condition(&tree, 10).unwrap().satisfied);
    let (strict, _) =
        build_alg1_embedding_with(&spec, &inst.tree, Alg1Options { shape: MergeShape::Split, strict: true }).unwrap();
    assert!(check_sufficient_condition(&strict, 10).unwrap().satisfied);
    let (split, _) = build_alg1_embedding(&spec, &inst.tree).unwrap();
    assert!(check_sufficient_condition(&split, 10).unwrap().satisfied);
    let kron = kronecker(4, 64).unwrap();
    let kspec = kron.spec(64).unwrap();
    let (compact, _) =
        build_alg1_embedding_with(&kspec, &kron.tree, Alg1Options { shape: MergeShape::Compact, strict: false })
            .unwrap();
    let rep = check_sufficient_condition(&compact, 64).unwrap();
    assert!(!rep.satisfied);
    assert!(!rep.failing.is_empty());
    let kr = build_khatri_rao_embedding(&kspec).unwrap();
    assert!(check_sufficient_condition(&kr, 64).is_err());
}

#[test]
fn alg1_within_constant_of_uniform_bound() {
    for seed in 0..20u64 {
        let p =
            RandomNetworkParams { n_data: 2 + seed as usize % 7, max_bond: 16, sketch_size: 128, ..Default::default() };
        let inst = random_instance(&p, &RandomSource::new(seed)).unwrap();
        let spec = inst.spec(64).unwrap();
        let (_, plan) = build_alg1_embedding(&spec, &inst.tree).unwrap();
        let lb = lower_bound_uniform(&spec, &inst.tree, 64).unwrap();
        let r = plan.total_flops.ratio(&lb);
        assert!((1.0..=8.0).contains(&r), "seed {seed}: {r}");
        let rep = cost_report(&spec, &inst.tree, plan.total_flops.clone()).unwrap();
        assert!(rep.ratio >= 1.0);
    }
}

#[test]
fn tt_single_core_is_a_matrix() {
    let inst = kronecker(1, 9).unwrap();
    let spec = inst.spec(4).unwrap();
    let tt = build_tt_embedding(&spec).unwrap();
    assert_eq!(tt.num_vertices(), 1);
    assert_eq!(tt.network.shape(0), vec![9, 4]);
    let (a, pa) = build_alg1_embedding(&spec, &inst.tree).unwrap();
    let (t, pt) = build_tree_embedding(&spec, &inst.tree).unwrap();
    assert_eq!(a.network.shape(0), t.network.shape(0));
    assert_eq!(pa.total_flops, pt.total_flops);
}

fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn rank_one_sampler_matches_execution_in_distribution() {
    use tensketch::embed::{execute_plan, rank_one_gain};
    let n = 1500;
    // two-sample KS critical value at level 1e-3
    let crit = 1.95 * (2.0 / n as f64).sqrt();
    for (order, s, m) in [(3usize, 12usize, 6usize), (4, 9, 9)] {
        let inst = kronecker(order, s).unwrap();
        let spec = bound(&inst, m, 5).unwrap();
        let norm = tn_norm(&spec.data).unwrap();
        for (name, emb, plan) in all_builders(&spec, &inst) {
            let exec: Vec<f64> = (0..n)
                .map(|t| {
                    let src = RandomSource::new(1).derive(t as u64);
                    execute_plan(&plan, &spec, &emb, &src).unwrap().output.norm() / norm
                })
                .collect();
            let lazy: Vec<f64> = (0..n)
                .map(|t| rank_one_gain(&plan, &spec, &emb, &RandomSource::new(2).derive(t as u64)).unwrap())
                .collect();
            let d = ks_statistic(exec, lazy);
            assert!(d < crit, "{name} order {order}: KS {d} ≥ {crit}");
        }
    }
}

#[test]
fn rank_one_sampler_rejects_bonded_data() {
    use tensketch::embed::rank_one_gain;
    let inst = tensor_train(3, 8, 2).unwrap();
    let spec = bound(&inst, 4, 1).unwrap();
    let (emb, plan) = build_alg1_embedding(&spec, &inst.tree).unwrap();
    assert!(rank_one_gain(&plan, &spec, &emb, &RandomSource::new(0)).is_err());
}

#[test]
fn only_structured_baselines_accept_oversized_m() {
    let inst = kronecker(3, 8).unwrap();
    assert!(inst.spec(16).is_err());
    let spec = SketchSpec::new_unsized(inst.network.clone(), inst.sketch_edges.clone(), 16).unwrap();
    assert!(build_alg1_embedding(&spec, &inst.tree).is_err());
    assert!(build_tree_embedding(&spec, &inst.tree).is_err());
    assert!(build_tt_embedding(&spec).is_err());
    let kr = build_khatri_rao_embedding(&spec).unwrap();
    let plan = plan_generic(&spec, &inst.tree, &kr).unwrap();
    let spec = bound(&inst, 1, 3).unwrap();
    let spec = SketchSpec::new_unsized(spec.data.clone(), spec.sketch_edges.clone(), 16).unwrap();
    let tensors = kr.instantiate(&RandomSource::new(4)).unwrap();
    let run = execute_plan_with(&plan, &spec, &kr, &tensors).unwrap();
    let oracle = dense_sketch(&spec, &kr, &tensors, 1 << 20).unwrap();
    assert!(rel_err(&run.output, &oracle) < 1e-12);
}
