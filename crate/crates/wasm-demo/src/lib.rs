//! Browser bindings for the demo page in `www/`. Every export takes plain
//! numbers and returns a JSON string; failures come back as `{"error": ...}`.

use serde::Serialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use tensketch::bounds::{lower_bound_uniform, y_cost, ContractionLabels};
use tensketch::embed::{
    build_alg1_embedding, build_khatri_rao_embedding, build_tree_embedding, build_tt_embedding, plan_generic,
    rank_one_gain, zi_internal_edge, zi_split_factor, Embedding, SketchPlan,
};
use tensketch::instances::{kronecker, Instance};
use tensketch::rng::RandomSource;
use tensketch::{Error, Result, SketchSpec};

const EMBEDDINGS: [&str; 4] = ["tn", "tree", "tt", "khatri-rao"];

fn build(name: &str, spec: &SketchSpec, inst: &Instance) -> Result<(Embedding, SketchPlan)> {
    match name {
        "tn" => build_alg1_embedding(spec, &inst.tree),
        "tree" => build_tree_embedding(spec, &inst.tree),
        "tt" | "khatri-rao" => {
            let e = if name == "tt" { build_tt_embedding(spec)? } else { build_khatri_rao_embedding(spec)? };
            let p = plan_generic(spec, &inst.tree, &e)?;
            Ok((e, p))
        }
        other => Err(Error::InvalidArgument(format!("unknown embedding `{other}`"))),
    }
}

fn respond(r: Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

#[derive(Serialize)]
struct CostPoint {
    m: usize,
    flops: Vec<f64>,
    lower_bound: f64,
}

pub fn cost_curves_value(order: usize, size: usize, m_max: usize) -> Result<Value> {
    if order == 0 || order > 12 || size < 2 {
        return Err(Error::InvalidArgument("order must be in 1..=12 and size at least 2".into()));
    }
    let inst = kronecker(order, size)?;
    let mut points = Vec::new();
    let mut m = 2;
    while m <= m_max.min(size) {
        let spec = inst.spec(m)?;
        let flops = EMBEDDINGS
            .iter()
            .map(|e| Ok(build(e, &spec, &inst)?.1.total_flops.to_f64()))
            .collect::<Result<Vec<_>>>()?;
        let lower_bound = lower_bound_uniform(&spec, &inst.tree, m)?.to_f64();
        points.push(CostPoint { m, flops, lower_bound });
        m *= 2;
    }
    Ok(json!({ "order": order, "size": size, "embeddings": EMBEDDINGS, "points": points }))
}

/// Modeled flops of every embedding for an order-N Kronecker input with
/// vectors of length `size`, at m = 2, 4, ... up to `m_max`.
#[wasm_bindgen]
pub fn cost_curves(order: usize, size: usize, m_max: usize) -> String {
    respond(cost_curves_value(order, size, m_max))
}

pub fn merge_shape_value(a: u64, b: u64, c: u64, d: u64, m: usize) -> Result<Value> {
    if a == 0 || b == 0 || c == 0 || d == 0 || m == 0 {
        return Err(Error::InvalidArgument("labels and m must be positive".into()));
    }
    let l = ContractionLabels::new(a, b, c, d);
    let mf = m as f64;
    let (own_s, own_l) = if a <= c { (a as f64, c as f64) } else { (c as f64, a as f64) };
    let (b, d) = (b as f64, d as f64);
    let split = |alpha: usize| {
        let beta = m.div_ceil(alpha);
        let (al, be) = (alpha as f64, beta as f64);
        let cost =
            own_s * b * d * mf * al * mf + own_s * b * d * own_l * al * mf * be + own_s * own_l * d * mf * be * mf;
        json!({ "alpha": alpha, "beta": beta, "overshoot": alpha * beta - m, "multiply_adds": cost })
    };
    let single = own_s * b * d * own_l * mf * mf + own_s * own_l * d * mf * mf * mf;
    Ok(json!({
        "rounded": split(zi_internal_edge(&l, m)),
        "divisor": split(zi_split_factor(&l, m)),
        "single_multiply_adds": single,
        "y": y_cost(&l, m).to_f64(),
    }))
}

/// Internal edge sizes and merge costs for one contraction with labels
/// (a, b, c, d) at sketch size m.
#[wasm_bindgen]
pub fn merge_shape(a: u64, b: u64, c: u64, d: u64, m: usize) -> String {
    respond(merge_shape_value(a, b, c, d, m))
}

pub fn accuracy_histogram_value(
    embedding: &str,
    order: usize,
    size: usize,
    m: usize,
    draws: usize,
    seed: u64,
) -> Result<Value> {
    if draws == 0 || draws > 20_000 {
        return Err(Error::InvalidArgument("draws must be in 1..=20000".into()));
    }
    let inst = kronecker(order, size)?;
    let spec = if m <= size {
        inst.spec(m)?
    } else {
        SketchSpec::new_unsized(inst.network.clone(), inst.sketch_edges.clone(), m)?
    };
    let (emb, plan) = build(embedding, &spec, &inst)?;
    let src = RandomSource::new(seed);
    let gains =
        (0..draws as u64).map(|t| rank_one_gain(&plan, &spec, &emb, &src.derive(t))).collect::<Result<Vec<f64>>>()?;
    let bins = 40;
    let (lo, hi) = (0.0, 2.0);
    let mut counts = vec![0usize; bins];
    for &g in &gains {
        let k = (((g - lo) / (hi - lo)) * bins as f64).floor().clamp(0.0, (bins - 1) as f64) as usize;
        counts[k] += 1;
    }
    let miss = |tau: f64| gains.iter().filter(|g| (*g - 1.0).abs() > tau).count() as f64 / draws as f64;
    let mean_sq = gains.iter().map(|g| g * g).sum::<f64>() / draws as f64;
    Ok(json!({
        "embedding": embedding,
        "m": m,
        "range": [lo, hi],
        "counts": counts,
        "mean_square_gain": mean_sq,
        "miss_rate": { "0.05": miss(0.05), "0.1": miss(0.1), "0.2": miss(0.2) },
        "flops": plan.total_flops.to_f64(),
    }))
}

/// Histogram of ‖Sx‖/‖x‖ over independent draws of one embedding, for a
/// Kronecker input.
#[wasm_bindgen]
pub fn accuracy_histogram(embedding: &str, order: usize, size: usize, m: usize, draws: usize, seed: u64) -> String {
    respond(accuracy_histogram_value(embedding, order, size, m, draws, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_cover_every_embedding() {
        let v: Value = serde_json::from_str(&cost_curves(4, 256, 64)).unwrap();
        let pts = v["points"].as_array().unwrap();
        assert_eq!(pts.len(), 6);
        for p in pts {
            let f = p["flops"].as_array().unwrap();
            assert_eq!(f.len(), 4);
            // tn never above tree
            assert!(f[0].as_f64().unwrap() <= f[1].as_f64().unwrap());
        }
    }

    #[test]
    fn merge_shape_splits_m_exactly() {
        let v = merge_shape_value(1, 1, 1, 1, 64).unwrap();
        assert_eq!(v["rounded"]["alpha"], 8);
        assert_eq!(v["divisor"]["overshoot"], 0);
        let v = merge_shape_value(1, 1, 1, 1, 8).unwrap();
        assert_eq!(v["rounded"]["overshoot"], 1);
        assert_eq!(v["divisor"]["overshoot"], 0);
    }

    #[test]
    fn histogram_counts_every_draw() {
        let v: Value = serde_json::from_str(&accuracy_histogram("tt", 3, 100, 32, 500, 1)).unwrap();
        let total: u64 = v["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
        assert_eq!(total, 500);
        let ms = v["mean_square_gain"].as_f64().unwrap();
        assert!((0.8..1.2).contains(&ms), "{ms}");
    }

    #[test]
    fn errors_are_reported_as_json() {
        let v: Value = serde_json::from_str(&accuracy_histogram("nope", 3, 100, 8, 10, 1)).unwrap();
        assert!(v["error"].as_str().unwrap().contains("nope"));
        let v: Value = serde_json::from_str(&cost_curves(0, 10, 8)).unwrap();
        assert!(v.get("error").is_some());
    }
}
