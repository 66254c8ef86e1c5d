use std::io::Write;

use serde::Serialize;

use tensketch::apps::{
    als_reference, cp_iteration_model, cp_sketch_size, cp_synthetic, sketched_cp_als, tt_round_sketch, CpLedger,
    TensorTrain, TtLedger,
};
use tensketch::bounds::{cost_report, CostReport};
use tensketch::embed::{check_sufficient_condition, execute_plan};
use tensketch::instances::bind_uniform;
use tensketch::io::{tensor_to_record, LoadedNetwork, TensorFile};
use tensketch::plan::{classify_contractions, ContractionKind, ContractionTree};
use tensketch::rng::RandomSource;
use tensketch::{Error, Flops, Result};

use crate::accuracy::default_tree;
use crate::embeddings::{build, EmbeddingChoice};

#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingCost {
    pub embedding: EmbeddingChoice,
    pub vertices: usize,
    /// None when the embedding is not a graph embedding.
    pub satisfies_condition: Option<bool>,
    pub report: CostReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct CostOutput {
    pub m: usize,
    pub data_vertices: usize,
    pub sketch_edges: Vec<String>,
    pub tree: serde_json::Value,
    pub kinds: Vec<String>,
    pub tree_optimal: bool,
    pub embeddings: Vec<EmbeddingCost>,
}

fn tree_of(loaded: &LoadedNetwork, tree: Option<ContractionTree>) -> Result<ContractionTree> {
    match tree.or_else(|| loaded.tree.clone()) {
        Some(t) => Ok(t),
        None => default_tree(&loaded.network),
    }
}

pub fn cmd_cost(loaded: &LoadedNetwork, tree: Option<ContractionTree>, m: usize, strict: bool) -> Result<CostOutput> {
    let spec = loaded.spec(m)?;
    if spec.n_sketch() == 0 {
        return Err(Error::NothingToSketch);
    }
    let t0 = tree_of(loaded, tree)?;
    let cls = classify_contractions(&spec, &t0)?;
    let kinds = cls
        .kinds
        .iter()
        .map(|k| match k {
            ContractionKind::S => "S".to_string(),
            ContractionKind::I => "I".to_string(),
            ContractionKind::D(j) => format!("D({})", spec.data.edge(spec.sketch_edges[*j]).name),
        })
        .collect();
    let mut embeddings = Vec::new();
    let mut tree_optimal = false;
    for choice in EmbeddingChoice::ALL {
        let (emb, plan) = build(choice, &spec, &t0, strict)?;
        let report = cost_report(&spec, &t0, plan.total_flops.clone())?;
        tree_optimal = report.tree_optimal;
        let satisfies_condition = check_sufficient_condition(&emb, m).ok().map(|r| r.satisfied);
        embeddings.push(EmbeddingCost { embedding: choice, vertices: emb.num_vertices(), satisfies_condition, report });
    }
    let net = &loaded.network;
    Ok(CostOutput {
        m,
        data_vertices: net.num_vertices(),
        sketch_edges: spec.sketch_edges.iter().map(|&e| net.edge(e).name.clone()).collect(),
        tree: tensketch::io::tree_to_json(&t0, net),
        kinds,
        tree_optimal,
        embeddings,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SketchLedger {
    pub embedding: EmbeddingChoice,
    pub m: usize,
    pub seed: u64,
    /// Data tensors were drawn from U[0,1) because the file had none.
    pub random_data: bool,
    pub output_shape: Vec<usize>,
    pub output_norm: f64,
    pub total_flops: Flops,
    pub step_flops: Vec<Flops>,
}

/// Sketch a file-described network. Unbound data is filled with U[0,1)
/// entries drawn from the seed.
pub fn cmd_sketch(
    loaded: &LoadedNetwork,
    choice: EmbeddingChoice,
    m: usize,
    seed: u64,
    tree: Option<ContractionTree>,
    strict: bool,
) -> Result<(TensorFile, SketchLedger)> {
    let mut loaded = loaded.clone();
    let random_data = !loaded.network.is_bound();
    if random_data {
        bind_uniform(&mut loaded.network, &RandomSource::new(seed).derive(0))?;
    }
    let spec = loaded.spec(m)?;
    let t0 = tree_of(&loaded, tree)?;
    let (emb, plan) = build(choice, &spec, &t0, strict)?;
    let exec = execute_plan(&plan, &spec, &emb, &RandomSource::new(seed).derive(1))?;
    let data_edges = spec.data.num_edges();
    let name = |l: usize| if l < data_edges { spec.data.edge(l).name.clone() } else { "out".to_string() };
    let file = tensor_to_record(&exec.output, &name);
    let ledger = SketchLedger {
        embedding: choice,
        m,
        seed,
        random_data,
        output_shape: exec.output.shape().to_vec(),
        output_norm: exec.output.norm(),
        total_flops: exec.total_flops,
        step_flops: exec.step_flops,
    };
    Ok((file, ledger))
}

#[derive(Clone, Debug, Serialize)]
pub struct CpConfig {
    pub order: usize,
    pub size: usize,
    /// Rank of the synthetic tensor.
    pub rank: usize,
    /// Rank of the decomposition; defaults to `rank`.
    pub target_rank: Option<usize>,
    pub sketch_size: Option<usize>,
    pub epsilon: f64,
    pub delta: f64,
    pub constant: f64,
    pub iters: usize,
    /// Relative Gaussian noise added to the synthetic tensor.
    pub noise: f64,
    pub seed: u64,
    pub reference: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CpOutput {
    pub order: usize,
    pub size: usize,
    pub rank: usize,
    pub m: usize,
    pub m_eff: usize,
    pub ledger: CpLedger,
    pub residuals: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_residuals: Option<Vec<f64>>,
    pub rank_deficient: usize,
    /// N(s·m·R + m^2.5·R) at m = m_eff, in multiply-adds.
    pub model_per_iteration: f64,
}

pub fn cmd_cp_als(cfg: &CpConfig) -> Result<CpOutput> {
    if cfg.order < 3 {
        return Err(Error::InvalidArgument("CP-ALS needs order at least 3".into()));
    }
    if cfg.iters == 0 || cfg.rank == 0 || cfg.size == 0 {
        return Err(Error::InvalidArgument("iters, rank and size must be positive".into()));
    }
    let rank = cfg.target_rank.unwrap_or(cfg.rank);
    let m = match cfg.sketch_size {
        Some(m) => m,
        None => cp_sketch_size(cfg.order, rank, cfg.epsilon, cfg.delta, cfg.constant)?,
    };
    let src = RandomSource::new(cfg.seed);
    let shape = vec![cfg.size; cfg.order];
    let x = cp_synthetic(&shape, cfg.rank, cfg.noise, &src.derive(0))?;
    let res = sketched_cp_als(&x, rank, m, cfg.iters, &src.derive(1))?;
    let reference_residuals =
        if cfg.reference { Some(als_reference(&x, rank, cfg.iters, &src.derive(1))?.1) } else { None };
    Ok(CpOutput {
        order: cfg.order,
        size: cfg.size,
        rank,
        m,
        m_eff: res.ledger.m_eff,
        model_per_iteration: cp_iteration_model(cfg.order, cfg.size, rank, res.ledger.m_eff),
        ledger: res.ledger,
        residuals: res.residuals,
        reference_residuals,
        rank_deficient: res.rank_deficient,
    })
}

pub fn write_cp_trace<W: Write>(out: &CpOutput, w: W) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["sweep", "residual", "reference_residual", "flops"]).map_err(io)?;
    for (t, r) in out.residuals.iter().enumerate() {
        let reference = out.reference_residuals.as_ref().map(|v| v[t].to_string()).unwrap_or_default();
        let flops = out.ledger.sweeps[t].total.to_string();
        w.write_record([(t + 1).to_string(), r.to_string(), reference, flops]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct TtConfig {
    pub order: usize,
    pub size: usize,
    pub rank: usize,
    pub sketch_size: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TtOutput {
    pub order: usize,
    pub size: usize,
    pub rank: usize,
    pub ledger: TtLedger,
    /// Total flops over 2·N·s·R²·m.
    pub leading_ratio: f64,
    /// ‖S·X_(≤k)‖ / ‖X_(≤k)‖ for every boundary k.
    pub boundary_gains: Vec<f64>,
}

pub fn cmd_tt_round(cfg: &TtConfig) -> Result<TtOutput> {
    if cfg.order < 2 || cfg.size == 0 || cfg.rank == 0 || cfg.sketch_size == 0 {
        return Err(Error::InvalidArgument("need order ≥ 2 and positive size, rank and sketch size".into()));
    }
    let src = RandomSource::new(cfg.seed);
    let tt = TensorTrain::random(cfg.order, cfg.size, cfg.rank, &src.derive(0))?;
    let out = tt_round_sketch(&tt, cfg.sketch_size, &src.derive(1))?;
    let mut boundary_gains = Vec::with_capacity(out.sketches.len());
    for (k, sk) in out.sketches.iter().enumerate() {
        let exact = tt.left_gram(k + 1)?.trace().max(0.0).sqrt();
        boundary_gains.push(sk.norm() / exact);
    }
    if out.ledger.outside_regime {
        eprintln!("warning: sketch size {} is not below the rank {}", cfg.sketch_size, cfg.rank);
    }
    Ok(TtOutput {
        order: cfg.order,
        size: cfg.size,
        rank: cfg.rank,
        leading_ratio: out.ledger.total.to_f64() / out.ledger.leading_model,
        ledger: out.ledger,
        boundary_gains,
    })
}

pub fn write_tt_trace<W: Write>(out: &TtOutput, w: W) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["core", "flops", "boundary_gain"]).map_err(io)?;
    for (k, f) in out.ledger.per_core.iter().enumerate() {
        let gain = out.boundary_gains.get(k).map(|g| g.to_string()).unwrap_or_default();
        w.write_record([(k + 1).to_string(), f.to_string(), gain]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
