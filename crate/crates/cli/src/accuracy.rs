//! Smallest sketch size reaching a relative error threshold.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use tensketch::embed::{execute_plan, rank_one_gain};
use tensketch::instances::{bind_uniform, kronecker, tensor_train, Instance};
use tensketch::io::load_network;
use tensketch::network::tn_norm;
use tensketch::plan::ContractionTree;
use tensketch::rng::RandomSource;
use tensketch::{Error, Flops, Result, SketchSpec};

use crate::embeddings::{build, EmbeddingChoice};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputKind {
    TensorTrain,
    Kronecker,
    File(PathBuf),
}

#[derive(Clone, Debug, Serialize)]
pub struct AccuracyConfig {
    pub input: InputKind,
    pub order: usize,
    pub size: usize,
    /// Bond rank of tensor-train inputs.
    pub rank: usize,
    pub embeddings: Vec<EmbeddingChoice>,
    /// Error threshold τ on |‖Sx‖/‖x‖ − 1|.
    pub tau: f64,
    /// Number of random inputs.
    pub trials: usize,
    /// Sketches drawn per candidate size; all must pass.
    pub repeats: usize,
    pub seed: u64,
    pub m_min: usize,
    /// Upper end of the search; defaults to the smallest sketched dimension.
    pub m_max: Option<usize>,
    /// Upper end for the Khatri-Rao baseline, which may exceed the sketched
    /// dimensions. Defaults to [`KR_M_MAX`] or the full dimension if smaller.
    pub kr_m_max: Option<usize>,
    pub strict: bool,
}

impl Default for AccuracyConfig {
    fn default() -> Self {
        AccuracyConfig {
            input: InputKind::Kronecker,
            order: 4,
            size: 1000,
            rank: 4,
            embeddings: EmbeddingChoice::ALL.to_vec(),
            tau: 0.1,
            trials: 5,
            repeats: 2,
            seed: 0,
            m_min: 2,
            m_max: None,
            kr_m_max: None,
            strict: false,
        }
    }
}

impl AccuracyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidArgument(format!("threshold must lie in (0, 1), got {}", self.tau)));
        }
        if self.trials == 0 || self.repeats == 0 {
            return Err(Error::InvalidArgument("trials and repeats must be at least 1".into()));
        }
        if self.m_min == 0 {
            return Err(Error::InvalidArgument("the search must start at m ≥ 1".into()));
        }
        if self.embeddings.is_empty() {
            return Err(Error::InvalidArgument("no embedding selected".into()));
        }
        if self.input == InputKind::TensorTrain && self.rank == 0 {
            return Err(Error::InvalidArgument("rank must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub input_id: usize,
    pub embedding: EmbeddingChoice,
    /// None when no size in the search range passed.
    pub smallest_m: Option<usize>,
    /// Modeled flops of the plan at `smallest_m`.
    pub flops: Option<Flops>,
    /// Sketches drawn during the search.
    pub evaluations: usize,
}

pub const CSV_HEADER: [&str; 5] = ["input_id", "embedding", "smallest_m", "flops", "evaluations"];

/// Search metadata written next to the CSV.
#[derive(Clone, Debug, Serialize)]
pub struct SearchGrid {
    pub m_min: usize,
    pub m_max: usize,
    pub kr_m_max: usize,
    pub geometric_factor: usize,
    pub refinement_steps: usize,
    pub rank_one_sampling: bool,
}

pub const REFINEMENT_STEPS: usize = 8;
pub const KR_M_MAX: usize = 1 << 17;

/// Smallest passing size: doubling from `lo` up to `hi`, then a linear scan
/// of at most [`REFINEMENT_STEPS`] sizes between the last failing and the
/// first passing size.
pub fn search_smallest(lo: usize, hi: usize, mut passes: impl FnMut(usize) -> Result<bool>) -> Result<Option<usize>> {
    if lo > hi {
        return Ok(None);
    }
    let mut fail = None;
    let mut m = lo;
    let pass = loop {
        if passes(m)? {
            break m;
        }
        fail = Some(m);
        if m >= hi {
            return Ok(None);
        }
        m = (2 * m).min(hi);
    };
    let Some(f) = fail else { return Ok(Some(pass)) };
    let step = (pass - f).div_ceil(REFINEMENT_STEPS).max(1);
    let mut c = f + step;
    while c < pass {
        if passes(c)? {
            return Ok(Some(c));
        }
        c += step;
    }
    Ok(Some(pass))
}

struct Input {
    instance: Instance,
    /// Every edge is a sketch edge: the data is an outer product of vectors.
    rank_one: bool,
    norm: f64,
}

fn make_input(cfg: &AccuracyConfig, i: usize) -> Result<Input> {
    let src = RandomSource::new(cfg.seed).derive(0).derive(i as u64);
    let mut instance = match &cfg.input {
        InputKind::Kronecker => kronecker(cfg.order, cfg.size)?,
        InputKind::TensorTrain => tensor_train(cfg.order, cfg.size, cfg.rank)?,
        InputKind::File(path) => {
            let l = load_network(path)?;
            let tree = match l.tree {
                Some(t) => t,
                None => default_tree(&l.network)?,
            };
            Instance { network: l.network, sketch_edges: l.sketch_edges, tree }
        }
    };
    let net = &instance.network;
    let rank_one = (0..net.num_edges()).all(|e| instance.sketch_edges.contains(&e));
    let mut norm = 1.0;
    if !rank_one {
        if !instance.network.is_bound() {
            bind_uniform(&mut instance.network, &src)?;
        }
        norm = tn_norm(&instance.network)?;
        if norm == 0.0 {
            return Err(Error::InvalidArgument(format!("input {i} has zero norm")));
        }
    }
    Ok(Input { instance, rank_one, norm })
}

/// Left-deep tree over the data vertices in index order.
pub fn default_tree(net: &tensketch::TensorNetwork) -> Result<ContractionTree> {
    let order: Vec<usize> = (0..net.num_vertices()).collect();
    ContractionTree::left_to_right(&order)
}

fn smallest_dimension(spec_edges: &[usize], inst: &Instance) -> usize {
    spec_edges.iter().map(|&e| inst.network.edge(e).size).min().unwrap_or(0)
}

fn full_dimension(inst: &Instance) -> usize {
    inst.sketch_edges.iter().fold(1usize, |p, &e| p.saturating_mul(inst.network.edge(e).size))
}

fn search_max(cfg: &AccuracyConfig, inst: &Instance, choice: EmbeddingChoice) -> usize {
    match choice {
        EmbeddingChoice::KhatriRao => cfg.kr_m_max.unwrap_or(KR_M_MAX).min(full_dimension(inst)),
        _ => cfg.m_max.unwrap_or(usize::MAX).min(smallest_dimension(&inst.sketch_edges, inst)),
    }
}

fn spec_at(base: &SketchSpec, m: usize) -> Result<SketchSpec> {
    let smallest = (0..base.n_sketch()).map(|j| base.sketch_size(j)).min().unwrap_or(0);
    if m <= smallest {
        base.with_m(m)
    } else {
        SketchSpec::new_unsized(base.data.clone(), base.sketch_edges.clone(), m)
    }
}

fn run_one(cfg: &AccuracyConfig, input: &Input, i: usize, choice: EmbeddingChoice) -> Result<AccuracyRow> {
    let inst = &input.instance;
    let base = SketchSpec::new(inst.network.clone(), inst.sketch_edges.clone(), 1)?;
    let hi = search_max(cfg, inst, choice);
    let key = RandomSource::new(cfg.seed).derive(1).derive(i as u64).derive(choice.key());
    let mut evaluations = 0;
    let found = search_smallest(cfg.m_min, hi, |m| {
        let spec = spec_at(&base, m)?;
        let (emb, plan) = build(choice, &spec, &inst.tree, cfg.strict)?;
        for r in 0..cfg.repeats {
            let src = key.derive(m as u64).derive(r as u64);
            evaluations += 1;
            let gain = if input.rank_one {
                rank_one_gain(&plan, &spec, &emb, &src)?
            } else {
                execute_plan(&plan, &spec, &emb, &src)?.output.norm() / input.norm
            };
            if (gain - 1.0).abs() > cfg.tau {
                return Ok(false);
            }
        }
        Ok(true)
    })?;
    let flops = match found {
        Some(m) => Some(build(choice, &spec_at(&base, m)?, &inst.tree, cfg.strict)?.1.total_flops),
        None => None,
    };
    Ok(AccuracyRow { input_id: i, embedding: choice, smallest_m: found, flops, evaluations })
}

/// One row per (input, embedding), in input order then embedding order.
/// Every search draws from its own keyed random stream, so the rows do not
/// depend on the thread count.
pub fn run_accuracy(cfg: &AccuracyConfig) -> Result<(Vec<AccuracyRow>, SearchGrid)> {
    cfg.validate()?;
    let inputs = (0..cfg.trials).into_par_iter().map(|i| make_input(cfg, i)).collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, EmbeddingChoice)> =
        (0..cfg.trials).flat_map(|i| cfg.embeddings.iter().map(move |&c| (i, c))).collect();
    let rows = jobs.par_iter().map(|&(i, c)| run_one(cfg, &inputs[i], i, c)).collect::<Result<Vec<_>>>()?;
    let widest = |c| inputs.iter().map(|inp| search_max(cfg, &inp.instance, c)).min().unwrap_or(0);
    let grid = SearchGrid {
        m_min: cfg.m_min,
        m_max: widest(EmbeddingChoice::Tn),
        kr_m_max: widest(EmbeddingChoice::KhatriRao),
        geometric_factor: 2,
        refinement_steps: REFINEMENT_STEPS,
        rank_one_sampling: inputs.iter().all(|inp| inp.rank_one),
    };
    Ok((rows, grid))
}

pub fn write_csv<W: Write>(rows: &[AccuracyRow], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        let m = r.smallest_m.map(|m| m.to_string()).unwrap_or_else(|| "not-found".into());
        let f = r.flops.as_ref().map(|f| f.to_string()).unwrap_or_else(|| "not-found".into());
        w.write_record([r.input_id.to_string(), r.embedding.name().to_string(), m, f, r.evaluations.to_string()])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn search_finds_threshold_of_monotone_predicate() {
        for t in 1..=300 {
            let mut calls = 0;
            let got = search_smallest(2, 256, |m| {
                calls += 1;
                Ok(m >= t)
            })
            .unwrap();
            if t > 256 {
                assert_eq!(got, None);
                continue;
            }
            let m = got.unwrap();
            assert!(m >= t.max(2));
            // the refinement resolves to within one step of the threshold;
            // the last failing size before doubling is below t
            let step = (t.max(2) - 1).div_ceil(REFINEMENT_STEPS).max(1);
            assert!(m - t.max(2) < step, "t {t} got {m}");
            assert!(calls <= 8 + REFINEMENT_STEPS);
        }
    }

    #[test]
    fn search_reports_not_found() {
        assert_eq!(search_smallest(4, 100, |_| Ok(false)).unwrap(), None);
        assert_eq!(search_smallest(4, 3, |_| Ok(true)).unwrap(), None);
    }
}
