use clap::ValueEnum;
use serde::Serialize;

use tensketch::embed::{
    build_alg1_embedding_with, build_khatri_rao_embedding, build_tree_embedding, build_tt_embedding, plan_generic,
    Alg1Options, Embedding, SketchPlan,
};
use tensketch::plan::ContractionTree;
use tensketch::{Result, SketchSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingChoice {
    /// Tree-structured embedding with two-tensor merges.
    Tn,
    /// Tree embedding with one order-3 tensor per merge.
    Tree,
    /// Tensor-train embedding.
    Tt,
    /// Khatri-Rao product of Gaussian matrices.
    KhatriRao,
}

impl EmbeddingChoice {
    pub const ALL: [EmbeddingChoice; 4] =
        [EmbeddingChoice::Tn, EmbeddingChoice::Tree, EmbeddingChoice::Tt, EmbeddingChoice::KhatriRao];

    pub fn name(self) -> &'static str {
        match self {
            EmbeddingChoice::Tn => "tn",
            EmbeddingChoice::Tree => "tree",
            EmbeddingChoice::Tt => "tt",
            EmbeddingChoice::KhatriRao => "khatri-rao",
        }
    }

    pub(crate) fn key(self) -> u64 {
        self as u64
    }
}

/// Embedding and its plan along `t0`. `strict` forces the full merge width
/// in the tn embedding.
pub fn build(
    choice: EmbeddingChoice,
    spec: &SketchSpec,
    t0: &ContractionTree,
    strict: bool,
) -> Result<(Embedding, SketchPlan)> {
    match choice {
        EmbeddingChoice::Tn => build_alg1_embedding_with(spec, t0, Alg1Options { strict, ..Default::default() }),
        EmbeddingChoice::Tree => build_tree_embedding(spec, t0),
        EmbeddingChoice::Tt => {
            let emb = build_tt_embedding(spec)?;
            let plan = plan_generic(spec, t0, &emb)?;
            Ok((emb, plan))
        }
        EmbeddingChoice::KhatriRao => {
            let emb = build_khatri_rao_embedding(spec)?;
            let plan = plan_generic(spec, t0, &emb)?;
            Ok((emb, plan))
        }
    }
}
