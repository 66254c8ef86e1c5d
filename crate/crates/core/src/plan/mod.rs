//! Contraction trees, graph cuts and the classification of data contractions.

mod classify;
mod cut;
mod tree;

pub use classify::{classify_contractions, dimension_tree, Classification, ContractionKind, DimNode, DimensionTree};
pub use cut::{DirectedView, GraphView, Linearization, ViewEdge};
pub use tree::{validate_constrained, ContractionTree, TreeNode};
