//! D/S/I classification of data contractions and the dimension tree.

use crate::error::{Error, Result};
use crate::set::VertexSet;
use crate::sketch::SketchSpec;

use super::tree::ContractionTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContractionKind {
    /// Only sketch edge j reaches the output.
    D(usize),
    /// Both operands carry sketch edges.
    S,
    /// Everything else.
    I,
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub path: Vec<(VertexSet, VertexSet)>,
    pub kinds: Vec<ContractionKind>,
    /// D(e_j): contraction indices in path order.
    pub d: Vec<Vec<usize>>,
    pub s: Vec<usize>,
    pub i: Vec<usize>,
    /// X(e_j): output of the last D(e_j) contraction, or {v_j}.
    pub x: Vec<VertexSet>,
}

impl Classification {
    /// Sketch edges whose vertex lies in `set`.
    pub fn sketch_edges_in(spec: &SketchSpec, set: &VertexSet) -> Vec<usize> {
        (0..spec.n_sketch()).filter(|&j| set.contains(spec.sketch_vertex(j))).collect()
    }
}

fn check_tree(spec: &SketchSpec, t0: &ContractionTree) -> Result<()> {
    if t0.vertices() != &VertexSet::range(0, spec.n_data()) {
        return Err(Error::InvalidTree("the tree must cover exactly the data vertices".into()));
    }
    Ok(())
}

pub fn classify_contractions(spec: &SketchSpec, t0: &ContractionTree) -> Result<Classification> {
    spec.validate_structure()?;
    check_tree(spec, t0)?;
    let path = t0.path();
    let n = spec.n_sketch();
    let mut kinds = Vec::with_capacity(path.len());
    let mut d = vec![Vec::new(); n];
    let mut s = Vec::new();
    let mut i_set = Vec::new();
    let mut x: Vec<VertexSet> = (0..n).map(|j| VertexSet::singleton(spec.sketch_vertex(j))).collect();
    for (idx, (u, v)) in path.iter().enumerate() {
        let su = Classification::sketch_edges_in(spec, u);
        let sv = Classification::sketch_edges_in(spec, v);
        let kind = if !su.is_empty() && !sv.is_empty() {
            ContractionKind::S
        } else if su.len() + sv.len() == 1 {
            ContractionKind::D(su.first().or(sv.first()).copied().unwrap())
        } else {
            ContractionKind::I
        };
        match kind {
            ContractionKind::S => s.push(idx),
            ContractionKind::I => i_set.push(idx),
            ContractionKind::D(j) => {
                d[j].push(idx);
                x[j] = u.union(v);
            }
        }
        kinds.push(kind);
    }
    Ok(Classification { path, kinds, d, s, i: i_set, x })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimNode {
    /// Sketch edge indices j covered by this node.
    pub edges: Vec<usize>,
    pub children: Option<(usize, usize)>,
    /// The S contraction that merges the children.
    pub contraction: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimensionTree {
    pub nodes: Vec<DimNode>,
    pub root: usize,
}

pub fn dimension_tree(spec: &SketchSpec, t0: &ContractionTree) -> Result<DimensionTree> {
    let cls = classify_contractions(spec, t0)?;
    if spec.n_sketch() == 0 {
        return Err(Error::NothingToSketch);
    }
    let mut nodes: Vec<DimNode> =
        (0..spec.n_sketch()).map(|j| DimNode { edges: vec![j], children: None, contraction: None }).collect();
    // Current dimension-tree node of each data vertex's operand.
    let mut current: Vec<Option<usize>> = vec![None; spec.n_data()];
    for j in 0..spec.n_sketch() {
        current[spec.sketch_vertex(j)] = Some(j);
    }
    let mut root = 0;
    for (idx, (u, v)) in cls.path.iter().enumerate() {
        let cu = u.iter().find_map(|w| current[w]);
        let cv = v.iter().find_map(|w| current[w]);
        let merged = match (cu, cv) {
            (Some(a), Some(b)) => {
                let mut edges = nodes[a].edges.clone();
                edges.extend(&nodes[b].edges);
                edges.sort_unstable();
                nodes.push(DimNode { edges, children: Some((a, b)), contraction: Some(idx) });
                Some(nodes.len() - 1)
            }
            (a, b) => a.or(b),
        };
        for w in u.union(v).iter() {
            current[w] = merged;
        }
        if let Some(r) = merged {
            root = r;
        }
    }
    if spec.n_sketch() == 1 {
        root = 0;
    }
    Ok(DimensionTree { nodes, root })
}
