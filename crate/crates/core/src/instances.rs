//! Generators for the data networks used in tests and experiments.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::network::TensorNetwork;
use crate::plan::ContractionTree;
use crate::rng::{uniform_tensor, RandomSource};
use crate::set::VertexSet;
use crate::sketch::SketchSpec;

/// A data network, its sketch edges and a data contraction tree.
#[derive(Clone, Debug)]
pub struct Instance {
    pub network: TensorNetwork,
    pub sketch_edges: Vec<usize>,
    pub tree: ContractionTree,
}

impl Instance {
    pub fn spec(&self, m: usize) -> Result<SketchSpec> {
        SketchSpec::new(self.network.clone(), self.sketch_edges.clone(), m)
    }
}

/// Bind every vertex to a tensor with i.i.d. U[0,1) entries; vertex v draws
/// from `src.derive(v)`.
pub fn bind_uniform(net: &mut TensorNetwork, src: &RandomSource) -> Result<()> {
    for v in 0..net.num_vertices() {
        let t = uniform_tensor(net.incidence(v).to_vec(), net.shape(v), &src.derive(v as u64))?;
        net.bind_tensor(v, t)?;
    }
    Ok(())
}

/// N vectors of length s; the data is their outer product.
pub fn kronecker(n: usize, s: usize) -> Result<Instance> {
    if n == 0 {
        return Err(Error::InvalidArgument("order must be at least 1".into()));
    }
    let mut net = TensorNetwork::new();
    let mut sketch = Vec::new();
    for j in 0..n {
        let v = net.add_vertex(format!("v{}", j + 1));
        sketch.push(net.add_edge(format!("x{}", j + 1), &[v], true, s)?);
    }
    let order: Vec<usize> = (0..n).collect();
    Ok(Instance { network: net, sketch_edges: sketch, tree: ContractionTree::left_to_right(&order)? })
}

/// Tensor train with N cores, physical size s and uniform bond rank R, with
/// the left-to-right contraction tree.
pub fn tensor_train(n: usize, s: usize, r: usize) -> Result<Instance> {
    if n == 0 {
        return Err(Error::InvalidArgument("order must be at least 1".into()));
    }
    let mut net = TensorNetwork::new();
    for j in 0..n {
        net.add_vertex(format!("v{}", j + 1));
    }
    let mut sketch = Vec::new();
    for j in 0..n {
        sketch.push(net.add_edge(format!("x{}", j + 1), &[j], true, s)?);
        if j + 1 < n {
            net.add_edge(format!("r{}", j + 1), &[j, j + 1], false, r)?;
        }
    }
    let order: Vec<usize> = (0..n).collect();
    Ok(Instance { network: net, sketch_edges: sketch, tree: ContractionTree::left_to_right(&order)? })
}

#[derive(Clone, Debug)]
pub struct RandomNetworkParams {
    pub n_data: usize,
    /// Bond sizes are drawn from 1..=max_bond.
    pub max_bond: usize,
    pub sketch_size: usize,
    /// Extra edges beyond a spanning tree.
    pub extra_edges: usize,
    /// Allow edges with three endpoints and shared dangling hyperedges.
    pub hyperedges: bool,
    /// Every vertex carries a sketch edge.
    pub uniform: bool,
    /// Probability that a vertex carries an unsketched dangling edge.
    pub free_dangling: f64,
}

impl Default for RandomNetworkParams {
    fn default() -> Self {
        RandomNetworkParams {
            n_data: 5,
            max_bond: 8,
            sketch_size: 64,
            extra_edges: 2,
            hyperedges: false,
            uniform: true,
            free_dangling: 0.0,
        }
    }
}

/// Connected random network and a random tree that prefers connected merges.
pub fn random_instance(p: &RandomNetworkParams, src: &RandomSource) -> Result<Instance> {
    let n = p.n_data;
    if n == 0 || p.max_bond == 0 || p.sketch_size == 0 {
        return Err(Error::InvalidArgument("empty random network".into()));
    }
    let mut rng = src.rng();
    let mut net = TensorNetwork::new();
    for v in 0..n {
        net.add_vertex(format!("v{}", v + 1));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut k = 0;
    for i in 1..n {
        let a = perm[i];
        let b = perm[rng.random_range(0..i)];
        net.add_edge(format!("b{k}"), &[a, b], false, rng.random_range(1..=p.max_bond))?;
        k += 1;
    }
    for _ in 0..p.extra_edges {
        if n < 2 {
            break;
        }
        let arity = if p.hyperedges && n >= 3 && rng.random_bool(0.5) { 3 } else { 2 };
        let mut ends: Vec<usize> = (0..n).collect();
        ends.shuffle(&mut rng);
        ends.truncate(arity);
        let dangling = p.hyperedges && rng.random_bool(0.3);
        net.add_edge(format!("b{k}"), &ends, dangling, rng.random_range(1..=p.max_bond))?;
        k += 1;
    }
    let mut sketch = Vec::new();
    let carriers: Vec<usize> = if p.uniform {
        (0..n).collect()
    } else {
        let mut c: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.6)).collect();
        if c.is_empty() {
            c.push(rng.random_range(0..n));
        }
        c
    };
    for &v in &carriers {
        sketch.push(net.add_edge(format!("x{}", v + 1), &[v], true, p.sketch_size)?);
    }
    for v in 0..n {
        if p.free_dangling > 0.0 && rng.random_bool(p.free_dangling.min(1.0)) {
            net.add_edge(format!("f{}", v + 1), &[v], true, rng.random_range(2..=3))?;
        }
    }
    let tree = random_tree(&net, &src.derive(u64::MAX))?;
    Ok(Instance { network: net, sketch_edges: sketch, tree })
}

/// Random binary contraction tree over all vertices: each step merges a
/// random pair of operands sharing an edge, or any pair if none do.
pub fn random_tree(net: &TensorNetwork, src: &RandomSource) -> Result<ContractionTree> {
    let n = net.num_vertices();
    if n == 0 {
        return Err(Error::InvalidTree("no vertices".into()));
    }
    let mut rng = src.rng();
    let mut ops: Vec<VertexSet> = (0..n).map(VertexSet::singleton).collect();
    let mut path = Vec::with_capacity(n - 1);
    let touches = |a: &VertexSet, b: &VertexSet| {
        net.edges()
            .iter()
            .any(|e| e.endpoints.iter().any(|&u| a.contains(u)) && e.endpoints.iter().any(|&u| b.contains(u)))
    };
    while ops.len() > 1 {
        let mut pairs = Vec::new();
        for i in 0..ops.len() {
            for j in i + 1..ops.len() {
                if touches(&ops[i], &ops[j]) {
                    pairs.push((i, j));
                }
            }
        }
        if pairs.is_empty() {
            pairs = (0..ops.len()).flat_map(|i| (i + 1..ops.len()).map(move |j| (i, j))).collect();
        }
        let (i, j) = pairs[rng.random_range(0..pairs.len())];
        let (a, b) = if rng.random_bool(0.5) { (i, j) } else { (j, i) };
        path.push((ops[a].clone(), ops[b].clone()));
        let u = ops[a].union(&ops[b]);
        ops.remove(i.max(j));
        ops.remove(i.min(j));
        ops.push(u);
    }
    if n == 1 {
        return Ok(ContractionTree::leaf(0));
    }
    ContractionTree::from_path(&VertexSet::range(0, n), &path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tt_shape() {
        let inst = tensor_train(4, 10, 3).unwrap();
        assert_eq!(inst.network.num_edges(), 7);
        assert_eq!(inst.network.shape(1), vec![3, 10, 3]);
        assert_eq!(inst.tree.num_contractions(), 3);
    }

    #[test]
    fn random_instances_are_valid() {
        for seed in 0..30 {
            let p = RandomNetworkParams {
                hyperedges: seed % 2 == 0,
                uniform: seed % 3 != 0,
                free_dangling: 0.3,
                ..Default::default()
            };
            let inst = random_instance(&p, &RandomSource::new(seed)).unwrap();
            assert_eq!(inst.tree.vertices(), &VertexSet::range(0, p.n_data));
            inst.spec(64).unwrap();
        }
    }
}
