//! JSON formats: network files, contraction trees, embedding dumps and
//! dense tensors.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::embed::{Embedding, EmbeddingKind};
use crate::error::{Error, Result};
use crate::instances::bind_uniform;
use crate::network::TensorNetwork;
use crate::plan::{ContractionTree, Linearization};
use crate::rng::RandomSource;
use crate::sketch::SketchSpec;
use crate::tensor::DenseTensor;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EdgeRecord {
    pub id: String,
    pub endpoints: Vec<String>,
    #[serde(default)]
    pub dangling: bool,
    pub size: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum TensorsRecord {
    Random { random_uniform01: RandomRecord },
    Inline(BTreeMap<String, Value>),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RandomRecord {
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NetworkFile {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeRecord>,
    #[serde(default)]
    pub sketch_edges: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensors: Option<TensorsRecord>,
    /// Optional data contraction tree as nested arrays of vertex names.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<Value>,
}

/// A parsed network file.
#[derive(Clone, Debug)]
pub struct LoadedNetwork {
    pub network: TensorNetwork,
    pub sketch_edges: Vec<usize>,
    pub tree: Option<ContractionTree>,
}

impl LoadedNetwork {
    pub fn spec(&self, m: usize) -> Result<SketchSpec> {
        SketchSpec::new(self.network.clone(), self.sketch_edges.clone(), m)
    }
}

fn flatten(v: &Value, out: &mut Vec<f64>) -> Result<()> {
    match v {
        Value::Number(n) => {
            out.push(n.as_f64().ok_or_else(|| Error::InvalidNetwork(format!("bad number {n}")))?);
            Ok(())
        }
        Value::Array(items) => items.iter().try_for_each(|x| flatten(x, out)),
        other => Err(Error::InvalidNetwork(format!("expected numbers, found {other}"))),
    }
}

fn network_from_record(rec: &NetworkFile) -> Result<LoadedNetwork> {
    let mut net = TensorNetwork::new();
    for name in &rec.vertices {
        if net.vertex_id(name).is_some() {
            return Err(Error::InvalidNetwork(format!("duplicate vertex `{name}`")));
        }
        net.add_vertex(name.clone());
    }
    for e in &rec.edges {
        if net.edge_id(&e.id).is_some() {
            return Err(Error::InvalidNetwork(format!("duplicate edge `{}`", e.id)));
        }
        let ends = e
            .endpoints
            .iter()
            .map(|n| {
                net.vertex_id(n).ok_or_else(|| Error::InvalidNetwork(format!("edge `{}`: unknown vertex `{n}`", e.id)))
            })
            .collect::<Result<Vec<_>>>()?;
        net.add_edge(e.id.clone(), &ends, e.dangling, e.size)?;
    }
    let sketch_edges = rec
        .sketch_edges
        .iter()
        .map(|n| net.edge_id(n).ok_or_else(|| Error::InvalidNetwork(format!("unknown sketch edge `{n}`"))))
        .collect::<Result<Vec<_>>>()?;
    match &rec.tensors {
        None => {}
        Some(TensorsRecord::Random { random_uniform01 }) => {
            bind_uniform(&mut net, &RandomSource::new(random_uniform01.seed))?;
        }
        Some(TensorsRecord::Inline(map)) => {
            for (name, values) in map {
                let v = net
                    .vertex_id(name)
                    .ok_or_else(|| Error::InvalidNetwork(format!("tensor for unknown vertex `{name}`")))?;
                let mut data = Vec::new();
                flatten(values, &mut data)?;
                net.bind(v, data)?;
            }
        }
    }
    let tree = match &rec.tree {
        Some(t) => Some(ContractionTree::from_nested(t, &|s| net.vertex_id(s))?),
        None => None,
    };
    Ok(LoadedNetwork { network: net, sketch_edges, tree })
}

pub fn parse_network(text: &str) -> Result<LoadedNetwork> {
    let rec: NetworkFile = serde_json::from_str(text)?;
    network_from_record(&rec)
}

pub fn load_network(path: &Path) -> Result<LoadedNetwork> {
    parse_network(&std::fs::read_to_string(path)?)
}

/// Serialize a network. Bound tensors are written inline.
pub fn network_to_record(net: &TensorNetwork, sketch_edges: &[usize], tree: Option<&ContractionTree>) -> NetworkFile {
    let edges = net
        .edges()
        .iter()
        .map(|e| EdgeRecord {
            id: e.name.clone(),
            endpoints: e.endpoints.iter().map(|&v| net.vertex_name(v).to_string()).collect(),
            dangling: e.dangling,
            size: e.size,
        })
        .collect();
    let tensors = if net.is_bound() {
        let map = (0..net.num_vertices())
            .map(|v| (net.vertex_name(v).to_string(), serde_json::json!(net.tensor(v).unwrap().data())))
            .collect();
        Some(TensorsRecord::Inline(map))
    } else {
        None
    };
    NetworkFile {
        vertices: net.vertex_names().to_vec(),
        edges,
        sketch_edges: sketch_edges.iter().map(|&e| net.edge(e).name.clone()).collect(),
        tensors,
        tree: tree.map(|t| t.to_nested(&|v| net.vertex_name(v).to_string())),
    }
}

/// Parse a nested-array tree over the named vertices of `net`.
pub fn parse_tree(text: &str, net: &TensorNetwork) -> Result<ContractionTree> {
    let v: Value = serde_json::from_str(text)?;
    ContractionTree::from_nested(&v, &|s| net.vertex_id(s))
}

pub fn load_tree(path: &Path, net: &TensorNetwork) -> Result<ContractionTree> {
    parse_tree(&std::fs::read_to_string(path)?, net)
}

pub fn tree_to_json(tree: &ContractionTree, net: &TensorNetwork) -> Value {
    tree.to_nested(&|v| net.vertex_name(v).to_string())
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EmbeddingFile {
    pub kind: String,
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeRecord>,
    /// G_E edges identified with the data sketch edges, in sketch-edge order.
    pub attach: Vec<String>,
    pub output: Vec<String>,
    pub linearization: Vec<String>,
    pub variances: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensors: Option<BTreeMap<String, Vec<f64>>>,
}

pub fn embedding_to_record(emb: &Embedding, tensors: Option<&[DenseTensor]>) -> Result<EmbeddingFile> {
    let g = &emb.network;
    let rec = network_to_record(g, &[], None);
    let kind = serde_json::to_value(emb.kind)?.as_str().unwrap_or_default().to_string();
    let tensors = match tensors {
        Some(ts) => {
            let mut map = BTreeMap::new();
            for (k, t) in ts.iter().enumerate() {
                map.insert(g.vertex_name(k).to_string(), t.permute(g.incidence(k))?.into_data());
            }
            Some(map)
        }
        None => None,
    };
    Ok(EmbeddingFile {
        kind,
        vertices: rec.vertices,
        edges: rec.edges,
        attach: emb.attach.iter().map(|&(e, _)| g.edge(e).name.clone()).collect(),
        output: emb.output.iter().map(|&e| g.edge(e).name.clone()).collect(),
        linearization: emb.linearization.order.iter().map(|&k| g.vertex_name(k).to_string()).collect(),
        variances: emb.variances.clone(),
        tensors,
    })
}

/// Rebuild an embedding (and its tensors, if present) from a dump.
pub fn embedding_from_record(rec: &EmbeddingFile) -> Result<(Embedding, Option<Vec<DenseTensor>>)> {
    let file = NetworkFile {
        vertices: rec.vertices.clone(),
        edges: rec.edges.clone(),
        sketch_edges: vec![],
        tensors: None,
        tree: None,
    };
    let net = network_from_record(&file)?.network;
    let edge = |n: &String| net.edge_id(n).ok_or_else(|| Error::InvalidNetwork(format!("unknown edge `{n}`")));
    let vertex = |n: &String| net.vertex_id(n).ok_or_else(|| Error::InvalidNetwork(format!("unknown vertex `{n}`")));
    let attach = rec.attach.iter().enumerate().map(|(j, n)| edge(n).map(|e| (e, j))).collect::<Result<Vec<_>>>()?;
    let output = rec.output.iter().map(edge).collect::<Result<Vec<_>>>()?;
    let order = rec.linearization.iter().map(vertex).collect::<Result<Vec<_>>>()?;
    let kind: EmbeddingKind = serde_json::from_value(Value::String(rec.kind.clone()))?;
    if rec.variances.len() != net.num_vertices() {
        return Err(Error::InvalidNetwork("one variance per vertex expected".into()));
    }
    let tensors = match &rec.tensors {
        Some(map) => Some(
            (0..net.num_vertices())
                .map(|k| {
                    let data = map
                        .get(net.vertex_name(k))
                        .ok_or_else(|| Error::InvalidNetwork(format!("no tensor for `{}`", net.vertex_name(k))))?;
                    DenseTensor::new(net.incidence(k).to_vec(), net.shape(k), data.clone())
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    let emb = Embedding {
        kind,
        network: net,
        attach,
        output,
        linearization: Linearization { order },
        variances: rec.variances.clone(),
    };
    Ok((emb, tensors))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TensorFile {
    pub modes: Vec<String>,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// Dense tensor with mode names given by `name(label)`.
pub fn tensor_to_record(t: &DenseTensor, name: &dyn Fn(usize) -> String) -> TensorFile {
    TensorFile {
        modes: t.labels().iter().map(|&l| name(l)).collect(),
        shape: t.shape().to_vec(),
        data: t.data().to_vec(),
    }
}

/// Inverse of [`tensor_to_record`]; modes are labelled 0.. in file order.
pub fn tensor_from_record(rec: &TensorFile) -> Result<DenseTensor> {
    DenseTensor::new((0..rec.shape.len()).collect(), rec.shape.clone(), rec.data.clone())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "vertices": ["v1", "v2", "v3"],
        "edges": [
            {"id": "x1", "endpoints": ["v1"], "dangling": true, "size": 4},
            {"id": "r1", "endpoints": ["v1", "v2"], "size": 2},
            {"id": "x2", "endpoints": ["v2"], "dangling": true, "size": 4},
            {"id": "r2", "endpoints": ["v2", "v3"], "size": 2},
            {"id": "x3", "endpoints": ["v3"], "dangling": true, "size": 4}
        ],
        "sketch_edges": ["x1", "x2", "x3"],
        "tensors": {"random_uniform01": {"seed": 3}},
        "tree": [["v1", "v2"], "v3"]
    }"#;

    #[test]
    fn parse_sample() {
        let l = parse_network(SAMPLE).unwrap();
        assert_eq!(l.network.num_vertices(), 3);
        assert_eq!(l.sketch_edges, vec![0, 2, 4]);
        assert!(l.network.is_bound());
        assert_eq!(l.network.shape(1), vec![2, 4, 2]);
        assert_eq!(l.tree.unwrap().num_contractions(), 2);
    }

    #[test]
    fn network_roundtrip_is_exact() {
        let l = parse_network(SAMPLE).unwrap();
        let rec = network_to_record(&l.network, &l.sketch_edges, l.tree.as_ref());
        let text = serde_json::to_string(&rec).unwrap();
        let back = parse_network(&text).unwrap();
        for v in 0..3 {
            assert_eq!(back.network.tensor(v).unwrap().data(), l.network.tensor(v).unwrap().data());
        }
        assert_eq!(back.tree, l.tree);
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_network("{\n  \"vertices\": [\"a\",\n  }").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let bad = r#"{"vertices":["a"],"edges":[{"id":"e","endpoints":["b"],"size":2}]}"#;
        assert!(matches!(parse_network(bad), Err(Error::InvalidNetwork(_))));
    }

    #[test]
    fn inline_nested_tensors() {
        let text = r#"{"vertices":["a"],"edges":[{"id":"i","endpoints":["a"],"dangling":true,"size":2},
            {"id":"j","endpoints":["a"],"dangling":true,"size":3}],
            "tensors":{"a":[[1,2,3],[4,5,6]]}}"#;
        let l = parse_network(text).unwrap();
        assert_eq!(l.network.tensor(0).unwrap().get(&[1, 2]), 6.0);
    }
}
