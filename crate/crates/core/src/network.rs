//! Hypergraph tensor networks and pairwise contraction.

use crate::error::{Error, Result};
use crate::flops::Flops;
use crate::set::VertexSet;
use crate::tensor::{DenseTensor, Label};

/// Default entry limit for dense materialization.
pub const DENSE_LIMIT: u128 = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct Hyperedge {
    pub name: String,
    pub endpoints: Vec<usize>,
    /// True iff the edge has one free end (an output mode).
    pub dangling: bool,
    pub size: usize,
}

impl Hyperedge {
    pub fn log_weight(&self) -> f64 {
        (self.size as f64).ln()
    }
}

#[derive(Clone, Debug, Default)]
pub struct TensorNetwork {
    names: Vec<String>,
    edges: Vec<Hyperedge>,
    incidence: Vec<Vec<usize>>,
    tensors: Vec<Option<DenseTensor>>,
}

impl TensorNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, name: impl Into<String>) -> usize {
        self.names.push(name.into());
        self.incidence.push(Vec::new());
        self.tensors.push(None);
        self.names.len() - 1
    }

    pub fn add_edge(
        &mut self,
        name: impl Into<String>,
        endpoints: &[usize],
        dangling: bool,
        size: usize,
    ) -> Result<usize> {
        let name = name.into();
        if endpoints.is_empty() {
            return Err(Error::InvalidNetwork(format!("edge `{name}` has no endpoints")));
        }
        if size == 0 {
            return Err(Error::InvalidNetwork(format!("edge `{name}` has size 0")));
        }
        for (i, &v) in endpoints.iter().enumerate() {
            if v >= self.names.len() {
                return Err(Error::InvalidNetwork(format!("edge `{name}` has unknown endpoint {v}")));
            }
            if endpoints[..i].contains(&v) {
                return Err(Error::InvalidNetwork(format!("edge `{name}` repeats endpoint {v}")));
            }
        }
        let id = self.edges.len();
        for &v in endpoints {
            self.incidence[v].push(id);
            self.tensors[v] = None;
        }
        self.edges.push(Hyperedge { name, endpoints: endpoints.to_vec(), dangling, size });
        Ok(id)
    }

    pub fn num_vertices(&self) -> usize {
        self.names.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: usize) -> &Hyperedge {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[Hyperedge] {
        &self.edges
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.names
    }

    pub fn vertex_id(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn edge_id(&self, name: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.name == name)
    }

    /// Incident edges of `v` in declared mode order.
    pub fn incidence(&self, v: usize) -> &[usize] {
        &self.incidence[v]
    }

    pub fn shape(&self, v: usize) -> Vec<usize> {
        self.incidence[v].iter().map(|&e| self.edges[e].size).collect()
    }

    pub fn dangling_edges(&self) -> Vec<usize> {
        (0..self.edges.len()).filter(|&e| self.edges[e].dangling).collect()
    }

    pub fn all_vertices(&self) -> VertexSet {
        VertexSet::range(0, self.names.len())
    }

    /// Bind values given in the vertex's declared mode order.
    pub fn bind(&mut self, v: usize, values: Vec<f64>) -> Result<()> {
        let t = DenseTensor::new(self.incidence[v].clone(), self.shape(v), values)?;
        self.tensors[v] = Some(t);
        Ok(())
    }

    /// Bind a labelled tensor; its modes are reordered to the declared order.
    pub fn bind_tensor(&mut self, v: usize, t: DenseTensor) -> Result<()> {
        let inc = &self.incidence[v];
        if t.order() != inc.len() || !inc.iter().all(|l| t.labels().contains(l)) {
            return Err(Error::InvalidNetwork(format!(
                "tensor modes {:?} do not match incidence {:?} of `{}`",
                t.labels(),
                inc,
                self.names[v]
            )));
        }
        for (&l, &s) in t.labels().iter().zip(t.shape()) {
            if self.edges[l].size != s {
                return Err(Error::InvalidNetwork(format!(
                    "mode `{}` of `{}` has size {s}, expected {}",
                    self.edges[l].name, self.names[v], self.edges[l].size
                )));
            }
        }
        self.tensors[v] = Some(t.permute(inc)?);
        Ok(())
    }

    pub fn tensor(&self, v: usize) -> Option<&DenseTensor> {
        self.tensors[v].as_ref()
    }

    pub fn tensor_mut(&mut self, v: usize) -> Option<&mut DenseTensor> {
        self.tensors[v].as_mut()
    }

    pub fn is_bound(&self) -> bool {
        self.tensors.iter().all(|t| t.is_some())
    }

    /// Edges of `set` that stay open after fusing it into one vertex.
    pub fn open_edges(&self, set: &VertexSet) -> Vec<usize> {
        let mut out = Vec::new();
        for v in set.iter() {
            for &e in &self.incidence[v] {
                if out.contains(&e) {
                    continue;
                }
                let edge = &self.edges[e];
                if edge.dangling || edge.endpoints.iter().any(|u| !set.contains(*u)) {
                    out.push(e);
                }
            }
        }
        out
    }

    /// Multiply-add count of contracting the fused groups `a` and `b`.
    pub fn pair_size(&self, a: &VertexSet, b: &VertexSet) -> Flops {
        let mut modes = self.open_edges(a);
        for e in self.open_edges(b) {
            if !modes.contains(&e) {
                modes.push(e);
            }
        }
        Flops::product(modes.iter().map(|&e| self.edges[e].size))
    }
}

/// Execution state of a sequence of pairwise contractions over one network.
pub struct ContractionState<'a> {
    net: &'a TensorNetwork,
    owner: Vec<usize>,
    groups: Vec<Option<(VertexSet, Option<DenseTensor>)>>,
}

impl<'a> ContractionState<'a> {
    pub fn new(net: &'a TensorNetwork) -> Self {
        let groups = (0..net.num_vertices()).map(|v| Some((VertexSet::singleton(v), net.tensors[v].clone()))).collect();
        ContractionState { net, owner: (0..net.num_vertices()).collect(), groups }
    }

    fn group_of(&self, set: &VertexSet) -> Result<usize> {
        let first = set.first().ok_or_else(|| Error::InvalidContraction("empty operand".into()))?;
        if first >= self.owner.len() {
            return Err(Error::InvalidContraction(format!("unknown vertex {first}")));
        }
        let g = self.owner[first];
        match &self.groups[g] {
            Some((s, _)) if s == set => Ok(g),
            _ => Err(Error::InvalidContraction(format!("{set:?} is not a current operand"))),
        }
    }

    /// Contract two current operands and fuse them. Returns the flop count.
    pub fn contract_pair(&mut self, a: &VertexSet, b: &VertexSet) -> Result<Flops> {
        if !a.is_disjoint(b) {
            return Err(Error::InvalidContraction("operands overlap".into()));
        }
        let ga = self.group_of(a)?;
        let gb = self.group_of(b)?;
        let (_, ta) = self.groups[ga].take().unwrap();
        let (_, tb) = self.groups[gb].take().unwrap();
        let missing = |s: &VertexSet| {
            let v = s.iter().find(|&v| self.net.tensors[v].is_none()).unwrap_or(s.first().unwrap());
            Error::MissingOperand(self.net.names[v].clone())
        };
        let ta = match ta {
            Some(t) => t,
            None => return Err(missing(a)),
        };
        let tb = match tb {
            Some(t) => t,
            None => return Err(missing(b)),
        };
        let union = a.union(b);
        let keep: Vec<Label> = ta
            .labels()
            .iter()
            .copied()
            .filter(|l| tb.labels().contains(l))
            .filter(|&l| {
                let e = &self.net.edges[l];
                e.dangling || e.endpoints.iter().any(|u| !union.contains(*u))
            })
            .collect();
        let (t, flops) = ta.contract(&tb, &keep)?;
        for v in union.iter() {
            self.owner[v] = ga;
        }
        self.groups[ga] = Some((union, Some(t)));
        Ok(flops)
    }

    pub fn tensor(&self, set: &VertexSet) -> Option<&DenseTensor> {
        let g = self.group_of(set).ok()?;
        self.groups[g].as_ref().and_then(|(_, t)| t.as_ref())
    }

    pub fn operands(&self) -> Vec<VertexSet> {
        self.groups.iter().flatten().map(|(s, _)| s.clone()).collect()
    }

    /// The single remaining tensor once everything has been fused.
    pub fn finish(mut self) -> Result<DenseTensor> {
        let live: Vec<usize> = (0..self.groups.len()).filter(|&g| self.groups[g].is_some()).collect();
        if live.len() != 1 {
            return Err(Error::InvalidContraction(format!("{} operands remain", live.len())));
        }
        let (s, t) = self.groups[live[0]].take().unwrap();
        t.ok_or_else(|| Error::MissingOperand(self.net.names[s.first().unwrap()].clone()))
    }
}

/// Greedy pairwise schedule: repeatedly contract the connected pair with the
/// smallest multiply-add count (ties: smallest output, then lowest indices).
pub fn greedy_path(net: &TensorNetwork) -> Vec<(VertexSet, VertexSet)> {
    let mut groups: Vec<(VertexSet, Vec<usize>)> = (0..net.num_vertices())
        .map(|v| {
            let s = VertexSet::singleton(v);
            let open = net.open_edges(&s);
            (s, open)
        })
        .collect();
    let mut path = Vec::new();
    while groups.len() > 1 {
        let mut best: Option<(bool, Flops, Flops, usize, usize)> = None;
        for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                let connected = groups[i].1.iter().any(|e| groups[j].1.contains(e));
                let mut modes = groups[i].1.clone();
                for &e in &groups[j].1 {
                    if !modes.contains(&e) {
                        modes.push(e);
                    }
                }
                let cost = Flops::product(modes.iter().map(|&e| net.edge(e).size));
                let union = groups[i].0.union(&groups[j].0);
                let out = Flops::product(net.open_edges(&union).iter().map(|&e| net.edge(e).size));
                let key = (!connected, cost, out, i, j);
                if best.as_ref().is_none_or(|b| key < *b) {
                    best = Some(key);
                }
            }
        }
        let (_, _, _, i, j) = best.unwrap();
        let (bj, _) = groups.remove(j);
        let bi = groups[i].0.clone();
        let union = bi.union(&bj);
        path.push((bi, bj));
        let open = net.open_edges(&union);
        groups[i] = (union, open);
    }
    path
}

/// Contract a whole bound network with the greedy schedule.
pub fn contract_all(net: &TensorNetwork) -> Result<(DenseTensor, Flops)> {
    if net.num_vertices() == 0 {
        return Err(Error::InvalidNetwork("empty network".into()));
    }
    let mut st = ContractionState::new(net);
    let mut total = Flops::zero();
    for (a, b) in greedy_path(net) {
        total += st.contract_pair(&a, &b)?;
    }
    if net.num_vertices() == 1 {
        let t = net.tensor(0).ok_or_else(|| Error::MissingOperand(net.vertex_name(0).to_string()))?;
        return Ok((t.clone(), total));
    }
    Ok((st.finish()?, total))
}

/// Euclidean norm of the represented tensor, from the network contracted
/// against a copy of itself over every dangling mode.
pub fn tn_norm(net: &TensorNetwork) -> Result<f64> {
    let n = net.num_vertices();
    let mut dbl = TensorNetwork::new();
    for v in 0..n {
        dbl.add_vertex(net.vertex_name(v));
    }
    for v in 0..n {
        dbl.add_vertex(format!("{}'", net.vertex_name(v)));
    }
    let mut copy_of = vec![0usize; net.num_edges()];
    let mut orig_of = vec![0usize; net.num_edges()];
    for (e, edge) in net.edges().iter().enumerate() {
        if edge.dangling {
            let mut ends = edge.endpoints.clone();
            ends.extend(edge.endpoints.iter().map(|&u| u + n));
            let id = dbl.add_edge(edge.name.clone(), &ends, false, edge.size)?;
            orig_of[e] = id;
            copy_of[e] = id;
        } else {
            orig_of[e] = dbl.add_edge(edge.name.clone(), &edge.endpoints, false, edge.size)?;
            let ends: Vec<usize> = edge.endpoints.iter().map(|&u| u + n).collect();
            copy_of[e] = dbl.add_edge(format!("{}'", edge.name), &ends, false, edge.size)?;
        }
    }
    for v in 0..n {
        let t = net.tensor(v).ok_or_else(|| Error::MissingOperand(net.vertex_name(v).to_string()))?;
        let mut a = t.clone();
        a.relabel(|l| orig_of[l]);
        dbl.bind_tensor(v, a)?;
        let mut b = t.clone();
        b.relabel(|l| copy_of[l]);
        dbl.bind_tensor(v + n, b)?;
    }
    let (t, _) = contract_all(&dbl)?;
    Ok(t.data()[0].max(0.0).sqrt())
}

/// Dense tensor represented by the network, modes in `order` (default: the
/// dangling edges in index order).
pub fn materialize_network(net: &TensorNetwork, order: Option<&[usize]>, limit: u128) -> Result<DenseTensor> {
    let dangling = net.dangling_edges();
    let entries: u128 = dangling.iter().map(|&e| net.edge(e).size as u128).product();
    if entries > limit {
        return Err(Error::OracleTooLarge { entries, limit });
    }
    let (t, _) = contract_all(net)?;
    let order = order.map(|o| o.to_vec()).unwrap_or(dangling);
    t.permute(&order)
}
