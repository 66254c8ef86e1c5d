//! Kronecker stage plus one small network per S contraction.

use crate::bounds::{labels_of, stt_with, ContractionLabels, SketchPoint};
use crate::error::{Error, Result};
use crate::network::TensorNetwork;
use crate::plan::{classify_contractions, Classification, ContractionKind, ContractionTree, Linearization};
use crate::set::VertexSet;
use crate::sketch::SketchSpec;

use super::{Embedding, EmbeddingKind, PlanStep, SketchPlan, StepRole};

/// How an S contraction merges its two sketch modes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MergeShape {
    /// v1 = (m_small, α, m) and v2 = (m, β, m_out) with the large side's
    /// sketch mode split as α × β; every row is at least m. Falls back to a
    /// single tensor when that is cheaper.
    #[default]
    Split,
    /// v1 = (m_small, m_large, α) and v2 = (α, m_out). Rank of the merge is α.
    Compact,
    /// One order-3 tensor (m_small, m_large, m_out).
    Single,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Alg1Options {
    pub shape: MergeShape,
    /// Force the internal edge α to m.
    pub strict: bool,
}

/// Internal edge size α = clamp(round(√(c·m/b)), 1, m) when a ≤ c, and
/// √(a·m/b) otherwise.
pub fn zi_internal_edge(l: &ContractionLabels, m: usize) -> usize {
    let large = if l.a <= l.c { &l.c } else { &l.a };
    let x = (0.5 * (large.ln() + (m as f64).ln() - l.b.ln())).exp();
    let r = if x.is_finite() { x.round() } else { m as f64 };
    (r.min(m as f64) as usize).clamp(1, m)
}

/// The divisor of m nearest to [`zi_internal_edge`] on a log scale, so the
/// large side's mode splits exactly as α × m/α. Ties go to the smaller one.
/// The default builder tries both this and the rounded rule.
pub fn zi_split_factor(l: &ContractionLabels, m: usize) -> usize {
    let target = (zi_internal_edge(l, m) as f64).ln();
    (1..=m)
        .filter(|d| m.is_multiple_of(*d))
        .min_by(|&x, &y| ((x as f64).ln() - target).abs().total_cmp(&((y as f64).ln() - target).abs()))
        .unwrap_or(1)
}

struct Operand {
    set: VertexSet,
    producer: Option<usize>,
}

struct Builder<'a> {
    spec: &'a SketchSpec,
    nd: usize,
    m: usize,
    net: TensorNetwork,
    attach: Vec<(usize, usize)>,
    ops: Vec<Operand>,
    owner: Vec<usize>,
    steps: Vec<PlanStep>,
    /// Split the large mode with a divisor of m instead of the rounded rule.
    snap: bool,
}

impl<'a> Builder<'a> {
    fn new(spec: &'a SketchSpec) -> Self {
        let nd = spec.n_data();
        Builder {
            spec,
            nd,
            m: spec.m,
            net: TensorNetwork::new(),
            attach: Vec::new(),
            ops: (0..nd).map(|v| Operand { set: VertexSet::singleton(v), producer: None }).collect(),
            owner: (0..nd).collect(),
            steps: Vec::new(),
            snap: false,
        }
    }

    fn vertex(&mut self, name: String) -> usize {
        self.net.add_vertex(name)
    }

    fn link(&mut self, a: usize, b: usize, size: usize) -> Result<()> {
        let name = format!("w{}", self.net.num_edges());
        self.net.add_edge(name, &[a, b], false, size)?;
        Ok(())
    }

    fn operand(&self, data: &VertexSet) -> Result<usize> {
        let v = data.first().ok_or_else(|| Error::InvalidTree("empty operand".into()))?;
        let o = self.owner[v];
        if &self.ops[o].set.intersection(&VertexSet::range(0, self.nd)) != data {
            return Err(Error::InvalidTree(format!("{data:?} is not a current operand")));
        }
        Ok(o)
    }

    fn absorb(&mut self, o: usize, k: usize, role: StepRole) {
        let c = self.nd + k;
        self.steps.push(PlanStep { left: self.ops[o].set.clone(), right: VertexSet::singleton(c), role });
        self.ops[o].set.insert(c);
    }

    fn kronecker(&mut self, j: usize) -> Result<()> {
        let vj = self.spec.sketch_vertex(j);
        let o = self.owner[vj];
        let ename = self.spec.data.edge(self.spec.sketch_edges[j]).name.clone();
        let k = self.vertex(format!("K[{ename}]"));
        let e = self.net.add_edge(ename, &[k], true, self.spec.sketch_size(j))?;
        self.attach.push((e, j));
        self.absorb(o, k, StepRole::Kronecker(j));
        self.ops[o].producer = Some(k);
        Ok(())
    }

    fn join(&mut self, a: usize, b: usize, role: StepRole) -> usize {
        self.steps.push(PlanStep { left: self.ops[a].set.clone(), right: self.ops[b].set.clone(), role });
        let set = self.ops[a].set.union(&self.ops[b].set);
        let producer = self.ops[a].producer.or(self.ops[b].producer);
        for v in set.iter().filter(|&v| v < self.nd) {
            self.owner[v] = a;
        }
        self.ops[a] = Operand { set, producer };
        a
    }

    fn merge(&mut self, i: usize, ou: usize, ov: usize, l: &ContractionLabels, opts: Alg1Options) -> Result<()> {
        let m = self.m;
        let (small, large, own_s, own_l) = if l.a <= l.c { (ou, ov, &l.a, &l.c) } else { (ov, ou, &l.c, &l.a) };
        let ps = self.ops[small].producer;
        let pl = self.ops[large].producer;
        let (ps, pl) = match (ps, pl) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::InvalidTree(format!("contraction {i} merges an unsketched operand"))),
        };
        let mut shape = opts.shape;
        let alpha = if opts.strict {
            m
        } else if self.snap {
            zi_split_factor(l, m)
        } else {
            zi_internal_edge(l, m)
        };
        let beta = m.div_ceil(alpha);
        if shape == MergeShape::Split && !opts.strict {
            let mf = m as u64;
            let base = &(own_s * &l.b) * &l.d;
            let split = base.scale(mf * alpha as u64 * mf)
                + (&base * own_l).scale(alpha as u64 * mf * beta as u64)
                + (&(own_s * own_l) * &l.d).scale(mf * beta as u64 * mf);
            let single = (&base * own_l).scale(mf * mf) + (&(own_s * own_l) * &l.d).scale(mf * mf * mf);
            if single < split {
                shape = MergeShape::Single;
            }
        }
        let role = StepRole::Merge(i);
        match shape {
            MergeShape::Single => {
                let t = self.vertex(format!("T{i}"));
                self.link(ps, t, m)?;
                self.link(pl, t, m)?;
                let o = self.join(small, large, role);
                self.absorb(o, t, role);
                self.ops[o].producer = Some(t);
            }
            MergeShape::Split => {
                let v1 = self.vertex(format!("Z{i}.1"));
                let v2 = self.vertex(format!("Z{i}.2"));
                self.link(ps, v1, m)?;
                if alpha > 1 {
                    self.link(pl, v1, alpha)?;
                }
                self.link(v1, v2, m)?;
                if beta > 1 {
                    self.link(pl, v2, beta)?;
                }
                self.absorb(small, v1, role);
                let o = self.join(small, large, role);
                self.absorb(o, v2, role);
                self.ops[o].producer = Some(v2);
            }
            MergeShape::Compact => {
                let v1 = self.vertex(format!("Z{i}.1"));
                let v2 = self.vertex(format!("Z{i}.2"));
                self.link(ps, v1, m)?;
                self.link(pl, v1, m)?;
                self.link(v1, v2, alpha)?;
                self.absorb(small, v1, role);
                let o = self.join(small, large, role);
                self.absorb(o, v2, role);
                self.ops[o].producer = Some(v2);
            }
        }
        Ok(())
    }
}

pub fn build_alg1_embedding(spec: &SketchSpec, t0: &ContractionTree) -> Result<(Embedding, SketchPlan)> {
    build_alg1_embedding_with(spec, t0, Alg1Options::default())
}

pub fn build_tree_embedding(spec: &SketchSpec, t0: &ContractionTree) -> Result<(Embedding, SketchPlan)> {
    build_alg1_embedding_with(spec, t0, Alg1Options { shape: MergeShape::Single, strict: false })
}

pub fn build_alg1_embedding_with(
    spec: &SketchSpec,
    t0: &ContractionTree,
    opts: Alg1Options,
) -> Result<(Embedding, SketchPlan)> {
    spec.validate()?;
    let cls = classify_contractions(spec, t0)?;
    if spec.n_sketch() == 0 {
        return Err(Error::NothingToSketch);
    }
    let rounded = build_with(spec, &cls, opts, false)?;
    if opts.shape != MergeShape::Split || opts.strict {
        return Ok(rounded);
    }
    // When α·β overshoots m the large side's upstream sketch grows too, which
    // the per-merge comparison does not see. The divisor split never
    // overshoots; keep whichever whole plan is cheaper.
    let snapped = build_with(spec, &cls, opts, true)?;
    Ok(if snapped.1.total_flops < rounded.1.total_flops { snapped } else { rounded })
}

fn build_with(
    spec: &SketchSpec,
    cls: &Classification,
    opts: Alg1Options,
    snap: bool,
) -> Result<(Embedding, SketchPlan)> {
    let m = spec.m;
    let points: Vec<SketchPoint> = (0..spec.n_sketch()).map(|j| stt_with(spec, cls, j, m).1).collect();
    let mut b = Builder::new(spec);
    b.snap = snap;
    for j in 0..spec.n_sketch() {
        if points[j] == SketchPoint::Direct {
            b.kronecker(j)?;
        }
    }
    for (i, (u, v)) in cls.path.iter().enumerate() {
        for j in 0..spec.n_sketch() {
            if points[j] == SketchPoint::Before(i) {
                b.kronecker(j)?;
            }
        }
        let ou = b.operand(u)?;
        let ov = b.operand(v)?;
        match cls.kinds[i] {
            ContractionKind::S => {
                let l = labels_of(spec, u, v);
                b.merge(i, ou, ov, &l, opts)?;
            }
            _ => {
                b.join(ou, ov, StepRole::Data(i));
            }
        }
        for j in 0..spec.n_sketch() {
            if points[j] == SketchPoint::After(i) {
                b.kronecker(j)?;
            }
        }
    }
    let root = b.owner[0];
    let last = b.ops[root].producer.ok_or_else(|| Error::InvalidTree("no sketch reaches the root".into()))?;
    let out = b.net.add_edge("out", &[last], true, m)?;
    let mut attach = b.attach;
    attach.sort_by_key(|&(_, j)| j);
    let n = b.net.num_vertices();
    let kind = if opts.shape == MergeShape::Single { EmbeddingKind::Tree } else { EmbeddingKind::Alg1 };
    let mut emb = Embedding {
        kind,
        network: b.net,
        attach,
        output: vec![out],
        linearization: Linearization { order: (0..n).collect() },
        variances: vec![],
    };
    emb.set_variances_from_rows()?;
    let plan = SketchPlan::new(spec, &emb, b.steps)?;
    Ok((emb, plan))
}
