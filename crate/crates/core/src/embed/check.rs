//! Row-size condition: an embedding is accurate when some linearization gives
//! every tensor an effective sketch row size of at least m.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flops::Flops;
use crate::plan::Linearization;

use super::Embedding;

/// Row size of every vertex under `order`: the product of its output edges
/// and its edges to vertices placed later. Attach edges are inputs.
pub fn row_sizes(emb: &Embedding, order: &[usize]) -> Result<Vec<Flops>> {
    let n = emb.num_vertices();
    if order.len() != n {
        return Err(Error::InvalidArgument(format!("ordering has {} of {} vertices", order.len(), n)));
    }
    let mut pos = vec![usize::MAX; n];
    for (p, &k) in order.iter().enumerate() {
        if k >= n || pos[k] != usize::MAX {
            return Err(Error::InvalidArgument(format!("ordering {order:?} is not a permutation")));
        }
        pos[k] = p;
    }
    let net = &emb.network;
    (0..n)
        .map(|k| {
            let mut row = Flops::one();
            for &e in net.incidence(k) {
                let edge = net.edge(e);
                if edge.endpoints.len() > 2 {
                    return Err(Error::NotAGraphEmbedding(edge.name.clone()));
                }
                if emb.is_attach(e) {
                    continue;
                }
                let later = edge.endpoints.iter().any(|&u| u != k && pos[u] > pos[k]);
                if edge.dangling || later {
                    row = row * Flops::from_u64(edge.size as u64);
                }
            }
            Ok(row)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub satisfied: bool,
    /// Ordering that satisfies the condition, if found.
    pub witness: Option<Vec<usize>>,
    /// Vertices below m under the reverse-BFS ordering when unsatisfied.
    pub failing: Vec<usize>,
}

fn reverse_bfs(emb: &Embedding) -> Vec<usize> {
    let net = &emb.network;
    let n = net.num_vertices();
    let start = emb.output.first().map(|&e| net.edge(e).endpoints[0]).unwrap_or(0);
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    if n > 0 {
        seen[start] = true;
        queue.push_back(start);
    }
    while let Some(k) = queue.pop_front() {
        order.push(k);
        for &e in net.incidence(k) {
            let edge = net.edge(e);
            if edge.endpoints.len() != 2 {
                continue;
            }
            for &u in &edge.endpoints {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
    }
    order.extend((0..n).filter(|&k| !seen[k]));
    order.reverse();
    order
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

pub fn check_sufficient_condition(emb: &Embedding, m: usize) -> Result<ConditionReport> {
    let mf = Flops::from_u64(m as u64);
    let passes = |order: &[usize]| -> Result<(bool, Vec<usize>)> {
        let rows = row_sizes(emb, order)?;
        let failing: Vec<usize> = (0..rows.len()).filter(|&k| rows[k] < mf).collect();
        Ok((failing.is_empty(), failing))
    };
    let heuristic = reverse_bfs(emb);
    let (ok, failing) = passes(&heuristic)?;
    if ok {
        return Ok(ConditionReport { satisfied: true, witness: Some(heuristic), failing });
    }
    let recorded = &emb.linearization.order;
    if recorded.len() == emb.num_vertices() && passes(recorded)?.0 {
        return Ok(ConditionReport { satisfied: true, witness: Some(recorded.clone()), failing: vec![] });
    }
    if emb.num_vertices() <= 8 {
        let mut p: Vec<usize> = (0..emb.num_vertices()).collect();
        loop {
            if passes(&p)?.0 {
                return Ok(ConditionReport { satisfied: true, witness: Some(p), failing: vec![] });
            }
            if !next_permutation(&mut p) {
                break;
            }
        }
    }
    Ok(ConditionReport { satisfied: false, witness: None, failing })
}

impl ConditionReport {
    pub fn linearization(&self) -> Option<Linearization> {
        self.witness.clone().map(|order| Linearization { order })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_enumerate_all() {
        let mut p = vec![0, 1, 2, 3];
        let mut n = 1;
        while next_permutation(&mut p) {
            n += 1;
        }
        assert_eq!(n, 24);
    }
}
