//! Binary contraction trees.

use serde_json::Value;

use crate::error::{Error, Result};
use crate::set::VertexSet;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNode {
    pub set: VertexSet,
    pub children: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractionTree {
    nodes: Vec<TreeNode>,
    root: usize,
}

impl ContractionTree {
    pub fn leaf(v: usize) -> Self {
        ContractionTree { nodes: vec![TreeNode { set: VertexSet::singleton(v), children: None }], root: 0 }
    }

    /// Left-deep tree contracting `order` from left to right.
    pub fn left_to_right(order: &[usize]) -> Result<Self> {
        let first = *order.first().ok_or_else(|| Error::InvalidTree("no vertices".into()))?;
        let mut t = ContractionTree::leaf(first);
        for &v in &order[1..] {
            if t.nodes[t.root].set.contains(v) {
                return Err(Error::InvalidTree(format!("vertex {v} repeated")));
            }
            let l = t.nodes.len();
            t.nodes.push(TreeNode { set: VertexSet::singleton(v), children: None });
            let set = t.nodes[t.root].set.union(&VertexSet::singleton(v));
            t.nodes.push(TreeNode { set, children: Some((t.root, l)) });
            t.root = l + 1;
        }
        Ok(t)
    }

    /// Tree given as nested two-element arrays of vertex names.
    pub fn from_nested(value: &Value, lookup: &dyn Fn(&str) -> Option<usize>) -> Result<Self> {
        let mut nodes = Vec::new();
        let root = Self::parse_node(value, lookup, &mut nodes)?;
        Ok(ContractionTree { nodes, root })
    }

    fn parse_node(value: &Value, lookup: &dyn Fn(&str) -> Option<usize>, nodes: &mut Vec<TreeNode>) -> Result<usize> {
        match value {
            Value::String(s) => {
                let v = lookup(s).ok_or_else(|| Error::InvalidTree(format!("unknown vertex `{s}`")))?;
                nodes.push(TreeNode { set: VertexSet::singleton(v), children: None });
                Ok(nodes.len() - 1)
            }
            Value::Array(items) if items.len() == 1 => Self::parse_node(&items[0], lookup, nodes),
            Value::Array(items) if items.len() == 2 => {
                let l = Self::parse_node(&items[0], lookup, nodes)?;
                let r = Self::parse_node(&items[1], lookup, nodes)?;
                if !nodes[l].set.is_disjoint(&nodes[r].set) {
                    return Err(Error::InvalidTree("a vertex appears twice".into()));
                }
                let set = nodes[l].set.union(&nodes[r].set);
                nodes.push(TreeNode { set, children: Some((l, r)) });
                Ok(nodes.len() - 1)
            }
            other => Err(Error::InvalidTree(format!("expected a vertex name or a pair, found {other}"))),
        }
    }

    /// Tree from a contraction sequence over `universe`.
    pub fn from_path(universe: &VertexSet, path: &[(VertexSet, VertexSet)]) -> Result<Self> {
        let mut nodes: Vec<TreeNode> =
            universe.iter().map(|v| TreeNode { set: VertexSet::singleton(v), children: None }).collect();
        let mut live: Vec<usize> = (0..nodes.len()).collect();
        for (a, b) in path {
            let find =
                |s: &VertexSet, nodes: &Vec<TreeNode>, live: &Vec<usize>| live.iter().position(|&i| &nodes[i].set == s);
            let ia = find(a, &nodes, &live).ok_or_else(|| Error::InvalidTree(format!("{a:?} is not an operand")))?;
            let na = live.remove(ia);
            let ib = find(b, &nodes, &live).ok_or_else(|| Error::InvalidTree(format!("{b:?} is not an operand")))?;
            let nb = live.remove(ib);
            nodes.push(TreeNode { set: a.union(b), children: Some((na, nb)) });
            live.push(nodes.len() - 1);
        }
        if live.len() != 1 {
            return Err(Error::InvalidTree(format!("{} subtrees remain", live.len())));
        }
        Ok(ContractionTree { root: live[0], nodes })
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[self.root]
    }

    pub fn vertices(&self) -> &VertexSet {
        &self.nodes[self.root].set
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn num_contractions(&self) -> usize {
        self.nodes.iter().filter(|n| n.children.is_some()).count()
    }

    /// Contractions in post-order, left subtree first.
    pub fn path(&self) -> Vec<(VertexSet, VertexSet)> {
        let mut out = Vec::new();
        self.walk(self.root, &mut out);
        out
    }

    fn walk(&self, n: usize, out: &mut Vec<(VertexSet, VertexSet)>) {
        if let Some((l, r)) = self.nodes[n].children {
            self.walk(l, out);
            self.walk(r, out);
            out.push((self.nodes[l].set.clone(), self.nodes[r].set.clone()));
        }
    }

    pub fn to_nested(&self, names: &dyn Fn(usize) -> String) -> Value {
        self.nested(self.root, names)
    }

    fn nested(&self, n: usize, names: &dyn Fn(usize) -> String) -> Value {
        match self.nodes[n].children {
            None => Value::String(names(self.nodes[n].set.first().unwrap())),
            Some((l, r)) => Value::Array(vec![self.nested(l, names), self.nested(r, names)]),
        }
    }
}

/// True iff every contraction (A, B) of `t0` has a contraction (Â, B̂) in
/// `tb` with Â ∩ V_D = A and B̂ ∩ V_D = B, where V_D is the vertex set of `t0`.
pub fn validate_constrained(tb: &ContractionTree, t0: &ContractionTree) -> bool {
    let vd = t0.vertices();
    if !vd.is_subset(tb.vertices()) {
        return false;
    }
    let restricted: Vec<(VertexSet, VertexSet)> =
        tb.path().into_iter().map(|(a, b)| (a.intersection(vd), b.intersection(vd))).collect();
    t0.path().iter().all(|(a, b)| restricted.iter().any(|(x, y)| (x == a && y == b) || (x == b && y == a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn names(s: &str) -> Option<usize> {
        s.strip_prefix('v').and_then(|d| d.parse::<usize>().ok()).map(|i| i - 1)
    }

    #[test]
    fn nested_roundtrip() {
        let v = json!([[["v1", "v2"], "v3"], "v4"]);
        let t = ContractionTree::from_nested(&v, &names).unwrap();
        assert_eq!(t.num_contractions(), 3);
        assert_eq!(t.to_nested(&|i| format!("v{}", i + 1)), v);
        let p = t.path();
        assert_eq!(p[0], (VertexSet::singleton(0), VertexSet::singleton(1)));
        assert_eq!(t, ContractionTree::left_to_right(&[0, 1, 2, 3]).unwrap());
        let again = ContractionTree::from_path(t.vertices(), &p).unwrap();
        assert_eq!(again.path(), p);
    }

    #[test]
    fn rejects_bad_trees() {
        assert!(ContractionTree::from_nested(&json!(["v1", "v1"]), &names).is_err());
        assert!(ContractionTree::from_nested(&json!(["v1", "v2", "v3"]), &names).is_err());
        assert!(ContractionTree::from_nested(&json!(["v1", "x"]), &names).is_err());
    }

    #[test]
    fn constrained_relation() {
        let t0 = ContractionTree::from_nested(&json!([["v1", "v2"], "v3"]), &names).unwrap();
        assert!(validate_constrained(&t0, &t0));
        let swapped = ContractionTree::from_nested(&json!([["v1", "v3"], "v2"]), &names).unwrap();
        assert!(!validate_constrained(&swapped, &t0));
        // v1, v2 each absorb an embedding vertex (3, 4) before merging.
        let tb = ContractionTree::from_nested(&json!([[["v1", "v4"], ["v2", "v5"]], "v3"]), &names).unwrap();
        assert!(validate_constrained(&tb, &t0));
    }
}
