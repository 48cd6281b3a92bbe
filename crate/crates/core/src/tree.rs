//! Labeled decision trees, rootings, and the allocations they induce.
//!
//! Vertices and labels are 1-based. A tree on `v` vertices has `v - 1` edges
//! whose labels are exactly `1..=v-1`; in the piece-grab scenario vertices are
//! boxes and labels are players, in the player-swallow scenario the roles swap.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Edge `{u, w}` with `u < w`, carrying a label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TreeEdge {
    pub u: usize,
    pub w: usize,
    pub label: usize,
}

impl TreeEdge {
    /// Canonicalizes the endpoint order.
    pub fn new(a: usize, b: usize, label: usize) -> Self {
        TreeEdge {
            u: a.min(b),
            w: a.max(b),
            label,
        }
    }

    pub fn other(&self, end: usize) -> usize {
        if end == self.u {
            self.w
        } else {
            self.u
        }
    }

    pub fn touches(&self, vertex: usize) -> bool {
        self.u == vertex || self.w == vertex
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledTree {
    vertices: usize,
    edges: Vec<TreeEdge>,
}

impl LabeledTree {
    /// Builds a tree whose labels are `1..=vertices-1`; edges are stored sorted by label.
    pub fn new(vertices: usize, edges: Vec<TreeEdge>) -> Result<Self> {
        let labels: Vec<usize> = (1..vertices.max(1)).collect();
        let triples: Vec<(usize, usize, usize)> = edges.iter().map(|e| (e.u, e.w, e.label)).collect();
        if !is_labeled_spanning_tree(&triples, vertices, &labels) {
            return Err(Error::Invalid(format!(
                "edges {triples:?} do not form a labeled spanning tree on {vertices} vertices"
            )));
        }
        let mut edges: Vec<TreeEdge> = edges.into_iter().map(|e| TreeEdge::new(e.u, e.w, e.label)).collect();
        edges.sort_by_key(|e| e.label);
        Ok(LabeledTree { vertices, edges })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[TreeEdge] {
        &self.edges
    }

    /// Edge carrying `label`.
    pub fn edge(&self, label: usize) -> Option<&TreeEdge> {
        self.edges.get(label.wrapping_sub(1)).filter(|e| e.label == label)
    }

    fn adjacency(&self) -> Vec<Vec<TreeEdge>> {
        let mut adj = vec![Vec::new(); self.vertices + 1];
        for e in &self.edges {
            adj[e.u].push(*e);
            adj[e.w].push(*e);
        }
        adj
    }
}

/// True iff the edges form a spanning tree on `1..=vertex_count` and their labels
/// are a bijection onto `label_set`.
pub fn is_labeled_spanning_tree(edges: &[(usize, usize, usize)], vertex_count: usize, label_set: &[usize]) -> bool {
    if vertex_count == 0 || edges.len() + 1 != vertex_count {
        return false;
    }
    let wanted: BTreeSet<usize> = label_set.iter().copied().collect();
    let got: BTreeSet<usize> = edges.iter().map(|e| e.2).collect();
    if wanted.len() != label_set.len() || got.len() != edges.len() || wanted != got {
        return false;
    }
    let mut dsu = Dsu::new(vertex_count + 1);
    for &(a, b, _) in edges {
        if a == b || a == 0 || b == 0 || a > vertex_count || b > vertex_count {
            return false;
        }
        if !dsu.union(a, b) {
            return false;
        }
    }
    // v - 1 acyclic edges on v vertices are connected.
    true
}

/// For every non-root vertex, the first edge on its path to `root`.
///
/// The result is a bijection from `V \ {root}` onto the edge set.
pub fn root_tree(tree: &LabeledTree, root: usize) -> Result<BTreeMap<usize, TreeEdge>> {
    if root == 0 || root > tree.vertices {
        return Err(Error::OutOfRange {
            index: root,
            max: tree.vertices,
        });
    }
    let adj = tree.adjacency();
    let mut parent = BTreeMap::new();
    let mut seen = vec![false; tree.vertices + 1];
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(v) = queue.pop_front() {
        for e in &adj[v] {
            let child = e.other(v);
            if !seen[child] {
                seen[child] = true;
                parent.insert(child, *e);
                queue.push_back(child);
            }
        }
    }
    Ok(parent)
}

/// Probabilities that each endpoint of an edge is the one assigned to it, with the
/// root drawn uniformly from the vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeChoice {
    pub edge: TreeEdge,
    /// Number of roots for which `edge.u` is the assigned endpoint.
    pub roots_u: usize,
    pub roots_w: usize,
    pub p_u: f64,
    pub p_w: f64,
}

/// Endpoint `u` of `{u, w}` is assigned exactly when the root lies on `w`'s side,
/// so `p_u = |component of w after deleting the edge| / v`.
pub fn tree_choice_probabilities(tree: &LabeledTree) -> Vec<EdgeChoice> {
    let v = tree.vertices;
    let adj = tree.adjacency();
    tree.edges
        .iter()
        .map(|e| {
            let side_w = component_size(&adj, e.w, e);
            let side_u = v - side_w;
            EdgeChoice {
                edge: *e,
                roots_u: side_w,
                roots_w: side_u,
                p_u: side_w as f64 / v as f64,
                p_w: side_u as f64 / v as f64,
            }
        })
        .collect()
}

fn component_size(adj: &[Vec<TreeEdge>], start: usize, removed: &TreeEdge) -> usize {
    let mut stack = vec![(start, 0usize)];
    let mut size = 0;
    while let Some((v, from)) = stack.pop() {
        size += 1;
        for e in &adj[v] {
            if e == removed {
                continue;
            }
            let next = e.other(v);
            if next != from {
                stack.push((next, v));
            }
        }
    }
    size
}

/// Allocation for one dragon action: agent → box (scenario 1) or survivor → box (scenario 2).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    /// The grabbed box (piece-grab) or the swallowed player (player-swallow).
    pub dragon: usize,
    pub map: BTreeMap<usize, usize>,
}

#[derive(Clone)]
pub(crate) struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    pub(crate) fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already connected.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> LabeledTree {
        LabeledTree::new(3, vec![TreeEdge::new(1, 2, 1), TreeEdge::new(2, 3, 2)]).unwrap()
    }

    fn star(v: usize) -> LabeledTree {
        LabeledTree::new(v, (2..=v).map(|k| TreeEdge::new(1, k, k - 1)).collect()).unwrap()
    }

    #[test]
    fn spanning_tree_predicate() {
        assert!(is_labeled_spanning_tree(&[(1, 2, 1), (2, 3, 2)], 3, &[1, 2]));
        assert!(!is_labeled_spanning_tree(&[(1, 2, 1), (1, 2, 2)], 3, &[1, 2]));
        assert!(!is_labeled_spanning_tree(
            &[(1, 2, 1), (2, 3, 2), (3, 1, 3)],
            3,
            &[1, 2, 3]
        ));
        // labels must biject
        assert!(!is_labeled_spanning_tree(&[(1, 2, 1), (2, 3, 1)], 3, &[1, 2]));
        assert!(!is_labeled_spanning_tree(&[(1, 2, 1), (2, 3, 3)], 3, &[1, 2]));
        assert!(!is_labeled_spanning_tree(&[(1, 1, 1), (2, 3, 2)], 3, &[1, 2]));
        assert!(is_labeled_spanning_tree(&[], 1, &[]));
    }

    #[test]
    fn rooting_path_at_center_and_end() {
        let t = path3();
        let at2 = root_tree(&t, 2).unwrap();
        assert_eq!(at2[&1], TreeEdge::new(1, 2, 1));
        assert_eq!(at2[&3], TreeEdge::new(2, 3, 2));
        let at1 = root_tree(&t, 1).unwrap();
        assert_eq!(at1[&2], TreeEdge::new(1, 2, 1));
        assert_eq!(at1[&3], TreeEdge::new(2, 3, 2));
        assert!(matches!(root_tree(&t, 4), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn rooting_star_at_leaf() {
        let at2 = root_tree(&star(4), 2).unwrap();
        assert_eq!(at2[&1], TreeEdge::new(1, 2, 1));
        assert_eq!(at2[&3], TreeEdge::new(1, 3, 2));
        assert_eq!(at2[&4], TreeEdge::new(1, 4, 3));
        assert!(!at2.contains_key(&2));
    }

    #[test]
    fn path_probabilities() {
        let probs = tree_choice_probabilities(&path3());
        assert_eq!(probs[0].edge, TreeEdge::new(1, 2, 1));
        assert_eq!((probs[0].p_u, probs[0].p_w), (2.0 / 3.0, 1.0 / 3.0));
        assert_eq!((probs[0].roots_u, probs[0].roots_w), (2, 1));
    }

    #[test]
    fn single_edge_and_star_probabilities() {
        let t = LabeledTree::new(2, vec![TreeEdge::new(1, 2, 1)]).unwrap();
        let p = &tree_choice_probabilities(&t)[0];
        assert_eq!((p.p_u, p.p_w), (0.5, 0.5));
        for v in 3..7 {
            for c in tree_choice_probabilities(&star(v)) {
                assert_eq!(c.edge.u, 1);
                assert_eq!(c.roots_u, 1);
                assert_eq!(c.p_w, (v - 1) as f64 / v as f64);
            }
        }
    }

    #[test]
    fn tree_rejects_bad_edges() {
        assert!(LabeledTree::new(3, vec![TreeEdge::new(1, 2, 1), TreeEdge::new(1, 2, 2)]).is_err());
        let t = LabeledTree::new(3, vec![TreeEdge::new(3, 2, 2), TreeEdge::new(2, 1, 1)]).unwrap();
        assert_eq!(t.edge(1), Some(&TreeEdge::new(1, 2, 1)));
        assert_eq!(t.edges()[1], TreeEdge { u: 2, w: 3, label: 2 });
    }
}
