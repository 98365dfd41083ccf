//! Rooted phylogenetic trees whose root is the leaf labelled `0`.
//!
//! Node ids: leaves are `0..=n`, internal nodes `n+1..n+m`. Edge `i` for
//! `i <= n` is the pendant edge of leaf `i`; internal edges follow in the
//! order their lower endpoint is finished in a post-order walk.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

pub type NodeId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("malformed newick at byte {pos}: {msg}")]
    Malformed { pos: usize, msg: String },
    #[error("leaf label {0} occurs more than once")]
    DuplicateLabel(usize),
    #[error("leaf labels must be exactly 0..={max}; {missing} is missing")]
    MissingLabel { max: usize, missing: usize },
    #[error("node {0} has degree 2")]
    DegreeTwo(NodeId),
    #[error("root leaf 0 must be a direct child of the outermost node")]
    RootNotOutermost,
    #[error("tree needs at least 3 leaves")]
    TooSmall,
    #[error("invalid tree structure: {0}")]
    Structure(String),
    #[error("leaf {0} is out of range")]
    LeafOutOfRange(usize),
    #[error("expected two distinct leaves, got {0} twice")]
    SameLeaf(usize),
    #[error("the root leaf 0 is not allowed here")]
    RootLeaf,
    #[error("expected 4 distinct leaves")]
    BadQuartet,
}

/// Ordered edges of the unique tree path between two leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgePath(pub Vec<EdgeId>);

impl EdgePath {
    pub fn edges(&self) -> &[EdgeId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.0.contains(&e)
    }
}

/// Topology induced by a tree on four of its leaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuartetTopology {
    /// Cherries `{a,b} | {c,d}`, each pair sorted and the pair with the smaller
    /// leaf first.
    Split([[usize; 2]; 2]),
    Star,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhyloTree {
    num_leaves: usize,
    edges: Vec<(NodeId, NodeId)>,
    adjacency: Vec<Vec<NodeId>>,
    parent: Vec<Option<NodeId>>,
    parent_edge: Vec<Option<EdgeId>>,
    depth: Vec<usize>,
}

impl PhyloTree {
    /// Builds a tree from its edge list in canonical index order.
    ///
    /// `edges[i]` must contain leaf `i` for every `i < num_leaves`.
    pub fn from_edges(
        num_leaves: usize,
        num_nodes: usize,
        edges: Vec<(NodeId, NodeId)>,
    ) -> Result<Self, TreeError> {
        if num_leaves < 3 {
            return Err(TreeError::TooSmall);
        }
        if edges.len() + 1 != num_nodes {
            return Err(TreeError::Structure(format!(
                "{} nodes need {} edges, got {}",
                num_nodes,
                num_nodes.saturating_sub(1),
                edges.len()
            )));
        }
        let mut adjacency = vec![Vec::new(); num_nodes];
        for (k, &(a, b)) in edges.iter().enumerate() {
            if a >= num_nodes || b >= num_nodes || a == b {
                return Err(TreeError::Structure(format!("bad edge {k}: ({a},{b})")));
            }
            if k < num_leaves && a != k && b != k {
                return Err(TreeError::Structure(format!(
                    "edge {k} must be the pendant edge of leaf {k}"
                )));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for (v, nb) in adjacency.iter_mut().enumerate() {
            nb.sort_unstable();
            if v < num_leaves {
                if nb.len() != 1 {
                    return Err(TreeError::Structure(format!(
                        "leaf {v} has degree {}",
                        nb.len()
                    )));
                }
                if nb[0] < num_leaves {
                    return Err(TreeError::Structure(format!(
                        "leaf {v} is adjacent to a leaf"
                    )));
                }
            } else if nb.len() == 2 {
                return Err(TreeError::DegreeTwo(v));
            } else if nb.len() < 2 {
                return Err(TreeError::Structure(format!(
                    "internal node {v} has degree {}",
                    nb.len()
                )));
            }
        }

        let mut edge_of = alloc::collections::BTreeMap::new();
        for (k, &(a, b)) in edges.iter().enumerate() {
            if edge_of.insert((a.min(b), a.max(b)), k).is_some() {
                return Err(TreeError::Structure(format!("edge ({a},{b}) repeated")));
            }
        }

        let mut parent = vec![None; num_nodes];
        let mut parent_edge = vec![None; num_nodes];
        let mut depth = vec![0usize; num_nodes];
        let mut seen = vec![false; num_nodes];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &w in &adjacency[u] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(u);
                    parent_edge[w] = Some(edge_of[&(u.min(w), u.max(w))]);
                    depth[w] = depth[u] + 1;
                    stack.push(w);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(TreeError::Structure("tree is not connected".into()));
        }

        Ok(PhyloTree {
            num_leaves,
            edges,
            adjacency,
            parent,
            parent_edge,
            depth,
        })
    }

    /// The star tree on leaves `0..=n`.
    pub fn star(n: usize) -> Result<Self, TreeError> {
        let center = n + 1;
        let edges = (0..=n).map(|i| (i, center)).collect();
        Self::from_edges(n + 1, n + 2, edges)
    }

    /// Number of non-root leaves `n`.
    pub fn n(&self) -> usize {
        self.num_leaves - 1
    }

    pub fn num_leaves(&self) -> usize {
        self.num_leaves
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_internal(&self) -> usize {
        self.num_nodes() - self.num_leaves
    }

    pub fn internal_nodes(&self) -> core::ops::Range<NodeId> {
        self.num_leaves..self.num_nodes()
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        v < self.num_leaves
    }

    pub fn is_star(&self) -> bool {
        self.num_internal() == 1
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    pub fn edge(&self, e: EdgeId) -> (NodeId, NodeId) {
        self.edges[e]
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn edge_touches(&self, e: EdgeId, v: NodeId) -> bool {
        let (a, b) = self.edges[e];
        a == v || b == v
    }

    /// Parent of `v` with edges directed away from leaf 0.
    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v]
    }

    pub fn depth(&self, v: NodeId) -> usize {
        self.depth[v]
    }

    fn check_leaf(&self, v: usize) -> Result<(), TreeError> {
        if v >= self.num_leaves {
            Err(TreeError::LeafOutOfRange(v))
        } else {
            Ok(())
        }
    }

    fn node_lca(&self, mut a: NodeId, mut b: NodeId) -> NodeId {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].unwrap();
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].unwrap();
        }
        while a != b {
            a = self.parent[a].unwrap();
            b = self.parent[b].unwrap();
        }
        a
    }

    /// First common node on the paths joining `i` and `j` to the root leaf.
    pub fn lca(&self, i: usize, j: usize) -> Result<NodeId, TreeError> {
        self.check_leaf(i)?;
        self.check_leaf(j)?;
        if i == 0 || j == 0 {
            return Err(TreeError::RootLeaf);
        }
        if i == j {
            return Err(TreeError::SameLeaf(i));
        }
        Ok(self.node_lca(i, j))
    }

    /// Edges on the path between two arbitrary nodes, ordered from `a` to `b`.
    pub fn node_path(&self, a: NodeId, b: NodeId) -> EdgePath {
        let top = self.node_lca(a, b);
        let mut up = Vec::new();
        let mut x = a;
        while x != top {
            up.push(self.parent_edge[x].unwrap());
            x = self.parent[x].unwrap();
        }
        let mut down = Vec::new();
        let mut y = b;
        while y != top {
            down.push(self.parent_edge[y].unwrap());
            y = self.parent[y].unwrap();
        }
        up.extend(down.into_iter().rev());
        EdgePath(up)
    }

    /// The path `a ↭ b` between two distinct leaves.
    pub fn path_edges(&self, a: usize, b: usize) -> Result<EdgePath, TreeError> {
        self.check_leaf(a)?;
        self.check_leaf(b)?;
        if a == b {
            return Err(TreeError::SameLeaf(a));
        }
        Ok(self.node_path(a, b))
    }

    /// Leaves in the subtree hanging below `v`.
    pub fn leaves_below(&self, v: NodeId) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            if self.is_leaf(u) && u != 0 {
                out.push(u);
            }
            for &w in &self.adjacency[u] {
                if self.parent[w] == Some(u) {
                    stack.push(w);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Re-roots at leaf `r`, swapping the labels `0` and `r`.
    ///
    /// Internal node ids and internal edge indices are kept; pendant edges
    /// follow their leaves, so edge indices `0` and `r` swap.
    pub fn reroot(&self, r: usize) -> Result<Rerooted, TreeError> {
        self.check_leaf(r)?;
        let mut leaf_permutation: Vec<usize> = (0..self.num_leaves).collect();
        if r == 0 {
            return Ok(Rerooted {
                tree: self.clone(),
                edge_permutation: (0..self.num_edges()).collect(),
                leaf_permutation,
                identity: true,
            });
        }
        leaf_permutation.swap(0, r);
        let relabel = |v: NodeId| {
            if v == 0 {
                r
            } else if v == r {
                0
            } else {
                v
            }
        };
        let mut edge_permutation: Vec<usize> = (0..self.num_edges()).collect();
        edge_permutation.swap(0, r);
        let mut edges = vec![(0, 0); self.num_edges()];
        for (k, &(a, b)) in self.edges.iter().enumerate() {
            edges[edge_permutation[k]] = (relabel(a), relabel(b));
        }
        let tree = PhyloTree::from_edges(self.num_leaves, self.num_nodes(), edges)?;
        Ok(Rerooted {
            tree,
            leaf_permutation,
            edge_permutation,
            identity: false,
        })
    }

    /// Cherry split of the subtree induced on `q`, found by contracting the
    /// degree-2 nodes of the Steiner subtree spanned by `q`.
    pub fn induced_quartet_cherries(&self, q: [usize; 4]) -> Result<QuartetTopology, TreeError> {
        for &x in &q {
            self.check_leaf(x)?;
        }
        let mut sorted = q;
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(TreeError::BadQuartet);
        }
        let mut uses = vec![0usize; self.num_edges()];
        for a in 0..4 {
            for b in a + 1..4 {
                for &e in self.node_path(sorted[a], sorted[b]).edges() {
                    uses[e] += 1;
                }
            }
        }
        let mut steiner_degree = vec![0usize; self.num_nodes()];
        for (e, &u) in uses.iter().enumerate() {
            if u > 0 {
                let (a, b) = self.edges[e];
                steiner_degree[a] += 1;
                steiner_degree[b] += 1;
            }
        }
        let branching: Vec<NodeId> = (0..self.num_nodes())
            .filter(|&v| steiner_degree[v] >= 3)
            .collect();
        if branching.len() == 1 {
            return Ok(QuartetTopology::Star);
        }
        // Two branching nodes of Steiner degree 3; group leaves by the first
        // branching node met on the way in.
        let first_branch = |leaf: usize| -> NodeId {
            let path = self.node_path(leaf, branching[0]);
            let mut v = leaf;
            for &e in path.edges() {
                let (a, b) = self.edges[e];
                v = if a == v { b } else { a };
                if steiner_degree[v] >= 3 {
                    return v;
                }
            }
            v
        };
        let side: Vec<NodeId> = sorted.iter().map(|&l| first_branch(l)).collect();
        let mut left = Vec::new();
        let mut right = Vec::new();
        for k in 0..4 {
            if side[k] == side[0] {
                left.push(sorted[k]);
            } else {
                right.push(sorted[k]);
            }
        }
        if left.len() != 2 || right.len() != 2 {
            return Err(TreeError::Structure("inconsistent quartet split".into()));
        }
        Ok(QuartetTopology::Split([
            [left[0], left[1]],
            [right[0], right[1]],
        ]))
    }

    /// The internal node adjacent to the root leaf.
    pub fn top(&self) -> NodeId {
        self.adjacency[0][0]
    }

    fn children(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency[v]
            .iter()
            .copied()
            .filter(move |&w| self.parent[w] == Some(v))
    }

    fn min_leaf(&self, v: NodeId) -> usize {
        if self.is_leaf(v) {
            return v;
        }
        self.children(v).map(|c| self.min_leaf(c)).min().unwrap()
    }

    fn write_subtree(&self, v: NodeId, out: &mut String) {
        if self.is_leaf(v) {
            out.push_str(&format!("{v}"));
            return;
        }
        let mut kids: Vec<(usize, NodeId)> =
            self.children(v).map(|c| (self.min_leaf(c), c)).collect();
        kids.sort_unstable();
        out.push('(');
        for (k, &(_, c)) in kids.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            self.write_subtree(c, out);
        }
        if v == self.top() {
            out.push_str(",0");
        }
        out.push(')');
    }

    /// Canonical Newick: children sorted by smallest leaf label, root leaf
    /// last in the outermost group.
    pub fn to_newick(&self) -> String {
        let mut out = String::new();
        self.write_subtree(self.top(), &mut out);
        out.push(';');
        out
    }

    /// The tree re-parsed from its canonical Newick form.
    pub fn canonical(&self) -> PhyloTree {
        parse_newick(&self.to_newick()).expect("canonical newick always parses")
    }
}

impl fmt::Display for PhyloTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_newick())
    }
}

/// Result of [`PhyloTree::reroot`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rerooted {
    pub tree: PhyloTree,
    /// `leaf_permutation[old] = new` label.
    pub leaf_permutation: Vec<usize>,
    /// `edge_permutation[old] = new` edge index.
    pub edge_permutation: Vec<usize>,
    /// Set when `r = 0` was requested and the tree is returned unchanged.
    pub identity: bool,
}

enum RawNode {
    Leaf(usize, usize),
    Inner(Vec<RawNode>),
}

struct NewickParser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl NewickParser<'_> {
    fn err(&self, msg: &str) -> TreeError {
        TreeError::Malformed {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    // Branch lengths carry no meaning here and are skipped.
    fn skip_length(&mut self) -> Result<(), TreeError> {
        if self.peek() == Some(b':') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.bytes.len()
                && matches!(
                    self.bytes[self.pos],
                    b'0'..=b'9' | b'.' | b'-' | b'+' | b'e' | b'E'
                )
            {
                self.pos += 1;
            }
            if self.pos == start {
                return Err(self.err("expected branch length after ':'"));
            }
        }
        Ok(())
    }

    fn subtree(&mut self) -> Result<RawNode, TreeError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let mut kids = vec![self.subtree()?];
                loop {
                    match self.peek() {
                        Some(b',') => {
                            self.pos += 1;
                            kids.push(self.subtree()?);
                        }
                        Some(b')') => {
                            self.pos += 1;
                            break;
                        }
                        _ => return Err(self.err("expected ',' or ')'")),
                    }
                }
                self.skip_length()?;
                Ok(RawNode::Inner(kids))
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let text = core::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
                let label = text
                    .parse::<usize>()
                    .map_err(|_| self.err("leaf label too large"))?;
                self.skip_length()?;
                Ok(RawNode::Leaf(label, start))
            }
            Some(_) => Err(self.err("expected '(' or a leaf label")),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

/// Parses a Newick string whose outermost group is the internal node adjacent
/// to the root leaf `0`, e.g. `((1,2,3),4,0);`.
pub fn parse_newick(text: &str) -> Result<PhyloTree, TreeError> {
    let mut p = NewickParser {
        bytes: text.as_bytes(),
        pos: 0,
    };
    let root = p.subtree()?;
    if p.peek() != Some(b';') {
        return Err(p.err("expected ';'"));
    }
    p.pos += 1;
    if p.peek().is_some() {
        return Err(p.err("trailing characters after ';'"));
    }

    let top_kids = match &root {
        RawNode::Inner(kids) => kids,
        RawNode::Leaf(..) => return Err(TreeError::TooSmall),
    };
    if !top_kids.iter().any(|k| matches!(k, RawNode::Leaf(0, _))) {
        return Err(TreeError::RootNotOutermost);
    }

    let mut labels = Vec::new();
    collect_labels(&root, &mut labels);
    let max = labels.iter().copied().max().unwrap_or(0);
    let mut count = vec![0usize; max + 1];
    for &l in &labels {
        count[l] += 1;
        if count[l] > 1 {
            return Err(TreeError::DuplicateLabel(l));
        }
    }
    if let Some(missing) = count.iter().position(|&c| c == 0) {
        return Err(TreeError::MissingLabel { max, missing });
    }
    let num_leaves = max + 1;
    if num_leaves < 3 {
        return Err(TreeError::TooSmall);
    }

    // Post-order ids for internal nodes; internal edges in the same order.
    let mut next_id = num_leaves;
    let mut pendant = vec![0usize; num_leaves];
    let mut internal_edges = Vec::new();
    let top = assign(&root, true, &mut next_id, &mut pendant, &mut internal_edges)?;
    pendant[0] = top;

    let mut edges: Vec<(NodeId, NodeId)> = (0..num_leaves).map(|i| (i, pendant[i])).collect();
    edges.extend(internal_edges);
    PhyloTree::from_edges(num_leaves, next_id, edges)
}

fn collect_labels(node: &RawNode, out: &mut Vec<usize>) {
    match node {
        RawNode::Leaf(l, _) => out.push(*l),
        RawNode::Inner(kids) => kids.iter().for_each(|k| collect_labels(k, out)),
    }
}

fn assign(
    node: &RawNode,
    is_top: bool,
    next_id: &mut usize,
    pendant: &mut [usize],
    internal_edges: &mut Vec<(NodeId, NodeId)>,
) -> Result<NodeId, TreeError> {
    match node {
        RawNode::Leaf(l, pos) => {
            if *l == 0 && !is_top {
                return Err(TreeError::Malformed {
                    pos: *pos,
                    msg: "root leaf 0 cannot be the whole tree".into(),
                });
            }
            Ok(*l)
        }
        RawNode::Inner(kids) => {
            let mut child_ids = Vec::with_capacity(kids.len());
            let mut inner_children = Vec::new();
            for k in kids {
                if let RawNode::Leaf(0, _) = k {
                    if !is_top {
                        return Err(TreeError::RootNotOutermost);
                    }
                    continue;
                }
                let id = assign(k, false, next_id, pendant, internal_edges)?;
                if matches!(k, RawNode::Inner(_)) {
                    inner_children.push(id);
                }
                child_ids.push(id);
            }
            let id = *next_id;
            *next_id += 1;
            // degree = children + one edge upward (to the parent, or to leaf 0)
            if child_ids.len() + 1 == 2 {
                return Err(TreeError::DegreeTwo(id));
            }
            for &c in &child_ids {
                if c < pendant.len() {
                    pendant[c] = id;
                }
            }
            // internal child edges are recorded when the child finished; patch
            // their upper endpoint now that our id is known
            for edge in internal_edges.iter_mut() {
                if edge.1 == usize::MAX && inner_children.contains(&edge.0) {
                    edge.1 = id;
                }
            }
            if !is_top {
                internal_edges.push((id, usize::MAX));
            }
            Ok(id)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> PhyloTree {
        parse_newick("((1,2,3),4,0);").unwrap()
    }

    #[test]
    fn parses_four_leaf_example() {
        let t = fig1();
        assert_eq!(t.num_leaves(), 5);
        assert_eq!(t.num_internal(), 2);
        assert_eq!(t.neighbors(5), &[1, 2, 3, 6]);
        assert_eq!(t.neighbors(6), &[0, 4, 5]);
        assert_eq!(t.edge(5), (5, 6));
        assert_eq!(t.num_edges(), (4 + 1) + 2 - 1);
    }

    #[test]
    fn smallest_star() {
        let t = parse_newick("(1,2,0);").unwrap();
        assert!(t.is_star());
        assert_eq!(t, PhyloTree::star(2).unwrap());
    }

    #[test]
    fn rejects_degree_two() {
        assert!(matches!(
            parse_newick("((1,2),0);"),
            Err(TreeError::DegreeTwo(_))
        ));
        assert!(matches!(
            parse_newick("(((1,2)),3,0);"),
            Err(TreeError::DegreeTwo(_))
        ));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            parse_newick("((1,2,3),4,0;"),
            Err(TreeError::Malformed { .. })
        ));
        assert!(matches!(
            parse_newick("((1,2,3),4,0)"),
            Err(TreeError::Malformed { .. })
        ));
        assert!(matches!(
            parse_newick("(1,1,2,0);"),
            Err(TreeError::DuplicateLabel(1))
        ));
        assert!(matches!(
            parse_newick("(1,3,0);"),
            Err(TreeError::MissingLabel { .. })
        ));
        assert!(matches!(
            parse_newick("((1,0),2,3);"),
            Err(TreeError::RootNotOutermost)
        ));
        assert!(matches!(
            parse_newick("(1,2,x);"),
            Err(TreeError::Malformed { .. })
        ));
    }

    #[test]
    fn ignores_branch_lengths_and_whitespace() {
        let t = parse_newick(" ( (1:0.5, 2:1e-3 ,3) :2, 4, 0 ) ;").unwrap();
        assert_eq!(t, fig1());
    }

    #[test]
    fn newick_round_trip() {
        assert_eq!(fig1().to_newick(), "((1,2,3),4,0);");
        assert_eq!(PhyloTree::star(3).unwrap().to_newick(), "(1,2,3,0);");
        let t = parse_newick("(0,4,(3,1,2));").unwrap();
        assert_eq!(t.to_newick(), "((1,2,3),4,0);");
        assert_eq!(t.canonical(), fig1());
    }

    #[test]
    fn lca_queries() {
        let t = fig1();
        assert_eq!(t.lca(1, 2).unwrap(), 5);
        assert_eq!(t.lca(1, 4).unwrap(), 6);
        assert_eq!(t.lca(3, 2).unwrap(), 5);
        assert_eq!(t.lca(1, 1), Err(TreeError::SameLeaf(1)));
        assert_eq!(t.lca(0, 1), Err(TreeError::RootLeaf));
        let s = PhyloTree::star(4).unwrap();
        for i in 1..=4 {
            for j in 1..=4 {
                if i != j {
                    assert_eq!(s.lca(i, j).unwrap(), 5);
                }
            }
        }
    }

    #[test]
    fn path_queries() {
        let t = fig1();
        assert_eq!(t.path_edges(1, 2).unwrap().0, vec![1, 2]);
        assert_eq!(t.path_edges(0, 1).unwrap().0, vec![0, 5, 1]);
        assert_eq!(t.path_edges(3, 4).unwrap().0, vec![3, 5, 4]);
        assert_eq!(t.path_edges(2, 2), Err(TreeError::SameLeaf(2)));
    }

    #[test]
    fn reroot_swaps_root() {
        let t = fig1();
        let r = t.reroot(4).unwrap();
        assert!(!r.identity);
        assert_eq!(r.tree.neighbors(6), &[0, 4, 5]);
        assert_eq!(r.tree.to_newick(), "((1,2,3),4,0);");
        assert_eq!(r.tree.reroot(4).unwrap().tree, t);

        let r1 = t.reroot(1).unwrap();
        assert_eq!(r1.tree.to_newick(), "((1,4),2,3,0);");
        assert_eq!(r1.leaf_permutation, vec![1, 0, 2, 3, 4]);
        assert_eq!(r1.tree.reroot(1).unwrap().tree, t);

        let same = t.reroot(0).unwrap();
        assert!(same.identity);
        assert_eq!(same.tree, t);
    }

    #[test]
    fn quartets() {
        let t = fig1();
        assert_eq!(
            t.induced_quartet_cherries([0, 4, 1, 2]).unwrap(),
            QuartetTopology::Split([[0, 4], [1, 2]])
        );
        assert_eq!(
            t.induced_quartet_cherries([1, 2, 3, 4]).unwrap(),
            QuartetTopology::Star
        );
        assert_eq!(
            t.induced_quartet_cherries([0, 1, 2, 3]).unwrap(),
            QuartetTopology::Star
        );
        assert_eq!(
            t.induced_quartet_cherries([1, 2, 3, 3]),
            Err(TreeError::BadQuartet)
        );
        let s = PhyloTree::star(3).unwrap();
        assert_eq!(
            s.induced_quartet_cherries([0, 1, 2, 3]).unwrap(),
            QuartetTopology::Star
        );
    }

    #[test]
    fn leaves_below_nodes() {
        let t = fig1();
        assert_eq!(t.leaves_below(5), vec![1, 2, 3]);
        assert_eq!(t.leaves_below(6), vec![1, 2, 3, 4]);
    }
}
