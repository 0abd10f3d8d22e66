//! Rooted tree decompositions: construction, validation and normalization.

mod elimination;
pub mod pace;

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

use crate::graph::Graph;

pub use elimination::{exact_treewidth_order, from_elimination_order, heuristic_order, order_width};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TdError {
    #[error("bag tree is not a tree: {0}")]
    NotATree(String),
    #[error("vertex {0} is in no bag")]
    VertexMissing(usize),
    #[error("edge ({0},{1}) is in no bag")]
    EdgeMissing(usize, usize),
    #[error("bags containing vertex {0} are not connected")]
    Disconnected(usize),
    #[error("bag {bag} mentions unknown vertex {vertex}")]
    UnknownVertex { bag: usize, vertex: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecomposeError {
    #[error("no decomposition of width <= {hint} found (best width {best_width})")]
    WidthHintExceeded { hint: usize, best_width: usize },
}

/// A rooted tree of bags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeDecomposition {
    bags: Vec<Vec<usize>>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
}

impl TreeDecomposition {
    /// Build from bags and undirected tree edges, rooted at `root`.
    pub fn from_tree(bags: Vec<Vec<usize>>, edges: &[(usize, usize)], root: usize) -> Result<Self, TdError> {
        let nb = bags.len();
        if nb == 0 {
            return Err(TdError::NotATree("no bags".into()));
        }
        if root >= nb {
            return Err(TdError::NotATree(format!("root {root} out of range")));
        }
        if edges.len() + 1 != nb {
            return Err(TdError::NotATree(format!("{} bags but {} tree edges", nb, edges.len())));
        }
        let mut adj = vec![Vec::new(); nb];
        for &(a, b) in edges {
            if a >= nb || b >= nb || a == b {
                return Err(TdError::NotATree(format!("bad tree edge ({a},{b})")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut parent = vec![None; nb];
        let mut children = vec![Vec::new(); nb];
        let mut seen = vec![false; nb];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let mut next = adj[u].clone();
            next.sort_unstable();
            for w in next {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(u);
                    children[u].push(w);
                    queue.push_back(w);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(TdError::NotATree("bag tree is disconnected".into()));
        }
        let bags = bags
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b.dedup();
                b
            })
            .collect();
        Ok(TreeDecomposition { bags, parent, children, root })
    }

    pub fn bag_count(&self) -> usize {
        self.bags.len()
    }

    pub fn bag(&self, t: usize) -> &[usize] {
        &self.bags[t]
    }

    pub fn parent(&self, t: usize) -> Option<usize> {
        self.parent[t]
    }

    pub fn children(&self, t: usize) -> &[usize] {
        &self.children[t]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn is_leaf(&self, t: usize) -> bool {
        self.children[t].is_empty()
    }

    /// Maximum bag size minus one.
    pub fn width(&self) -> usize {
        self.bags.iter().map(|b| b.len()).max().unwrap_or(0).saturating_sub(1)
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn height(&self) -> usize {
        self.depths().into_iter().max().unwrap_or(0)
    }

    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.bags.len()];
        for t in self.preorder() {
            if let Some(p) = self.parent[t] {
                depth[t] = depth[p] + 1;
            }
        }
        depth
    }

    /// Bags with every parent before its children.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.bags.len());
        let mut stack = vec![self.root];
        while let Some(t) = stack.pop() {
            out.push(t);
            for &c in self.children[t].iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// Bags with every child before its parent.
    pub fn postorder(&self) -> Vec<usize> {
        let mut out = self.preorder();
        out.reverse();
        out
    }

    /// Undirected tree edges `(parent, child)`.
    pub fn tree_edges(&self) -> Vec<(usize, usize)> {
        (0..self.bags.len()).filter_map(|t| self.parent[t].map(|p| (p, t))).collect()
    }

    /// Check the three decomposition properties against `g`.
    pub fn validate(&self, g: &Graph) -> Result<(), TdError> {
        let n = g.vertex_count();
        let mut holders: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (t, bag) in self.bags.iter().enumerate() {
            for &v in bag {
                if v >= n {
                    return Err(TdError::UnknownVertex { bag: t, vertex: v });
                }
                holders[v].push(t);
            }
        }
        if let Some(v) = (0..n).find(|&v| holders[v].is_empty()) {
            return Err(TdError::VertexMissing(v));
        }
        for &(u, v) in g.edges() {
            if !self.bags.iter().any(|b| b.binary_search(&u).is_ok() && b.binary_search(&v).is_ok()) {
                return Err(TdError::EdgeMissing(u, v));
            }
        }
        // A node set of a rooted tree is connected iff exactly one member has its parent outside.
        for (v, hs) in holders.iter().enumerate() {
            let tops = hs
                .iter()
                .filter(|&&t| self.parent[t].map_or(true, |p| self.bags[p].binary_search(&v).is_err()))
                .count();
            if tops != 1 {
                return Err(TdError::Disconnected(v));
            }
        }
        Ok(())
    }

    /// Add every vertex of `vs` to every bag.
    pub fn add_universal_vertices(&self, vs: &[usize]) -> TreeDecomposition {
        let mut td = self.clone();
        for bag in &mut td.bags {
            bag.extend_from_slice(vs);
            bag.sort_unstable();
            bag.dedup();
        }
        td
    }

    fn push_bag(&mut self, bag: Vec<usize>, parent: Option<usize>) -> usize {
        let id = self.bags.len();
        self.bags.push(bag);
        self.parent.push(parent);
        self.children.push(Vec::new());
        if let Some(p) = parent {
            self.children[p].push(id);
        }
        id
    }

    /// Re-root at `root`.
    fn rerooted(&self, root: usize) -> TreeDecomposition {
        TreeDecomposition::from_tree(self.bags.clone(), &self.tree_edges(), root).expect("tree stays a tree")
    }

    /// A bag minimizing the height when chosen as root (lowest id on ties).
    fn center(&self) -> usize {
        let nb = self.bags.len();
        let mut adj = vec![Vec::new(); nb];
        for (a, b) in self.tree_edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        let ecc = |s: usize| {
            let mut dist = vec![usize::MAX; nb];
            dist[s] = 0;
            let mut q = VecDeque::from([s]);
            let mut far = 0;
            while let Some(u) = q.pop_front() {
                far = far.max(dist[u]);
                for &w in &adj[u] {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[u] + 1;
                        q.push_back(w);
                    }
                }
            }
            far
        };
        (0..nb).min_by_key(|&t| (ecc(t), t)).unwrap()
    }
}

/// Per-bag data derived from a rooted decomposition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BagAnnotations {
    /// Topmost bag of each vertex.
    pub topmost: Vec<usize>,
    /// Edge ids whose topmost common bag is `t`.
    pub bag_edges: Vec<Vec<usize>>,
    /// Union of the bags in the subtree of `t`.
    pub subtree_vertices: Vec<Vec<usize>>,
}

impl BagAnnotations {
    pub fn compute(td: &TreeDecomposition, g: &Graph) -> BagAnnotations {
        let depth = td.depths();
        let nb = td.bag_count();
        let mut topmost = vec![usize::MAX; g.vertex_count()];
        for t in td.preorder() {
            for &v in td.bag(t) {
                if topmost[v] == usize::MAX {
                    topmost[v] = t;
                }
            }
        }
        let mut bag_edges = vec![Vec::new(); nb];
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            // The shared subtree of u and v is rooted at the deeper of the two topmost bags.
            let (tu, tv) = (topmost[u], topmost[v]);
            let t = if depth[tu] >= depth[tv] { tu } else { tv };
            debug_assert!(td.bag(t).binary_search(&u).is_ok() && td.bag(t).binary_search(&v).is_ok());
            bag_edges[t].push(e);
        }
        let mut subtree: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nb];
        for t in td.postorder() {
            let mut s: BTreeSet<usize> = td.bag(t).iter().copied().collect();
            for &c in td.children(t) {
                s.extend(subtree[c].iter().copied());
            }
            subtree[t] = s;
        }
        BagAnnotations {
            topmost,
            bag_edges,
            subtree_vertices: subtree.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }
}

/// Result of [`decompose`].
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub td: TreeDecomposition,
    /// Whether the width is proven optimal.
    pub exact: bool,
}

/// Default number of search states for the exact treewidth search.
pub const EXACT_STATE_BUDGET: usize = 2_000_000;

/// Exact search for up to 20 vertices within the budget, heuristics otherwise.
pub fn decompose(g: &Graph, width_hint: Option<usize>) -> Result<Decomposition, DecomposeError> {
    let heuristic = heuristic_order(g);
    let mut order = heuristic.clone();
    let mut exact = false;
    if g.vertex_count() <= 20 {
        if let Some(opt) = exact_treewidth_order(g, EXACT_STATE_BUDGET) {
            order = opt;
            exact = true;
        }
    }
    let td = from_elimination_order(g, &order);
    if let Some(hint) = width_hint {
        if td.width() > hint {
            return Err(DecomposeError::WidthHintExceeded { hint, best_width: td.width() });
        }
    }
    Ok(Decomposition { td, exact })
}

/// Binary decomposition with edge-free leaves that are subsets of their parents.
/// Rooted at a center bag; multi-child bags are split into balanced binary trees of copies.
pub fn normalize(td: &TreeDecomposition, g: &Graph) -> (TreeDecomposition, BagAnnotations) {
    let src = td.rerooted(td.center());
    let mut out = TreeDecomposition { bags: Vec::new(), parent: Vec::new(), children: Vec::new(), root: 0 };
    // (source bag, attachment point in `out`)
    let root = out.push_bag(src.bags[src.root].clone(), None);
    let mut stack = vec![(src.root, root)];
    while let Some((s, o)) = stack.pop() {
        let kids = src.children[s].clone();
        match kids.len() {
            0 => {}
            1 => {
                let c = out.push_bag(src.bags[kids[0]].clone(), Some(o));
                stack.push((kids[0], c));
                out.push_bag(src.bags[s].clone(), Some(o));
            }
            _ => attach_balanced(&src, &mut out, s, o, &kids, &mut stack),
        }
    }
    let ann = BagAnnotations::compute(&out, g);
    let leaves: Vec<usize> = (0..out.bag_count()).filter(|&t| out.is_leaf(t)).collect();
    for t in leaves {
        let owns = out.bags[t].iter().any(|&v| ann.topmost[v] == t);
        if owns || !ann.bag_edges[t].is_empty() || t == out.root {
            let bag = out.bags[t].clone();
            out.push_bag(bag.clone(), Some(t));
            out.push_bag(bag, Some(t));
        }
    }
    let ann = BagAnnotations::compute(&out, g);
    (out, ann)
}

fn attach_balanced(
    src: &TreeDecomposition,
    out: &mut TreeDecomposition,
    s: usize,
    o: usize,
    kids: &[usize],
    stack: &mut Vec<(usize, usize)>,
) {
    let mid = kids.len() / 2;
    for half in [&kids[..mid], &kids[mid..]] {
        if half.len() == 1 {
            let c = out.push_bag(src.bags[half[0]].clone(), Some(o));
            stack.push((half[0], c));
        } else {
            let copy = out.push_bag(src.bags[s].clone(), Some(o));
            attach_balanced(src, out, s, copy, half, stack);
        }
    }
}

/// Add universal vertices, then normalize.
pub fn prepare(td: &TreeDecomposition, g: &Graph, universal: &[usize]) -> (TreeDecomposition, BagAnnotations) {
    normalize(&td.add_universal_vertices(universal), g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::Rational;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
        let mut g = Graph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v, Rational::from_integer(1)).unwrap();
        }
        g
    }

    #[test]
    fn tree_has_width_one() {
        let g = graph(5, &[(0, 1), (1, 2), (1, 3), (3, 4)]);
        let d = decompose(&g, None).unwrap();
        assert_eq!(d.td.width(), 1);
        d.td.validate(&g).unwrap();
    }

    #[test]
    fn clique_width() {
        let mut edges = Vec::new();
        for u in 0..5 {
            for v in u + 1..5 {
                edges.push((u, v));
            }
        }
        let g = graph(5, &edges);
        let d = decompose(&g, None).unwrap();
        assert_eq!(d.td.width(), 4);
        assert!(decompose(&g, Some(3)).is_err());
    }

    #[test]
    fn normalized_path_partitions_edges() {
        let g = graph(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]);
        let d = decompose(&g, None).unwrap();
        let (td, ann) = normalize(&d.td, &g);
        td.validate(&g).unwrap();
        assert_eq!(ann.bag_edges.iter().map(|e| e.len()).sum::<usize>(), g.edge_count());
        for t in 0..td.bag_count() {
            assert!(td.children(t).len() == 0 || td.children(t).len() == 2);
            if td.is_leaf(t) {
                assert!(ann.bag_edges[t].is_empty());
            }
        }
    }

    #[test]
    fn universal_vertices() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let d = decompose(&g, None).unwrap();
        let (td, ann) = prepare(&d.td, &g, &[0]);
        assert!((0..td.bag_count()).all(|t| td.bag(t).contains(&0)));
        assert_eq!(ann.topmost[0], td.root());
        assert_eq!(d.td.add_universal_vertices(&[]), d.td);
    }

    #[test]
    fn validation_catches_broken_decompositions() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let td = TreeDecomposition::from_tree(vec![vec![0, 1], vec![2]], &[(0, 1)], 0).unwrap();
        assert_eq!(td.validate(&g), Err(TdError::EdgeMissing(1, 2)));
        let td = TreeDecomposition::from_tree(vec![vec![0, 1], vec![1, 2], vec![0]], &[(0, 1), (1, 2)], 0).unwrap();
        assert_eq!(td.validate(&g), Err(TdError::Disconnected(0)));
    }
}
