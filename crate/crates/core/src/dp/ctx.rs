//! Bag-local indexing shared by the dynamic programs.

use crate::graph::Graph;
use crate::treedec::{BagAnnotations, TreeDecomposition};

pub(crate) struct BagCtx {
    /// Bag vertices in increasing order; local index = position.
    pub verts: Vec<usize>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Local indices of the vertices shared with the parent.
    pub sep: Vec<u8>,
    /// The same vertices as parent-local indices.
    pub sep_in_parent: Vec<u8>,
    /// Edges whose topmost bag is this one, as local endpoints.
    pub edges: Vec<(u8, u8)>,
    pub edge_ids: Vec<usize>,
    /// Local indices of vertices whose topmost bag is this one.
    pub own: Vec<u8>,
}

impl BagCtx {
    pub fn local(&self, v: usize) -> Option<u8> {
        self.verts.binary_search(&v).ok().map(|i| i as u8)
    }

    pub fn size(&self) -> usize {
        self.verts.len()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

pub(crate) struct DecompCtx {
    pub bags: Vec<BagCtx>,
    pub root: usize,
    pub topmost: Vec<usize>,
    /// Whether bag `a` lies in the subtree of bag `b`: `in_subtree[b]` holds a sorted list.
    pub subtree: Vec<Vec<usize>>,
}

impl DecompCtx {
    pub fn new(td: &TreeDecomposition, ann: &BagAnnotations, g: &Graph) -> Self {
        let nb = td.bag_count();
        let mut bags = Vec::with_capacity(nb);
        for t in 0..nb {
            let verts = td.bag(t).to_vec();
            let local = |v: usize| verts.binary_search(&v).unwrap() as u8;
            let (sep, sep_in_parent) = match td.parent(t) {
                None => (Vec::new(), Vec::new()),
                Some(p) => {
                    let pb = td.bag(p);
                    verts
                        .iter()
                        .filter_map(|&v| pb.binary_search(&v).ok().map(|pi| (local(v), pi as u8)))
                        .unzip()
                }
            };
            let edges = ann.bag_edges[t].iter().map(|&e| {
                let (u, v) = g.edge(e);
                (local(u), local(v))
            });
            let own = verts.iter().filter(|&&v| ann.topmost[v] == t).map(|&v| local(v)).collect();
            bags.push(BagCtx {
                edges: edges.collect(),
                edge_ids: ann.bag_edges[t].clone(),
                verts: verts.clone(),
                parent: td.parent(t),
                children: td.children(t).to_vec(),
                sep,
                sep_in_parent,
                own,
            });
        }
        let mut subtree = vec![Vec::new(); nb];
        for t in td.postorder() {
            let mut s = vec![t];
            for &c in td.children(t) {
                s.extend_from_slice(&subtree[c]);
            }
            s.sort_unstable();
            subtree[t] = s;
        }
        DecompCtx { bags, root: td.root(), topmost: ann.topmost.clone(), subtree }
    }

    pub fn in_subtree(&self, a: usize, of: usize) -> bool {
        self.subtree[of].binary_search(&a).is_ok()
    }

    /// Bags listed children-first.
    pub fn postorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.bags.len());
        let mut stack = vec![self.root];
        while let Some(t) = stack.pop() {
            out.push(t);
            stack.extend_from_slice(&self.bags[t].children);
        }
        out.reverse();
        out
    }
}
