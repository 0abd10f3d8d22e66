//! Seeded random instances of bounded treewidth.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::cost::Rational;
use crate::graph::{Graph, Group, Instance, Mode};
use crate::oracle::csp::{CspConstraint, CspInstance};
use crate::oracle::SubsetInstance;
use crate::treedec::TreeDecomposition;

/// How element costs are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostStyle {
    Unit,
    /// Uniform integers in `1..=max`.
    Integer(i64),
    /// Uniform halves in `1/2..=max/2`.
    Halves(i64),
}

impl CostStyle {
    fn draw<R: Rng>(self, rng: &mut R) -> Rational {
        match self {
            CostStyle::Unit => Rational::from_integer(1),
            CostStyle::Integer(max) => Rational::from_integer(rng.gen_range(1..=max)),
            CostStyle::Halves(max) => Rational::new(rng.gen_range(1..=max), 2),
        }
    }
}

/// A connected partial k-tree on `n` vertices together with a width-`width` decomposition.
/// Each edge of the underlying k-tree is kept with probability `keep`; one edge per new
/// vertex is always kept.
pub fn partial_ktree<R: Rng>(n: usize, width: usize, keep: f64, rng: &mut R) -> (Vec<(usize, usize)>, TreeDecomposition) {
    let w = width.min(n.saturating_sub(1));
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut edges = Vec::new();
    let first: Vec<usize> = perm[..=w].to_vec();
    for i in 0..first.len() {
        for j in 0..i {
            if j + 1 == i || rng.gen_bool(keep) {
                edges.push((first[j], first[i]));
            }
        }
    }
    let mut bags = vec![first];
    let mut tree = Vec::new();
    for &v in &perm[w + 1..] {
        let b = rng.gen_range(0..bags.len());
        let mut clique = bags[b].clone();
        if clique.len() > w {
            clique.remove(rng.gen_range(0..clique.len()));
        }
        let anchor = rng.gen_range(0..clique.len());
        for (i, &u) in clique.iter().enumerate() {
            if i == anchor || rng.gen_bool(keep) {
                edges.push((u, v));
            }
        }
        clique.push(v);
        tree.push((b, bags.len()));
        bags.push(clique);
    }
    let td = TreeDecomposition::from_tree(bags, &tree, 0).expect("k-tree bags form a tree");
    (edges, td)
}

#[derive(Clone, Debug)]
pub struct InstanceParams {
    pub n: usize,
    pub width: usize,
    pub keep: f64,
    pub groups: usize,
    /// Members per group; 1 gives fixed demand vertices.
    pub group_size: usize,
    pub max_demand: usize,
    pub roots: usize,
    pub cost_mode: Mode,
    pub conn_mode: Mode,
    pub costs: CostStyle,
}

impl Default for InstanceParams {
    fn default() -> Self {
        InstanceParams {
            n: 8,
            width: 2,
            keep: 0.7,
            groups: 2,
            group_size: 1,
            max_demand: 2,
            roots: 1,
            cost_mode: Mode::Edge,
            conn_mode: Mode::Edge,
            costs: CostStyle::Integer(4),
        }
    }
}

/// A random instance with its decomposition. Roots are excluded from groups.
pub fn random_instance<R: Rng>(p: &InstanceParams, rng: &mut R) -> (Instance, TreeDecomposition) {
    let (edges, td) = partial_ktree(p.n, p.width, p.keep, rng);
    let mut g = Graph::new(p.n);
    for &(u, v) in &edges {
        let c = if p.cost_mode == Mode::Edge { p.costs.draw(rng) } else { Rational::from_integer(0) };
        g.add_edge(u, v, c).expect("generated edges are simple");
    }
    if p.cost_mode == Mode::Vertex {
        for v in 0..p.n {
            let c = p.costs.draw(rng);
            g.set_vertex_cost(v, c).expect("vertex in range");
        }
    }
    let mut verts: Vec<usize> = (0..p.n).collect();
    verts.shuffle(rng);
    let roots: Vec<usize> = verts[..p.roots].to_vec();
    let others = &verts[p.roots..];
    let groups = (0..p.groups)
        .map(|_| {
            let mut members: Vec<usize> = others.choose_multiple(rng, p.group_size.min(others.len())).copied().collect();
            members.sort_unstable();
            Group { members, demand: rng.gen_range(1..=p.max_demand) }
        })
        .collect();
    let inst = Instance::new(g, roots, p.roots > 1, groups, p.cost_mode, p.conn_mode).expect("generated instance is valid");
    (inst, td)
}

/// A random subset instance on a partial k-tree; returns the decomposition too.
pub fn random_subset_instance<R: Rng>(
    n: usize,
    width: usize,
    terminals: usize,
    k: usize,
    mode: Mode,
    rng: &mut R,
) -> (SubsetInstance, TreeDecomposition) {
    let p = InstanceParams {
        n,
        width,
        keep: 0.8,
        groups: 0,
        cost_mode: mode,
        conn_mode: mode,
        costs: CostStyle::Integer(3),
        ..InstanceParams::default()
    };
    let (inst, td) = random_instance(&p, rng);
    let mut verts: Vec<usize> = (0..n).collect();
    verts.shuffle(rng);
    let mut terms = verts[..terminals.min(n)].to_vec();
    terms.sort_unstable();
    (SubsetInstance { graph: inst.graph, terminals: terms, k, mode }, td)
}

/// A random Min-k-CSP with at least one accepting tuple per constraint.
pub fn random_csp<R: Rng>(num_vars: usize, domain: usize, constraints: usize, k: usize, rng: &mut R) -> CspInstance {
    let tuples = domain.pow(k as u32);
    let cons = (0..constraints)
        .map(|_| {
            let mut vars: Vec<usize> = (0..num_vars).collect::<Vec<_>>().choose_multiple(rng, k).copied().collect();
            vars.sort_unstable();
            let mut accepting: Vec<Vec<usize>> = (0..tuples)
                .filter(|_| rng.gen_bool(0.35))
                .map(|code| (0..k).map(|i| code / domain.pow(i as u32) % domain).collect())
                .collect();
            if accepting.is_empty() {
                let code = rng.gen_range(0..tuples);
                accepting.push((0..k).map(|i| code / domain.pow(i as u32) % domain).collect());
            }
            CspConstraint { vars, accepting }
        })
        .collect();
    CspInstance { num_vars, domain, k, constraints: cons }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ktree_decomposition_is_valid_and_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..12 {
            for w in 1..4 {
                let (inst, td) = random_instance(&InstanceParams { n, width: w, groups: 1, ..Default::default() }, &mut rng);
                td.validate(&inst.graph).unwrap();
                assert!(td.width() <= w);
                assert!(inst.graph.is_connected());
            }
        }
    }
}
