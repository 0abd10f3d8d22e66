//! Local and global connectivity definitions over a whole decomposition.

use std::collections::BTreeSet;
use std::fmt;

use super::{local_step_delta, local_step_gamma, project, tc, tc_star, vertex_local_step, ConnectionSet, VertexStepInput};
use crate::graph::Graph;
use crate::treedec::{BagAnnotations, TreeDecomposition};

/// Which recurrence failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Z,
    Gamma,
    Delta,
}

/// The first bag (in root-first order) whose values break a local recurrence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub bag: usize,
    pub field: Field,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bag {}: {:?} expected {} found {}", self.bag, self.field, self.expected, self.found)
    }
}

/// Per-bag (local, global) connection sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeFamily {
    pub gamma: Vec<ConnectionSet>,
    pub delta: Vec<ConnectionSet>,
}

/// Per-bag allowed vertices and restricted closures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexFamily {
    pub z: Vec<BTreeSet<usize>>,
    pub gamma: Vec<ConnectionSet>,
    pub delta: Vec<ConnectionSet>,
}

fn bag_set(td: &TreeDecomposition, t: usize) -> BTreeSet<usize> {
    td.bag(t).iter().copied().collect()
}

fn edge_pairs(g: &Graph, ids: impl IntoIterator<Item = usize>) -> ConnectionSet {
    ConnectionSet::from_pairs(ids.into_iter().map(|e| g.edge(e)))
}

fn all_vertices(g: &Graph) -> ConnectionSet {
    ConnectionSet::empty(0..g.vertex_count())
}

fn subtree_bags(td: &TreeDecomposition, t: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = vec![t];
    while let Some(s) = stack.pop() {
        out.push(s);
        stack.extend_from_slice(td.children(s));
    }
    out
}

/// Closures of the bought edges below each bag and in the whole graph, projected to the bag.
pub fn global_edge_family(td: &TreeDecomposition, g: &Graph, y: &[BTreeSet<usize>]) -> EdgeFamily {
    let whole = tc(&edge_pairs(g, y.iter().flatten().copied()).union(&all_vertices(g)));
    let mut gamma = Vec::new();
    let mut delta = Vec::new();
    for t in 0..td.bag_count() {
        let bag = bag_set(td, t);
        let below = edge_pairs(g, subtree_bags(td, t).into_iter().flat_map(|s| y[s].iter().copied()));
        gamma.push(project(&tc(&below.union(&all_vertices(g))), &bag));
        delta.push(project(&whole, &bag));
    }
    EdgeFamily { gamma, delta }
}

/// Check every local edge recurrence, reporting the first failure in root-first order.
pub fn check_local_edge(td: &TreeDecomposition, g: &Graph, y: &[BTreeSet<usize>], fam: &EdgeFamily) -> Result<(), Violation> {
    for t in td.preorder() {
        let bag = bag_set(td, t);
        let expected_gamma = match td.children(t) {
            [] => ConnectionSet::empty(bag.iter().copied()),
            kids => {
                let empty = ConnectionSet::default();
                let l = &fam.gamma[kids[0]];
                let r = kids.get(1).map_or(&empty, |&c| &fam.gamma[c]);
                local_step_gamma(l, r, &edge_pairs(g, y[t].iter().copied()), &bag)
            }
        };
        if expected_gamma != fam.gamma[t] {
            return Err(violation(t, Field::Gamma, &expected_gamma, &fam.gamma[t]));
        }
        let expected_delta = match td.parent(t) {
            None => fam.gamma[t].clone(),
            Some(p) => local_step_delta(&fam.delta[p], &fam.gamma[t], &bag),
        };
        if expected_delta != fam.delta[t] {
            return Err(violation(t, Field::Delta, &expected_delta, &fam.delta[t]));
        }
    }
    Ok(())
}

fn violation(bag: usize, field: Field, expected: &ConnectionSet, found: &ConnectionSet) -> Violation {
    Violation { bag, field, expected: expected.to_string(), found: found.to_string() }
}

/// Global restricted closures: internal vertices from `W = ∪ w_t`, edges from `∪ y_t`.
pub fn global_vertex_family(
    td: &TreeDecomposition,
    g: &Graph,
    w: &[BTreeSet<usize>],
    y: &[BTreeSet<usize>],
) -> VertexFamily {
    let all_w: BTreeSet<usize> = w.iter().flatten().copied().collect();
    let whole = tc_star(&all_w, &edge_pairs(g, y.iter().flatten().copied()).union(&all_vertices(g)));
    let mut fam = VertexFamily { z: Vec::new(), gamma: Vec::new(), delta: Vec::new() };
    for t in 0..td.bag_count() {
        let bag = bag_set(td, t);
        let below = edge_pairs(g, subtree_bags(td, t).into_iter().flat_map(|s| y[s].iter().copied()));
        fam.z.push(all_w.intersection(&bag).copied().collect());
        fam.gamma.push(project(&tc_star(&all_w, &below.union(&all_vertices(g))), &bag));
        fam.delta.push(project(&whole, &bag));
    }
    fam
}

/// Check every local vertex-style recurrence, reporting the first failure in root-first order.
pub fn check_local_vertex(
    td: &TreeDecomposition,
    g: &Graph,
    w: &[BTreeSet<usize>],
    y: &[BTreeSet<usize>],
    fam: &VertexFamily,
) -> Result<(), Violation> {
    for t in td.preorder() {
        let bag = bag_set(td, t);
        let empty = ConnectionSet::default();
        let kids = td.children(t);
        let children = match kids {
            [] => None,
            _ => Some((&fam.gamma[kids[0]], kids.get(1).map_or(&empty, |&c| &fam.gamma[c]))),
        };
        let edges = edge_pairs(g, y[t].iter().copied());
        let input = VertexStepInput {
            z_parent: td.parent(t).map(|p| &fam.z[p]),
            w: &w[t],
            bag: &bag,
            gamma_children: children,
            edges: &edges,
            delta_parent: td.parent(t).map(|p| &fam.delta[p]),
        };
        // Each recurrence is evaluated against the supplied neighbouring values.
        let z_expected = vertex_local_step(&input).0;
        if z_expected != fam.z[t] {
            return Err(Violation { bag: t, field: Field::Z, expected: format!("{z_expected:?}"), found: format!("{:?}", fam.z[t]) });
        }
        let bag_ground = ConnectionSet::empty(bag.iter().copied());
        let gamma_expected = match children {
            None => bag_ground.clone(),
            Some((l, r)) => project(&tc_star(&fam.z[t], &l.union(r).union(&edges).union(&bag_ground)), &bag),
        };
        if gamma_expected != fam.gamma[t] {
            return Err(violation(t, Field::Gamma, &gamma_expected, &fam.gamma[t]));
        }
        let delta_expected = match td.parent(t) {
            None => fam.gamma[t].clone(),
            Some(p) => project(&tc_star(&fam.z[t], &fam.delta[p].union(&fam.gamma[t]).union(&bag_ground)), &bag),
        };
        if delta_expected != fam.delta[t] {
            return Err(violation(t, Field::Delta, &delta_expected, &fam.delta[t]));
        }
    }
    Ok(())
}

/// Vertices whose topmost bag is `t`.
pub fn own_vertices(td: &TreeDecomposition, ann: &BagAnnotations, t: usize) -> BTreeSet<usize> {
    td.bag(t).iter().copied().filter(|&v| ann.topmost[v] == t).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::Rational;
    use crate::treedec::{decompose, normalize};

    fn cycle(n: usize) -> Graph {
        let mut g = Graph::new(n);
        for v in 0..n {
            g.add_edge(v, (v + 1) % n, Rational::from_integer(1)).unwrap();
        }
        g
    }

    #[test]
    fn empty_solution_is_all_empty() {
        let g = cycle(5);
        let (td, ann) = normalize(&decompose(&g, None).unwrap().td, &g);
        let y = vec![BTreeSet::new(); td.bag_count()];
        let fam = global_edge_family(&td, &g, &y);
        assert!(fam.gamma.iter().chain(&fam.delta).all(|c| c.is_empty()));
        check_local_edge(&td, &g, &y, &fam).unwrap();
        let _ = ann;
    }

    #[test]
    fn global_values_pass_and_mutations_fail() {
        let g = cycle(6);
        let (td, ann) = normalize(&decompose(&g, None).unwrap().td, &g);
        let mut y: Vec<BTreeSet<usize>> = ann.bag_edges.iter().map(|es| es.iter().copied().collect()).collect();
        // drop one edge so the closures are not trivial
        let t0 = (0..td.bag_count()).find(|&t| !y[t].is_empty()).unwrap();
        let first = *y[t0].iter().next().unwrap();
        y[t0].remove(&first);
        let fam = global_edge_family(&td, &g, &y);
        check_local_edge(&td, &g, &y, &fam).unwrap();
        let t = td.children(td.root())[0];
        let mut bad = fam.clone();
        let bag = td.bag(t).to_vec();
        if bad.delta[t].contains(bag[0], bag[1]) {
            bad.delta[t].remove(bag[0], bag[1]);
        } else {
            bad.delta[t].insert(bag[0], bag[1]);
        }
        let err = check_local_edge(&td, &g, &y, &bad).unwrap_err();
        assert_eq!(err.bag, t);
        assert_eq!(err.field, Field::Delta);
    }
}
