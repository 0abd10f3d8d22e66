//! Rooted reformulations of the subset connectivity problems.

use crate::cost::Rational;
use crate::graph::{Group, Instance, Mode};
use crate::oracle::SubsetInstance;

use super::DpError;

fn sorted_terminals(si: &SubsetInstance) -> Vec<usize> {
    let mut t = si.terminals.clone();
    t.sort_unstable();
    t.dedup();
    t
}

/// Root the instance at its smallest terminal and ask for `k` edge-disjoint paths to every other terminal.
pub fn subset_kec_reduce(si: &SubsetInstance) -> Result<Instance, DpError> {
    if si.mode != Mode::Edge {
        return Err(DpError::Unsupported("edge-connectivity reduction needs an edge-cost instance".into()));
    }
    let terms = sorted_terminals(si);
    let Some(&root) = terms.first() else {
        return Err(DpError::Unsupported("no terminals".into()));
    };
    let groups = terms[1..].iter().map(|&v| Group { members: vec![v], demand: si.k }).collect();
    Instance::new(si.graph.clone(), vec![root], false, groups, Mode::Edge, Mode::Edge)
        .map_err(|e| DpError::Unsupported(e.to_string()))
}

/// The `k` smallest terminals become roots; every terminal needs `k` openly disjoint
/// paths from each root. Roots are free in the rooted instance, so its optimum is lower
/// than the subset optimum by [`kvc_root_charge`].
pub fn subset_kvc_reduce(si: &SubsetInstance) -> Result<Instance, DpError> {
    if si.mode != Mode::Vertex {
        return Err(DpError::Unsupported("vertex-connectivity reduction needs a vertex-cost instance".into()));
    }
    let terms = sorted_terminals(si);
    if si.k == 0 || terms.len() < si.k {
        return Err(DpError::Unsupported(format!("need at least k = {} terminals, found {}", si.k, terms.len())));
    }
    let roots = terms[..si.k].to_vec();
    let multi = si.k > 1;
    let groups = terms
        .iter()
        .filter(|&&v| multi || v != roots[0])
        .map(|&v| Group { members: vec![v], demand: si.k })
        .collect();
    Instance::new(si.graph.clone(), roots, multi, groups, Mode::Vertex, Mode::Vertex)
        .map_err(|e| DpError::Unsupported(e.to_string()))
}

/// Cost of the roots chosen by [`subset_kvc_reduce`].
pub fn kvc_root_charge(si: &SubsetInstance) -> Rational {
    sorted_terminals(si).iter().take(si.k).map(|&v| si.graph.vertex_cost(v)).sum()
}
