//! Exhaustive ground truth for small instances.

pub mod csp;
pub mod flow;

use std::collections::BTreeSet;

use num_traits::Zero;
use thiserror::Error;

use crate::cost::Rational;
use crate::graph::{Graph, Instance, Members, Mode, Solution, SubgraphView};

pub const DEFAULT_BUDGET: usize = 22;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{candidates} candidate elements exceed the enumeration budget of {budget}")]
    BudgetExceeded { candidates: usize, budget: usize },
    #[error("instance is infeasible")]
    Infeasible,
}

/// Enumerate subsets of the priced elements, keeping the cheapest feasible one.
/// Zero-cost elements are always bought since feasibility is monotone.
fn enumerate<F>(
    element_count: usize,
    price: impl Fn(usize) -> Rational,
    budget: usize,
    feasible: F,
) -> Result<(Vec<bool>, Rational), OracleError>
where
    F: Fn(&[bool]) -> bool,
{
    let candidates: Vec<usize> = (0..element_count).filter(|&e| !price(e).is_zero()).collect();
    if candidates.len() > budget {
        return Err(OracleError::BudgetExceeded { candidates: candidates.len(), budget });
    }
    let prices: Vec<Rational> = candidates.iter().map(|&e| price(e)).collect();
    let mut chosen: Vec<bool> = (0..element_count).map(|e| price(e).is_zero()).collect();
    for &e in &candidates {
        chosen[e] = true;
    }
    if !feasible(&chosen) {
        return Err(OracleError::Infeasible);
    }
    let mut best_mask: u64 = (1u64 << candidates.len()) - 1;
    let mut best: Rational = prices.iter().sum();
    for mask in 0..(1u64 << candidates.len()) {
        let mut cost = Rational::zero();
        let mut bits = mask;
        while bits != 0 {
            cost += prices[bits.trailing_zeros() as usize];
            bits &= bits - 1;
        }
        if cost >= best {
            continue;
        }
        for (i, &e) in candidates.iter().enumerate() {
            chosen[e] = mask >> i & 1 == 1;
        }
        if feasible(&chosen) {
            best = cost;
            best_mask = mask;
        }
    }
    for (i, &e) in candidates.iter().enumerate() {
        chosen[e] = best_mask >> i & 1 == 1;
    }
    Ok((chosen, best))
}

/// Minimum-cost feasible solution by exhaustive enumeration.
pub fn brute_force_optimum(inst: &Instance, budget: usize) -> Result<Solution, OracleError> {
    let g = &inst.graph;
    match inst.cost_mode {
        Mode::Edge => {
            let (mask, cost) = enumerate(g.edge_count(), |e| g.edge_cost(e), budget, |m| {
                reach_prefilter(inst, m, None) && SubgraphView::from_edge_mask(inst, m).all_groups_met(inst)
            })?;
            let edges: BTreeSet<usize> = (0..g.edge_count()).filter(|&e| mask[e]).collect();
            Ok(Solution { members: Members::Edges(edges), cost, certificate: None })
        }
        Mode::Vertex => {
            let (mask, cost) = enumerate(g.vertex_count(), |v| inst.vertex_price(v), budget, |m| {
                reach_prefilter(inst, &[], Some(m)) && SubgraphView::from_vertex_mask(inst, m).all_groups_met(inst)
            })?;
            let vertices: BTreeSet<usize> = (0..g.vertex_count()).filter(|&v| mask[v] || inst.is_root(v)).collect();
            Ok(Solution { members: Members::Vertices(vertices), cost, certificate: None })
        }
    }
}

/// Cheap necessary condition: every group has a member reachable from every root.
fn reach_prefilter(inst: &Instance, edge_mask: &[bool], vertex_mask: Option<&[bool]>) -> bool {
    let g = &inst.graph;
    let n = g.vertex_count();
    let usable = |v: usize| vertex_mask.map_or(true, |m| m[v] || inst.is_root(v));
    let roots: &[usize] = if inst.multi_root { &inst.roots } else { &inst.roots[..1] };
    for &r in roots {
        let mut seen = vec![false; n];
        seen[r] = true;
        let mut stack = vec![r];
        while let Some(u) = stack.pop() {
            for &(w, e) in g.neighbors(u) {
                let ok = match vertex_mask {
                    None => edge_mask[e],
                    Some(_) => usable(w),
                };
                if ok && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if !inst.groups.iter().all(|grp| grp.members.iter().any(|&v| seen[v] && usable(v))) {
            return false;
        }
    }
    true
}

/// A Subset-k-EC or Subset-k-VC instance: all terminal pairs need `k` disjoint paths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetInstance {
    pub graph: Graph,
    pub terminals: Vec<usize>,
    pub k: usize,
    /// Edge: edge costs with edge-disjoint paths. Vertex: vertex costs with openly vertex-disjoint paths.
    pub mode: Mode,
}

/// Direct brute force for a subset instance. In vertex mode every terminal is
/// bought and charged.
pub fn subset_brute_force(si: &SubsetInstance, budget: usize) -> Result<Solution, OracleError> {
    let g = &si.graph;
    let n = g.vertex_count();
    let pair_ok = |view: &SubgraphView| {
        si.terminals.iter().enumerate().all(|(a, &u)| {
            si.terminals[a + 1..].iter().all(|&v| view.connectivity(n, si.mode, u, v, si.k) >= si.k)
        })
    };
    match si.mode {
        Mode::Edge => {
            let (mask, cost) = enumerate(g.edge_count(), |e| g.edge_cost(e), budget, |m| {
                let view = SubgraphView {
                    edges: (0..g.edge_count()).filter(|&e| m[e]).map(|e| g.edge(e)).collect(),
                    allowed: vec![true; n],
                };
                pair_ok(&view)
            })?;
            let edges: BTreeSet<usize> = (0..g.edge_count()).filter(|&e| mask[e]).collect();
            Ok(Solution { members: Members::Edges(edges), cost, certificate: None })
        }
        Mode::Vertex => {
            let is_terminal = |v: usize| si.terminals.contains(&v);
            let mandatory: Rational = si.terminals.iter().map(|&v| g.vertex_cost(v)).sum();
            let (mask, cost) = enumerate(
                n,
                |v| if is_terminal(v) { Rational::zero() } else { g.vertex_cost(v) },
                budget,
                |m| {
                    let allowed: Vec<bool> = (0..n).map(|v| m[v] || is_terminal(v)).collect();
                    let edges = g.edges().iter().copied().filter(|&(u, v)| allowed[u] && allowed[v]).collect();
                    pair_ok(&SubgraphView { edges, allowed })
                },
            )?;
            let vertices: BTreeSet<usize> = (0..n).filter(|&v| mask[v] || is_terminal(v)).collect();
            Ok(Solution { members: Members::Vertices(vertices), cost: cost + mandatory, certificate: None })
        }
    }
}

/// Exhaustive count of disjoint paths by searching over path families.
/// Exponential; for verifying the flow routine on tiny graphs.
pub fn exhaustive_path_packing(g: &Graph, conn: Mode, s: usize, t: usize) -> usize {
    fn simple_paths(g: &Graph, s: usize, t: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut path = vec![s];
        let mut on = vec![false; g.vertex_count()];
        on[s] = true;
        fn rec(g: &Graph, t: usize, path: &mut Vec<usize>, on: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
            let u = *path.last().unwrap();
            if u == t {
                out.push(path.clone());
                return;
            }
            for &(w, _) in g.neighbors(u) {
                if !on[w] {
                    on[w] = true;
                    path.push(w);
                    rec(g, t, path, on, out);
                    path.pop();
                    on[w] = false;
                }
            }
        }
        rec(g, t, &mut path, &mut on, &mut out);
        out
    }
    let paths = simple_paths(g, s, t);
    let footprint: Vec<Vec<usize>> = paths
        .iter()
        .map(|p| match conn {
            Mode::Edge => p.windows(2).map(|w| g.edge_id(w[0], w[1]).unwrap()).collect(),
            Mode::Vertex => {
                // internal vertices, plus the direct edge if the path has none
                if p.len() == 2 {
                    vec![usize::MAX]
                } else {
                    p[1..p.len() - 1].to_vec()
                }
            }
        })
        .collect();
    fn best(idx: usize, used: &mut BTreeSet<usize>, fp: &[Vec<usize>]) -> usize {
        if idx == fp.len() {
            return 0;
        }
        let mut b = best(idx + 1, used, fp);
        if fp[idx].iter().all(|x| !used.contains(x)) {
            for &x in &fp[idx] {
                used.insert(x);
            }
            b = b.max(1 + best(idx + 1, used, fp));
            for x in &fp[idx] {
                used.remove(x);
            }
        }
        b
    }
    best(0, &mut BTreeSet::new(), &footprint)
}

/// Exhaustive minimum edge cut between `s` and `t`.
pub fn exhaustive_min_cut(g: &Graph, s: usize, t: usize) -> usize {
    let m = g.edge_count();
    let mut best = m;
    for mask in 0u64..(1u64 << m) {
        let size = mask.count_ones() as usize;
        if size >= best {
            continue;
        }
        let mut seen = vec![false; g.vertex_count()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &(w, e) in g.neighbors(u) {
                if mask >> e & 1 == 0 && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if !seen[t] {
            best = size;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_instance;

    #[test]
    fn theta_graph_needs_two_cheapest_paths() {
        // paths 0-1-4 (cost 1), 0-2-4 (cost 2), 0-3-4 (cost 3)
        let text = "p rgsndp 5 6 1 2 edge edge\n\
                    e 0 1 1/2\ne 1 4 1/2\ne 0 2 1\ne 2 4 1\ne 0 3 3/2\ne 3 4 3/2\nr 0\ng 2 4\n";
        let inst = parse_instance(text).unwrap();
        let sol = brute_force_optimum(&inst, DEFAULT_BUDGET).unwrap();
        assert_eq!(sol.cost, Rational::from_integer(3));
    }

    #[test]
    fn infeasible_reported() {
        let text = "p rgsndp 3 1 1 1 edge edge\ne 0 1 1\nr 0\ng 1 2\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(brute_force_optimum(&inst, DEFAULT_BUDGET), Err(OracleError::Infeasible));
    }

    #[test]
    fn budget_enforced() {
        let text = "p rgsndp 3 3 1 1 edge edge\ne 0 1 1\ne 1 2 1\ne 0 2 1\nr 0\ng 1 2\n";
        let inst = parse_instance(text).unwrap();
        assert!(matches!(brute_force_optimum(&inst, 2), Err(OracleError::BudgetExceeded { .. })));
    }

    #[test]
    fn k4_minus_edge_vertex_demand() {
        // 0 and 3 non-adjacent; common neighbours 1 (cost 2) and 2 (cost 5)
        let text = "p rgsndp 4 5 1 2 vertex vertex\n\
                    e 0 1 0\ne 0 2 0\ne 1 2 0\ne 1 3 0\ne 2 3 0\n\
                    w 0 0\nw 1 2\nw 2 5\nw 3 1\nr 0\ng 2 3\n";
        let inst = parse_instance(text).unwrap();
        let sol = brute_force_optimum(&inst, DEFAULT_BUDGET).unwrap();
        assert_eq!(sol.cost, Rational::from_integer(8));
    }

    #[test]
    fn subset_k4_hamiltonian_cycle() {
        let mut g = Graph::new(4);
        for u in 0..4 {
            for v in u + 1..4 {
                g.add_edge(u, v, Rational::from_integer(1)).unwrap();
            }
        }
        let si = SubsetInstance { graph: g, terminals: vec![0, 1, 2, 3], k: 2, mode: Mode::Edge };
        assert_eq!(subset_brute_force(&si, DEFAULT_BUDGET).unwrap().cost, Rational::from_integer(4));
    }
}
