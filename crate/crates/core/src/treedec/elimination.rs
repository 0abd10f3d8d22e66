//! Elimination orderings: exact search, heuristics and conversion to decompositions.

use std::collections::{BTreeSet, HashMap};

use super::TreeDecomposition;
use crate::graph::Graph;

/// Width of the decomposition induced by eliminating vertices in `order`.
pub fn order_width(g: &Graph, order: &[usize]) -> usize {
    let (higher, _) = simulate(g, order);
    higher.iter().map(|h| h.len()).max().unwrap_or(0)
}

/// Eliminate vertices in order; returns each vertex's later neighbourhood in the fill graph
/// and the position of each vertex.
fn simulate(g: &Graph, order: &[usize]) -> (Vec<BTreeSet<usize>>, Vec<usize>) {
    let n = g.vertex_count();
    let mut pos = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut nbrs: Vec<BTreeSet<usize>> = (0..n).map(|v| g.neighbors(v).iter().map(|&(w, _)| w).collect()).collect();
    let mut higher = vec![BTreeSet::new(); n];
    for &v in order {
        let later: BTreeSet<usize> = nbrs[v].iter().copied().filter(|&w| pos[w] > pos[v]).collect();
        for &a in &later {
            for &b in &later {
                if a != b {
                    nbrs[a].insert(b);
                }
            }
        }
        higher[v] = later;
    }
    (higher, pos)
}

/// Decomposition with one bag per vertex, child bags contained in parents merged away.
pub fn from_elimination_order(g: &Graph, order: &[usize]) -> TreeDecomposition {
    let n = g.vertex_count();
    if n == 0 {
        return TreeDecomposition::from_tree(vec![Vec::new()], &[], 0).unwrap();
    }
    let (higher, pos) = simulate(g, order);
    let mut parent: Vec<Option<usize>> = vec![None; n];
    for v in 0..n {
        parent[v] = higher[v].iter().copied().min_by_key(|&w| pos[w]);
    }
    // Join separate components under the last eliminated vertex.
    let last = *order.last().unwrap();
    for v in 0..n {
        if parent[v].is_none() && v != last {
            parent[v] = Some(last);
        }
    }
    let mut bags: Vec<Vec<usize>> = (0..n)
        .map(|v| std::iter::once(v).chain(higher[v].iter().copied()).collect::<BTreeSet<_>>().into_iter().collect())
        .collect();
    // Contract bags contained in their parent, processing bottom-up.
    let mut alive = vec![true; n];
    for &v in order {
        if let Some(p) = parent[v] {
            let sub = bags[v].iter().all(|x| bags[p].binary_search(x).is_ok());
            if sub {
                alive[v] = false;
                for c in 0..n {
                    if parent[c] == Some(v) {
                        parent[c] = Some(p);
                    }
                }
            }
        }
    }
    let ids: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
    let mut new_id = HashMap::new();
    for (i, &v) in ids.iter().enumerate() {
        new_id.insert(v, i);
    }
    let edges: Vec<(usize, usize)> =
        ids.iter().filter_map(|&v| parent[v].map(|p| (new_id[&p], new_id[&v]))).collect();
    let root = new_id[&last];
    let bags = ids.iter().map(|&v| std::mem::take(&mut bags[v])).collect();
    TreeDecomposition::from_tree(bags, &edges, root).expect("elimination tree is a tree")
}

/// Best of min-fill and min-degree greedy orders.
pub fn heuristic_order(g: &Graph) -> Vec<usize> {
    let a = greedy(g, true);
    let b = greedy(g, false);
    if order_width(g, &b) < order_width(g, &a) {
        b
    } else {
        a
    }
}

fn greedy(g: &Graph, min_fill: bool) -> Vec<usize> {
    let n = g.vertex_count();
    let mut nbrs: Vec<BTreeSet<usize>> = (0..n).map(|v| g.neighbors(v).iter().map(|&(w, _)| w).collect()).collect();
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let score = |v: usize| {
            let deg = nbrs[v].len();
            let fill = if min_fill {
                let ns: Vec<usize> = nbrs[v].iter().copied().collect();
                let mut missing = 0;
                for (i, &a) in ns.iter().enumerate() {
                    for &b in &ns[i + 1..] {
                        if !nbrs[a].contains(&b) {
                            missing += 1;
                        }
                    }
                }
                missing
            } else {
                0
            };
            (fill, deg, v)
        };
        let v = (0..n).filter(|&v| !done[v]).min_by_key(|&v| score(v)).unwrap();
        let ns: Vec<usize> = nbrs[v].iter().copied().collect();
        for &a in &ns {
            nbrs[a].remove(&v);
            for &b in &ns {
                if a != b {
                    nbrs[a].insert(b);
                }
            }
        }
        done[v] = true;
        order.push(v);
    }
    order
}

/// Vertices outside `eliminated ∪ {v}` reachable from `v` through eliminated vertices.
fn later_neighbourhood(adj: &[u32], eliminated: u32, v: usize) -> u32 {
    let mut visited = 1u32 << v;
    let mut frontier = 1u32 << v;
    let mut q = 0u32;
    while frontier != 0 {
        let mut next = 0u32;
        let mut f = frontier;
        while f != 0 {
            let u = f.trailing_zeros() as usize;
            f &= f - 1;
            let nb = adj[u] & !visited;
            visited |= nb;
            q |= nb & !eliminated;
            next |= nb & eliminated;
        }
        frontier = next;
    }
    q
}

/// An elimination order of minimum width, found by a best-first search over
/// eliminated sets. `None` if more than `budget` states would be needed or n > 20.
pub fn exact_treewidth_order(g: &Graph, budget: usize) -> Option<Vec<usize>> {
    let n = g.vertex_count();
    if n > 20 {
        return None;
    }
    if n == 0 {
        return Some(Vec::new());
    }
    let adj: Vec<u32> = (0..n).map(|v| g.neighbors(v).iter().fold(0u32, |m, &(w, _)| m | 1 << w)).collect();
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let upper = heuristic_order(g);
    let ub = order_width(g, &upper);
    // Try widths bottom-up; a width is feasible iff the full set is reachable.
    for width in 0..ub {
        let mut seen: HashMap<u32, (u32, u8)> = HashMap::new();
        let mut stack = vec![0u32];
        seen.insert(0, (0, 0));
        let mut found = false;
        while let Some(s) = stack.pop() {
            if s == full {
                found = true;
                break;
            }
            for v in 0..n {
                if s >> v & 1 == 1 {
                    continue;
                }
                let q = later_neighbourhood(&adj, s, v);
                if q.count_ones() as usize > width {
                    continue;
                }
                let t = s | 1 << v;
                if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(t) {
                    e.insert((s, v as u8));
                    stack.push(t);
                    if seen.len() > budget {
                        return None;
                    }
                }
            }
        }
        if found {
            let mut order = Vec::with_capacity(n);
            let mut s = full;
            while s != 0 {
                let (prev, v) = seen[&s];
                order.push(v as usize);
                s = prev;
            }
            order.reverse();
            return Some(order);
        }
    }
    Some(upper)
}
