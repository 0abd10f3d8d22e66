//! The tree instance grown from every candidate cell and then pruned to a fixpoint.
//! Only usable on tiny instances; its survivors coincide with the DP universe.

use std::collections::VecDeque;

use super::{finish, setup, CellKey, ConnNode, Dag, Expansion, PruneCounts, TreeError, TreeInstance, TreeLimits};
use crate::connsets::compact::Part;
use crate::dp::ctx::DecompCtx;
use crate::dp::ec::{Checks, EcSem};
use crate::dp::engine::{FxIndexMap, Key, Semantics, INF};
use crate::graph::Instance;
use crate::treedec::TreeDecomposition;

/// All partitions of `0..n` in canonical form.
fn partitions(n: usize) -> Vec<Part> {
    let mut out = Vec::new();
    let mut labels = vec![0u8; n];
    fn rec(i: usize, max: u8, labels: &mut [u8], out: &mut Vec<Part>) {
        if i == labels.len() {
            out.push(Part::from_labels(labels));
            return;
        }
        for l in 0..=max {
            labels[i] = l;
            rec(i + 1, max.max(l + 1), labels, out);
        }
    }
    if n == 0 {
        return vec![Part(0)];
    }
    rec(0, 0, &mut labels, &mut out);
    out
}

fn tuples(parts: &[Part], m: usize) -> Vec<Key> {
    let mut out: Vec<Vec<u64>> = vec![Vec::new()];
    for _ in 0..m {
        out = out.iter().flat_map(|t| parts.iter().map(move |p| t.iter().copied().chain([p.0]).collect())).collect();
    }
    out.into_iter().map(Vec::into_boxed_slice).collect()
}

/// Build the tree instance from all candidate cells and prune unreachable nodes,
/// connecting nodes with a removed child, and leaves that promise connections.
pub fn build_explicit(inst: &Instance, td: &TreeDecomposition, limits: TreeLimits) -> Result<TreeInstance, TreeError> {
    let setup = setup(inst, td)?;
    let ctx = DecompCtx::new(&setup.td, &setup.ann, &inst.graph);
    let sem = EcSem::new(&ctx, inst, &setup.scale, setup.slots.clone(), Checks::Off, false).keep_all();
    let nb = ctx.bags.len();
    let mut cands: Vec<Vec<Key>> = Vec::with_capacity(nb);
    for bag in &ctx.bags {
        let parts = partitions(bag.size());
        let count = (parts.len() as f64).powi(sem.m as i32);
        if count > limits.max_profiles as f64 {
            return Err(TreeError::TooLarge { what: "candidate states per bag", limit: limits.max_profiles });
        }
        cands.push(tuples(&parts, sem.m));
    }
    let by_proj: Vec<FxIndexMap<Key, Vec<usize>>> = (0..nb)
        .map(|t| {
            let mut map: FxIndexMap<Key, Vec<usize>> = FxIndexMap::default();
            for (i, s) in cands[t].iter().enumerate() {
                map.entry(sem.project(t, s)).or_default().push(i);
            }
            map
        })
        .collect();
    // Per bag: outcome state -> (left projection, right projection, code, cost).
    let mut outcomes: Vec<FxIndexMap<Key, Vec<(usize, usize, u64, i64)>>> = vec![FxIndexMap::default(); nb];
    let mut out = Vec::new();
    let mut total = 0usize;
    for t in 0..nb {
        let bag = &ctx.bags[t];
        if bag.is_leaf() {
            continue;
        }
        let (c1, c2) = (bag.children[0], bag.children[1]);
        for (li, l) in by_proj[c1].keys().enumerate() {
            for (ri, r) in by_proj[c2].keys().enumerate() {
                out.clear();
                sem.transitions(t, l, r, INF - 1, &mut out);
                total += out.len();
                if total > limits.max_connecting {
                    return Err(TreeError::TooLarge { what: "candidate transitions", limit: limits.max_connecting });
                }
                for (state, val, ch) in out.drain(..) {
                    outcomes[t].entry(state).or_default().push((li, ri, ch.code, val));
                }
            }
        }
    }
    let root_cells = cands[ctx.root].iter().map(|s| CellKey { bag: ctx.root, state: s.clone(), down: sem.root_down() }).collect();
    let expand = |key: &CellKey| {
        let t = key.bag;
        let bag = &ctx.bags[t];
        let mut res = Vec::new();
        if bag.is_leaf() {
            return res;
        }
        let Some(list) = outcomes[t].get(&key.state) else { return res };
        let delta = sem.delta(t, &key.down, &key.state);
        let (c1, c2) = (bag.children[0], bag.children[1]);
        let d1 = sem.child_down(t, 0, &key.state, &delta);
        let d2 = sem.child_down(t, 1, &key.state, &delta);
        for &(li, ri, code, val) in list {
            for &s1 in &by_proj[c1][li] {
                for &s2 in &by_proj[c2][ri] {
                    let k1 = CellKey { bag: c1, state: cands[c1][s1].clone(), down: d1.clone() };
                    let k2 = CellKey { bag: c2, state: cands[c2][s2].clone(), down: d2.clone() };
                    res.push(Expansion { code, val, children: vec![k1, k2] });
                    if res.len() > limits.max_connecting {
                        return res;
                    }
                }
            }
        }
        res
    };
    let full = Dag::grow(root_cells, expand, limits)?;
    let (dag, pruned) = prune(full, &ctx, &sem);
    Ok(finish(inst, setup, &ctx, &sem, dag, pruned))
}

/// Apply the three removal rules to exhaustion and renumber the survivors.
fn prune(dag: Dag, ctx: &DecompCtx, sem: &EcSem) -> (Dag, PruneCounts) {
    let np = dag.profiles.len();
    let nc = dag.conns.len();
    let mut counts = PruneCounts::default();
    let mut alive_p = vec![true; np];
    let mut alive_c = vec![true; nc];
    // Children always carry larger ids than their parents.
    for p in (0..np).rev() {
        let node = &dag.profiles[p];
        for &c in &node.conns {
            if !dag.conns[c as usize].children.iter().all(|&ch| alive_p[ch as usize]) {
                alive_c[c as usize] = false;
                counts.dead_connecting += 1;
            }
        }
        let key = &dag.keys[p];
        let leaf_bag = node.bag.is_some_and(|t| ctx.bags[t].is_leaf());
        let has_child = node.conns.iter().any(|&c| alive_c[c as usize]);
        if !leaf_bag && !has_child {
            let promise = node.bag.is_some_and(|t| key.state != sem.leaf_state(t));
            debug_assert!(promise || node.bag.is_none(), "an empty promise is always realizable");
            alive_p[p] = false;
            counts.unmet_leaves += 1;
        } else if leaf_bag && key.state != sem.leaf_state(node.bag.unwrap()) {
            alive_p[p] = false;
            counts.unmet_leaves += 1;
        }
    }
    let mut reach_p = vec![false; np];
    let mut reach_c = vec![false; nc];
    if alive_p[0] {
        reach_p[0] = true;
        let mut queue = VecDeque::from([0u32]);
        while let Some(p) = queue.pop_front() {
            for &c in &dag.profiles[p as usize].conns {
                if !alive_c[c as usize] {
                    continue;
                }
                reach_c[c as usize] = true;
                for &ch in &dag.conns[c as usize].children {
                    if !reach_p[ch as usize] {
                        reach_p[ch as usize] = true;
                        queue.push_back(ch);
                    }
                }
            }
        }
    }
    counts.unreachable = (0..np).filter(|&p| alive_p[p] && !reach_p[p]).count() + (0..nc).filter(|&c| alive_c[c] && !reach_c[c]).count();
    let mut new_p = vec![u32::MAX; np];
    let mut next = 0u32;
    for p in 0..np {
        if reach_p[p] {
            new_p[p] = next;
            next += 1;
        }
    }
    let mut new_c = vec![u32::MAX; nc];
    let mut next = 0u32;
    for c in 0..nc {
        if reach_c[c] {
            new_c[c] = next;
            next += 1;
        }
    }
    let mut out = Dag { profiles: Vec::new(), conns: Vec::new(), keys: Vec::new(), index: Default::default() };
    for p in (0..np).filter(|&p| reach_p[p]) {
        let mut node = dag.profiles[p].clone();
        node.conns = node.conns.iter().filter(|&&c| reach_c[c as usize]).map(|&c| new_c[c as usize]).collect();
        node.parents = node.parents.iter().filter(|&&c| reach_c[c as usize]).map(|&c| new_c[c as usize]).collect();
        out.index.insert(dag.keys[p].clone(), out.profiles.len() as u32);
        out.keys.push(dag.keys[p].clone());
        out.profiles.push(node);
    }
    for c in (0..nc).filter(|&c| reach_c[c]) {
        let old = &dag.conns[c];
        out.conns.push(ConnNode {
            parent: new_p[old.parent as usize],
            children: old.children.iter().map(|&x| new_p[x as usize]).collect(),
            ..old.clone()
        });
    }
    (out, counts)
}
