//! Set-valued edge profiles.
//!
//! Here a cell is a bag together with an unordered set of (local, global) profile
//! pairs, and a demand is met when some pair of the set connects it. The search is
//! exhaustive and only suited to very small instances; it serves as a cross-check for
//! the demand-indexed solver.

use std::collections::{BTreeSet, HashMap};

use super::ctx::DecompCtx;
use super::ec::vertex_demands;
use super::engine::{EngineError, Val, INF};
use super::vc::partitions_into;
use super::{check_td, require_modes, DpError, DpOptions, Scale};
use crate::connsets::compact::{Part, Uf};
use crate::connsets::{local_step_delta, local_step_gamma, ConnectionSet, ProfilePair};
use crate::graph::{Instance, Mode, Solution};
use crate::treedec::{prepare, TreeDecomposition};

/// The bags around one consistency step.
#[derive(Clone, Debug)]
pub struct EcFrame {
    pub bag: BTreeSet<usize>,
    pub left: BTreeSet<usize>,
    pub right: BTreeSet<usize>,
}

/// Whether `pair` follows from the child pairs when part `j` of the bought edges is `y_parts[j]`.
pub fn ec_pair_consistent(frame: &EcFrame, pair: &ProfilePair, left: &ProfilePair, right: &ProfilePair, y_parts: &[ConnectionSet]) -> bool {
    let k = pair.gamma.k();
    (0..k).all(|j| {
        pair.gamma.0[j] == local_step_gamma(&left.gamma.0[j], &right.gamma.0[j], &y_parts[j], &frame.bag)
            && left.delta.0[j] == local_step_delta(&pair.delta.0[j], &left.gamma.0[j], &frame.left)
            && right.delta.0[j] == local_step_delta(&pair.delta.0[j], &right.gamma.0[j], &frame.right)
    })
}

/// Set-level consistency via the bought edges `y`: every pair of each profile has
/// partners in the other two under some split of `y`. The split may differ per pair.
pub fn ec_consistent(frame: &EcFrame, psi: &[ProfilePair], left: &[ProfilePair], right: &[ProfilePair], y: &[(usize, usize)]) -> bool {
    let k = psi.first().or(left.first()).or(right.first()).map_or(0, |p| p.gamma.k());
    let splits: Vec<Vec<ConnectionSet>> = partitions_into(y, k)
        .into_iter()
        .map(|parts| parts.into_iter().map(ConnectionSet::from_pairs).collect())
        .collect();
    let ok = |p: &ProfilePair, l: &ProfilePair, r: &ProfilePair| splits.iter().any(|s| ec_pair_consistent(frame, p, l, r, s));
    psi.iter().all(|p| left.iter().any(|l| right.iter().any(|r| ok(p, l, r))))
        && left.iter().all(|l| psi.iter().any(|p| right.iter().any(|r| ok(p, l, r))))
        && right.iter().all(|r| psi.iter().any(|p| left.iter().any(|l| ok(p, l, r))))
}

/// Pair encoding: `k` local parts followed by `k` global parts.
type PairKey = Box<[u64]>;
type Psi = Vec<PairKey>;

/// Every partition of `0..n` in canonical form.
fn all_parts(n: usize) -> Vec<Part> {
    let mut out = Vec::new();
    let mut labels = vec![0u8; n];
    fn rec(i: usize, max: u8, labels: &mut Vec<u8>, out: &mut Vec<Part>) {
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

#[derive(Clone)]
struct Best {
    val: Val,
    y: u64,
    left: Psi,
    right: Psi,
}

struct FullDp<'a> {
    ctx: &'a DecompCtx,
    k: usize,
    edge_val: Vec<Val>,
    /// Per bag: (local root, local vertex, demand) checked there.
    checks: Vec<Vec<(usize, usize, usize)>>,
    parts: Vec<Vec<Part>>,
    memo: HashMap<(usize, Psi), Best>,
    budget: usize,
    work: usize,
}

impl FullDp<'_> {
    fn cells(&self) -> usize {
        self.memo.len()
    }

    fn valid(&self, t: usize, psi: &Psi) -> bool {
        let k = self.k;
        if t == self.ctx.root && psi.iter().any(|p| (0..k).any(|j| p[j] != p[k + j])) {
            return false;
        }
        self.checks[t]
            .iter()
            .all(|&(a, b, d)| psi.iter().any(|p| (0..d).all(|j| Part(p[k + j]).same(a, b))))
    }

    fn solve(&mut self, t: usize, psi: Psi) -> Result<Val, EngineError> {
        if let Some(b) = self.memo.get(&(t, psi.clone())) {
            return Ok(b.val);
        }
        self.work += 1;
        if self.work > self.budget {
            return Err(EngineError::TooLarge { bag: t, what: "full-profile cell", limit: self.budget });
        }
        let mut best = Best { val: INF, y: 0, left: Vec::new(), right: Vec::new() };
        if self.valid(t, &psi) {
            let bag = &self.ctx.bags[t];
            let n = bag.size();
            let k = self.k;
            if bag.is_leaf() {
                let discrete = Part::discrete(n).0;
                if psi.iter().all(|p| p[..k].iter().all(|&g| g == discrete)) {
                    best.val = 0;
                }
            } else {
                let (c1, c2) = (bag.children[0], bag.children[1]);
                let ne = bag.edges.len();
                for ymask in 0u64..1 << ne {
                    let ycost: Val = (0..ne).filter(|&i| ymask >> i & 1 == 1).map(|i| self.edge_val[bag.edge_ids[i]]).sum();
                    if ycost >= best.val {
                        continue;
                    }
                    let y: Vec<(u8, u8)> = (0..ne).filter(|&i| ymask >> i & 1 == 1).map(|i| bag.edges[i]).collect();
                    let per_pair: Vec<Vec<(PairKey, PairKey)>> = psi.iter().map(|p| self.witnesses(t, p, &y)).collect();
                    if per_pair.iter().any(Vec::is_empty) {
                        continue;
                    }
                    let mut idx = vec![0usize; psi.len()];
                    loop {
                        let mut l: Psi = idx.iter().enumerate().map(|(i, &w)| per_pair[i][w].0.clone()).collect();
                        let mut r: Psi = idx.iter().enumerate().map(|(i, &w)| per_pair[i][w].1.clone()).collect();
                        l.sort();
                        l.dedup();
                        r.sort();
                        r.dedup();
                        let vl = self.solve(c1, l.clone())?;
                        if vl != INF && ycost + vl < best.val {
                            let vr = self.solve(c2, r.clone())?;
                            if vr != INF && ycost + vl + vr < best.val {
                                best = Best { val: ycost + vl + vr, y: ymask, left: l, right: r };
                            }
                        }
                        let mut i = 0;
                        while i < idx.len() {
                            idx[i] += 1;
                            if idx[i] < per_pair[i].len() {
                                break;
                            }
                            idx[i] = 0;
                            i += 1;
                        }
                        if i == idx.len() {
                            break;
                        }
                    }
                }
            }
        }
        let val = best.val;
        self.memo.insert((t, psi), best);
        Ok(val)
    }

    /// Child pairs that explain `pair` under some split of `y`.
    fn witnesses(&self, t: usize, pair: &[u64], y: &[(u8, u8)]) -> Vec<(PairKey, PairKey)> {
        let bag = &self.ctx.bags[t];
        let n = bag.size();
        let k = self.k;
        let (b1, b2) = (&self.ctx.bags[bag.children[0]], &self.ctx.bags[bag.children[1]]);
        let idx: Vec<usize> = (0..y.len()).collect();
        let mut out = BTreeSet::new();
        for split in partitions_into(&idx, k) {
            let mut comps: Vec<Vec<(u64, u64, u64, u64)>> = Vec::with_capacity(k);
            for (j, part) in split.iter().enumerate() {
                let (gamma, delta) = (Part(pair[j]), Part(pair[k + j]));
                let mut opts = Vec::new();
                for &g1 in &self.parts[bag.children[0]] {
                    for &g2 in &self.parts[bag.children[1]] {
                        let mut uf = Uf::new(n);
                        uf.merge_mapped(g1.restrict(&b1.sep), &b1.sep_in_parent);
                        uf.merge_mapped(g2.restrict(&b2.sep), &b2.sep_in_parent);
                        for &e in part {
                            uf.union(y[e].0, y[e].1);
                        }
                        if uf.part() != gamma {
                            continue;
                        }
                        let down = |g: Part, b: &super::ctx::BagCtx| {
                            let mut u = Uf::new(b.size());
                            u.merge(g);
                            u.merge_mapped(delta.restrict(&b.sep_in_parent), &b.sep);
                            u.part().0
                        };
                        opts.push((g1.0, down(g1, b1), g2.0, down(g2, b2)));
                    }
                }
                if opts.is_empty() {
                    break;
                }
                comps.push(opts);
            }
            if comps.len() < k {
                continue;
            }
            let mut idx = vec![0usize; k];
            loop {
                let pick: Vec<_> = (0..k).map(|j| comps[j][idx[j]]).collect();
                let l: PairKey = pick.iter().map(|c| c.0).chain(pick.iter().map(|c| c.1)).collect();
                let r: PairKey = pick.iter().map(|c| c.2).chain(pick.iter().map(|c| c.3)).collect();
                out.insert((l, r));
                let mut j = 0;
                while j < k {
                    idx[j] += 1;
                    if idx[j] < comps[j].len() {
                        break;
                    }
                    idx[j] = 0;
                    j += 1;
                }
                if j == k {
                    break;
                }
            }
        }
        out.into_iter().collect()
    }

    fn collect(&self, t: usize, psi: &Psi, edges: &mut BTreeSet<usize>) {
        let best = &self.memo[&(t, psi.clone())];
        let bag = &self.ctx.bags[t];
        if bag.is_leaf() {
            return;
        }
        for (i, &e) in bag.edge_ids.iter().enumerate() {
            if best.y >> i & 1 == 1 {
                edges.insert(e);
            }
        }
        self.collect(bag.children[0], &best.left, edges);
        self.collect(bag.children[1], &best.right, edges);
    }
}

/// Result of a set-valued profile solve.
#[derive(Clone, Debug)]
pub struct FullSolution {
    pub solution: Solution,
    /// Cells evaluated.
    pub cells: usize,
}

/// Default cap on evaluated cells.
pub const FULL_CELL_BUDGET: usize = 200_000;

/// Exact edge-connectivity SNDP by exhaustive set-valued profiles.
pub fn solve_ecsndp_full(inst: &Instance, td: &TreeDecomposition, budget: usize, _opts: &DpOptions) -> Result<FullSolution, DpError> {
    require_modes(inst, Some(Mode::Edge), Mode::Edge)?;
    if inst.multi_root {
        return Err(DpError::Unsupported("multiple roots need vertex connectivity".into()));
    }
    check_td(inst, td)?;
    let demands = vertex_demands(inst)?;
    let k = demands.iter().map(|d| d.1).max().unwrap_or(0);
    let root = inst.root();
    let (ntd, ann) = prepare(td, &inst.graph, &[root]);
    let ctx = DecompCtx::new(&ntd, &ann, &inst.graph);
    let scale = Scale::for_instance(inst);
    let mut checks = vec![Vec::new(); ctx.bags.len()];
    for &(v, d) in &demands {
        let t = ctx.topmost[v];
        let bag = &ctx.bags[t];
        checks[t].push((bag.local(root).unwrap() as usize, bag.local(v).unwrap() as usize, d));
    }
    let mut dp = FullDp {
        ctx: &ctx,
        k,
        edge_val: (0..inst.graph.edge_count()).map(|e| scale.val(inst.graph.edge_cost(e))).collect(),
        checks,
        parts: ctx.bags.iter().map(|b| all_parts(b.size())).collect(),
        memo: HashMap::new(),
        budget,
        work: 0,
    };
    // Root profiles: sets of at most one pair per demand, each with equal local and global parts.
    let root_pairs: Vec<PairKey> = {
        let parts = &dp.parts[ctx.root];
        let mut out = Vec::new();
        let mut idx = vec![0usize; k];
        loop {
            let g: Vec<u64> = idx.iter().map(|&i| parts[i].0).collect();
            out.push(g.iter().chain(g.iter()).copied().collect::<PairKey>());
            let mut j = 0;
            while j < k {
                idx[j] += 1;
                if idx[j] < parts.len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == k {
                break;
            }
        }
        out
    };
    let mut candidates: BTreeSet<Psi> = BTreeSet::new();
    let mut frontier: BTreeSet<Psi> = BTreeSet::from([Vec::new()]);
    for _ in 0..demands.len() {
        let mut next = BTreeSet::new();
        for psi in &frontier {
            for p in &root_pairs {
                let mut s = psi.clone();
                if !s.contains(p) {
                    s.push(p.clone());
                    s.sort();
                }
                next.insert(s);
            }
        }
        frontier = next;
        candidates.extend(frontier.iter().cloned());
    }
    if demands.is_empty() {
        candidates.insert(Vec::new());
    }
    let mut best: Option<(Val, Psi)> = None;
    for psi in candidates {
        let v = dp.solve(ctx.root, psi.clone())?;
        if v != INF && best.as_ref().is_none_or(|b| v < b.0) {
            best = Some((v, psi));
        }
    }
    let (val, psi) = best.ok_or(DpError::Infeasible)?;
    let mut edges = BTreeSet::new();
    dp.collect(ctx.root, &psi, &mut edges);
    let mut solution = Solution::from_edges(inst, edges);
    solution.cost = scale.rational(val);
    Ok(FullSolution { solution, cells: dp.cells() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connsets::ConnectionProfile;

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    fn empty_pair(bag: &BTreeSet<usize>, k: usize) -> ProfilePair {
        ProfilePair { gamma: ConnectionProfile::empty(k, bag), delta: ConnectionProfile::empty(k, bag) }
    }

    #[test]
    fn empty_profiles_consistent() {
        let f = EcFrame { bag: set(&[0, 1]), left: set(&[0, 1]), right: set(&[0]) };
        let p = empty_pair(&f.bag, 2);
        assert!(ec_consistent(&f, &[p.clone()], &[empty_pair(&f.left, 2)], &[empty_pair(&f.right, 2)], &[]));
    }

    #[test]
    fn missing_forced_closure_rejected() {
        let f = EcFrame { bag: set(&[0, 1]), left: set(&[0, 1]), right: set(&[0]) };
        let p = empty_pair(&f.bag, 1);
        assert!(!ec_consistent(&f, &[p], &[empty_pair(&f.left, 1)], &[empty_pair(&f.right, 1)], &[(0, 1)]));
    }

    #[test]
    fn partitions_counted() {
        assert_eq!(all_parts(3).len(), 5);
        assert_eq!(all_parts(4).len(), 15);
    }
}
