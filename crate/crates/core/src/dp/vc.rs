//! Vertex-connectivity profiles with vertex costs.
//!
//! Each bought vertex is assigned one part per demand; the `j`-th component of a demand
//! records which bag pairs are joined by a path whose internal vertices all lie in part
//! `j`. Such paths for different parts are openly disjoint. A demand pair that is itself
//! an edge takes that edge as one path and needs one part fewer.
//!
//! The plain mode (edge connectivity with vertex costs) assigns bought edges to parts
//! instead and closes through every vertex.

use std::collections::{BTreeSet, VecDeque};

use super::ctx::DecompCtx;
use super::ec::{bought_options, vertex_demands};
use super::engine::{Engine, Key, Semantics, Val};
use super::{check_td, require_modes, DpError, DpOptions, DpStats, Scale};
use crate::connsets::compact::PairSet;
use crate::connsets::{project, tc_star, ConnectionSet};
use crate::graph::{DemandWitness, Instance, Mode, Solution};
use crate::treedec::{prepare, TreeDecomposition};

/// One root-to-vertex requirement as handled by the DP.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VcDemand {
    pub root: usize,
    pub vertex: usize,
    pub k: usize,
    /// Edge `root–vertex`, used as a path of its own in vertex mode.
    pub direct_edge: Option<usize>,
}

impl VcDemand {
    /// Number of parts the DP must route through.
    pub fn parts(&self, plain: bool) -> usize {
        if !plain && self.direct_edge.is_some() {
            self.k - 1
        } else {
            self.k
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Check {
    slot: usize,
    a: u8,
    b: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct VcChoice {
    h: u16,
    /// Per slot, the mixed-radix edge assignment (plain mode only).
    codes: Box<[u64]>,
}

struct VcSem<'a> {
    ctx: &'a DecompCtx,
    plain: bool,
    /// Parts per slot.
    ks: Vec<usize>,
    first: Vec<usize>,
    m: usize,
    excluded: Vec<Option<usize>>,
    prices: Vec<Val>,
    forced: Vec<bool>,
    checks: Vec<Vec<Check>>,
    relevant: Vec<Vec<bool>>,
    /// Per slot, the root and target; neither is ever an internal vertex of its paths.
    ends: Vec<(usize, usize)>,
}

const PART_BITS: usize = 4;

fn part_of(code: u64, i: usize) -> usize {
    (code >> (PART_BITS * i) & 15) as usize
}

impl<'a> VcSem<'a> {
    fn new(ctx: &'a DecompCtx, inst: &Instance, demands: &[VcDemand], plain: bool) -> Self {
        let scale = Scale::for_instance(inst);
        let n = inst.graph.vertex_count();
        let ks: Vec<usize> = demands.iter().map(|d| d.parts(plain)).collect();
        let mut first = Vec::new();
        let mut m = 0;
        for &k in &ks {
            first.push(m);
            m += k;
        }
        let mut forced = vec![false; n];
        for &r in &inst.roots {
            forced[r] = true;
        }
        let nb = ctx.bags.len();
        let mut checks = vec![Vec::new(); nb];
        let mut relevant = vec![vec![false; demands.len()]; nb];
        for (s, d) in demands.iter().enumerate() {
            let t = ctx.topmost[d.vertex];
            let bag = &ctx.bags[t];
            checks[t].push(Check { slot: s, a: bag.local(d.root).unwrap(), b: bag.local(d.vertex).unwrap() });
            for (b, rel) in relevant.iter_mut().enumerate() {
                rel[s] = ctx.in_subtree(t, b);
            }
        }
        VcSem {
            ctx,
            plain,
            ks,
            first,
            m,
            excluded: demands.iter().map(|d| if plain { None } else { d.direct_edge }).collect(),
            prices: (0..n).map(|v| scale.val(inst.vertex_price(v))).collect(),
            forced,
            checks,
            relevant,
            ends: demands.iter().map(|d| (d.root, d.vertex)).collect(),
        }
    }

    /// Local mask of the slot's endpoints in bag `t`.
    fn end_mask(&self, t: usize, s: usize) -> u16 {
        let bag = &self.ctx.bags[t];
        let (r, v) = self.ends[s];
        [r, v].iter().filter_map(|&x| bag.local(x)).fold(0, |m, i| m | 1 << i)
    }

    fn slots(&self) -> usize {
        self.ks.len()
    }

    fn gamma(&self, state: &[u64], c: usize) -> PairSet {
        PairSet(state[1 + self.slots() + c])
    }

    /// Internal-vertex mask of component `j` of slot `s`.
    fn zmask(&self, t: usize, state: &[u64], s: usize, j: usize) -> u16 {
        let n = self.ctx.bags[t].size();
        if self.plain {
            return ((1u32 << n) - 1) as u16;
        }
        let h = state[0] as u16 & !self.end_mask(t, s);
        let code = state[1 + s];
        (0..n).filter(|&i| h >> i & 1 == 1 && part_of(code, i) == j).fold(0, |z, i| z | 1 << i)
    }

    /// Bag edges between bought vertices usable by slot `s`, as (local pair, edge id).
    fn usable_edges(&self, t: usize, h: u16, s: usize) -> Vec<((u8, u8), usize)> {
        let bag = &self.ctx.bags[t];
        bag.edges
            .iter()
            .zip(&bag.edge_ids)
            .filter(|&(&(a, b), &e)| h >> a & 1 == 1 && h >> b & 1 == 1 && self.excluded[s] != Some(e))
            .map(|(&p, &e)| (p, e))
            .collect()
    }

    /// Child components lifted into the bag.
    fn lifted(&self, t: usize, children: [&[u64]; 2], c: usize) -> PairSet {
        let bag = &self.ctx.bags[t];
        let mut p = PairSet(0);
        for (pos, key) in children.into_iter().enumerate() {
            if !key.is_empty() {
                let map = &self.ctx.bags[bag.children[pos]].sep_in_parent;
                p = p.union(PairSet(key[1 + self.slots() + c]).lift(map));
            }
        }
        p
    }

    /// Per-slot alternatives: (part code, component closures, edge code).
    fn slot_options(&self, t: usize, h: u16, children: [&[u64]; 2], s: usize) -> Option<Vec<(u64, Vec<u64>, u64)>> {
        let bag = &self.ctx.bags[t];
        let n = bag.size();
        let k = self.ks[s];
        let base: Vec<PairSet> = (0..k).map(|j| self.lifted(t, children, self.first[s] + j)).collect();
        let edges = self.usable_edges(t, h, s);
        let mut out = Vec::new();
        if self.plain {
            let full = ((1u32 << n) - 1) as u16;
            let radix = (k + 1) as u64;
            let total = radix.pow(edges.len() as u32);
            for code in 0..total {
                let mut pairs = base.clone();
                let mut rest = code;
                for &((a, b), _) in &edges {
                    let opt = (rest % radix) as usize;
                    rest /= radix;
                    if opt > 0 {
                        pairs[opt - 1].insert(a as usize, b as usize);
                    }
                }
                let gammas = pairs.iter().map(|p| p.closure_through(full, n).0).collect();
                out.push((0, gammas, code));
            }
            return Some(out);
        }
        let mut fixed = 0u16;
        let mut code = 0u64;
        for (pos, key) in children.into_iter().enumerate() {
            if key.is_empty() {
                continue;
            }
            let child = &self.ctx.bags[bag.children[pos]];
            for (i, &pl) in child.sep_in_parent.iter().enumerate() {
                if key[0] >> i & 1 == 0 {
                    continue;
                }
                let j = part_of(key[1 + s], i) as u64;
                if fixed >> pl & 1 == 1 {
                    if part_of(code, pl as usize) as u64 != j {
                        return None;
                    }
                } else {
                    fixed |= 1 << pl;
                    code |= j << (PART_BITS * pl as usize);
                }
            }
        }
        let inner = h & !self.end_mask(t, s);
        let free: Vec<usize> = (0..n).filter(|&i| inner >> i & 1 == 1 && fixed >> i & 1 == 0).collect();
        let mut with_edges = base;
        for &((a, b), _) in &edges {
            for p in &mut with_edges {
                p.insert(a as usize, b as usize);
            }
        }
        let choices = if k == 0 { 1 } else { k.pow(free.len() as u32) };
        for a in 0..choices {
            let mut full_code = code;
            let mut rest = a;
            if k > 0 {
                for &i in &free {
                    full_code |= ((rest % k) as u64) << (PART_BITS * i);
                    rest /= k;
                }
            }
            let mut gammas = Vec::with_capacity(k);
            for (j, p) in with_edges.iter().enumerate() {
                let z = (0..n).filter(|&i| inner >> i & 1 == 1 && part_of(full_code, i) == j).fold(0u16, |z, i| z | 1 << i);
                gammas.push(p.closure_through(z, n).0);
            }
            out.push((full_code, gammas, 0));
        }
        Some(out)
    }
}

impl Semantics for VcSem<'_> {
    type Choice = VcChoice;

    fn leaf_state(&self, _t: usize) -> Key {
        Box::new([])
    }

    fn project(&self, t: usize, state: &[u64]) -> Key {
        if state.is_empty() {
            return Box::new([]);
        }
        let sep = &self.ctx.bags[t].sep;
        let mut out = Vec::with_capacity(state.len());
        out.push(sep.iter().enumerate().fold(0u64, |m, (i, &x)| m | (state[0] >> x & 1) << i));
        for s in 0..self.slots() {
            let code = state[1 + s];
            out.push(sep.iter().enumerate().fold(0u64, |m, (i, &x)| m | (part_of(code, x as usize) as u64) << (PART_BITS * i)));
        }
        for c in 0..self.m {
            out.push(self.gamma(state, c).restrict(sep).0);
        }
        out.into_boxed_slice()
    }

    fn transitions(&self, t: usize, left: &[u64], right: &[u64], budget: Val, out: &mut Vec<(Key, Val, VcChoice)>) {
        'h: for (h, cost) in bought_options(self.ctx, &self.forced, &self.prices, t, [left, right]) {
            if cost > budget {
                continue;
            }
            let mut per_slot = Vec::with_capacity(self.slots());
            for s in 0..self.slots() {
                match self.slot_options(t, h, [left, right], s) {
                    Some(opts) => per_slot.push(opts),
                    None => continue 'h,
                }
            }
            let mut idx = vec![0usize; self.slots()];
            loop {
                let mut key = vec![h as u64];
                key.extend(idx.iter().enumerate().map(|(s, &i)| per_slot[s][i].0));
                for (s, &i) in idx.iter().enumerate() {
                    key.extend_from_slice(&per_slot[s][i].1);
                }
                let codes = idx.iter().enumerate().map(|(s, &i)| per_slot[s][i].2).collect();
                out.push((key.into_boxed_slice(), cost, VcChoice { h, codes }));
                let mut s = 0;
                while s < idx.len() {
                    idx[s] += 1;
                    if idx[s] < per_slot[s].len() {
                        break;
                    }
                    idx[s] = 0;
                    s += 1;
                }
                if s == idx.len() {
                    break;
                }
            }
        }
    }

    fn delta(&self, t: usize, down: &[u64], state: &[u64]) -> Key {
        if state.is_empty() {
            return Box::new([]);
        }
        let bag = &self.ctx.bags[t];
        let mut out = Vec::with_capacity(self.m);
        for s in 0..self.slots() {
            for j in 0..self.ks[s] {
                let c = self.first[s] + j;
                let pairs = PairSet(down[c]).lift(&bag.sep).union(self.gamma(state, c));
                out.push(pairs.closure_through(self.zmask(t, state, s, j), bag.size()).0);
            }
        }
        out.into_boxed_slice()
    }

    fn valid(&self, t: usize, state: &[u64], delta: &[u64]) -> bool {
        if state.is_empty() {
            return true;
        }
        let h = state[0];
        self.checks[t].iter().all(|ch| {
            h >> ch.a & 1 == 1
                && h >> ch.b & 1 == 1
                && (0..self.ks[ch.slot]).all(|j| PairSet(delta[self.first[ch.slot] + j]).contains(ch.a as usize, ch.b as usize))
        })
    }

    fn child_down(&self, t: usize, pos: usize, _state: &[u64], delta: &[u64]) -> Key {
        let child = &self.ctx.bags[self.ctx.bags[t].children[pos]];
        delta.iter().map(|&d| PairSet(d).restrict(&child.sep_in_parent).0).collect()
    }

    fn root_down(&self) -> Key {
        vec![0; self.m].into_boxed_slice()
    }

    fn normalize_down(&self, t: usize, mut down: Key) -> Key {
        for s in 0..self.slots() {
            if !self.relevant[t][s] {
                for c in self.first[s]..self.first[s] + self.ks[s] {
                    down[c] = 0;
                }
            }
        }
        down
    }
}

/// Result of an exact vertex-cost solve.
#[derive(Clone, Debug)]
pub struct VcSolution {
    pub solution: Solution,
    pub stats: DpStats,
    pub demands: Vec<VcDemand>,
    /// Vertex mode: per demand, the bought vertices of each part.
    pub vertex_parts: Vec<Vec<BTreeSet<usize>>>,
    /// Plain mode: per demand, the edges of each part.
    pub edge_parts: Vec<Vec<BTreeSet<usize>>>,
}

/// Root-to-vertex demands: every group vertex against every root.
pub fn vc_demands(inst: &Instance) -> Result<Vec<VcDemand>, DpError> {
    let mut out = Vec::new();
    for (v, k) in vertex_demands(inst)? {
        for &r in &inst.roots {
            if r != v {
                out.push(VcDemand { root: r, vertex: v, k, direct_edge: inst.graph.edge_id(r, v) });
            }
        }
    }
    Ok(out)
}

/// Exact rooted SNDP with vertex costs. With `plain` the demands ask for edge-disjoint
/// paths; otherwise for openly vertex-disjoint paths from each root.
pub fn solve_vcsndp(inst: &Instance, td: &TreeDecomposition, plain: bool, opts: &DpOptions) -> Result<VcSolution, DpError> {
    let conn = if plain { Mode::Edge } else { Mode::Vertex };
    require_modes(inst, Some(Mode::Vertex), conn)?;
    if plain && inst.multi_root {
        return Err(DpError::Unsupported("multiple roots need vertex connectivity".into()));
    }
    check_td(inst, td)?;
    let demands = vc_demands(inst)?;
    if demands.iter().any(|d| d.parts(plain) >= 16) {
        return Err(DpError::Unsupported("demands of 16 or more are not supported".into()));
    }
    let (ntd, ann) = prepare(td, &inst.graph, &inst.roots);
    if ntd.width() + 1 > crate::connsets::compact::MAX_PAIR_ELEMS {
        return Err(DpError::Unsupported(format!("bags of {} vertices exceed the supported size", ntd.width() + 1)));
    }
    let ctx = DecompCtx::new(&ntd, &ann, &inst.graph);
    let sem = VcSem::new(&ctx, inst, &demands, plain);
    let bound = super::bound_for(inst, &Scale::for_instance(inst), opts)?;
    let mut engine = Engine::build(&sem, &ctx, opts.limits, bound, false)?;
    let optimum = engine.optimum();
    let stats = DpStats {
        width: ntd.width(),
        height: ntd.height(),
        consistency_checks: engine.consistency_checks,
        bags: engine.stats(),
    };
    let (value, selected) = optimum.ok_or(DpError::Infeasible)?;
    let mut vertices: BTreeSet<usize> = inst.roots.iter().copied().collect();
    let mut vertex_parts: Vec<Vec<BTreeSet<usize>>> = sem.ks.iter().map(|&k| vec![BTreeSet::new(); k]).collect();
    let mut edge_parts = vertex_parts.clone();
    for (t, sel) in selected.iter().enumerate() {
        let Some(c) = sel.choice else { continue };
        let bag = &ctx.bags[t];
        let state = engine.state(t, sel.state).to_vec();
        let choice = engine.choice(t, c).clone();
        for &x in &bag.own {
            if choice.h >> x & 1 == 1 {
                let v = bag.verts[x as usize];
                vertices.insert(v);
                if !plain {
                    for (s, parts) in vertex_parts.iter_mut().enumerate() {
                        if sem.ks[s] > 0 && sem.ends[s].0 != v && sem.ends[s].1 != v {
                            parts[part_of(state[1 + s], x as usize)].insert(v);
                        }
                    }
                }
            }
        }
        if plain {
            for (s, parts) in edge_parts.iter_mut().enumerate() {
                let radix = (sem.ks[s] + 1) as u64;
                let mut rest = choice.codes[s];
                for (_, e) in sem.usable_edges(t, choice.h, s) {
                    let opt = (rest % radix) as usize;
                    rest /= radix;
                    if opt > 0 {
                        parts[opt - 1].insert(e);
                    }
                }
            }
        }
    }
    let scale = Scale::for_instance(inst);
    let mut solution = Solution::from_vertices(inst, vertices.clone());
    debug_assert_eq!(solution.cost, scale.rational(value));
    let witnesses = demands
        .iter()
        .enumerate()
        .map(|(s, d)| {
            let mut paths = Vec::new();
            if plain {
                for part in &edge_parts[s] {
                    paths.extend(bfs(inst, d.root, d.vertex, |_| true, |e| part.contains(&e)));
                }
            } else {
                if d.direct_edge.is_some() {
                    paths.push(vec![d.root, d.vertex]);
                }
                for part in &vertex_parts[s] {
                    let direct = d.direct_edge;
                    paths.extend(bfs(inst, d.root, d.vertex, |x| part.contains(&x), |e| Some(e) != direct));
                }
            }
            DemandWitness {
                group: inst.groups.iter().position(|g| g.members == [d.vertex] && g.demand == d.k).unwrap_or(0),
                vertex: d.vertex,
                root: d.root,
                paths,
            }
        })
        .collect();
    solution.certificate = Some(witnesses);
    Ok(VcSolution { solution, stats, demands, vertex_parts, edge_parts })
}

/// Shortest `s`–`t` path whose internal vertices pass `inner` and whose edges pass `edge_ok`.
fn bfs(
    inst: &Instance,
    s: usize,
    t: usize,
    inner: impl Fn(usize) -> bool,
    edge_ok: impl Fn(usize) -> bool,
) -> Option<Vec<usize>> {
    let g = &inst.graph;
    let mut prev = vec![usize::MAX; g.vertex_count()];
    prev[s] = s;
    let mut q = VecDeque::from([s]);
    while let Some(u) = q.pop_front() {
        if u == t {
            let mut path = vec![t];
            let mut x = t;
            while x != s {
                x = prev[x];
                path.push(x);
            }
            path.reverse();
            return Some(path);
        }
        if u != s && !inner(u) {
            continue;
        }
        for &(w, e) in g.neighbors(u) {
            if edge_ok(e) && prev[w] == usize::MAX && (w == t || inner(w)) {
                prev[w] = u;
                q.push_back(w);
            }
        }
    }
    None
}

/// One triple of a vertex profile over a bag.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VcTriple {
    pub z: Vec<BTreeSet<usize>>,
    pub gamma: Vec<ConnectionSet>,
    pub delta: Vec<ConnectionSet>,
}

/// The bags around one consistency step.
#[derive(Clone, Debug)]
pub struct VcFrame {
    pub bag: BTreeSet<usize>,
    pub left: BTreeSet<usize>,
    pub right: BTreeSet<usize>,
    /// Bag of the parent, absent at the root.
    pub parent: Option<BTreeSet<usize>>,
    /// Edges whose topmost bag is this one.
    pub edges: ConnectionSet,
}

fn with_ground(cs: &ConnectionSet, ground: &BTreeSet<usize>) -> ConnectionSet {
    cs.union(&ConnectionSet::empty(ground.iter().copied()))
}

/// Whether `triple` follows from the child triples when the bought vertices `w_parts` (one set per component) are added.
pub fn vc_triple_consistent(frame: &VcFrame, triple: &VcTriple, left: &VcTriple, right: &VcTriple, w_parts: &[BTreeSet<usize>]) -> bool {
    let k = triple.z.len();
    let fresh: BTreeSet<usize> = match &frame.parent {
        Some(p) => frame.bag.difference(p).copied().collect(),
        None => frame.bag.clone(),
    };
    (0..k).all(|j| {
        let z = &triple.z[j];
        let closure = tc_star(z, &with_ground(&left.gamma[j].union(&right.gamma[j]).union(&frame.edges), &frame.bag));
        let gamma_ok = triple.gamma[j] == project(&closure, &frame.bag);
        let delta_ok = [(left, &frame.left), (right, &frame.right)].iter().all(|(child, cb)| {
            let through = tc_star(&child.z[j], &with_ground(&triple.delta[j].union(&child.gamma[j]), cb));
            child.delta[j] == project(&through, cb)
        });
        let w_ok = z.intersection(&fresh).copied().collect::<BTreeSet<_>>() == w_parts[j];
        let z_ok = [(left, &frame.left), (right, &frame.right)].iter().all(|(child, cb)| {
            child.z[j].intersection(&frame.bag).copied().collect::<BTreeSet<_>>()
                == z.intersection(cb).copied().collect::<BTreeSet<_>>()
        });
        gamma_ok && delta_ok && w_ok && z_ok
    })
}

/// Every way to split `w` into `k` labelled parts.
pub(crate) fn partitions_into<T: Ord + Clone>(w: &[T], k: usize) -> Vec<Vec<BTreeSet<T>>> {
    let mut out = Vec::new();
    if k == 0 {
        if w.is_empty() {
            out.push(Vec::new());
        }
        return out;
    }
    let total = k.pow(w.len() as u32);
    for code in 0..total {
        let mut parts = vec![BTreeSet::new(); k];
        let mut rest = code;
        for x in w {
            parts[rest % k].insert(x.clone());
            rest /= k;
        }
        out.push(parts);
    }
    out
}

/// Set-level consistency of vertex profiles via the bought vertices `w`: every triple of
/// each of the three profiles has partners in the other two under some split of `w`.
/// The split may differ per triple.
pub fn vc_consistent(frame: &VcFrame, psi: &[VcTriple], left: &[VcTriple], right: &[VcTriple], w: &BTreeSet<usize>) -> bool {
    let k = psi.first().or(left.first()).or(right.first()).map_or(0, |t| t.z.len());
    let wv: Vec<usize> = w.iter().copied().collect();
    let splits = partitions_into(&wv, k);
    let ok = |p: &VcTriple, l: &VcTriple, r: &VcTriple| splits.iter().any(|s| vc_triple_consistent(frame, p, l, r, s));
    psi.iter().all(|p| left.iter().any(|l| right.iter().any(|r| ok(p, l, r))))
        && left.iter().all(|l| psi.iter().any(|p| right.iter().any(|r| ok(p, l, r))))
        && right.iter().all(|r| psi.iter().any(|p| left.iter().any(|l| ok(p, l, r))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    fn empty_triple(bag: &BTreeSet<usize>, k: usize) -> VcTriple {
        VcTriple {
            z: vec![BTreeSet::new(); k],
            gamma: vec![ConnectionSet::empty(bag.iter().copied()); k],
            delta: vec![ConnectionSet::empty(bag.iter().copied()); k],
        }
    }

    fn frame() -> VcFrame {
        VcFrame {
            bag: set(&[0, 1]),
            left: set(&[0, 1]),
            right: set(&[0, 1]),
            parent: Some(set(&[0])),
            edges: ConnectionSet::empty([0, 1]),
        }
    }

    #[test]
    fn empty_triples_consistent() {
        let f = frame();
        let p = empty_triple(&f.bag, 1);
        assert!(vc_consistent(&f, &[p.clone()], &[p.clone()], &[p], &BTreeSet::new()));
    }

    #[test]
    fn z_restriction_violation_rejected() {
        let f = frame();
        let p = empty_triple(&f.bag, 1);
        let mut l = p.clone();
        l.z[0].insert(0);
        assert!(!vc_consistent(&f, &[p.clone()], &[l], &[p], &BTreeSet::new()));
    }
}
