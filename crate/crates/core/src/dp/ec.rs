//! Edge-connectivity profiles: one slot of `k_i` connection-set components per demand.
//!
//! A local state holds, for every component, the partition of the bag induced by the
//! edges bought in the subtree; the top-down context holds the partition of the
//! separator induced by the edges bought elsewhere. In vertex-cost mode the state also
//! records which bag vertices are bought, and edges may only join bought vertices.

use std::cell::RefCell;
use std::collections::{BTreeSet, VecDeque};
use std::rc::Rc;

use rustc_hash::FxHashMap;

use super::ctx::DecompCtx;
use super::engine::{Engine, FxIndexMap, Key, Semantics, Val};
use super::{check_td, require_modes, DpError, DpOptions, DpStats, Scale};
use crate::connsets::compact::{Part, Uf};
use crate::graph::{DemandWitness, Instance, Mode, Solution};
use crate::treedec::{prepare, TreeDecomposition};

/// Upper bound on the total number of components across demands.
pub(crate) const MAX_COMPONENTS: usize = 12;
type Comps = [u64; MAX_COMPONENTS];
const CACHE_ENTRIES: usize = 1 << 14;
const CACHE_RESULT_LEN: usize = 1 << 10;

#[derive(Clone, Debug)]
pub(crate) struct Slot {
    pub k: usize,
    /// The demand vertex checked at its topmost bag, if any.
    pub target: Option<usize>,
}

#[derive(Clone, Debug)]
pub(crate) enum Checks {
    /// Each slot's target is checked at its topmost bag.
    Demands,
    /// Every listed terminal is checked at every bag containing it (single slot).
    Terminals(Vec<usize>),
    /// No validity rule.
    Off,
}

#[derive(Clone, Copy, Debug)]
struct Check {
    slot: usize,
    a: u8,
    b: u8,
}

/// Bought vertices and the per-edge option code of one bag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) struct EcChoice {
    pub h: u16,
    pub code: u64,
}

pub(crate) struct EcSem<'a> {
    pub ctx: &'a DecompCtx,
    pub slots: Vec<Slot>,
    pub slot_first: Vec<usize>,
    pub m: usize,
    edge_val: Vec<Val>,
    vertex_val: Option<Vec<Val>>,
    forced: Vec<bool>,
    checks: Vec<Vec<Check>>,
    relevant: Option<Vec<Vec<bool>>>,
    options: usize,
    keep_all: bool,
    cache: RefCell<(usize, FxHashMap<(u16, Comps), (Val, Rc<Vec<(Comps, Val, u64)>>)>)>,
}

impl<'a> EcSem<'a> {
    pub fn new(
        ctx: &'a DecompCtx,
        inst: &Instance,
        scale: &Scale,
        slots: Vec<Slot>,
        checks: Checks,
        normalize: bool,
    ) -> Self {
        let g = &inst.graph;
        let root = inst.root();
        let mut slot_first = Vec::new();
        let mut m = 0;
        for s in &slots {
            slot_first.push(m);
            m += s.k;
        }
        let vertex_val = (inst.cost_mode == Mode::Vertex)
            .then(|| (0..g.vertex_count()).map(|v| scale.val(inst.vertex_price(v))).collect());
        let edge_val = (0..g.edge_count())
            .map(|e| if inst.cost_mode == Mode::Edge { scale.val(g.edge_cost(e)) } else { 0 })
            .collect();
        let mut forced = vec![false; g.vertex_count()];
        forced[root] = true;
        let nb = ctx.bags.len();
        let mut bag_checks = vec![Vec::new(); nb];
        let mut relevant = vec![vec![false; slots.len()]; nb];
        let local = |t: usize, v: usize| ctx.bags[t].local(v).unwrap();
        match &checks {
            Checks::Demands => {
                for (i, s) in slots.iter().enumerate() {
                    if let Some(v) = s.target {
                        let t = ctx.topmost[v];
                        bag_checks[t].push(Check { slot: i, a: local(t, root), b: local(t, v) });
                        for (b, rel) in relevant.iter_mut().enumerate() {
                            rel[i] = ctx.in_subtree(t, b);
                        }
                    }
                }
            }
            Checks::Terminals(terms) => {
                for (t, bag) in ctx.bags.iter().enumerate() {
                    for &v in terms {
                        if v != root && bag.local(v).is_some() {
                            bag_checks[t].push(Check { slot: 0, a: local(t, root), b: local(t, v) });
                            let mut p = Some(t);
                            while let Some(b) = p {
                                relevant[b][0] = true;
                                p = ctx.bags[b].parent;
                            }
                        }
                    }
                }
            }
            Checks::Off => {}
        }
        let options = 1 + slots.iter().map(|s| s.k).product::<usize>();
        EcSem {
            ctx,
            slots,
            slot_first,
            m,
            edge_val,
            vertex_val,
            forced,
            checks: bag_checks,
            relevant: normalize.then_some(relevant),
            options,
            keep_all: false,
            cache: RefCell::new((usize::MAX, FxHashMap::default())),
        }
    }

    /// Report every way to buy the bag's edges, not only the cheapest per outcome.
    pub fn keep_all(mut self) -> Self {
        self.keep_all = true;
        self
    }

    fn vertex_mode(&self) -> bool {
        self.vertex_val.is_some()
    }

    fn offset(&self) -> usize {
        usize::from(self.vertex_mode())
    }

    /// Local partition of component `c`.
    pub fn part(&self, state: &[u64], c: usize) -> Part {
        Part(state[self.offset() + c])
    }

    /// Bought-vertex mask of a local state (vertex-cost mode).
    pub fn bought(&self, state: &[u64]) -> u16 {
        if self.vertex_mode() && !state.is_empty() {
            state[0] as u16
        } else {
            0
        }
    }

    /// Every way to buy the bag's own edges on top of `base`, cheapest per outcome.
    fn edge_closure(&self, t: usize, h: u16, base: Comps, budget: Val) -> Rc<Vec<(Comps, Val, u64)>> {
        let mut cache = self.cache.borrow_mut();
        if cache.0 != t {
            cache.0 = t;
            cache.1.clear();
        }
        if let Some((b, r)) = cache.1.get(&(h, base)) {
            if *b >= budget {
                return r.clone();
            }
        }
        let bag = &self.ctx.bags[t];
        if self.keep_all {
            return Rc::new(self.all_edge_choices(t, h, base));
        }
        let n = bag.size();
        let mut frontier: FxIndexMap<Comps, (Val, u64)> = FxIndexMap::default();
        frontier.insert(base, (0, 0));
        let mut radix = 1u64;
        for (i, &(a, b)) in bag.edges.iter().enumerate() {
            let usable = !self.vertex_mode() || (h >> a & 1 == 1 && h >> b & 1 == 1);
            let price = self.edge_val[bag.edge_ids[i]];
            let mut next = FxIndexMap::default();
            for (parts, &(cost, code)) in &frontier {
                insert_min(&mut next, *parts, cost, code);
                if !usable || cost + price > budget {
                    continue;
                }
                for opt in 1..self.options {
                    let mut p = *parts;
                    let mut rest = opt - 1;
                    for (s, slot) in self.slots.iter().enumerate() {
                        let c = self.slot_first[s] + rest % slot.k;
                        rest /= slot.k;
                        p[c] = Part(p[c]).merge_pair(a as usize, b as usize, n).0;
                    }
                    insert_min(&mut next, p, cost + price, code + opt as u64 * radix);
                }
            }
            radix *= self.options as u64;
            frontier = next;
        }
        let r: Rc<Vec<_>> = Rc::new(frontier.into_iter().map(|(p, (c, code))| (p, c, code)).collect());
        if cache.1.len() < CACHE_ENTRIES && r.len() <= CACHE_RESULT_LEN {
            cache.1.insert((h, base), (budget, r.clone()));
        }
        r
    }

    fn all_edge_choices(&self, t: usize, h: u16, base: Comps) -> Vec<(Comps, Val, u64)> {
        let bag = &self.ctx.bags[t];
        let n = bag.size();
        let mut frontier = vec![(base, 0, 0u64)];
        let mut radix = 1u64;
        for (i, &(a, b)) in bag.edges.iter().enumerate() {
            let usable = !self.vertex_mode() || (h >> a & 1 == 1 && h >> b & 1 == 1);
            let price = self.edge_val[bag.edge_ids[i]];
            let mut next = Vec::with_capacity(frontier.len() * self.options);
            for &(parts, cost, code) in &frontier {
                next.push((parts, cost, code));
                if !usable {
                    continue;
                }
                for opt in 1..self.options {
                    let mut p = parts;
                    let mut rest = opt - 1;
                    for (s, slot) in self.slots.iter().enumerate() {
                        let c = self.slot_first[s] + rest % slot.k;
                        rest /= slot.k;
                        p[c] = Part(p[c]).merge_pair(a as usize, b as usize, n).0;
                    }
                    next.push((p, cost + price, code + opt as u64 * radix));
                }
            }
            radix *= self.options as u64;
            frontier = next;
        }
        frontier
    }

    /// Edges bought at `t` by a choice, with the part used in each slot.
    pub fn decode(&self, t: usize, choice: &EcChoice) -> Vec<(usize, Vec<usize>)> {
        let bag = &self.ctx.bags[t];
        let mut code = choice.code;
        let mut out = Vec::new();
        for &e in &bag.edge_ids {
            let opt = (code % self.options as u64) as usize;
            code /= self.options as u64;
            if opt > 0 {
                let mut rest = opt - 1;
                let parts = self
                    .slots
                    .iter()
                    .map(|s| {
                        let j = rest % s.k;
                        rest /= s.k;
                        j
                    })
                    .collect();
                out.push((e, parts));
            }
        }
        out
    }
}

/// Bought sets at `t` agreeing with the children's bought separators (stored at `key[0]`;
/// an empty key places no constraint) and containing every forced vertex, with the price
/// of the bag's own bought vertices.
pub(crate) fn bought_options(
    ctx: &DecompCtx,
    forced: &[bool],
    prices: &[Val],
    t: usize,
    children: [&[u64]; 2],
) -> Vec<(u16, Val)> {
    let bag = &ctx.bags[t];
    let mut fixed = 0u16;
    let mut val = 0u16;
    for (pos, key) in children.into_iter().enumerate() {
        if key.is_empty() {
            continue;
        }
        let child = &ctx.bags[bag.children[pos]];
        for (i, &pl) in child.sep_in_parent.iter().enumerate() {
            let bit = (key[0] >> i & 1) as u16;
            if fixed >> pl & 1 == 1 {
                if (val >> pl & 1) != bit {
                    return Vec::new();
                }
            } else {
                fixed |= 1 << pl;
                val |= bit << pl;
            }
        }
    }
    for (i, &v) in bag.verts.iter().enumerate() {
        if forced[v] {
            if fixed >> i & 1 == 1 && val >> i & 1 == 0 {
                return Vec::new();
            }
            fixed |= 1 << i;
            val |= 1 << i;
        }
    }
    let free: u16 = ((1u32 << bag.size()) - 1) as u16 & !fixed;
    let mut out = Vec::new();
    let mut sub = 0u16;
    loop {
        let h = val | sub;
        let cost = bag.own.iter().filter(|&&x| h >> x & 1 == 1).map(|&x| prices[bag.verts[x as usize]]).sum();
        out.push((h, cost));
        if sub == free {
            break;
        }
        sub = sub.wrapping_sub(free) & free;
    }
    out
}

pub(crate) fn insert_min<K: std::hash::Hash + Eq>(map: &mut FxIndexMap<K, (Val, u64)>, key: K, cost: Val, code: u64) {
    match map.get_mut(&key) {
        Some(e) if e.0 <= cost => {}
        Some(e) => *e = (cost, code),
        None => {
            map.insert(key, (cost, code));
        }
    }
}

impl Semantics for EcSem<'_> {
    type Choice = EcChoice;

    fn leaf_state(&self, t: usize) -> Key {
        if self.vertex_mode() {
            Box::new([])
        } else {
            vec![Part::discrete(self.ctx.bags[t].size()).0; self.m].into_boxed_slice()
        }
    }

    fn project(&self, t: usize, state: &[u64]) -> Key {
        if state.is_empty() {
            return Box::new([]);
        }
        let sep = &self.ctx.bags[t].sep;
        let mut out = Vec::with_capacity(state.len());
        if self.vertex_mode() {
            let h = state[0];
            out.push(sep.iter().enumerate().fold(0u64, |m, (i, &x)| m | (h >> x & 1) << i));
        }
        for c in 0..self.m {
            out.push(self.part(state, c).restrict(sep).0);
        }
        out.into_boxed_slice()
    }

    fn transitions(&self, t: usize, left: &[u64], right: &[u64], budget: Val, out: &mut Vec<(Key, Val, EcChoice)>) {
        let bag = &self.ctx.bags[t];
        let n = bag.size();
        let off = self.offset();
        let hs = if let Some(prices) = &self.vertex_val {
            bought_options(self.ctx, &self.forced, prices, t, [left, right])
        } else { vec![(0, 0)] };
        for (h, hcost) in hs {
            let mut base = [0u64; MAX_COMPONENTS];
            for (c, slot) in base.iter_mut().enumerate().take(self.m) {
                let mut uf = Uf::new(n);
                for (pos, key) in [left, right].into_iter().enumerate() {
                    if !key.is_empty() {
                        uf.merge_mapped(Part(key[off + c]), &self.ctx.bags[bag.children[pos]].sep_in_parent);
                    }
                }
                *slot = uf.part().0;
            }
            if hcost > budget {
                continue;
            }
            let results = self.edge_closure(t, h, base, budget - hcost);
            for (parts, cost, code) in results.iter() {
                let key: Key = if self.vertex_mode() {
                    std::iter::once(h as u64).chain(parts[..self.m].iter().copied()).collect()
                } else {
                    parts[..self.m].into()
                };
                out.push((key, hcost + cost, EcChoice { h, code: *code }));
            }
        }
    }

    fn delta(&self, t: usize, down: &[u64], state: &[u64]) -> Key {
        if state.is_empty() {
            return Box::new([]);
        }
        let bag = &self.ctx.bags[t];
        (0..self.m)
            .map(|c| {
                let mut uf = Uf::new(bag.size());
                uf.merge(self.part(state, c));
                uf.merge_mapped(Part(down[c]), &bag.sep);
                uf.part().0
            })
            .collect()
    }

    fn valid(&self, t: usize, state: &[u64], delta: &[u64]) -> bool {
        if state.is_empty() {
            return true;
        }
        if t == self.ctx.root {
            debug_assert!((0..self.m).all(|c| delta.is_empty() || Part(delta[c]) == self.part(state, c)));
        }
        self.checks[t].iter().all(|ch| {
            let first = self.slot_first[ch.slot];
            let connected = (first..first + self.slots[ch.slot].k).all(|c| Part(delta[c]).same(ch.a as usize, ch.b as usize));
            let h = self.bought(state);
            connected && (!self.vertex_mode() || (h >> ch.a & 1 == 1 && h >> ch.b & 1 == 1))
        })
    }

    fn child_down(&self, t: usize, pos: usize, _state: &[u64], delta: &[u64]) -> Key {
        let child = &self.ctx.bags[self.ctx.bags[t].children[pos]];
        delta.iter().map(|&d| Part(d).restrict(&child.sep_in_parent).0).collect()
    }

    fn root_down(&self) -> Key {
        vec![0; self.m].into_boxed_slice()
    }

    fn normalize_down(&self, t: usize, mut down: Key) -> Key {
        if let Some(rel) = &self.relevant {
            let discrete = Part::discrete(self.ctx.bags[t].sep.len()).0;
            for (s, slot) in self.slots.iter().enumerate() {
                if !rel[t][s] {
                    for c in self.slot_first[s]..self.slot_first[s] + slot.k {
                        down[c] = discrete;
                    }
                }
            }
        }
        down
    }
}

/// Result of an exact edge-connectivity solve.
#[derive(Clone, Debug)]
pub struct EcSolution {
    pub solution: Solution,
    pub stats: DpStats,
    /// `(target, demand)` per slot.
    pub demands: Vec<(usize, usize)>,
    /// For each slot, its parts as edge-id sets.
    pub parts: Vec<Vec<BTreeSet<usize>>>,
}

/// Fixed-vertex demands of an instance, merged per target; groups containing the root are dropped.
pub(crate) fn vertex_demands(inst: &Instance) -> Result<Vec<(usize, usize)>, DpError> {
    let mut demands: Vec<(usize, usize)> = Vec::new();
    for (i, g) in inst.groups.iter().enumerate() {
        if inst.group_is_trivial(i) {
            continue;
        }
        if g.members.len() != 1 {
            return Err(DpError::Unsupported(format!(
                "group {i} has {} members; group demands are solved through the tree instance",
                g.members.len()
            )));
        }
        let v = g.members[0];
        match demands.iter_mut().find(|d| d.0 == v) {
            Some(d) => d.1 = d.1.max(g.demand),
            None => demands.push((v, g.demand)),
        }
    }
    Ok(demands)
}

pub(crate) fn path_in(inst: &Instance, edges: &BTreeSet<usize>, s: usize, t: usize) -> Option<Vec<usize>> {
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
        for &(w, e) in g.neighbors(u) {
            if edges.contains(&e) && prev[w] == usize::MAX {
                prev[w] = u;
                q.push_back(w);
            }
        }
    }
    None
}

/// Run the engine for the given slots and read back bought edges and vertices.
pub(crate) struct EcRun {
    pub value: Val,
    pub edges: BTreeSet<usize>,
    pub vertices: BTreeSet<usize>,
    pub parts: Vec<Vec<BTreeSet<usize>>>,
    pub stats: DpStats,
}

pub(crate) fn run_ec(
    inst: &Instance,
    td: &TreeDecomposition,
    slots: Vec<Slot>,
    checks: Checks,
    opts: &DpOptions,
) -> Result<EcRun, DpError> {
    let total: usize = slots.iter().map(|s| s.k).sum();
    if total > MAX_COMPONENTS {
        return Err(DpError::Unsupported(format!("{total} connection components exceed the limit of {MAX_COMPONENTS}")));
    }
    let (ntd, ann) = prepare(td, &inst.graph, &[inst.root()]);
    if ntd.width() >= 16 {
        return Err(DpError::Unsupported(format!("bags of {} vertices exceed the supported size", ntd.width() + 1)));
    }
    let ctx = DecompCtx::new(&ntd, &ann, &inst.graph);
    let scale = Scale::for_instance(inst);
    let sem = EcSem::new(&ctx, inst, &scale, slots, checks, true);
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
    let mut edges = BTreeSet::new();
    let mut vertices: BTreeSet<usize> = BTreeSet::from([inst.root()]);
    let mut parts: Vec<Vec<BTreeSet<usize>>> = sem.slots.iter().map(|s| vec![BTreeSet::new(); s.k]).collect();
    for (t, sel) in selected.iter().enumerate() {
        let bag = &ctx.bags[t];
        if let Some(c) = sel.choice {
            let choice = *engine.choice(t, c);
            for (e, ps) in sem.decode(t, &choice) {
                edges.insert(e);
                for (s, j) in ps.into_iter().enumerate() {
                    parts[s][j].insert(e);
                }
            }
            if sem.vertex_mode() {
                for &x in &bag.own {
                    if choice.h >> x & 1 == 1 {
                        vertices.insert(bag.verts[x as usize]);
                    }
                }
            }
        }
    }
    Ok(EcRun { value, edges, vertices, parts, stats })
}

/// Exact rooted edge-connectivity SNDP with fixed demand vertices.
/// In vertex-cost mode the bought vertices are returned and edges among them are free.
pub fn solve_ecsndp(inst: &Instance, td: &TreeDecomposition, opts: &DpOptions) -> Result<EcSolution, DpError> {
    require_modes(inst, None, Mode::Edge)?;
    if inst.multi_root {
        return Err(DpError::Unsupported("multiple roots need vertex connectivity".into()));
    }
    check_td(inst, td)?;
    let demands = vertex_demands(inst)?;
    let slots = demands.iter().map(|&(v, k)| Slot { k, target: Some(v) }).collect();
    let run = run_ec(inst, td, slots, Checks::Demands, opts)?;
    let scale = Scale::for_instance(inst);
    let mut solution = match inst.cost_mode {
        Mode::Edge => Solution::from_edges(inst, run.edges.clone()),
        Mode::Vertex => Solution::from_vertices(inst, run.vertices.clone()),
    };
    debug_assert_eq!(solution.cost, scale.rational(run.value));
    solution.cost = scale.rational(run.value);
    let witnesses = demands
        .iter()
        .zip(&run.parts)
        .map(|(&(v, k), ps)| {
            let group = inst.groups.iter().position(|g| g.members == [v] && g.demand == k).unwrap_or(0);
            DemandWitness {
                group,
                vertex: v,
                root: inst.root(),
                paths: ps.iter().filter_map(|p| path_in(inst, p, inst.root(), v)).collect(),
            }
        })
        .collect();
    solution.certificate = Some(witnesses);
    Ok(EcSolution { solution, stats: run.stats, demands, parts: run.parts })
}
