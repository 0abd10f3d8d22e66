//! A generic bag-tree dynamic program.
//!
//! Each bag carries local states (what the subtree below has connected) generated
//! bottom-up, and top-down context (what the rest of the graph connects on the
//! separator to the parent). Cells pair a local state with a top-down context; a
//! cell's value is the cheapest way to realise it in the subtree.

use std::hash::{BuildHasherDefault, Hash};

use indexmap::{IndexMap, IndexSet};
use rustc_hash::{FxHashMap, FxHasher};
use serde::Serialize;
use thiserror::Error;

use super::ctx::DecompCtx;

pub(crate) type Key = Box<[u64]>;
pub(crate) type FxIndexSet<T> = IndexSet<T, BuildHasherDefault<FxHasher>>;
pub(crate) type FxIndexMap<K, V> = IndexMap<K, V, BuildHasherDefault<FxHasher>>;

/// Scaled integer cost; `INF` marks an impossible cell.
pub(crate) type Val = i64;
pub(crate) const INF: Val = i64::MAX;

fn add(a: Val, b: Val) -> Val {
    if a == INF || b == INF {
        INF
    } else {
        a + b
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("bag {bag} exceeds the {what} limit of {limit}")]
    TooLarge { bag: usize, what: &'static str, limit: usize },
}

#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub max_states: usize,
    pub max_transitions: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: 2_000_000, max_transitions: 20_000_000 }
    }
}

/// Problem-specific state algebra plugged into the engine.
pub(crate) trait Semantics {
    type Choice: Clone + Eq + Hash;
    /// The single local state of a leaf bag.
    fn leaf_state(&self, t: usize) -> Key;
    /// What the parent needs to know about a local state.
    fn project(&self, t: usize, state: &[u64]) -> Key;
    /// All local states of `t` obtainable from the children's projections, with the
    /// cost of the elements bought at `t`. Outcomes costing more than `budget` may be omitted.
    fn transitions(&self, t: usize, left: &[u64], right: &[u64], budget: Val, out: &mut Vec<(Key, Val, Self::Choice)>);
    /// Connectivity through the whole graph, from the parent's context and the local state.
    fn delta(&self, t: usize, down: &[u64], state: &[u64]) -> Key;
    fn valid(&self, t: usize, state: &[u64], delta: &[u64]) -> bool;
    /// Context handed to the `pos`-th child.
    fn child_down(&self, t: usize, pos: usize, state: &[u64], delta: &[u64]) -> Key;
    fn root_down(&self) -> Key;
    /// Canonicalize context components that cannot matter in the subtree of `t`.
    fn normalize_down(&self, _t: usize, down: Key) -> Key {
        down
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Combo {
    pub l: u32,
    pub r: u32,
    pub choice: u32,
}

pub(crate) struct BagTable<C> {
    pub states: FxIndexSet<Key>,
    pub proj_of: Vec<u32>,
    pub projs: FxIndexSet<Key>,
    pub choices: FxIndexSet<C>,
    pub choice_cost: Vec<Val>,
    /// Transitions grouped by output state: `combos[start[s]..start[s+1]]`.
    pub combos: Vec<Combo>,
    pub start: Vec<u32>,
    /// Cheapest cost of each projection below the bag, ignoring the context.
    pub proj_lb: Vec<Val>,
}

pub(crate) struct SolveRec {
    pub down: Key,
    pub best: Vec<Val>,
    pub arg: Vec<u32>,
    pub pbest: Vec<Val>,
    pub parg: Vec<u32>,
}

/// Per-bag size statistics.
#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct BagStats {
    pub bag: usize,
    pub bag_size: usize,
    pub local_states: usize,
    pub transitions: usize,
    pub contexts: usize,
    /// Cells (local state, context) with finite cost.
    pub valid_cells: usize,
}

pub(crate) struct Engine<'a, S: Semantics> {
    pub sem: &'a S,
    pub ctx: &'a DecompCtx,
    pub tables: Vec<BagTable<S::Choice>>,
    pub memo: Vec<FxHashMap<Key, u32>>,
    pub solves: Vec<Vec<SolveRec>>,
    pub consistency_checks: u64,
}

impl<'a, S: Semantics> Engine<'a, S> {
    /// Generate all local states bottom-up. States that cannot be part of a solution
    /// costing at most `bound` are dropped. With `keep_all` every transition is kept,
    /// not only the cheapest per child projections and outcome.
    pub fn build(sem: &'a S, ctx: &'a DecompCtx, limits: Limits, bound: Option<Val>, keep_all: bool) -> Result<Self, EngineError> {
        let bound = bound.unwrap_or(INF - 1);
        let nb = ctx.bags.len();
        let mut tables: Vec<Option<BagTable<S::Choice>>> = (0..nb).map(|_| None).collect();
        let mut checks = 0u64;
        for t in ctx.postorder() {
            let bag = &ctx.bags[t];
            let mut table = BagTable {
                states: FxIndexSet::default(),
                proj_of: Vec::new(),
                projs: FxIndexSet::default(),
                choices: FxIndexSet::default(),
                choice_cost: Vec::new(),
                combos: Vec::new(),
                start: Vec::new(),
                proj_lb: Vec::new(),
            };
            let mut lb: Vec<Val> = Vec::new();
            if bag.is_leaf() {
                table.states.insert(sem.leaf_state(t));
                table.start = vec![0, 0];
                lb.push(0);
            } else {
                let (c1, c2) = (bag.children[0], bag.children[1]);
                let (t1, t2) = (tables[c1].as_ref().unwrap(), tables[c2].as_ref().unwrap());
                let (left, right) = (&t1.projs, &t2.projs);
                let mut raw: Vec<(u32, Combo)> = Vec::new();
                let mut out = Vec::new();
                let mut best: FxIndexMap<Key, (Val, S::Choice)> = FxIndexMap::default();
                for (li, l) in left.iter().enumerate() {
                    for (ri, r) in right.iter().enumerate() {
                        let below = t1.proj_lb[li] + t2.proj_lb[ri];
                        if below > bound {
                            continue;
                        }
                        out.clear();
                        sem.transitions(t, l, r, bound - below, &mut out);
                        checks += out.len() as u64;
                        best.clear();
                        let mut kept = Vec::new();
                        for (state, cost, choice) in out.drain(..) {
                            if cost > bound - below {
                                continue;
                            }
                            if keep_all {
                                kept.push((state, (cost, choice)));
                                continue;
                            }
                            match best.get_mut(&state) {
                                Some(entry) if entry.0 <= cost => {}
                                Some(entry) => *entry = (cost, choice),
                                None => {
                                    best.insert(state, (cost, choice));
                                }
                            }
                        }
                        for (state, (cost, choice)) in best.drain(..).chain(kept) {
                            if t == ctx.root && !sem.valid(t, &state, &sem.delta(t, &sem.root_down(), &state)) {
                                continue;
                            }
                            let (s, new_state) = table.states.insert_full(state);
                            if new_state {
                                lb.push(INF);
                            }
                            lb[s] = lb[s].min(cost + below);
                            let (c, fresh) = table.choices.insert_full(choice);
                            if fresh {
                                table.choice_cost.push(cost);
                            }
                            raw.push((s as u32, Combo { l: li as u32, r: ri as u32, choice: c as u32 }));
                        }
                        if table.states.len() > limits.max_states {
                            return Err(EngineError::TooLarge { bag: t, what: "local state", limit: limits.max_states });
                        }
                        if raw.len() > limits.max_transitions {
                            return Err(EngineError::TooLarge { bag: t, what: "transition", limit: limits.max_transitions });
                        }
                    }
                }
                raw.sort_by_key(|&(s, c)| (s, c.l, c.r, c.choice));
                let mut start = vec![0u32; table.states.len() + 1];
                for &(s, _) in &raw {
                    start[s as usize + 1] += 1;
                }
                for i in 0..table.states.len() {
                    start[i + 1] += start[i];
                }
                table.start = start;
                table.combos = raw.into_iter().map(|(_, c)| c).collect();
            }
            for (i, s) in table.states.iter().enumerate() {
                let (p, fresh) = table.projs.insert_full(sem.project(t, s));
                if fresh {
                    table.proj_lb.push(INF);
                }
                table.proj_lb[p] = table.proj_lb[p].min(lb[i]);
                table.proj_of.push(p as u32);
            }
            tables[t] = Some(table);
        }
        Ok(Engine {
            sem,
            ctx,
            tables: tables.into_iter().map(|t| t.unwrap()).collect(),
            memo: (0..nb).map(|_| FxHashMap::default()).collect(),
            solves: (0..nb).map(|_| Vec::new()).collect(),
            consistency_checks: checks,
        })
    }

    /// Solve bag `t` under context `down`, returning the memo index.
    pub fn solve(&mut self, t: usize, down: Key) -> u32 {
        let key = self.sem.normalize_down(t, down);
        if let Some(&id) = self.memo[t].get(&key) {
            return id;
        }
        let n_states = self.tables[t].states.len();
        let mut best = vec![INF; n_states];
        let mut arg = vec![u32::MAX; n_states];
        let children = self.ctx.bags[t].children.clone();
        for s in 0..n_states {
            let state = self.tables[t].states.get_index(s).unwrap().clone();
            let delta = self.sem.delta(t, &key, &state);
            if !self.sem.valid(t, &state, &delta) {
                continue;
            }
            if children.is_empty() {
                best[s] = 0;
                continue;
            }
            let d1 = self.sem.child_down(t, 0, &state, &delta);
            let d2 = self.sem.child_down(t, 1, &state, &delta);
            let id1 = self.solve(children[0], d1) as usize;
            let id2 = self.solve(children[1], d2) as usize;
            let table = &self.tables[t];
            let p1 = &self.solves[children[0]][id1].pbest;
            let p2 = &self.solves[children[1]][id2].pbest;
            for ci in table.start[s]..table.start[s + 1] {
                let c = table.combos[ci as usize];
                let v = add(add(table.choice_cost[c.choice as usize], p1[c.l as usize]), p2[c.r as usize]);
                if v < best[s] {
                    best[s] = v;
                    arg[s] = ci;
                }
            }
        }
        let table = &self.tables[t];
        let mut pbest = vec![INF; table.projs.len()];
        let mut parg = vec![u32::MAX; table.projs.len()];
        for s in 0..n_states {
            let p = table.proj_of[s] as usize;
            if best[s] < pbest[p] {
                pbest[p] = best[s];
                parg[p] = s as u32;
            }
        }
        let id = self.solves[t].len() as u32;
        self.solves[t].push(SolveRec { down: key.clone(), best, arg, pbest, parg });
        self.memo[t].insert(key, id);
        id
    }

    /// Optimal value at the root and the chosen (state, transition) per bag.
    pub fn optimum(&mut self) -> Option<(Val, Vec<Selected>)> {
        let root = self.ctx.root;
        let id = self.solve(root, self.sem.root_down()) as usize;
        let rec = &self.solves[root][id];
        let (s, &v) = rec.best.iter().enumerate().min_by_key(|&(s, &v)| (v, s))?;
        if v == INF {
            return None;
        }
        let mut picked = vec![Selected::default(); self.ctx.bags.len()];
        self.trace(root, id, s as u32, &mut picked);
        Some((v, picked))
    }

    fn trace(&mut self, t: usize, id: usize, s: u32, picked: &mut [Selected]) {
        let rec = &self.solves[t][id];
        let down = rec.down.clone();
        let ci = rec.arg[s as usize];
        picked[t] = Selected { state: s, choice: None };
        let children = self.ctx.bags[t].children.clone();
        if children.is_empty() {
            return;
        }
        let combo = self.tables[t].combos[ci as usize];
        picked[t].choice = Some(combo.choice);
        let state = self.tables[t].states.get_index(s as usize).unwrap().clone();
        let delta = self.sem.delta(t, &down, &state);
        for (pos, (&c, p)) in children.iter().zip([combo.l, combo.r]).enumerate() {
            let d = self.sem.child_down(t, pos, &state, &delta);
            let cid = self.solve(c, d) as usize;
            let cs = self.solves[c][cid].parg[p as usize];
            self.trace(c, cid, cs, picked);
        }
    }

    pub fn stats(&self) -> Vec<BagStats> {
        (0..self.ctx.bags.len())
            .map(|t| BagStats {
                bag: t,
                bag_size: self.ctx.bags[t].size(),
                local_states: self.tables[t].states.len(),
                transitions: self.tables[t].combos.len(),
                contexts: self.solves[t].len(),
                valid_cells: self.solves[t].iter().map(|r| r.best.iter().filter(|&&v| v != INF).count()).sum(),
            })
            .collect()
    }

    pub fn state(&self, t: usize, s: u32) -> &[u64] {
        self.tables[t].states.get_index(s as usize).unwrap()
    }

    pub fn choice(&self, t: usize, c: u32) -> &S::Choice {
        self.tables[t].choices.get_index(c as usize).unwrap()
    }
}

/// The cell chosen at one bag by a traceback.
#[derive(Clone, Debug, Default)]
pub(crate) struct Selected {
    pub state: u32,
    pub choice: Option<u32>,
}
