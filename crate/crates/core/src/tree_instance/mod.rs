//! The lifted tree over DP cells for group demands.
//!
//! Profile nodes are DP cells (bag, local state, context) of the edge-connectivity
//! program with one slot of `k_i` components per group; connecting nodes fix the edges
//! bought at a bag together with one cell per child. The structure is stored as a DAG:
//! a node reached along several root paths stands for all of its copies in the tree,
//! and a copy is identified by its path from the root.

mod explicit;
mod materialize;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::rc::Rc;

use rustc_hash::FxHashMap;
use serde::Serialize;
use thiserror::Error;

use crate::connsets::compact::Part;
use crate::cost::Rational;
use crate::dp::ctx::DecompCtx;
use crate::dp::ec::{path_in, Checks, EcChoice, EcSem, Slot, MAX_COMPONENTS};
use crate::dp::engine::{Engine, Key, Limits, Semantics, Val, INF};
use crate::dp::{check_td, require_modes, DpError, Scale};
use crate::graph::{DemandWitness, Instance, Members, Mode, Solution};
use crate::treedec::{prepare, BagAnnotations, TreeDecomposition};

pub use explicit::build_explicit;
pub use materialize::{MaterializedTree, Origin, TreeNode};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error("the tree instance exceeds the limit of {limit} {what}")]
    TooLarge { what: &'static str, limit: usize },
    #[error("no valid tree covers every group")]
    Infeasible,
    #[error("invalid tree: {0}")]
    Invalid(#[from] Violation),
    #[error("expected a solution given by edges")]
    NotEdgeSolution,
}

/// The validity clause a candidate tree breaks.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Violation {
    #[error("the root is not selected")]
    MissingRoot,
    #[error("node {0} does not exist")]
    Unknown(u32),
    #[error("profile node {node} has {count} selected connecting children")]
    ChildCount { node: u32, count: usize },
    #[error("connecting node {conn} lacks its neighbour {missing}")]
    NotFullDegree { conn: u32, missing: u32 },
    #[error("profile node {node} hangs below no selected connecting node")]
    Detached { node: u32 },
}

#[derive(Clone, Copy, Debug)]
pub struct TreeLimits {
    pub max_profiles: usize,
    pub max_connecting: usize,
}

impl Default for TreeLimits {
    fn default() -> Self {
        TreeLimits { max_profiles: 500_000, max_connecting: 4_000_000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileNode {
    /// Decomposition bag; `None` for the artificial root above the root bag.
    pub bag: Option<usize>,
    pub conns: Vec<u32>,
    pub parents: Vec<u32>,
    pub depth: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConnNode {
    pub parent: u32,
    pub children: Vec<u32>,
    /// Edges bought at the parent's bag.
    pub edges: Vec<usize>,
    /// `parts[i * groups + g]` is the component of lifted group `g` that carries `edges[i]`.
    pub parts: Vec<u8>,
    #[serde(serialize_with = "crate::tree_instance::ser_rational")]
    pub cost: Rational,
    #[serde(skip)]
    pub(crate) val: Val,
    #[serde(skip)]
    code: u64,
}

pub(crate) fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

/// A group demand lifted onto profile nodes.
#[derive(Clone, Debug, Serialize)]
pub struct LiftedGroup {
    /// Index of the group in the instance.
    pub group: usize,
    pub demand: usize,
    /// Profile nodes whose context shows the demand met, with the member they witness.
    pub nodes: Vec<(u32, usize)>,
}

/// How many nodes each pruning rule removed.
#[derive(Clone, Copy, Debug, Default, Serialize, PartialEq, Eq)]
pub struct PruneCounts {
    pub unreachable: usize,
    pub dead_connecting: usize,
    pub unmet_leaves: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeStats {
    pub profile_nodes: usize,
    pub connecting_nodes: usize,
    /// Profile levels below the artificial root.
    pub height: usize,
    pub decomposition_height: usize,
    /// Node count of the tree obtained by splitting copies.
    pub tree_nodes: f64,
    pub pruned: PruneCounts,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct CellKey {
    pub bag: usize,
    pub state: Key,
    pub down: Key,
}

const ROOT_BAG: usize = usize::MAX;

/// One way to expand a profile node.
pub(crate) struct Expansion {
    pub code: u64,
    pub val: Val,
    pub children: Vec<CellKey>,
}

pub struct TreeInstance {
    pub inst: Instance,
    pub profiles: Vec<ProfileNode>,
    pub conns: Vec<ConnNode>,
    pub groups: Vec<LiftedGroup>,
    /// Groups containing the root, met by every tree.
    pub trivial: Vec<usize>,
    pub stats: TreeStats,
    td: TreeDecomposition,
    ann: BagAnnotations,
    slots: Vec<Slot>,
    keys: Vec<CellKey>,
    index: FxHashMap<CellKey, u32>,
    scale: Scale,
}

/// A subtree selecting one profile per bag and one connecting node per non-leaf bag.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct ValidTree {
    pub profiles: Vec<u32>,
    pub conns: Vec<u32>,
}

/// Shared setup: the prepared decomposition and one slot per non-trivial group.
pub(crate) struct Setup {
    pub td: TreeDecomposition,
    pub ann: BagAnnotations,
    pub slots: Vec<Slot>,
    pub lifted: Vec<usize>,
    pub trivial: Vec<usize>,
    pub scale: Scale,
}

pub(crate) fn setup(inst: &Instance, td: &TreeDecomposition) -> Result<Setup, TreeError> {
    require_modes(inst, Some(Mode::Edge), Mode::Edge)?;
    if inst.multi_root {
        return Err(DpError::Unsupported("multiple roots need vertex connectivity".into()).into());
    }
    check_td(inst, td)?;
    let (ntd, ann) = prepare(td, &inst.graph, &[inst.root()]);
    if ntd.width() >= 16 {
        return Err(DpError::Unsupported(format!("bags of {} vertices exceed the supported size", ntd.width() + 1)).into());
    }
    let mut slots = Vec::new();
    let mut lifted = Vec::new();
    let mut trivial = Vec::new();
    for (i, g) in inst.groups.iter().enumerate() {
        if inst.group_is_trivial(i) || g.demand == 0 {
            trivial.push(i);
        } else {
            slots.push(Slot { k: g.demand, target: None });
            lifted.push(i);
        }
    }
    let total: usize = slots.iter().map(|s| s.k).sum();
    if total > MAX_COMPONENTS {
        return Err(DpError::Unsupported(format!("{total} connection components exceed the limit of {MAX_COMPONENTS}")).into());
    }
    Ok(Setup { td: ntd, ann, slots, lifted, trivial, scale: Scale::for_instance(inst) })
}

pub(crate) struct Dag {
    pub profiles: Vec<ProfileNode>,
    pub conns: Vec<ConnNode>,
    pub keys: Vec<CellKey>,
    pub index: FxHashMap<CellKey, u32>,
}

impl Dag {
    fn node(&mut self, key: CellKey, depth: usize, queue: &mut VecDeque<u32>) -> u32 {
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        let id = self.profiles.len() as u32;
        let bag = (key.bag != ROOT_BAG).then_some(key.bag);
        self.profiles.push(ProfileNode { bag, conns: Vec::new(), parents: Vec::new(), depth });
        self.keys.push(key.clone());
        self.index.insert(key, id);
        queue.push_back(id);
        id
    }

    /// Grow the DAG breadth-first from the artificial root.
    pub fn grow(
        root_cells: Vec<CellKey>,
        mut expand: impl FnMut(&CellKey) -> Vec<Expansion>,
        limits: TreeLimits,
    ) -> Result<Dag, TreeError> {
        let mut dag = Dag { profiles: Vec::new(), conns: Vec::new(), keys: Vec::new(), index: FxHashMap::default() };
        let mut queue = VecDeque::new();
        let root_key = CellKey { bag: ROOT_BAG, state: Box::new([]), down: Box::new([]) };
        dag.node(root_key, 0, &mut queue);
        queue.clear();
        for cell in root_cells {
            let child = dag.node(cell, 1, &mut queue);
            dag.add_conn(0, vec![child], 0, 0);
        }
        while let Some(p) = queue.pop_front() {
            let key = dag.keys[p as usize].clone();
            let depth = dag.profiles[p as usize].depth;
            for exp in expand(&key) {
                let children = exp.children.into_iter().map(|c| dag.node(c, depth + 1, &mut queue)).collect();
                dag.add_conn(p, children, exp.code, exp.val);
                if dag.conns.len() > limits.max_connecting {
                    return Err(TreeError::TooLarge { what: "connecting nodes", limit: limits.max_connecting });
                }
            }
            if dag.profiles.len() > limits.max_profiles {
                return Err(TreeError::TooLarge { what: "profile nodes", limit: limits.max_profiles });
            }
        }
        Ok(dag)
    }

    fn add_conn(&mut self, parent: u32, children: Vec<u32>, code: u64, val: Val) {
        let id = self.conns.len() as u32;
        for &c in &children {
            self.profiles[c as usize].parents.push(id);
        }
        self.profiles[parent as usize].conns.push(id);
        self.conns.push(ConnNode {
            parent,
            children,
            edges: Vec::new(),
            parts: Vec::new(),
            cost: Rational::from_integer(0),
            val,
            code,
        });
    }
}

/// Build the lifted tree from the full DP universe of the group instance.
pub fn build_tree_instance(inst: &Instance, td: &TreeDecomposition, limits: TreeLimits) -> Result<TreeInstance, TreeError> {
    let setup = setup(inst, td)?;
    let ctx = DecompCtx::new(&setup.td, &setup.ann, &inst.graph);
    let sem = EcSem::new(&ctx, inst, &setup.scale, setup.slots.clone(), Checks::Off, false).keep_all();
    let engine_limits = Limits { max_states: limits.max_profiles, max_transitions: limits.max_connecting };
    let engine = Engine::build(&sem, &ctx, engine_limits, None, true).map_err(DpError::from)?;
    let by_proj: Vec<Vec<Vec<u32>>> = engine
        .tables
        .iter()
        .map(|tb| {
            let mut v = vec![Vec::new(); tb.projs.len()];
            for (s, &p) in tb.proj_of.iter().enumerate() {
                v[p as usize].push(s as u32);
            }
            v
        })
        .collect();
    let root = ctx.root;
    let root_cells = engine.tables[root]
        .states
        .iter()
        .map(|s| CellKey { bag: root, state: s.clone(), down: sem.root_down() })
        .collect();
    let expand = |key: &CellKey| {
        let t = key.bag;
        let bag = &ctx.bags[t];
        let tb = &engine.tables[t];
        if bag.is_leaf() {
            return Vec::new();
        }
        let s = tb.states.get_index_of(&key.state).expect("cell state is in the table");
        let delta = sem.delta(t, &key.down, &key.state);
        let (c1, c2) = (bag.children[0], bag.children[1]);
        let d1 = sem.child_down(t, 0, &key.state, &delta);
        let d2 = sem.child_down(t, 1, &key.state, &delta);
        let mut out = Vec::new();
        for combo in &tb.combos[tb.start[s] as usize..tb.start[s + 1] as usize] {
            let code = tb.choices.get_index(combo.choice as usize).unwrap().code;
            let val = tb.choice_cost[combo.choice as usize];
            for &s1 in &by_proj[c1][combo.l as usize] {
                for &s2 in &by_proj[c2][combo.r as usize] {
                    let k1 = CellKey { bag: c1, state: engine.tables[c1].states[s1 as usize].clone(), down: d1.clone() };
                    let k2 = CellKey { bag: c2, state: engine.tables[c2].states[s2 as usize].clone(), down: d2.clone() };
                    out.push(Expansion { code, val, children: vec![k1, k2] });
                }
            }
        }
        out
    };
    let dag = Dag::grow(root_cells, expand, limits)?;
    let mut reached: Vec<BTreeSet<&Key>> = vec![BTreeSet::new(); ctx.bags.len()];
    for k in &dag.keys[1..] {
        reached[k.bag].insert(&k.state);
    }
    let unreachable = (0..ctx.bags.len()).map(|t| engine.tables[t].states.len() - reached[t].len()).sum();
    let pruned = PruneCounts { unreachable, ..Default::default() };
    Ok(finish(inst, setup, &ctx, &sem, dag, pruned))
}

/// Decode connecting nodes, lift groups and gather statistics.
pub(crate) fn finish(inst: &Instance, setup: Setup, ctx: &DecompCtx, sem: &EcSem, mut dag: Dag, pruned: PruneCounts) -> TreeInstance {
    let nslots = setup.slots.len();
    for c in &mut dag.conns {
        let Some(t) = dag.profiles[c.parent as usize].bag else { continue };
        for (e, ps) in sem.decode(t, &EcChoice { h: 0, code: c.code }) {
            c.edges.push(e);
            c.parts.extend(ps.iter().map(|&j| j as u8));
            debug_assert_eq!(ps.len(), nslots);
        }
        c.cost = c.edges.iter().map(|&e| inst.graph.edge_cost(e)).sum();
    }
    let root = inst.root();
    let mut groups: Vec<LiftedGroup> = setup
        .lifted
        .iter()
        .map(|&i| LiftedGroup { group: i, demand: inst.groups[i].demand, nodes: Vec::new() })
        .collect();
    for (p, key) in dag.keys.iter().enumerate().skip(1) {
        let t = key.bag;
        let bag = &ctx.bags[t];
        let delta = sem.delta(t, &key.down, &key.state);
        for (s, g) in groups.iter_mut().enumerate() {
            for &v in &inst.groups[g.group].members {
                if ctx.topmost[v] != t {
                    continue;
                }
                let (a, b) = (bag.local(root).unwrap() as usize, bag.local(v).unwrap() as usize);
                let first = sem.slot_first[s];
                if (first..first + g.demand).all(|c| Part(delta[c]).same(a, b)) {
                    g.nodes.push((p as u32, v));
                }
            }
        }
    }
    let mut copies = vec![0f64; dag.profiles.len()];
    copies[0] = 1.0;
    let mut tree_nodes = 1.0;
    for p in 0..dag.profiles.len() {
        for &c in &dag.profiles[p].conns {
            tree_nodes += copies[p];
            for &ch in &dag.conns[c as usize].children {
                copies[ch as usize] += copies[p];
                tree_nodes += copies[p];
            }
        }
    }
    let stats = TreeStats {
        profile_nodes: dag.profiles.len(),
        connecting_nodes: dag.conns.len(),
        height: dag.profiles.iter().map(|p| p.depth).max().unwrap_or(0),
        decomposition_height: setup.td.height(),
        tree_nodes,
        pruned,
    };
    TreeInstance {
        inst: inst.clone(),
        profiles: dag.profiles,
        conns: dag.conns,
        groups,
        trivial: setup.trivial,
        stats,
        td: setup.td,
        ann: setup.ann,
        slots: setup.slots,
        keys: dag.keys,
        index: dag.index,
        scale: setup.scale,
    }
}

impl TreeInstance {
    pub fn root(&self) -> u32 {
        0
    }

    /// Lifted group membership of each profile node, as a bitmask over `groups`.
    pub fn group_masks(&self) -> Vec<u64> {
        let mut masks = vec![0u64; self.profiles.len()];
        for (g, lg) in self.groups.iter().enumerate() {
            for &(p, _) in &lg.nodes {
                masks[p as usize] |= 1 << g;
            }
        }
        masks
    }

    fn full_mask(&self) -> u64 {
        (1u64 << self.groups.len()) - 1
    }

    /// Whether a profile node must pick a connecting child.
    pub fn needs_child(&self, p: u32) -> bool {
        match self.profiles[p as usize].bag {
            None => true,
            Some(t) => !self.td.is_leaf(t),
        }
    }

    pub fn validate(&self, vt: &ValidTree) -> Result<(), Violation> {
        let np = self.profiles.len() as u32;
        let nc = self.conns.len() as u32;
        if let Some(&x) = vt.profiles.iter().find(|&&p| p >= np) {
            return Err(Violation::Unknown(x));
        }
        if let Some(&x) = vt.conns.iter().find(|&&c| c >= nc) {
            return Err(Violation::Unknown(x));
        }
        let ps: BTreeSet<u32> = vt.profiles.iter().copied().collect();
        let cs: BTreeSet<u32> = vt.conns.iter().copied().collect();
        if !ps.contains(&0) {
            return Err(Violation::MissingRoot);
        }
        for &p in &ps {
            let node = &self.profiles[p as usize];
            let count = node.conns.iter().filter(|c| cs.contains(c)).count();
            if count != usize::from(self.needs_child(p)) {
                return Err(Violation::ChildCount { node: p, count });
            }
            if p != 0 && !node.parents.iter().any(|c| cs.contains(c)) {
                return Err(Violation::Detached { node: p });
            }
        }
        for &c in &cs {
            let conn = &self.conns[c as usize];
            let missing = std::iter::once(conn.parent).chain(conn.children.iter().copied()).find(|x| !ps.contains(x));
            if let Some(missing) = missing {
                return Err(Violation::NotFullDegree { conn: c, missing });
            }
        }
        Ok(())
    }

    /// The tree made of the root and the given connecting nodes.
    pub fn tree_from_conns(&self, mut conns: Vec<u32>) -> ValidTree {
        conns.sort_unstable();
        conns.dedup();
        let mut profiles: Vec<u32> = std::iter::once(0)
            .chain(conns.iter().flat_map(|&c| self.conns[c as usize].children.iter().copied()))
            .collect();
        profiles.sort_unstable();
        profiles.dedup();
        ValidTree { profiles, conns }
    }

    pub fn tree_cost(&self, vt: &ValidTree) -> Rational {
        vt.conns.iter().map(|&c| self.conns[c as usize].cost).sum()
    }

    /// Per instance group, whether the tree meets it.
    pub fn covered(&self, vt: &ValidTree) -> Vec<bool> {
        let ps: BTreeSet<u32> = vt.profiles.iter().copied().collect();
        let mut out = vec![false; self.inst.groups.len()];
        for &i in &self.trivial {
            out[i] = true;
        }
        for lg in &self.groups {
            if lg.nodes.iter().any(|(p, _)| ps.contains(p)) {
                out[lg.group] = true;
            }
        }
        out
    }

    /// Minimum-cost valid tree meeting every group, by a subset DP over the DAG.
    pub fn min_cover(&self) -> Result<(Rational, ValidTree), TreeError> {
        let masks = self.group_masks();
        let width = 1usize << self.groups.len();
        let n = self.profiles.len();
        let mut best = vec![INF; n * width];
        let mut conn_best: Vec<Option<Vec<Val>>> = vec![None; self.conns.len()];
        for p in (0..n).rev() {
            let node = &self.profiles[p];
            let own = masks[p] as usize;
            if !self.needs_child(p as u32) {
                best[p * width + own] = 0;
                continue;
            }
            for &c in &node.conns {
                let table = self.conn_table(c, &best, width);
                for (m, &v) in table.iter().enumerate() {
                    let slot = &mut best[p * width + (m | own)];
                    if v < *slot {
                        *slot = v;
                    }
                }
                conn_best[c as usize] = Some(table);
            }
        }
        let full = self.full_mask() as usize;
        let value = best[full];
        if value == INF {
            return Err(TreeError::Infeasible);
        }
        let mut conns = Vec::new();
        let mut stack = vec![(0u32, full)];
        while let Some((p, m)) = stack.pop() {
            if !self.needs_child(p) {
                continue;
            }
            let own = masks[p as usize] as usize;
            let target = best[p as usize * width + m];
            let (c, sub) = self.profiles[p as usize]
                .conns
                .iter()
                .find_map(|&c| {
                    let t = conn_best[c as usize].as_ref()?;
                    (0..width).find(|&x| x | own == m && t[x] == target).map(|x| (c, x))
                })
                .expect("traceback follows a recorded optimum");
            conns.push(c);
            let conn = &self.conns[c as usize];
            let kids: Vec<usize> = conn.children.iter().map(|&x| x as usize).collect();
            let rest = target - conn.val;
            match kids.as_slice() {
                [a] => stack.push((*a as u32, sub)),
                [a, b] => {
                    let (ma, mb) = (0..width)
                        .flat_map(|x| (0..width).map(move |y| (x, y)))
                        .find(|&(x, y)| {
                            x | y == sub && add(best[a * width + x], best[b * width + y]) == rest
                        })
                        .expect("traceback splits the mask");
                    stack.push((*a as u32, ma));
                    stack.push((*b as u32, mb));
                }
                _ => unreachable!("connecting nodes have one or two children"),
            }
        }
        let vt = self.tree_from_conns(conns);
        Ok((self.scale.rational(value), vt))
    }

    fn conn_table(&self, c: u32, best: &[Val], width: usize) -> Vec<Val> {
        let conn = &self.conns[c as usize];
        let mut acc = vec![INF; width];
        acc[0] = conn.val;
        for &ch in &conn.children {
            let row = &best[ch as usize * width..(ch as usize + 1) * width];
            let mut next = vec![INF; width];
            for (x, &a) in acc.iter().enumerate() {
                if a == INF {
                    continue;
                }
                for (y, &b) in row.iter().enumerate() {
                    let v = add(a, b);
                    if v < next[x | y] {
                        next[x | y] = v;
                    }
                }
            }
            acc = next;
        }
        acc
    }

    /// Number of valid trees, saturating.
    pub fn count_valid_trees(&self) -> u128 {
        let n = self.profiles.len();
        let mut count = vec![0u128; n];
        for p in (0..n).rev() {
            if !self.needs_child(p as u32) {
                count[p] = 1;
                continue;
            }
            count[p] = self.profiles[p].conns.iter().fold(0u128, |acc, &c| {
                let prod = self.conns[c as usize].children.iter().fold(1u128, |x, &ch| x.saturating_mul(count[ch as usize]));
                acc.saturating_add(prod)
            });
        }
        count[0]
    }

    /// Call `f` on every valid tree; refuses when there are more than `cap`.
    pub fn for_each_valid_tree(&self, cap: u128, mut f: impl FnMut(&ValidTree)) -> Result<(), TreeError> {
        if self.count_valid_trees() > cap {
            return Err(TreeError::TooLarge { what: "valid trees", limit: cap.min(usize::MAX as u128) as usize });
        }
        let mut memo: FxHashMap<u32, Rc<Vec<Vec<u32>>>> = FxHashMap::default();
        for conns in self.subtrees(0, &mut memo).iter() {
            f(&self.tree_from_conns(conns.clone()));
        }
        Ok(())
    }

    fn subtrees(&self, p: u32, memo: &mut FxHashMap<u32, Rc<Vec<Vec<u32>>>>) -> Rc<Vec<Vec<u32>>> {
        if let Some(r) = memo.get(&p) {
            return r.clone();
        }
        let mut out = Vec::new();
        if !self.needs_child(p) {
            out.push(Vec::new());
        }
        for &c in &self.profiles[p as usize].conns {
            let mut partial = vec![vec![c]];
            for &ch in &self.conns[c as usize].children {
                let below = self.subtrees(ch, memo);
                partial = partial
                    .iter()
                    .flat_map(|a| below.iter().map(move |b| a.iter().chain(b).copied().collect()))
                    .collect();
            }
            out.extend(partial);
        }
        let r = Rc::new(out);
        memo.insert(p, r.clone());
        r
    }

    /// The edge set of a valid tree, with disjoint-path witnesses for the groups it meets.
    pub fn valid_tree_to_solution(&self, vt: &ValidTree) -> Result<Solution, TreeError> {
        self.validate(vt)?;
        let edges: BTreeSet<usize> = vt.conns.iter().flat_map(|&c| self.conns[c as usize].edges.iter().copied()).collect();
        let mut sol = Solution::from_edges(&self.inst, edges);
        let ps: BTreeSet<u32> = vt.profiles.iter().copied().collect();
        let ng = self.groups.len();
        let root = self.inst.root();
        let mut witnesses = Vec::new();
        for (g, lg) in self.groups.iter().enumerate() {
            let Some(&(_, v)) = lg.nodes.iter().find(|(p, _)| ps.contains(p)) else { continue };
            let paths = (0..lg.demand)
                .filter_map(|j| {
                    let part: BTreeSet<usize> = vt
                        .conns
                        .iter()
                        .flat_map(|&c| {
                            let conn = &self.conns[c as usize];
                            conn.edges.iter().enumerate().filter(move |&(i, _)| conn.parts[i * ng + g] as usize == j).map(|(_, &e)| e)
                        })
                        .collect();
                    path_in(&self.inst, &part, root, v)
                })
                .collect();
            witnesses.push(DemandWitness { group: lg.group, vertex: v, root, paths });
        }
        sol.certificate = Some(witnesses);
        Ok(sol)
    }

    /// A valid tree with the same edges as `sol` that meets every group `sol` meets.
    pub fn solution_to_valid_tree(&self, sol: &Solution) -> Result<ValidTree, TreeError> {
        let Members::Edges(f) = &sol.members else { return Err(TreeError::NotEdgeSolution) };
        let inst = &self.inst;
        let root = inst.root();
        // Part of every bought edge, per lifted group.
        let mut part_of: Vec<BTreeMap<usize, usize>> = Vec::new();
        for lg in &self.groups {
            let trails = inst.groups[lg.group].members.iter().find_map(|&v| disjoint_trails(inst, f, root, v, lg.demand));
            let mut assign: BTreeMap<usize, usize> = f.iter().map(|&e| (e, 0)).collect();
            for (j, trail) in trails.into_iter().flatten().enumerate() {
                for e in trail {
                    assign.insert(e, j);
                }
            }
            part_of.push(assign);
        }
        let ctx = DecompCtx::new(&self.td, &self.ann, &inst.graph);
        let sem = EcSem::new(&ctx, inst, &self.scale, self.slots.clone(), Checks::Off, false).keep_all();
        let options = 1 + self.slots.iter().map(|s| s.k).product::<usize>() as u64;
        let codes: Vec<u64> = ctx
            .bags
            .iter()
            .map(|bag| {
                let mut code = 0u64;
                let mut radix = 1u64;
                for &e in &bag.edge_ids {
                    if f.contains(&e) {
                        let mut opt = 0u64;
                        let mut mult = 1u64;
                        for (s, slot) in self.slots.iter().enumerate() {
                            opt += part_of[s][&e] as u64 * mult;
                            mult *= slot.k as u64;
                        }
                        code += (opt + 1) * radix;
                    }
                    radix *= options;
                }
                code
            })
            .collect();
        let mut states: Vec<Key> = vec![Box::new([]); ctx.bags.len()];
        let mut out = Vec::new();
        for t in ctx.postorder() {
            let bag = &ctx.bags[t];
            if bag.is_leaf() {
                states[t] = sem.leaf_state(t);
                continue;
            }
            let l = sem.project(bag.children[0], &states[bag.children[0]]);
            let r = sem.project(bag.children[1], &states[bag.children[1]]);
            out.clear();
            sem.transitions(t, &l, &r, INF - 1, &mut out);
            let (state, _, _) = out.drain(..).find(|(_, _, ch)| ch.code == codes[t]).expect("every edge choice is a transition");
            states[t] = state;
        }
        let lookup = |t: usize, down: Key| -> u32 {
            let key = CellKey { bag: t, state: states[t].clone(), down };
            *self.index.get(&key).expect("every solution cell is in the tree instance")
        };
        let mut conns = Vec::new();
        let top = lookup(ctx.root, sem.root_down());
        let first = self.profiles[0].conns.iter().copied().find(|&c| self.conns[c as usize].children == [top]);
        conns.push(first.expect("the root cell hangs below the artificial root"));
        let mut stack = vec![(ctx.root, top)];
        while let Some((t, p)) = stack.pop() {
            let bag = &ctx.bags[t];
            if bag.is_leaf() {
                continue;
            }
            let key = &self.keys[p as usize];
            let delta = sem.delta(t, &key.down, &key.state);
            let kids: Vec<u32> = (0..2)
                .map(|pos| lookup(bag.children[pos], sem.child_down(t, pos, &key.state, &delta)))
                .collect();
            let c = self.profiles[p as usize]
                .conns
                .iter()
                .copied()
                .find(|&c| self.conns[c as usize].code == codes[t] && self.conns[c as usize].children == kids)
                .expect("the solution's transition is a connecting node");
            conns.push(c);
            for (pos, &k) in kids.iter().enumerate() {
                stack.push((bag.children[pos], k));
            }
        }
        Ok(self.tree_from_conns(conns))
    }

    /// Cost of each connecting node as a float, for the LP.
    pub fn conn_costs(&self) -> Vec<f64> {
        self.conns.iter().map(|c| *c.cost.numer() as f64 / *c.cost.denom() as f64).collect()
    }
}

fn add(a: Val, b: Val) -> Val {
    if a == INF || b == INF {
        INF
    } else {
        a + b
    }
}

/// `k` pairwise edge-disjoint `s`–`t` trails inside `edges`, as edge-id lists.
pub fn disjoint_trails(inst: &Instance, edges: &BTreeSet<usize>, s: usize, t: usize, k: usize) -> Option<Vec<Vec<usize>>> {
    let g = &inst.graph;
    // flow[e]: +1 along (u, v) as stored, -1 against, 0 unused.
    let mut flow: BTreeMap<usize, i8> = edges.iter().map(|&e| (e, 0)).collect();
    for _ in 0..k {
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; g.vertex_count()];
        let mut seen = vec![false; g.vertex_count()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &(w, e) in g.neighbors(u) {
                let Some(&f) = flow.get(&e) else { continue };
                let forward = g.edge(e).0 == u;
                let dir = if forward { 1 } else { -1 };
                if f != dir && !seen[w] {
                    seen[w] = true;
                    prev[w] = Some((u, e));
                    queue.push_back(w);
                }
            }
        }
        if !seen[t] {
            return None;
        }
        let mut x = t;
        while let Some((u, e)) = prev[x] {
            let dir = if g.edge(e).0 == u { 1 } else { -1 };
            *flow.get_mut(&e).unwrap() += dir;
            x = u;
        }
    }
    let mut unused: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (&e, &f) in &flow {
        if f != 0 {
            let (u, v) = g.edge(e);
            let (a, b) = if f > 0 { (u, v) } else { (v, u) };
            unused.entry(a).or_default().push((b, e));
        }
    }
    let mut trails = Vec::new();
    for _ in 0..k {
        let mut trail = Vec::new();
        let mut u = s;
        while u != t {
            let (w, e) = unused.get_mut(&u).and_then(|v| v.pop()).expect("flow decomposes into trails");
            trail.push(e);
            u = w;
        }
        trails.push(trail);
    }
    Some(trails)
}
