//! Connection sets: pair relations over vertex sets, their closures and projections,
//! and executable local/global connectivity definitions.

pub mod check;
pub(crate) mod compact;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConnSetError {
    #[error("pair ({0},{1}) lies outside the ground set")]
    PairOutsideGround(usize, usize),
}

fn canon(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

/// A set of unordered pairs over a ground set of vertices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConnectionSet {
    ground: BTreeSet<usize>,
    pairs: BTreeSet<(usize, usize)>,
}

impl ConnectionSet {
    pub fn empty<I: IntoIterator<Item = usize>>(ground: I) -> Self {
        ConnectionSet { ground: ground.into_iter().collect(), pairs: BTreeSet::new() }
    }

    pub fn new<I, P>(ground: I, pairs: P) -> Result<Self, ConnSetError>
    where
        I: IntoIterator<Item = usize>,
        P: IntoIterator<Item = (usize, usize)>,
    {
        let mut cs = Self::empty(ground);
        for (u, v) in pairs {
            if !cs.ground.contains(&u) || !cs.ground.contains(&v) {
                return Err(ConnSetError::PairOutsideGround(u, v));
            }
            if u != v {
                cs.pairs.insert(canon(u, v));
            }
        }
        Ok(cs)
    }

    /// Pairs over the set of their endpoints.
    pub fn from_pairs<P: IntoIterator<Item = (usize, usize)>>(pairs: P) -> Self {
        let mut cs = ConnectionSet::default();
        for (u, v) in pairs {
            cs.insert(u, v);
        }
        cs
    }

    /// Insert a pair, extending the ground set if needed.
    pub fn insert(&mut self, u: usize, v: usize) {
        self.ground.insert(u);
        self.ground.insert(v);
        if u != v {
            self.pairs.insert(canon(u, v));
        }
    }

    pub fn remove(&mut self, u: usize, v: usize) -> bool {
        self.pairs.remove(&canon(u, v))
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.pairs.contains(&canon(u, v))
    }

    pub fn pairs(&self) -> &BTreeSet<(usize, usize)> {
        &self.pairs
    }

    pub fn ground(&self) -> &BTreeSet<usize> {
        &self.ground
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn union(&self, other: &ConnectionSet) -> ConnectionSet {
        let mut out = self.clone();
        out.ground.extend(other.ground.iter().copied());
        out.pairs.extend(other.pairs.iter().copied());
        out
    }

    /// Whether the pairs are closed under chaining.
    pub fn is_closed(&self) -> bool {
        tc(self) == *self
    }

    /// Equivalence classes of the closure, as sorted vertex lists (singletons included).
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let closed = tc(self);
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &v in &closed.ground {
            if seen.insert(v) {
                let mut class = vec![v];
                for &w in &closed.ground {
                    if w != v && closed.contains(v, w) {
                        seen.insert(w);
                        class.push(w);
                    }
                }
                out.push(class);
            }
        }
        out
    }
}

impl fmt::Display for ConnectionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (u, v)) in self.pairs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "({u},{v})")?;
        }
        write!(f, "}}")
    }
}

fn adjacency(cs: &ConnectionSet) -> BTreeMap<usize, Vec<usize>> {
    let mut adj: BTreeMap<usize, Vec<usize>> = cs.ground.iter().map(|&v| (v, Vec::new())).collect();
    for &(u, v) in &cs.pairs {
        adj.get_mut(&u).unwrap().push(v);
        adj.get_mut(&v).unwrap().push(u);
    }
    adj
}

/// Transitive closure under chaining of pairs.
pub fn tc(cs: &ConnectionSet) -> ConnectionSet {
    tc_star(&cs.ground, cs)
}

/// Pairs joined by a chain whose intermediate vertices all lie in `z`.
pub fn tc_star(z: &BTreeSet<usize>, edge_pairs: &ConnectionSet) -> ConnectionSet {
    let adj = adjacency(edge_pairs);
    let mut out = ConnectionSet::empty(edge_pairs.ground.iter().copied());
    for &u in &edge_pairs.ground {
        let mut seen: BTreeSet<usize> = BTreeSet::from([u]);
        let mut stack = vec![u];
        while let Some(x) = stack.pop() {
            for &y in &adj[&x] {
                if seen.insert(y) {
                    if y != u {
                        out.pairs.insert(canon(u, y));
                    }
                    if z.contains(&y) {
                        stack.push(y);
                    }
                }
            }
        }
    }
    out
}

/// Restrict to pairs inside `s`; the ground becomes `s`.
pub fn project(cs: &ConnectionSet, s: &BTreeSet<usize>) -> ConnectionSet {
    ConnectionSet {
        ground: s.clone(),
        pairs: cs.pairs.iter().copied().filter(|(u, v)| s.contains(u) && s.contains(v)).collect(),
    }
}

/// `tc(left ∪ right ∪ y)` projected to `bag`.
pub fn local_step_gamma(
    gamma_left: &ConnectionSet,
    gamma_right: &ConnectionSet,
    y_edges: &ConnectionSet,
    bag: &BTreeSet<usize>,
) -> ConnectionSet {
    let all = gamma_left.union(gamma_right).union(y_edges).union(&ConnectionSet::empty(bag.iter().copied()));
    project(&tc(&all), bag)
}

/// `tc(parent ∪ own)` projected to `bag`.
pub fn local_step_delta(delta_parent: &ConnectionSet, gamma_self: &ConnectionSet, bag: &BTreeSet<usize>) -> ConnectionSet {
    let all = delta_parent.union(gamma_self).union(&ConnectionSet::empty(bag.iter().copied()));
    project(&tc(&all), bag)
}

/// Inputs of one vertex-style local step.
pub struct VertexStepInput<'a> {
    /// `None` at the root.
    pub z_parent: Option<&'a BTreeSet<usize>>,
    pub w: &'a BTreeSet<usize>,
    pub bag: &'a BTreeSet<usize>,
    /// `None` at leaves.
    pub gamma_children: Option<(&'a ConnectionSet, &'a ConnectionSet)>,
    pub edges: &'a ConnectionSet,
    /// `None` at the root.
    pub delta_parent: Option<&'a ConnectionSet>,
}

/// The three vertex-style local recurrences: allowed internal vertices, then the
/// restricted closures below and through the bag.
pub fn vertex_local_step(input: &VertexStepInput<'_>) -> (BTreeSet<usize>, ConnectionSet, ConnectionSet) {
    let bag_ground = ConnectionSet::empty(input.bag.iter().copied());
    let z: BTreeSet<usize> = match input.z_parent {
        None => input.w.clone(),
        Some(zp) => zp.union(input.w).copied().filter(|v| input.bag.contains(v)).collect(),
    };
    let gamma = match input.gamma_children {
        None => bag_ground.clone(),
        Some((l, r)) => project(&tc_star(&z, &l.union(r).union(input.edges).union(&bag_ground)), input.bag),
    };
    let delta = match input.delta_parent {
        None => gamma.clone(),
        Some(dp) => project(&tc_star(&z, &dp.union(&gamma).union(&bag_ground)), input.bag),
    };
    (z, gamma, delta)
}

/// A k-tuple of connection sets over a common bag.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConnectionProfile(pub Vec<ConnectionSet>);

impl ConnectionProfile {
    pub fn empty(k: usize, bag: &BTreeSet<usize>) -> Self {
        ConnectionProfile(vec![ConnectionSet::empty(bag.iter().copied()); k])
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }
}

/// A (local, global) pair of connection profiles.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProfilePair {
    pub gamma: ConnectionProfile,
    pub delta: ConnectionProfile,
}
