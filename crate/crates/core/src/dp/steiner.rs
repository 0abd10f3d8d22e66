//! Steiner tree over a tree decomposition: one component, terminals checked at every
//! bag that contains them.

use std::collections::BTreeSet;

use super::ec::{path_in, run_ec, Checks, Slot};
use super::{check_td, require_modes, DpError, DpOptions, DpStats};
use crate::connsets::{local_step_delta, local_step_gamma, ConnectionSet};
use crate::graph::{DemandWitness, Instance, Mode, Solution};
use crate::treedec::TreeDecomposition;

/// A bag's (local, global) connection sets.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SteinerPair {
    pub gamma: ConnectionSet,
    pub delta: ConnectionSet,
}

/// Whether `pair` at a bag follows from its children's pairs when the edges `y` are bought there.
/// Each connection set's ground is its bag.
pub fn steiner_consistent(pair: &SteinerPair, left: &SteinerPair, right: &SteinerPair, y: &ConnectionSet) -> bool {
    let bag = pair.gamma.ground();
    pair.gamma == local_step_gamma(&left.gamma, &right.gamma, y, bag)
        && left.delta == local_step_delta(&pair.delta, &left.gamma, left.gamma.ground())
        && right.delta == local_step_delta(&pair.delta, &right.gamma, right.gamma.ground())
}

#[derive(Clone, Debug)]
pub struct SteinerSolution {
    pub solution: Solution,
    pub stats: DpStats,
    pub terminals: Vec<usize>,
}

/// Terminals of a unit-demand instance with singleton groups.
pub fn steiner_terminals(inst: &Instance) -> Result<Vec<usize>, DpError> {
    let mut terms = BTreeSet::new();
    for (i, g) in inst.groups.iter().enumerate() {
        if g.demand != 1 || g.members.len() != 1 {
            return Err(DpError::Unsupported(format!("group {i} is not a single terminal with demand 1")));
        }
        if !inst.is_root(g.members[0]) {
            terms.insert(g.members[0]);
        }
    }
    Ok(terms.into_iter().collect())
}

/// Minimum-cost edge set connecting the root to every terminal.
pub fn solve_steiner(inst: &Instance, td: &TreeDecomposition, opts: &DpOptions) -> Result<SteinerSolution, DpError> {
    require_modes(inst, Some(Mode::Edge), Mode::Edge)?;
    check_td(inst, td)?;
    let terminals = steiner_terminals(inst)?;
    let slots = vec![Slot { k: 1, target: None }];
    let run = run_ec(inst, td, slots, Checks::Terminals(terminals.clone()), opts)?;
    let scale = super::Scale::for_instance(inst);
    let mut solution = Solution::from_edges(inst, run.edges.clone());
    debug_assert_eq!(solution.cost, scale.rational(run.value));
    let root = inst.root();
    solution.certificate = Some(
        terminals
            .iter()
            .map(|&v| DemandWitness {
                group: inst.groups.iter().position(|g| g.members == [v]).unwrap_or(0),
                vertex: v,
                root,
                paths: path_in(inst, &run.edges, root, v).into_iter().collect(),
            })
            .collect(),
    );
    Ok(SteinerSolution { solution, stats: run.stats, terminals })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cs(ground: &[usize], pairs: &[(usize, usize)]) -> ConnectionSet {
        ConnectionSet::new(ground.iter().copied(), pairs.iter().copied()).unwrap()
    }

    #[test]
    fn empty_sets_are_consistent() {
        let p = SteinerPair { gamma: cs(&[0, 1], &[]), delta: cs(&[0, 1], &[]) };
        let c = SteinerPair { gamma: cs(&[0], &[]), delta: cs(&[0], &[]) };
        assert!(steiner_consistent(&p, &c, &c, &cs(&[0, 1], &[])));
    }

    #[test]
    fn missing_closure_pair_rejected() {
        let p = SteinerPair { gamma: cs(&[0, 1], &[]), delta: cs(&[0, 1], &[]) };
        let c = SteinerPair { gamma: cs(&[0], &[]), delta: cs(&[0], &[]) };
        assert!(!steiner_consistent(&p, &c, &c, &cs(&[0, 1], &[(0, 1)])));
    }
}
