//! Exact dynamic programs over tree decompositions.

pub(crate) mod ctx;
pub mod ec;
pub mod ec_full;
pub(crate) mod engine;
pub mod reductions;
pub mod steiner;
pub mod vc;

use num_integer::Integer;
use serde::Serialize;
use thiserror::Error;

use crate::cost::Rational;
use crate::graph::{Instance, Mode, SubgraphView};
use crate::treedec::{TdError, TreeDecomposition};

pub use engine::{BagStats, EngineError, Limits};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DpError {
    #[error("instance is infeasible")]
    Infeasible,
    #[error("unsupported instance: {0}")]
    Unsupported(String),
    #[error("invalid decomposition: {0}")]
    Decomposition(#[from] TdError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Tuning knobs for the exact solvers.
#[derive(Clone, Copy, Debug)]
pub struct DpOptions {
    pub limits: Limits,
    /// Drop states that cannot beat a greedy feasible solution.
    pub prune: bool,
}

impl Default for DpOptions {
    fn default() -> Self {
        DpOptions { limits: Limits::default(), prune: true }
    }
}

/// Size statistics of one DP run.
#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct DpStats {
    pub width: usize,
    pub height: usize,
    pub consistency_checks: u64,
    pub bags: Vec<BagStats>,
}

impl DpStats {
    pub fn max_valid_cells(&self) -> usize {
        self.bags.iter().map(|b| b.valid_cells).max().unwrap_or(0)
    }
}

/// Exact integer scaling of rational costs by the lcm of their denominators.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Scale {
    denom: i64,
}

impl Scale {
    pub fn new<I: IntoIterator<Item = Rational>>(costs: I) -> Self {
        let denom = costs.into_iter().fold(1i64, |acc, c| acc.lcm(c.denom()));
        Scale { denom }
    }

    pub fn for_instance(inst: &Instance) -> Self {
        let g = &inst.graph;
        let edges = (0..g.edge_count()).map(|e| g.edge_cost(e));
        let vertices = (0..g.vertex_count()).map(|v| g.vertex_cost(v));
        Scale::new(edges.chain(vertices))
    }

    pub fn val(&self, r: Rational) -> i64 {
        r.numer() * (self.denom / r.denom())
    }

    pub fn rational(&self, v: i64) -> Rational {
        Rational::new(v, self.denom)
    }
}

pub(crate) fn check_td(inst: &Instance, td: &TreeDecomposition) -> Result<(), DpError> {
    td.validate(&inst.graph)?;
    Ok(())
}

pub(crate) fn require_modes(inst: &Instance, cost: Option<Mode>, conn: Mode) -> Result<(), DpError> {
    if inst.conn_mode != conn || cost.is_some_and(|c| c != inst.cost_mode) {
        return Err(DpError::Unsupported(format!(
            "expected {conn:?} connectivity, got {:?} connectivity with {:?} costs",
            inst.conn_mode, inst.cost_mode
        )));
    }
    Ok(())
}

/// Cost of a feasible solution found by reverse deletion, if the instance is feasible.
pub(crate) fn greedy_bound(inst: &Instance, scale: &Scale) -> Option<i64> {
    let g = &inst.graph;
    let (count, price): (usize, Box<dyn Fn(usize) -> i64>) = match inst.cost_mode {
        Mode::Edge => (g.edge_count(), Box::new(|e| scale.val(g.edge_cost(e)))),
        Mode::Vertex => (g.vertex_count(), Box::new(|v| scale.val(inst.vertex_price(v)))),
    };
    let feasible = |mask: &[bool]| {
        let view = match inst.cost_mode {
            Mode::Edge => SubgraphView::from_edge_mask(inst, mask),
            Mode::Vertex => SubgraphView::from_vertex_mask(inst, mask),
        };
        view.all_groups_met(inst)
    };
    let mut mask = vec![true; count];
    if !feasible(&mask) {
        return None;
    }
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by_key(|&x| (std::cmp::Reverse(price(x)), x));
    for x in order {
        mask[x] = false;
        if !feasible(&mask) {
            mask[x] = true;
        }
    }
    Some((0..count).filter(|&x| mask[x]).map(price).sum())
}

/// With pruning, an instance that is infeasible even with everything bought is rejected here.
pub(crate) fn bound_for(inst: &Instance, scale: &Scale, opts: &DpOptions) -> Result<Option<i64>, DpError> {
    if opts.prune {
        greedy_bound(inst, scale).map(Some).ok_or(DpError::Infeasible)
    } else {
        Ok(None)
    }
}
