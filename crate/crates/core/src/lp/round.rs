//! Randomized rounding of the covering LP into a network.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

use super::tree::{solve_tree_lp, FractionalTree};
use super::{LpEngine, LpError};
use crate::cost::{format_rational, Rational};
use crate::graph::{check_feasible, FeasibilityReport, GraphError, Instance, Members, Solution};
use crate::tree_instance::{build_tree_instance, TreeError, TreeInstance, TreeLimits, TreeStats, ValidTree};
use crate::treedec::TreeDecomposition;

#[derive(Debug, Error)]
pub enum RoundError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("covering LP: {0}")]
    Lp(#[from] LpError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("sampling reached profile node {node} carrying no mass")]
    ZeroMass { node: u32 },
}

/// Draw one valid tree: from the root down, each reached profile node picks a
/// connecting child with probability proportional to its LP mass.
pub fn sample_valid_tree<R: Rng>(ti: &TreeInstance, frac: &FractionalTree, rng: &mut R) -> Result<ValidTree, RoundError> {
    let mut conns = Vec::new();
    let mut stack = vec![ti.root()];
    while let Some(p) = stack.pop() {
        if !ti.needs_child(p) {
            continue;
        }
        let options = &ti.profiles[p as usize].conns;
        let total: f64 = options.iter().map(|&c| frac.y[c as usize]).sum();
        if total <= 1e-12 {
            return Err(RoundError::ZeroMass { node: p });
        }
        let mut u = rng.gen::<f64>() * total;
        let mut pick = None;
        for &c in options {
            let y = frac.y[c as usize];
            if y <= 0.0 {
                continue;
            }
            pick = Some(c);
            if u < y {
                break;
            }
            u -= y;
        }
        let c = pick.expect("positive total implies a positive option");
        conns.push(c);
        stack.extend(ti.conns[c as usize].children.iter().copied());
    }
    Ok(ti.tree_from_conns(conns))
}

/// Number of sampled trees per batch: `ceil(c * max(1, ln n) * max(1, ln h))`.
pub fn trial_count(c: f64, n: usize, h: usize) -> usize {
    let ln = |x: usize| (x.max(1) as f64).ln().max(1.0);
    (c * ln(n) * ln(h)).ceil().max(1.0) as usize
}

#[derive(Clone, Debug)]
pub struct RoundingOptions {
    pub trials_constant: f64,
    pub seed: u64,
    /// Batches drawn beyond the first when groups stay uncovered.
    pub extra_batches: usize,
    pub engine: LpEngine,
    pub limits: TreeLimits,
}

impl Default for RoundingOptions {
    fn default() -> Self {
        RoundingOptions { trials_constant: 8.0, seed: 0, extra_batches: 3, engine: LpEngine::default(), limits: TreeLimits::default() }
    }
}

#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub cost: Rational,
    /// Per instance group.
    pub covered: Vec<bool>,
}

#[derive(Clone, Debug)]
pub struct RoundingRun {
    pub trials_per_batch: usize,
    pub batches: usize,
    pub trials: Vec<TrialRecord>,
    pub lp_objective: f64,
    pub covered_after_first_batch: bool,
    pub union: Solution,
    pub report: FeasibilityReport,
    pub tree_stats: TreeStats,
}

impl RoundingRun {
    pub fn union_cost(&self) -> Rational {
        self.union.cost
    }

    pub fn to_json(&self) -> serde_json::Value {
        let edges: Vec<usize> = match &self.union.members {
            Members::Edges(es) => es.iter().copied().collect(),
            Members::Vertices(vs) => vs.iter().copied().collect(),
        };
        json!({
            "lp_objective": self.lp_objective,
            "trials_per_batch": self.trials_per_batch,
            "batches": self.batches,
            "covered_after_first_batch": self.covered_after_first_batch,
            "feasible": self.report.feasible,
            "groups": self.report.groups,
            "union_cost": format_rational(&self.union.cost),
            "union_edges": edges,
            "trial_costs": self.trials.iter().map(|t| format_rational(&t.cost)).collect::<Vec<_>>(),
            "trial_coverage": self.trials.iter().map(|t| t.covered.iter().map(|&b| u8::from(b)).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "tree": self.tree_stats,
        })
    }
}

/// Solve the covering LP on the tree instance and take the union of sampled trees.
/// Each trial uses its own ChaCha8 stream under the given seed. When a batch leaves
/// groups uncovered, further batches are drawn up to `extra_batches`; the report
/// then states which groups remain unmet.
pub fn approx_rgsndp(inst: &Instance, td: &TreeDecomposition, opts: &RoundingOptions) -> Result<RoundingRun, RoundError> {
    let ti = build_tree_instance(inst, td, opts.limits)?;
    let frac = solve_tree_lp(&ti, opts.engine)?;
    round_fractional(&ti, &frac, opts)
}

/// The sampling stage alone, for a given LP point.
pub fn round_fractional(ti: &TreeInstance, frac: &FractionalTree, opts: &RoundingOptions) -> Result<RoundingRun, RoundError> {
    let inst = &ti.inst;
    let per_batch = trial_count(opts.trials_constant, inst.graph.vertex_count(), inst.groups.len());
    let mut edges = BTreeSet::new();
    let mut covered = vec![false; inst.groups.len()];
    let mut trials = Vec::new();
    let mut first = false;
    let mut batches = 0;
    while batches <= opts.extra_batches {
        for _ in 0..per_batch {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(trials.len() as u64);
            let vt = sample_valid_tree(ti, frac, &mut rng)?;
            let sol = ti.valid_tree_to_solution(&vt)?;
            if let Members::Edges(es) = &sol.members {
                edges.extend(es.iter().copied());
            }
            let cov = ti.covered(&vt);
            for (a, b) in covered.iter_mut().zip(&cov) {
                *a |= b;
            }
            trials.push(TrialRecord { cost: sol.cost, covered: cov });
        }
        batches += 1;
        let done = covered.iter().all(|&c| c);
        if batches == 1 {
            first = done;
        }
        if done {
            break;
        }
    }
    let union = Solution::from_edges(inst, edges);
    let report = check_feasible(inst, &union)?;
    Ok(RoundingRun {
        trials_per_batch: per_batch,
        batches,
        trials,
        lp_objective: frac.objective,
        covered_after_first_batch: first,
        union,
        report,
        tree_stats: ti.stats.clone(),
    })
}

/// Per lifted group, the fraction of `samples` sampled trees that meet it, scaled by
/// the height of the tree instance. The minimum over groups is the measured coverage constant.
pub fn coverage_constant(ti: &TreeInstance, frac: &FractionalTree, samples: usize, seed: u64) -> Result<f64, RoundError> {
    let mut hits = vec![0usize; ti.inst.groups.len()];
    for j in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(j as u64);
        let vt = sample_valid_tree(ti, frac, &mut rng)?;
        for (h, c) in hits.iter_mut().zip(ti.covered(&vt)) {
            *h += usize::from(c);
        }
    }
    let height = ti.stats.height.max(1) as f64;
    Ok(ti.groups.iter().map(|lg| hits[lg.group] as f64 / samples as f64 * height).fold(f64::INFINITY, f64::min))
}
