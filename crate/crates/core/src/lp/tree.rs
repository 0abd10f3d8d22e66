//! The covering LP over a tree instance, with one variable per connecting node.

use std::collections::BTreeMap;

use num_rational::BigRational;

use super::{Cmp, LinearProgram, LpEngine, LpError, Sense, VarKind};
use crate::cost::Rational;
use crate::tree_instance::TreeInstance;

/// An LP point on a tree instance.
#[derive(Clone, Debug)]
pub struct FractionalTree {
    /// Mass on each connecting node.
    pub y: Vec<f64>,
    /// Mass reaching each profile node; the root carries 1.
    pub x: Vec<f64>,
    pub objective: f64,
    pub exact_objective: Option<BigRational>,
}

impl FractionalTree {
    /// A point from connecting-node masses.
    pub fn from_masses(ti: &TreeInstance, y: Vec<f64>) -> Self {
        let mut x = vec![0.0; ti.profiles.len()];
        x[ti.root() as usize] = 1.0;
        for (c, conn) in ti.conns.iter().enumerate() {
            for &ch in &conn.children {
                x[ch as usize] += y[c];
            }
        }
        let objective = ti.conn_costs().iter().zip(&y).map(|(c, v)| c * v).sum();
        FractionalTree { y, x, objective, exact_objective: None }
    }
}

/// Variables `y_c`: one per connecting node. Rows: unit mass at the root, flow
/// conservation at every internal profile node, and one covering row per lifted group.
pub fn build_tree_lp(ti: &TreeInstance) -> LinearProgram {
    let one = Rational::from_integer(1);
    let zero = Rational::from_integer(0);
    let mut lp = LinearProgram::new(Sense::Minimize);
    for (c, conn) in ti.conns.iter().enumerate() {
        lp.add_var(format!("y{c}"), conn.cost, VarKind::NonNegative);
    }
    let root = ti.root();
    let coeffs = ti.profiles[root as usize].conns.iter().map(|&c| (c as usize, one)).collect();
    lp.add_row("root", coeffs, Cmp::Eq, one);
    for (p, node) in ti.profiles.iter().enumerate() {
        if p as u32 == root || !ti.needs_child(p as u32) {
            continue;
        }
        let mut coeffs: BTreeMap<usize, Rational> = BTreeMap::new();
        for &c in &node.parents {
            *coeffs.entry(c as usize).or_insert(zero) += one;
        }
        for &c in &node.conns {
            *coeffs.entry(c as usize).or_insert(zero) -= one;
        }
        lp.add_row(format!("flow{p}"), coeffs.into_iter().filter(|(_, v)| *v != zero).collect(), Cmp::Eq, zero);
    }
    for (g, lg) in ti.groups.iter().enumerate() {
        let mut coeffs: BTreeMap<usize, Rational> = BTreeMap::new();
        let mut seen = Vec::new();
        for &(p, _) in &lg.nodes {
            if seen.contains(&p) {
                continue;
            }
            seen.push(p);
            for &c in &ti.profiles[p as usize].parents {
                *coeffs.entry(c as usize).or_insert(zero) += one;
            }
        }
        lp.add_row(format!("cover{g}"), coeffs.into_iter().collect(), Cmp::Ge, one);
    }
    lp
}

/// Solve the covering LP; tiny negative float values are clamped to zero.
pub fn solve_tree_lp(ti: &TreeInstance, engine: LpEngine) -> Result<FractionalTree, LpError> {
    let lp = build_tree_lp(ti);
    let sol = lp.solve(engine)?;
    let y = sol.values.iter().map(|&v| v.max(0.0)).collect();
    let mut frac = FractionalTree::from_masses(ti, y);
    frac.objective = sol.objective;
    frac.exact_objective = sol.exact.map(|(o, _)| o);
    Ok(frac)
}
