//! Linear programs: a small model, two solvers, CPLEX LP export and duals.

mod round;
mod simplex;
mod tree;

use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::cost::Rational;

pub use round::{approx_rgsndp, coverage_constant, round_fractional, sample_valid_tree, trial_count, RoundError, RoundingOptions, RoundingRun, TrialRecord};
pub use tree::{build_tree_lp, solve_tree_lp, FractionalTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    NonNegative,
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Var {
    pub name: String,
    pub cost: Rational,
    pub kind: VarKind,
}

#[derive(Clone, Debug)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(usize, Rational)>,
    pub cmp: Cmp,
    pub rhs: Rational,
}

#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub sense: Sense,
    pub vars: Vec<Var>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("the linear program is infeasible")]
    Infeasible,
    #[error("the linear program is unbounded")]
    Unbounded,
    #[error("solver failure: {0}")]
    Solver(String),
}

/// Which solver to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpEngine {
    /// Exact rational simplex; slow, meant for small programs.
    Exact,
    /// Floating-point simplex.
    Float,
    /// Exact when the program has at most this many variables, float otherwise.
    Auto(usize),
}

impl Default for LpEngine {
    fn default() -> Self {
        LpEngine::Auto(400)
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub objective: f64,
    pub values: Vec<f64>,
    /// Present when solved exactly.
    pub exact: Option<(BigRational, Vec<BigRational>)>,
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn rat_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram { sense, vars: Vec::new(), rows: Vec::new() }
    }

    pub fn add_var(&mut self, name: impl Into<String>, cost: Rational, kind: VarKind) -> usize {
        self.vars.push(Var { name: name.into(), cost, kind });
        self.vars.len() - 1
    }

    pub fn add_row(&mut self, name: impl Into<String>, coeffs: Vec<(usize, Rational)>, cmp: Cmp, rhs: Rational) -> usize {
        self.rows.push(Row { name: name.into(), coeffs, cmp, rhs });
        self.rows.len() - 1
    }

    pub fn solve(&self, engine: LpEngine) -> Result<LpSolution, LpError> {
        let exact = match engine {
            LpEngine::Exact => true,
            LpEngine::Float => false,
            LpEngine::Auto(limit) => self.vars.len() <= limit,
        };
        if exact {
            self.solve_exact()
        } else {
            self.solve_float()
        }
    }

    pub fn solve_exact(&self) -> Result<LpSolution, LpError> {
        let (obj, vals) = simplex::solve(self)?;
        Ok(LpSolution { objective: to_f64(&obj), values: vals.iter().map(to_f64).collect(), exact: Some((obj, vals)) })
    }

    pub fn solve_float(&self) -> Result<LpSolution, LpError> {
        use microlp::{ComparisonOp, OptimizationDirection, Problem};
        let dir = match self.sense {
            Sense::Minimize => OptimizationDirection::Minimize,
            Sense::Maximize => OptimizationDirection::Maximize,
        };
        let mut p = Problem::new(dir);
        let vars: Vec<_> = self
            .vars
            .iter()
            .map(|v| {
                let lo = if v.kind == VarKind::Free { f64::NEG_INFINITY } else { 0.0 };
                p.add_var(rat_f64(v.cost), (lo, f64::INFINITY))
            })
            .collect();
        for row in &self.rows {
            let expr: Vec<_> = row.coeffs.iter().map(|&(j, c)| (vars[j], rat_f64(c))).collect();
            let op = match row.cmp {
                Cmp::Le => ComparisonOp::Le,
                Cmp::Ge => ComparisonOp::Ge,
                Cmp::Eq => ComparisonOp::Eq,
            };
            p.add_constraint(expr.as_slice(), op, rat_f64(row.rhs));
        }
        let sol = match p.solve().map(|o| o.into_solution()) {
            Ok(Ok(s)) => s,
            Ok(Err(_)) => return Err(LpError::Solver("interrupted".into())),
            Err(microlp::Error::Infeasible) => return Err(LpError::Infeasible),
            Err(microlp::Error::Unbounded) => return Err(LpError::Unbounded),
            Err(e) => return Err(LpError::Solver(e.to_string())),
        };
        let values: Vec<f64> = vars.iter().map(|&v| sol.var_value(v)).collect();
        Ok(LpSolution { objective: sol.objective(), values, exact: None })
    }

    /// The dual program. Row duals come first in row order; a minimization over
    /// nonnegative variables becomes a maximization with one constraint per variable.
    pub fn dual(&self) -> LinearProgram {
        let min = self.sense == Sense::Minimize;
        let mut d = LinearProgram::new(if min { Sense::Maximize } else { Sense::Minimize });
        for row in &self.rows {
            // Sign of the dual variable follows the row direction.
            let (kind, flip) = match (row.cmp, min) {
                (Cmp::Eq, _) => (VarKind::Free, false),
                (Cmp::Ge, true) | (Cmp::Le, false) => (VarKind::NonNegative, false),
                (Cmp::Le, true) | (Cmp::Ge, false) => (VarKind::NonNegative, true),
            };
            let rhs = if flip { -row.rhs } else { row.rhs };
            d.add_var(format!("d_{}", row.name), rhs, kind);
        }
        let mut cols: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); self.vars.len()];
        for (i, row) in self.rows.iter().enumerate() {
            let flip = matches!((row.cmp, min), (Cmp::Le, true) | (Cmp::Ge, false));
            for &(j, c) in &row.coeffs {
                cols[j].push((i, if flip { -c } else { c }));
            }
        }
        for (j, v) in self.vars.iter().enumerate() {
            let cmp = match (v.kind, min) {
                (VarKind::Free, _) => Cmp::Eq,
                (VarKind::NonNegative, true) => Cmp::Le,
                (VarKind::NonNegative, false) => Cmp::Ge,
            };
            d.add_row(format!("p_{}", v.name), std::mem::take(&mut cols[j]), cmp, v.cost);
        }
        d
    }

    /// CPLEX LP text format.
    pub fn to_cplex_lp(&self) -> String {
        let mut s = String::new();
        s.push_str(match self.sense {
            Sense::Minimize => "Minimize\n",
            Sense::Maximize => "Maximize\n",
        });
        let obj: Vec<(usize, Rational)> = self.vars.iter().enumerate().map(|(j, v)| (j, v.cost)).collect();
        let _ = writeln!(s, " obj:{}", self.expr(&obj));
        s.push_str("Subject To\n");
        for row in &self.rows {
            let op = match row.cmp {
                Cmp::Le => "<=",
                Cmp::Ge => ">=",
                Cmp::Eq => "=",
            };
            let _ = writeln!(s, " {}:{} {} {}", row.name, self.expr(&row.coeffs), op, num(row.rhs));
        }
        let free: Vec<&Var> = self.vars.iter().filter(|v| v.kind == VarKind::Free).collect();
        if !free.is_empty() {
            s.push_str("Bounds\n");
            for v in free {
                let _ = writeln!(s, " {} free", v.name);
            }
        }
        s.push_str("End\n");
        s
    }

    fn expr(&self, terms: &[(usize, Rational)]) -> String {
        let mut s = String::new();
        let zero = Rational::from_integer(0);
        for (i, &(j, c)) in terms.iter().filter(|(_, c)| *c != zero).enumerate() {
            if i > 0 && i % 8 == 0 {
                s.push_str("\n   ");
            }
            let sign = if c < zero { '-' } else { '+' };
            let _ = write!(s, " {} {} {}", sign, num(if c < zero { -c } else { c }), self.vars[j].name);
        }
        if s.is_empty() {
            s.push_str(" 0 ");
            s.push_str(self.vars.first().map_or("x", |v| v.name.as_str()));
        }
        s
    }
}

fn num(r: Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}", rat_f64(r))
    }
}
