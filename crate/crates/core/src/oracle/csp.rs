//! Min-k-CSP instances and their reduction to vertex-weighted group SNDP.

use std::fmt::Write as _;

use num_traits::One;
use thiserror::Error;

use crate::cost::Rational;
use crate::graph::{Graph, Group, Instance, Mode};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CspError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("constraint {0} has no accepting assignment")]
    EmptyConstraint(usize),
    #[error("constraint {0} must depend on exactly k distinct variables")]
    BadArity(usize),
    #[error("constraint {0} uses a variable or value out of range")]
    OutOfRange(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CspConstraint {
    pub vars: Vec<usize>,
    pub accepting: Vec<Vec<usize>>,
}

/// Variables `0..num_vars` over domain `0..domain`, each constraint over exactly `k` variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CspInstance {
    pub num_vars: usize,
    pub domain: usize,
    pub k: usize,
    pub constraints: Vec<CspConstraint>,
}

impl CspInstance {
    pub fn validate(&self) -> Result<(), CspError> {
        for (j, c) in self.constraints.iter().enumerate() {
            let mut vs = c.vars.clone();
            vs.sort_unstable();
            vs.dedup();
            if c.vars.len() != self.k || vs.len() != self.k {
                return Err(CspError::BadArity(j));
            }
            if c.vars.iter().any(|&x| x >= self.num_vars) {
                return Err(CspError::OutOfRange(j));
            }
            if c.accepting.is_empty() {
                return Err(CspError::EmptyConstraint(j));
            }
            if c.accepting.iter().any(|t| t.len() != self.k || t.iter().any(|&a| a >= self.domain)) {
                return Err(CspError::OutOfRange(j));
            }
        }
        Ok(())
    }
}

pub fn parse_csp(text: &str) -> Result<CspInstance, CspError> {
    let perr = |line: usize, m: &str| CspError::Parse { line, message: m.to_string() };
    let mut csp: Option<CspInstance> = None;
    let mut declared_h = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| perr(line, "expected a non-negative integer"));
        match &mut csp {
            None => {
                let toks: Vec<&str> = content.split_whitespace().collect();
                if toks.len() != 6 || toks[0] != "p" || toks[1] != "csp" {
                    return Err(perr(line, "expected header `p csp <n> <N> <h> <k>`"));
                }
                declared_h = num(toks[4])?;
                csp = Some(CspInstance { num_vars: num(toks[2])?, domain: num(toks[3])?, k: num(toks[5])?, constraints: Vec::new() });
            }
            Some(c) => {
                let body = content.strip_prefix('c').ok_or_else(|| perr(line, "expected a constraint line"))?;
                let (vars, tuples) = body.split_once(':').ok_or_else(|| perr(line, "missing `:`"))?;
                let vars = vars.split_whitespace().map(num).collect::<Result<Vec<_>, _>>()?;
                let accepting = tuples
                    .split(';')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| t.split_whitespace().map(num).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<Vec<_>, _>>()?;
                c.constraints.push(CspConstraint { vars, accepting });
            }
        }
    }
    let csp = csp.ok_or_else(|| perr(1, "missing header"))?;
    if csp.constraints.len() != declared_h {
        return Err(perr(text.lines().count(), "constraint count does not match header"));
    }
    csp.validate()?;
    Ok(csp)
}

pub fn serialize_csp(csp: &CspInstance) -> String {
    let mut s = String::new();
    writeln!(s, "p csp {} {} {} {}", csp.num_vars, csp.domain, csp.constraints.len(), csp.k).unwrap();
    for c in &csp.constraints {
        let vars: Vec<String> = c.vars.iter().map(|v| v.to_string()).collect();
        let tuples: Vec<String> = c
            .accepting
            .iter()
            .map(|t| t.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" "))
            .collect();
        writeln!(s, "c {} : {}", vars.join(" "), tuples.join(";")).unwrap();
    }
    s
}

/// Vertex of the literal "variable `x` takes value `a`".
pub fn literal_vertex(csp: &CspInstance, x: usize, a: usize) -> usize {
    1 + x * csp.domain + a
}

/// Vertex-weighted, edge-connectivity group instance: literals cost 1, configurations 0,
/// one group per constraint made of its accepting configurations, demand k.
pub fn csp_to_rgsndp(csp: &CspInstance) -> Result<Instance, CspError> {
    csp.validate()?;
    let literals = csp.num_vars * csp.domain;
    let mut accepted: Vec<Vec<Vec<usize>>> = Vec::new();
    for c in &csp.constraints {
        let mut tuples = c.accepting.clone();
        tuples.sort();
        tuples.dedup();
        accepted.push(tuples);
    }
    let configs: usize = accepted.iter().map(|t| t.len()).sum();
    let n = 1 + literals + configs;
    let mut g = Graph::new(n);
    let zero = Rational::from_integer(0);
    for x in 0..csp.num_vars {
        for a in 0..csp.domain {
            let v = literal_vertex(csp, x, a);
            g.add_edge(0, v, zero).expect("fresh edge");
            g.set_vertex_cost(v, Rational::one()).expect("vertex exists");
        }
    }
    g.set_vertex_cost(0, zero).expect("root exists");
    let mut next = 1 + literals;
    let mut groups = Vec::new();
    for (c, tuples) in csp.constraints.iter().zip(&accepted) {
        let mut members = Vec::new();
        for t in tuples {
            let cfg = next;
            next += 1;
            g.set_vertex_cost(cfg, zero).expect("vertex exists");
            for (&x, &a) in c.vars.iter().zip(t) {
                g.add_edge(literal_vertex(csp, x, a), cfg, zero).expect("distinct variables give distinct edges");
            }
            members.push(cfg);
        }
        groups.push(Group { members, demand: csp.k });
    }
    let mut inst = Instance::new(g, vec![0], false, groups, Mode::Vertex, Mode::Edge).expect("valid by construction");
    inst.k = csp.k;
    Ok(inst)
}

/// Minimum total number of labels such that every constraint has an accepting
/// tuple within the chosen labels. Exhaustive over label sets.
pub fn min_label_optimum(csp: &CspInstance) -> Option<usize> {
    let bits = csp.num_vars * csp.domain;
    assert!(bits <= 24, "label space too large for exhaustive search");
    let mut best: Option<usize> = None;
    for mask in 0u32..(1u32 << bits) {
        let size = mask.count_ones() as usize;
        if best.is_some_and(|b| size >= b) {
            continue;
        }
        let has = |x: usize, a: usize| mask >> (x * csp.domain + a) & 1 == 1;
        let ok = csp
            .constraints
            .iter()
            .all(|c| c.accepting.iter().any(|t| c.vars.iter().zip(t).all(|(&x, &a)| has(x, a))));
        if ok {
            best = Some(size);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{brute_force_optimum, DEFAULT_BUDGET};

    #[test]
    fn unary_constraint_needs_one_label() {
        let csp = CspInstance {
            num_vars: 1,
            domain: 2,
            k: 1,
            constraints: vec![CspConstraint { vars: vec![0], accepting: vec![vec![0], vec![1]] }],
        };
        let inst = csp_to_rgsndp(&csp).unwrap();
        assert_eq!(brute_force_optimum(&inst, DEFAULT_BUDGET).unwrap().cost, Rational::one());
        assert_eq!(min_label_optimum(&csp), Some(1));
    }

    #[test]
    fn binary_equality_needs_two_labels() {
        let csp = CspInstance {
            num_vars: 2,
            domain: 2,
            k: 2,
            constraints: vec![CspConstraint { vars: vec![0, 1], accepting: vec![vec![0, 0], vec![1, 1]] }],
        };
        let inst = csp_to_rgsndp(&csp).unwrap();
        assert_eq!(brute_force_optimum(&inst, DEFAULT_BUDGET).unwrap().cost, Rational::from_integer(2));
        assert_eq!(min_label_optimum(&csp), Some(2));
        assert_eq!(parse_csp(&serialize_csp(&csp)).unwrap(), csp);
    }

    #[test]
    fn empty_constraint_rejected() {
        let csp = CspInstance { num_vars: 1, domain: 1, k: 1, constraints: vec![CspConstraint { vars: vec![0], accepting: vec![] }] };
        assert_eq!(csp_to_rgsndp(&csp), Err(CspError::EmptyConstraint(0)));
    }
}
