//! PACE `.gr` and `.td` text formats (1-indexed vertices and bags).

use std::fmt::Write as _;

use thiserror::Error;

use super::TreeDecomposition;
use crate::cost::Rational;
use crate::graph::Graph;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct PaceError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> PaceError {
    PaceError { line, message: message.into() }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, t)| !t.is_empty() && t[0] != "c")
}

fn num(tok: &str, line: usize) -> Result<usize, PaceError> {
    tok.parse().map_err(|_| err(line, format!("expected an integer, found `{tok}`")))
}

/// Parse a `.gr` graph; every edge gets unit cost.
pub fn parse_gr(text: &str) -> Result<Graph, PaceError> {
    let mut g: Option<Graph> = None;
    let mut declared = 0;
    for (line, toks) in content_lines(text) {
        match &mut g {
            None => {
                if toks.len() != 4 || toks[0] != "p" || toks[1] != "tw" {
                    return Err(err(line, "expected `p tw <n> <m>`"));
                }
                g = Some(Graph::new(num(toks[2], line)?));
                declared = num(toks[3], line)?;
            }
            Some(g) => {
                if toks.len() != 2 {
                    return Err(err(line, "expected an edge `u v`"));
                }
                let u = num(toks[0], line)?;
                let v = num(toks[1], line)?;
                if u == 0 || v == 0 {
                    return Err(err(line, "vertices are 1-indexed"));
                }
                g.add_edge(u - 1, v - 1, Rational::from_integer(1)).map_err(|e| err(line, e.to_string()))?;
            }
        }
    }
    let g = g.ok_or_else(|| err(1, "missing header"))?;
    if g.edge_count() != declared {
        return Err(err(text.lines().count(), "edge count does not match header"));
    }
    Ok(g)
}

pub fn write_gr(g: &Graph) -> String {
    let mut s = format!("p tw {} {}\n", g.vertex_count(), g.edge_count());
    for &(u, v) in g.edges() {
        writeln!(s, "{} {}", u + 1, v + 1).unwrap();
    }
    s
}

/// Parse a `.td` decomposition, rooted at its first bag.
pub fn parse_td(text: &str) -> Result<TreeDecomposition, PaceError> {
    let mut bags: Vec<Option<Vec<usize>>> = Vec::new();
    let mut header = false;
    let mut edges = Vec::new();
    for (line, toks) in content_lines(text) {
        if !header {
            if toks.len() != 5 || toks[0] != "s" || toks[1] != "td" {
                return Err(err(line, "expected `s td <bags> <width+1> <n>`"));
            }
            bags = vec![None; num(toks[2], line)?];
            header = true;
        } else if toks[0] == "b" {
            let id = num(toks.get(1).ok_or_else(|| err(line, "missing bag id"))?, line)?;
            if id == 0 || id > bags.len() {
                return Err(err(line, format!("bag id {id} out of range")));
            }
            let mut vs = Vec::new();
            for t in &toks[2..] {
                let v = num(t, line)?;
                if v == 0 {
                    return Err(err(line, "vertices are 1-indexed"));
                }
                vs.push(v - 1);
            }
            bags[id - 1] = Some(vs);
        } else {
            if toks.len() != 2 {
                return Err(err(line, "expected a tree edge `a b`"));
            }
            let a = num(toks[0], line)?;
            let b = num(toks[1], line)?;
            if a == 0 || b == 0 || a > bags.len() || b > bags.len() {
                return Err(err(line, "tree edge mentions unknown bag"));
            }
            edges.push((a - 1, b - 1));
        }
    }
    if !header {
        return Err(err(1, "missing header"));
    }
    let bags: Vec<Vec<usize>> = bags
        .into_iter()
        .enumerate()
        .map(|(i, b)| b.ok_or_else(|| err(0, format!("bag {} missing", i + 1))))
        .collect::<Result<_, _>>()?;
    TreeDecomposition::from_tree(bags, &edges, 0).map_err(|e| err(0, e.to_string()))
}

pub fn write_td(td: &TreeDecomposition, n: usize) -> String {
    let mut s = format!("s td {} {} {}\n", td.bag_count(), td.width() + 1, n);
    for t in 0..td.bag_count() {
        let vs: Vec<String> = td.bag(t).iter().map(|v| (v + 1).to_string()).collect();
        writeln!(s, "b {} {}", t + 1, vs.join(" ")).unwrap();
    }
    for (p, c) in td.tree_edges() {
        writeln!(s, "{} {}", p + 1, c + 1).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let g = parse_gr("c a path\np tw 3 2\n1 2\n2 3\n").unwrap();
        assert_eq!(g.edge_count(), 2);
        let td = parse_td("s td 2 2 3\nb 1 1 2\nb 2 2 3\n1 2\n").unwrap();
        td.validate(&g).unwrap();
        let again = parse_td(&write_td(&td, 3)).unwrap();
        assert_eq!(again, td);
        assert_eq!(parse_gr(&write_gr(&g)).unwrap(), g);
    }
}
