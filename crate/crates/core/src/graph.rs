//! Graphs, problem instances, solutions and feasibility checking.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::cost::{format_rational, parse_rational, Rational};
use crate::oracle::flow::FlowNetwork;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0},{1})")]
    DuplicateEdge(usize, usize),
    #[error("unknown vertex {0}")]
    UnknownVertex(usize),
    #[error("unknown edge id {0}")]
    UnknownEdge(usize),
    #[error("solution kind does not match the instance cost mode")]
    WrongSolutionKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn perr(line: usize, message: impl Into<String>) -> ParseError {
    ParseError { line, message: message.into() }
}

/// An undirected simple graph with rational costs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    edge_cost: Vec<Rational>,
    vertex_cost: Option<Vec<Rational>>,
    index: HashMap<(usize, usize), usize>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            n,
            edges: Vec::new(),
            edge_cost: Vec::new(),
            vertex_cost: None,
            index: HashMap::new(),
            adj: vec![Vec::new(); n],
        }
    }

    /// Add an edge and return its id.
    pub fn add_edge(&mut self, u: usize, v: usize, cost: Rational) -> Result<usize, GraphError> {
        if u >= self.n {
            return Err(GraphError::UnknownVertex(u));
        }
        if v >= self.n {
            return Err(GraphError::UnknownVertex(v));
        }
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        let key = (u.min(v), u.max(v));
        if self.index.contains_key(&key) {
            return Err(GraphError::DuplicateEdge(key.0, key.1));
        }
        let id = self.edges.len();
        self.edges.push(key);
        self.edge_cost.push(cost);
        self.index.insert(key, id);
        self.adj[u].push((v, id));
        self.adj[v].push((u, id));
        Ok(id)
    }

    pub fn set_vertex_cost(&mut self, v: usize, cost: Rational) -> Result<(), GraphError> {
        if v >= self.n {
            return Err(GraphError::UnknownVertex(v));
        }
        let n = self.n;
        self.vertex_cost.get_or_insert_with(|| vec![Rational::zero(); n])[v] = cost;
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edge endpoints `(u, v)` with `u < v`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> (usize, usize) {
        self.edges[id]
    }

    pub fn edge_cost(&self, id: usize) -> Rational {
        self.edge_cost[id]
    }

    pub fn has_vertex_costs(&self) -> bool {
        self.vertex_cost.is_some()
    }

    pub fn vertex_cost(&self, v: usize) -> Rational {
        self.vertex_cost.as_ref().map_or(Rational::zero(), |c| c[v])
    }

    pub fn edge_id(&self, u: usize, v: usize) -> Option<usize> {
        self.index.get(&(u.min(v), u.max(v))).copied()
    }

    /// Neighbours of `v` as `(neighbour, edge id)`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &(w, _) in &self.adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Edge,
    Vertex,
}

impl Mode {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "edge" => Some(Mode::Edge),
            "vertex" => Some(Mode::Vertex),
            _ => None,
        }
    }

    fn as_str(&self) -> &'static str {
        match self {
            Mode::Edge => "edge",
            Mode::Vertex => "vertex",
        }
    }
}

/// A group of vertices that must contain one `demand`-connected representative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Group {
    pub members: Vec<usize>,
    pub demand: usize,
}

/// A rooted (restricted group) SNDP instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub graph: Graph,
    /// The root, or all roots in multi-root mode; never empty.
    pub roots: Vec<usize>,
    pub multi_root: bool,
    pub groups: Vec<Group>,
    /// Declared maximum demand.
    pub k: usize,
    pub cost_mode: Mode,
    pub conn_mode: Mode,
}

impl Instance {
    /// Build and validate an instance.
    pub fn new(
        graph: Graph,
        roots: Vec<usize>,
        multi_root: bool,
        groups: Vec<Group>,
        cost_mode: Mode,
        conn_mode: Mode,
    ) -> Result<Self, GraphError> {
        let k = groups.iter().map(|g| g.demand).max().unwrap_or(1);
        let mut inst = Instance { graph, roots, multi_root, groups, k, cost_mode, conn_mode };
        inst.normalize()?;
        Ok(inst)
    }

    fn normalize(&mut self) -> Result<(), GraphError> {
        let n = self.graph.vertex_count();
        for &r in &self.roots {
            if r >= n {
                return Err(GraphError::UnknownVertex(r));
            }
        }
        for g in &mut self.groups {
            g.members.sort_unstable();
            g.members.dedup();
            if let Some(&v) = g.members.iter().find(|&&v| v >= n) {
                return Err(GraphError::UnknownVertex(v));
            }
        }
        Ok(())
    }

    pub fn root(&self) -> usize {
        self.roots[0]
    }

    pub fn is_root(&self, v: usize) -> bool {
        self.roots.contains(&v)
    }

    pub fn max_demand(&self) -> usize {
        self.groups.iter().map(|g| g.demand).max().unwrap_or(0)
    }

    /// Cost of buying vertex `v` in vertex-cost mode; roots are free.
    pub fn vertex_price(&self, v: usize) -> Rational {
        if self.is_root(v) {
            Rational::zero()
        } else {
            self.graph.vertex_cost(v)
        }
    }

    /// Group demands trivially met because the group contains a root.
    pub fn group_is_trivial(&self, i: usize) -> bool {
        let g = &self.groups[i];
        !self.multi_root && g.members.iter().any(|&v| self.is_root(v))
    }
}

fn parse_usize(tok: &str, line: usize) -> Result<usize, ParseError> {
    tok.parse().map_err(|_| perr(line, format!("expected a non-negative integer, found `{tok}`")))
}

/// Parse the line-oriented instance format.
pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let mut header: Option<(usize, usize, usize, usize, Mode, Mode)> = None;
    let mut graph: Option<Graph> = None;
    let mut roots: Option<(Vec<usize>, bool, usize)> = None;
    let mut groups = Vec::new();
    let mut edge_lines = 0;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        if header.is_none() {
            if toks.len() != 8 || toks[0] != "p" || toks[1] != "rgsndp" {
                return Err(perr(line, "expected header `p rgsndp <n> <m> <h> <k> <cost_mode> <conn_mode>`"));
            }
            let n = parse_usize(toks[2], line)?;
            let m = parse_usize(toks[3], line)?;
            let h = parse_usize(toks[4], line)?;
            let k = parse_usize(toks[5], line)?;
            let cm = Mode::parse(toks[6]).ok_or_else(|| perr(line, "cost mode must be edge or vertex"))?;
            let vm = Mode::parse(toks[7]).ok_or_else(|| perr(line, "connectivity mode must be edge or vertex"))?;
            header = Some((n, m, h, k, cm, vm));
            graph = Some(Graph::new(n));
            continue;
        }
        let (n, _, _, k, cost_mode, _) = header.unwrap();
        let g = graph.as_mut().unwrap();
        let gerr = |e: GraphError| perr(line, e.to_string());
        let vertex = |tok: &str| -> Result<usize, ParseError> {
            let v = parse_usize(tok, line)?;
            if v >= n {
                return Err(perr(line, format!("unknown vertex id {v}")));
            }
            Ok(v)
        };
        match toks[0] {
            "e" => {
                if toks.len() != 4 {
                    return Err(perr(line, "edge line must be `e <u> <v> <cost>`"));
                }
                let u = vertex(toks[1])?;
                let v = vertex(toks[2])?;
                let c = parse_rational(toks[3]).map_err(|e| perr(line, e.to_string()))?;
                if cost_mode == Mode::Vertex && !c.is_zero() {
                    return Err(perr(line, "edge costs must be 0 in vertex-cost mode"));
                }
                if u == v {
                    return Err(perr(line, format!("self-loop at vertex {u}")));
                }
                g.add_edge(u, v, c).map_err(gerr)?;
                edge_lines += 1;
            }
            "w" => {
                if toks.len() != 3 {
                    return Err(perr(line, "vertex cost line must be `w <v> <cost>`"));
                }
                let v = vertex(toks[1])?;
                let c = parse_rational(toks[2]).map_err(|e| perr(line, e.to_string()))?;
                g.set_vertex_cost(v, c).map_err(gerr)?;
            }
            "r" | "R" => {
                if roots.is_some() {
                    return Err(perr(line, "root declared more than once"));
                }
                if toks.len() < 2 || (toks[0] == "r" && toks.len() != 2) {
                    return Err(perr(line, "root line must be `r <root>` or `R <v1> <v2> ...`"));
                }
                let vs = toks[1..].iter().map(|t| vertex(t)).collect::<Result<Vec<_>, _>>()?;
                roots = Some((vs, toks[0] == "R", line));
            }
            "g" => {
                if toks.len() < 3 {
                    return Err(perr(line, "group line must be `g <k_i> <v1> ...`"));
                }
                let demand = parse_usize(toks[1], line)?;
                if demand == 0 {
                    return Err(perr(line, "group demand must be at least 1"));
                }
                if demand > k {
                    return Err(perr(line, format!("demand {demand} exceeds declared k={k}")));
                }
                let members = toks[2..].iter().map(|t| vertex(t)).collect::<Result<Vec<_>, _>>()?;
                groups.push(Group { members, demand });
            }
            other => return Err(perr(line, format!("unknown line type `{other}`"))),
        }
    }
    let (_, m, h, k, cost_mode, conn_mode) = header.ok_or_else(|| perr(last_line.max(1), "missing header"))?;
    if edge_lines != m {
        return Err(perr(last_line, format!("header declares {m} edges, found {edge_lines}")));
    }
    if groups.len() != h {
        return Err(perr(last_line, format!("header declares {h} groups, found {}", groups.len())));
    }
    let (roots, multi_root, root_line) = roots.ok_or_else(|| perr(last_line, "missing root line"))?;
    let mut inst = Instance { graph: graph.unwrap(), roots, multi_root, groups, k, cost_mode, conn_mode };
    inst.normalize().map_err(|e| perr(root_line, e.to_string()))?;
    Ok(inst)
}

/// Write an instance in the format read by [`parse_instance`].
pub fn serialize_instance(inst: &Instance) -> String {
    let g = &inst.graph;
    let mut s = String::new();
    writeln!(
        s,
        "p rgsndp {} {} {} {} {} {}",
        g.vertex_count(),
        g.edge_count(),
        inst.groups.len(),
        inst.k,
        inst.cost_mode.as_str(),
        inst.conn_mode.as_str()
    )
    .unwrap();
    for (id, &(u, v)) in g.edges().iter().enumerate() {
        writeln!(s, "e {u} {v} {}", format_rational(&g.edge_cost(id))).unwrap();
    }
    if g.has_vertex_costs() {
        for v in 0..g.vertex_count() {
            writeln!(s, "w {v} {}", format_rational(&g.vertex_cost(v))).unwrap();
        }
    }
    let roots: Vec<String> = inst.roots.iter().map(|r| r.to_string()).collect();
    writeln!(s, "{} {}", if inst.multi_root { "R" } else { "r" }, roots.join(" ")).unwrap();
    for grp in &inst.groups {
        let ms: Vec<String> = grp.members.iter().map(|v| v.to_string()).collect();
        writeln!(s, "g {} {}", grp.demand, ms.join(" ")).unwrap();
    }
    s
}

/// Elements bought by a solution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Members {
    Edges(BTreeSet<usize>),
    Vertices(BTreeSet<usize>),
}

/// Disjoint paths proving one group demand.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DemandWitness {
    pub group: usize,
    pub vertex: usize,
    pub root: usize,
    pub paths: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub members: Members,
    pub cost: Rational,
    pub certificate: Option<Vec<DemandWitness>>,
}

impl Solution {
    pub fn from_edges(inst: &Instance, edges: BTreeSet<usize>) -> Self {
        let cost = edges.iter().map(|&e| inst.graph.edge_cost(e)).sum();
        Solution { members: Members::Edges(edges), cost, certificate: None }
    }

    pub fn from_vertices(inst: &Instance, vertices: BTreeSet<usize>) -> Self {
        let cost = vertices.iter().map(|&v| inst.vertex_price(v)).sum();
        Solution { members: Members::Vertices(vertices), cost, certificate: None }
    }
}

/// Sum of member costs under the instance's cost mode.
pub fn solution_cost(inst: &Instance, sol: &Solution) -> Result<Rational, GraphError> {
    match (&sol.members, inst.cost_mode) {
        (Members::Edges(es), Mode::Edge) => {
            let mut total = Rational::zero();
            for &e in es {
                if e >= inst.graph.edge_count() {
                    return Err(GraphError::UnknownEdge(e));
                }
                total += inst.graph.edge_cost(e);
            }
            Ok(total)
        }
        (Members::Vertices(vs), Mode::Vertex) => {
            let mut total = Rational::zero();
            for &v in vs {
                if v >= inst.graph.vertex_count() {
                    return Err(GraphError::UnknownVertex(v));
                }
                total += inst.vertex_price(v);
            }
            Ok(total)
        }
        _ => Err(GraphError::WrongSolutionKind),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroupVerdict {
    pub satisfied: bool,
    /// A member connected with the required multiplicity.
    pub witness: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub groups: Vec<GroupVerdict>,
}

/// The subgraph induced by a solution: usable edges and internal-vertex permissions.
pub(crate) struct SubgraphView {
    pub edges: Vec<(usize, usize)>,
    pub allowed: Vec<bool>,
}

impl SubgraphView {
    pub(crate) fn from_edge_mask(inst: &Instance, mask: &[bool]) -> Self {
        let g = &inst.graph;
        let edges = (0..g.edge_count()).filter(|&e| mask[e]).map(|e| g.edge(e)).collect();
        SubgraphView { edges, allowed: vec![true; g.vertex_count()] }
    }

    pub(crate) fn from_vertex_mask(inst: &Instance, mask: &[bool]) -> Self {
        let g = &inst.graph;
        let mut allowed = mask.to_vec();
        for &r in &inst.roots {
            allowed[r] = true;
        }
        let edges = g.edges().iter().copied().filter(|&(u, v)| allowed[u] && allowed[v]).collect();
        SubgraphView { edges, allowed }
    }

    /// Number of disjoint `r`–`v` paths, capped at `limit`.
    pub(crate) fn connectivity(&self, n: usize, conn: Mode, r: usize, v: usize, limit: usize) -> usize {
        if r == v {
            return limit;
        }
        if !self.allowed[r] || !self.allowed[v] {
            return 0;
        }
        let mut net = match conn {
            Mode::Edge => FlowNetwork::edge_disjoint(n, self.edges.iter().copied(), r, v),
            Mode::Vertex => FlowNetwork::vertex_disjoint(n, &self.allowed, self.edges.iter().copied(), r, v),
        };
        net.max_flow(limit)
    }

    fn paths(&self, n: usize, conn: Mode, r: usize, v: usize, limit: usize) -> Vec<Vec<usize>> {
        let mut net = match conn {
            Mode::Edge => FlowNetwork::edge_disjoint(n, self.edges.iter().copied(), r, v),
            Mode::Vertex => FlowNetwork::vertex_disjoint(n, &self.allowed, self.edges.iter().copied(), r, v),
        };
        net.max_flow(limit);
        net.paths()
    }

    /// The first member of group `i` meeting its demand from every root.
    pub(crate) fn group_witness(&self, inst: &Instance, i: usize) -> Option<usize> {
        let n = inst.graph.vertex_count();
        let grp = &inst.groups[i];
        let roots: &[usize] = if inst.multi_root { &inst.roots } else { &inst.roots[..1] };
        grp.members.iter().copied().find(|&v| {
            roots.iter().all(|&r| self.connectivity(n, inst.conn_mode, r, v, grp.demand) >= grp.demand)
        })
    }

    pub(crate) fn all_groups_met(&self, inst: &Instance) -> bool {
        (0..inst.groups.len()).all(|i| self.group_witness(inst, i).is_some())
    }
}

fn view_of(inst: &Instance, sol: &Solution) -> Result<SubgraphView, GraphError> {
    solution_cost(inst, sol)?;
    Ok(match &sol.members {
        Members::Edges(es) => {
            let mut mask = vec![false; inst.graph.edge_count()];
            for &e in es {
                mask[e] = true;
            }
            SubgraphView::from_edge_mask(inst, &mask)
        }
        Members::Vertices(vs) => {
            let mut mask = vec![false; inst.graph.vertex_count()];
            for &v in vs {
                mask[v] = true;
            }
            SubgraphView::from_vertex_mask(inst, &mask)
        }
    })
}

/// Per-group feasibility verdicts via max-flow.
pub fn check_feasible(inst: &Instance, sol: &Solution) -> Result<FeasibilityReport, GraphError> {
    let view = view_of(inst, sol)?;
    let groups: Vec<GroupVerdict> = (0..inst.groups.len())
        .map(|i| {
            let witness = view.group_witness(inst, i);
            GroupVerdict { satisfied: witness.is_some(), witness }
        })
        .collect();
    Ok(FeasibilityReport { feasible: groups.iter().all(|g| g.satisfied), groups })
}

/// Disjoint-path witnesses for every satisfied group.
pub fn certificate(inst: &Instance, sol: &Solution) -> Result<Vec<DemandWitness>, GraphError> {
    let view = view_of(inst, sol)?;
    let n = inst.graph.vertex_count();
    let mut out = Vec::new();
    for i in 0..inst.groups.len() {
        let Some(v) = view.group_witness(inst, i) else { continue };
        let roots: &[usize] = if inst.multi_root { &inst.roots } else { &inst.roots[..1] };
        for &r in roots {
            let paths = if r == v { Vec::new() } else { view.paths(n, inst.conn_mode, r, v, inst.groups[i].demand) };
            out.push(DemandWitness { group: i, vertex: v, root: r, paths });
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct SolutionJson<'a> {
    cost: String,
    cost_mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<[usize; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vertices: Option<Vec<usize>>,
    feasible: bool,
    groups: &'a [GroupVerdict],
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<&'a [DemandWitness]>,
}

/// JSON record with the cost, members and per-group verdicts.
pub fn solution_json(inst: &Instance, sol: &Solution, report: &FeasibilityReport) -> serde_json::Value {
    let (edges, vertices) = match &sol.members {
        Members::Edges(es) => (Some(es.iter().map(|&e| { let (u, v) = inst.graph.edge(e); [u, v] }).collect()), None),
        Members::Vertices(vs) => (None, Some(vs.iter().copied().collect())),
    };
    let json = SolutionJson {
        cost: format_rational(&sol.cost),
        cost_mode: inst.cost_mode,
        edges,
        vertices,
        feasible: report.feasible,
        groups: &report.groups,
        certificate: sol.certificate.as_deref(),
    };
    serde_json::to_value(json).expect("solution serializes")
}
