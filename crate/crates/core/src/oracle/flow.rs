//! Unit-capacity max-flow for counting disjoint paths.

use std::collections::VecDeque;

const INF: i32 = i32::MAX / 4;

#[derive(Clone, Debug)]
struct Arc {
    to: usize,
    cap: i32,
    rev: usize,
    original: i32,
}

/// A directed flow network with integer capacities.
#[derive(Clone, Debug)]
pub struct FlowNetwork {
    adj: Vec<Vec<Arc>>,
    source: usize,
    sink: usize,
    /// Maps a network node back to a graph vertex, for path extraction.
    vertex_of: Vec<usize>,
}

impl FlowNetwork {
    fn with_nodes(count: usize, source: usize, sink: usize, vertex_of: Vec<usize>) -> Self {
        FlowNetwork { adj: vec![Vec::new(); count], source, sink, vertex_of }
    }

    fn add_arc(&mut self, u: usize, v: usize, cap: i32) {
        let ru = self.adj[v].len();
        let rv = self.adj[u].len();
        self.adj[u].push(Arc { to: v, cap, rev: ru, original: cap });
        self.adj[v].push(Arc { to: u, cap: 0, rev: rv, original: 0 });
    }

    /// Network whose max-flow counts edge-disjoint `source`–`sink` paths.
    pub fn edge_disjoint<I>(n: usize, edges: I, source: usize, sink: usize) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut net = Self::with_nodes(n, source, sink, (0..n).collect());
        for (u, v) in edges {
            net.add_arc(u, v, 1);
            net.add_arc(v, u, 1);
        }
        net
    }

    /// Vertex-split network whose max-flow counts openly vertex-disjoint paths.
    /// Only vertices with `allowed[v]` may be used as internal vertices.
    pub fn vertex_disjoint<I>(n: usize, allowed: &[bool], edges: I, source: usize, sink: usize) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let vertex_of = (0..2 * n).map(|x| x / 2).collect();
        let mut net = Self::with_nodes(2 * n, 2 * source + 1, 2 * sink, vertex_of);
        for v in 0..n {
            let cap = if v == source || v == sink { INF } else if allowed[v] { 1 } else { 0 };
            net.add_arc(2 * v, 2 * v + 1, cap);
        }
        for (u, v) in edges {
            net.add_arc(2 * u + 1, 2 * v, 1);
            net.add_arc(2 * v + 1, 2 * u, 1);
        }
        net
    }

    /// Maximum flow value, stopping early once `limit` is reached.
    pub fn max_flow(&mut self, limit: usize) -> usize {
        if self.source == self.sink {
            return limit;
        }
        let mut flow = 0;
        while flow < limit {
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.adj.len()];
            let mut queue = VecDeque::from([self.source]);
            let mut seen = vec![false; self.adj.len()];
            seen[self.source] = true;
            while let Some(u) = queue.pop_front() {
                if u == self.sink {
                    break;
                }
                for (i, a) in self.adj[u].iter().enumerate() {
                    if a.cap > 0 && !seen[a.to] {
                        seen[a.to] = true;
                        prev[a.to] = Some((u, i));
                        queue.push_back(a.to);
                    }
                }
            }
            if !seen[self.sink] {
                break;
            }
            let mut v = self.sink;
            while let Some((u, i)) = prev[v] {
                self.adj[u][i].cap -= 1;
                let rev = self.adj[u][i].rev;
                self.adj[v][rev].cap += 1;
                v = u;
            }
            flow += 1;
        }
        flow
    }

    /// Decompose the current flow into source–sink paths of graph vertices.
    pub fn paths(&self) -> Vec<Vec<usize>> {
        let mut used: Vec<Vec<i32>> = self
            .adj
            .iter()
            .map(|arcs| arcs.iter().map(|a| (a.original - a.cap).max(0)).collect())
            .collect();
        let mut out = Vec::new();
        loop {
            let mut path = vec![self.source];
            let mut u = self.source;
            let mut visited = vec![false; self.adj.len()];
            visited[u] = true;
            while u != self.sink {
                let Some(i) = (0..self.adj[u].len()).find(|&i| used[u][i] > 0) else { break };
                used[u][i] -= 1;
                u = self.adj[u][i].to;
                if visited[u] {
                    // Drop the cycle just closed.
                    let pos = path.iter().position(|&x| x == u).unwrap();
                    for x in path.drain(pos + 1..) {
                        visited[x] = false;
                    }
                } else {
                    visited[u] = true;
                    path.push(u);
                }
            }
            if u != self.sink {
                break;
            }
            let mut vertices: Vec<usize> = Vec::new();
            for node in path {
                let v = self.vertex_of[node];
                if vertices.last() != Some(&v) {
                    vertices.push(v);
                }
            }
            out.push(vertices);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_path_has_flow_one() {
        let mut net = FlowNetwork::edge_disjoint(3, [(0, 1), (1, 2)], 0, 2);
        assert_eq!(net.max_flow(5), 1);
        assert_eq!(net.paths(), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn parallel_paths_counted() {
        // three internally disjoint paths 0 -> 4
        let edges = [(0, 1), (1, 4), (0, 2), (2, 4), (0, 3), (3, 4)];
        let mut e = FlowNetwork::edge_disjoint(5, edges, 0, 4);
        assert_eq!(e.max_flow(10), 3);
        let mut v = FlowNetwork::vertex_disjoint(5, &[true; 5], edges, 0, 4);
        assert_eq!(v.max_flow(10), 3);
        assert_eq!(v.paths().len(), 3);
    }

    #[test]
    fn bowtie_separates_modes() {
        // two triangles sharing vertex 2
        let edges = [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)];
        assert_eq!(FlowNetwork::edge_disjoint(5, edges, 0, 4).max_flow(10), 2);
        assert_eq!(FlowNetwork::vertex_disjoint(5, &[true; 5], edges, 0, 4).max_flow(10), 1);
    }

    #[test]
    fn adjacent_endpoints_in_vertex_mode() {
        let edges = [(0, 1), (0, 2), (2, 1)];
        let mut net = FlowNetwork::vertex_disjoint(3, &[true; 3], edges, 0, 1);
        assert_eq!(net.max_flow(10), 2);
        let mut blocked = FlowNetwork::vertex_disjoint(3, &[true, true, false], edges, 0, 1);
        assert_eq!(blocked.max_flow(10), 1);
    }
}
