//! Copy-splitting: expand the shared DAG into an explicit tree where every copy
//! of a node owns its subtree.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::json;

use super::{TreeError, TreeInstance};
use crate::cost::format_rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum Origin {
    Profile(u32),
    Connecting(u32),
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeNode {
    pub origin: Origin,
    pub parent: Option<usize>,
    pub label: String,
}

/// The explicit tree; node 0 is the root and parents precede children.
#[derive(Clone, Debug, Serialize)]
pub struct MaterializedTree {
    pub nodes: Vec<TreeNode>,
}

impl TreeInstance {
    fn label(&self, o: Origin) -> String {
        match o {
            Origin::Profile(p) => match self.profiles[p as usize].bag {
                None => "root".to_string(),
                Some(t) => format!("p{p} bag {t}"),
            },
            Origin::Connecting(c) => {
                let conn = &self.conns[c as usize];
                let edges: Vec<String> = conn.edges.iter().map(|e| e.to_string()).collect();
                format!("c{c} cost {} edges [{}]", format_rational(&conn.cost), edges.join(","))
            }
        }
    }

    /// Expand every shared node into one copy per root path. Fails once more than
    /// `cap` nodes would be created.
    pub fn materialize(&self, cap: usize) -> Result<MaterializedTree, TreeError> {
        let mut nodes = Vec::new();
        let mut stack = vec![(Origin::Profile(self.root()), None)];
        while let Some((origin, parent)) = stack.pop() {
            if nodes.len() >= cap {
                return Err(TreeError::TooLarge { what: "materialized tree nodes", limit: cap });
            }
            let id = nodes.len();
            nodes.push(TreeNode { origin, parent, label: self.label(origin) });
            match origin {
                Origin::Profile(p) => {
                    for &c in self.profiles[p as usize].conns.iter().rev() {
                        stack.push((Origin::Connecting(c), Some(id)));
                    }
                }
                Origin::Connecting(c) => {
                    for &ch in self.conns[c as usize].children.iter().rev() {
                        stack.push((Origin::Profile(ch), Some(id)));
                    }
                }
            }
        }
        Ok(MaterializedTree { nodes })
    }
}

impl MaterializedTree {
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph tree {\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let shape = match n.origin {
                Origin::Profile(_) => "ellipse",
                Origin::Connecting(_) => "box",
            };
            let _ = writeln!(s, "  n{i} [shape={shape}, label=\"{}\"];", n.label);
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                let _ = writeln!(s, "  n{p} -> n{i};");
            }
        }
        s.push_str("}\n");
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let edges: Vec<(usize, usize)> = self.nodes.iter().enumerate().filter_map(|(i, n)| n.parent.map(|p| (p, i))).collect();
        json!({ "nodes": self.nodes, "edges": edges })
    }

    /// Origin sequence of every root-to-leaf path.
    pub fn leaf_paths(&self) -> Vec<Vec<Origin>> {
        let mut has_child = vec![false; self.nodes.len()];
        for n in &self.nodes {
            if let Some(p) = n.parent {
                has_child[p] = true;
            }
        }
        (0..self.nodes.len())
            .filter(|&i| !has_child[i])
            .map(|mut i| {
                let mut path = vec![self.nodes[i].origin];
                while let Some(p) = self.nodes[i].parent {
                    path.push(self.nodes[p].origin);
                    i = p;
                }
                path.reverse();
                path
            })
            .collect()
    }
}
