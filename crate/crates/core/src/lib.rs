//! Survivable network design on graphs of bounded treewidth.

pub mod connsets;
pub mod cost;
pub mod dp;
pub mod gen;
pub mod graph;
pub mod lp;
pub mod oracle;
pub mod tree_instance;
pub mod treedec;
