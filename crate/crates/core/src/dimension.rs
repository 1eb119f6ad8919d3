//! Restricted doubling dimension estimate: `log2` of the largest child count
//! in the forest.

use crate::error::{input, Result};
use crate::netforest::NetForest;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimEstimate {
    /// Largest number of children of any node, at least 1.
    pub max_out_degree: usize,
    /// `log2(max_out_degree)`.
    pub estimate: f64,
    pub t: f64,
    /// Largest root Rel set, reported alongside.
    pub max_root_rel: usize,
}

pub fn estimate_dim(forest: &NetForest) -> Result<DimEstimate> {
    if forest.nodes().is_empty() {
        return input("empty forest");
    }
    let x = forest.nodes().iter().map(|v| v.children.len()).max().unwrap_or(0).max(1);
    let max_root_rel = forest.roots().iter().map(|&r| forest.rel(r).len()).max().unwrap_or(0);
    Ok(DimEstimate { max_out_degree: x, estimate: (x as f64).log2(), t: forest.t(), max_root_rel })
}

pub fn format_dim(d: &DimEstimate) -> String {
    format!("dim-estimate t={} x={} log2x={}\n", d.t, d.max_out_degree, d.estimate)
}
