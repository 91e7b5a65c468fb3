use super::{CutError, CutResult, WeightedGraph};
use crate::scalar::Scalar;

pub const DEFAULT_MAX_ENUM_NODES: usize = 16;

/// Every bipartition of the graph, `2^(n-1) - 1` cuts in total.
///
/// The highest-index node is pinned outside `side_a`, so complements are
/// not produced twice.
pub fn enumerate_cuts<W: Scalar>(
    g: &WeightedGraph<W>,
    max_nodes: usize,
) -> Result<impl Iterator<Item = CutResult<W>> + '_, CutError> {
    let n = g.node_count();
    if n > max_nodes || n >= 64 {
        return Err(CutError::TooLarge { nodes: n, max: max_nodes.min(63) });
    }
    if n < 2 {
        return Err(CutError::TooFewNodes);
    }
    let masks = 1u64..(1u64 << (n - 1));
    Ok(masks.map(move |mask| {
        let side: Vec<bool> = (0..n).map(|v| v < n - 1 && mask & (1 << v) != 0).collect();
        g.cut_from_side(&side)
    }))
}
