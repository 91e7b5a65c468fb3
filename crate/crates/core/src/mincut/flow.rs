use std::collections::VecDeque;

use super::{CutError, CutResult, Key, WeightedGraph};
use crate::scalar::{Scalar, Weight};

/// Minimum s-t cut by Edmonds–Karp max-flow on merged node pairs.
///
/// The source side is the residual-reachable set from `s`. When `s` and
/// `t` are joined by a path of infinite edges every s-t cut is infinite and
/// the cut `{s}` is returned.
pub fn min_st_cut<W: Scalar>(g: &WeightedGraph<W>, s: usize, t: usize) -> Result<CutResult<W>, CutError> {
    let (_, side) = solve(g, s, t)?;
    Ok(g.cut_from_side(&side))
}

/// Value of the maximum s-t flow.
pub fn max_flow_value<W: Scalar>(g: &WeightedGraph<W>, s: usize, t: usize) -> Result<Weight<W>, CutError> {
    Ok(solve(g, s, t)?.0.w)
}

fn solve<W: Scalar>(g: &WeightedGraph<W>, s: usize, t: usize) -> Result<(Key<W>, Vec<bool>), CutError> {
    let n = g.node_count();
    for v in [s, t] {
        if v >= n {
            return Err(CutError::UnknownNode(v));
        }
    }
    if s == t {
        return Err(CutError::SameTerminals);
    }
    let cap = g.merged_keys();

    if reaches(n, s, t, |u, v| cap[u][v].is_infinite()) {
        let mut side = vec![false; n];
        side[s] = true;
        return Ok((Key { w: Weight::Infinite, n: 0 }, side));
    }

    let mut flow = vec![vec![Key::<W>::zero(); n]; n];
    let residual = |flow: &Vec<Vec<Key<W>>>, u: usize, v: usize| cap[u][v].sub(flow[u][v]);
    loop {
        let parent = bfs(n, s, |u, v| residual(&flow, u, v).is_positive());
        if parent[t].is_none() {
            break;
        }
        let mut bottleneck: Option<Key<W>> = None;
        let mut v = t;
        while v != s {
            let u = parent[v].expect("on path");
            let r = residual(&flow, u, v);
            if bottleneck.is_none_or(|b| r.cmp(&b).is_lt()) {
                bottleneck = Some(r);
            }
            v = u;
        }
        let b = bottleneck.expect("path has an arc");
        debug_assert!(!b.is_infinite());
        let mut v = t;
        while v != s {
            let u = parent[v].expect("on path");
            flow[u][v] = flow[u][v].add(b);
            flow[v][u] = flow[v][u].sub(b);
            v = u;
        }
    }

    let parent = bfs(n, s, |u, v| residual(&flow, u, v).is_positive());
    let side: Vec<bool> = parent.iter().map(Option::is_some).collect();
    let value = (0..n).fold(Key::zero(), |acc, v| acc.add(flow[s][v]));
    Ok((value, side))
}

/// BFS parents from `s` over arcs accepted by `open`; `parent[s] = Some(s)`.
fn bfs(n: usize, s: usize, open: impl Fn(usize, usize) -> bool) -> Vec<Option<usize>> {
    let mut parent = vec![None; n];
    parent[s] = Some(s);
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if parent[v].is_none() && open(u, v) {
                parent[v] = Some(u);
                queue.push_back(v);
            }
        }
    }
    parent
}

fn reaches(n: usize, s: usize, t: usize, open: impl Fn(usize, usize) -> bool) -> bool {
    bfs(n, s, open)[t].is_some()
}
