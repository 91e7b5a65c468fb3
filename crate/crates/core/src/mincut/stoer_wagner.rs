use super::{CutError, CutResult, Key, WeightedGraph};
use crate::scalar::Scalar;

/// Global minimum weight cut (Stoer–Wagner, dense O(n³)).
///
/// Ties between phases keep the earliest; ties inside a phase pick the
/// lowest node index.
pub fn global_min_cut<W: Scalar>(g: &WeightedGraph<W>) -> Result<CutResult<W>, CutError> {
    let n = g.node_count();
    if n < 2 {
        return Err(CutError::TooFewNodes);
    }
    let mut adj = g.merged_keys();
    let mut groups: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    let mut active: Vec<usize> = (0..n).collect();
    let mut best: Option<(Key<W>, Vec<usize>)> = None;

    while active.len() > 1 {
        let k = active.len();
        let mut added = vec![false; k];
        let mut conn = vec![Key::<W>::zero(); k];
        let mut order = Vec::with_capacity(k);
        for _ in 0..k {
            let mut pick: Option<usize> = None;
            for i in 0..k {
                if !added[i] && pick.is_none_or(|p| conn[i].cmp(&conn[p]).is_gt()) {
                    pick = Some(i);
                }
            }
            let i = pick.expect("unadded vertex remains");
            added[i] = true;
            order.push(i);
            for j in 0..k {
                if !added[j] {
                    conn[j] = conn[j].add(adj[active[i]][active[j]]);
                }
            }
        }
        let (prev, last) = (order[k - 2], order[k - 1]);
        let cut_of_phase = conn[last];
        if best.as_ref().is_none_or(|(w, _)| cut_of_phase.cmp(w).is_lt()) {
            best = Some((cut_of_phase, groups[active[last]].clone()));
        }

        let (p, l) = (active[prev], active[last]);
        let moved = std::mem::take(&mut groups[l]);
        groups[p].extend(moved);
        for &v in &active {
            if v != p && v != l {
                let merged = adj[p][v].add(adj[l][v]);
                adj[p][v] = merged;
                adj[v][p] = merged;
            }
        }
        active.remove(last);
    }

    let (_, members) = best.expect("at least one phase ran");
    let mut side = vec![false; n];
    for v in members {
        side[v] = true;
    }
    Ok(g.cut_from_side(&side))
}
