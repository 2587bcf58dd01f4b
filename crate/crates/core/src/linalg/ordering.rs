//! Nested-dissection ordering on the graph of `A + Aᵀ`.
//!
//! Each piece is split at the median of a breadth-first order from a pseudo-peripheral
//! node and the separator is a minimum vertex cover of the edges crossing the split.
//! Small pieces are ordered by minimum degree. Very dense rows (for instance a global mean constraint)
//! are removed from the graph and ordered last.

use std::collections::VecDeque;

use super::sparse::CscMatrix;

const LEAF_SIZE: usize = 64;

struct Graph {
    adj: Vec<Vec<usize>>,
}

/// Returns a column order `q` for factorising `a`: step `k` eliminates column `q[k]`.
pub fn nested_dissection(a: &CscMatrix) -> Vec<usize> {
    let n = a.ncols();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 0..n {
        for (i, _) in a.col(j) {
            if i != j && i < n {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    let dense_limit = 16usize.max((10.0 * (n as f64).sqrt()) as usize);
    let dense: Vec<bool> = adj.iter().map(|l| l.len() > dense_limit).collect();
    for l in adj.iter_mut() {
        l.retain(|&v| !dense[v]);
    }
    let g = Graph { adj };

    let mut order = Vec::with_capacity(n);
    let mut active = vec![false; n];
    let nodes: Vec<usize> = (0..n).filter(|&v| !dense[v]).collect();
    for &v in &nodes {
        active[v] = true;
    }
    let mut level = vec![usize::MAX; n];
    dissect(&g, nodes, &mut active, &mut level, &mut order);
    order.extend((0..n).filter(|&v| dense[v]));
    delay_zero_diagonal(a, &g, &dense, order)
}

/// Reorders nodes with a structurally zero diagonal (multipliers) so that each one comes
/// after a distinct partner it is coupled to. Partners are found by matching, first
/// among nodes with a diagonal and then among already placed multipliers. With distinct
/// partners every leading block of the reordered matrix is structurally nonsingular, so
/// the elimination order can be followed with diagonal pivots.
fn delay_zero_diagonal(a: &CscMatrix, g: &Graph, dense: &[bool], order: Vec<usize>) -> Vec<usize> {
    let n = order.len();
    let mut pos = vec![0usize; n];
    for (k, &v) in order.iter().enumerate() {
        pos[v] = k;
    }
    let has_diag: Vec<bool> = (0..n).map(|j| a.col(j).any(|(i, x)| i == j && x != 0.0)).collect();
    // (primary position, stage, own position)
    let mut key: Vec<(usize, usize, usize)> = (0..n).map(|v| (pos[v], 0, pos[v])).collect();
    let mut pending: Vec<usize> = (0..n).filter(|&v| !has_diag[v] && !dense[v]).collect();
    pending.sort_unstable_by_key(|&v| pos[v]);
    let mut resolved: Vec<bool> = has_diag.clone();
    let mut taken = vec![false; n];
    let mut stage = 1;
    while !pending.is_empty() {
        let candidates = |v: usize| -> Vec<usize> {
            let mut c: Vec<usize> = g.adj[v].iter().copied().filter(|&w| resolved[w]).collect();
            c.sort_unstable_by_key(|&w| key[w]);
            c
        };
        let lists: Vec<Vec<usize>> = pending.iter().map(|&v| candidates(v)).collect();
        let mut owner: std::collections::HashMap<usize, usize> = Default::default();
        for i in 0..pending.len() {
            let mut seen = std::collections::HashSet::new();
            match_into(i, &lists, &taken, &mut seen, &mut owner);
        }
        if owner.is_empty() {
            break;
        }
        let mut partner: Vec<Option<usize>> = vec![None; pending.len()];
        for (&w, &i) in &owner {
            partner[i] = Some(w);
        }
        let mut rest = Vec::new();
        for (i, &v) in pending.iter().enumerate() {
            match partner[i] {
                Some(w) => {
                    taken[w] = true;
                    key[v] = (key[w].0.max(pos[v]), stage, pos[v]);
                }
                None => rest.push(v),
            }
        }
        for (i, &v) in pending.iter().enumerate() {
            if partner[i].is_some() {
                resolved[v] = true;
            }
        }
        pending = rest;
        stage += 1;
    }
    let mut out: Vec<usize> = (0..n).collect();
    out.sort_unstable_by_key(|&v| key[v]);
    out
}

fn match_into(
    i: usize,
    lists: &[Vec<usize>],
    taken: &[bool],
    seen: &mut std::collections::HashSet<usize>,
    owner: &mut std::collections::HashMap<usize, usize>,
) -> bool {
    for &w in &lists[i] {
        if taken[w] || !seen.insert(w) {
            continue;
        }
        let free = match owner.get(&w) {
            None => true,
            Some(&j) => match_into(j, lists, taken, seen, owner),
        };
        if free {
            owner.insert(w, i);
            return true;
        }
    }
    false
}

/// Breadth-first levels from `root` over active nodes. Returns the visit order and the
/// start index of every level.
fn bfs(g: &Graph, root: usize, active: &[bool], level: &mut [usize]) -> (Vec<usize>, Vec<usize>) {
    let mut seen = vec![root];
    let mut starts = vec![0];
    level[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &w in &g.adj[v] {
            if active[w] && level[w] == usize::MAX {
                level[w] = level[v] + 1;
                if level[w] == starts.len() {
                    starts.push(seen.len());
                }
                seen.push(w);
                queue.push_back(w);
            }
        }
    }
    (seen, starts)
}

fn reset(level: &mut [usize], nodes: &[usize]) {
    for &v in nodes {
        level[v] = usize::MAX;
    }
}

fn dissect(g: &Graph, nodes: Vec<usize>, active: &mut [bool], level: &mut [usize], order: &mut Vec<usize>) {
    if nodes.is_empty() {
        return;
    }
    // Split off connected components first.
    let (comp, _) = bfs(g, nodes[0], active, level);
    if comp.len() < nodes.len() {
        let rest: Vec<usize> = nodes.iter().copied().filter(|&v| level[v] == usize::MAX).collect();
        reset(level, &comp);
        dissect(g, comp, active, level, order);
        dissect(g, rest, active, level, order);
        return;
    }
    reset(level, &comp);

    if nodes.len() <= LEAF_SIZE {
        minimum_degree_leaf(g, &nodes, active, order);
        return;
    }

    let root = pseudo_peripheral(g, nodes[0], active, level);
    let (seen, _) = bfs(g, root, active, level);
    reset(level, &seen);
    // Split the breadth-first order at the median, then shrink the boundary between
    // the halves to a minimum vertex cover of the crossing edges.
    let half = seen.len() / 2;
    for (i, &v) in seen.iter().enumerate() {
        level[v] = usize::from(i >= half);
    }
    let sep = crossing_cover(g, &seen[..half], active, level);
    reset(level, &seen);
    for &v in &sep {
        active[v] = false;
    }
    let first: Vec<usize> = seen[..half].iter().copied().filter(|&v| active[v]).collect();
    let second: Vec<usize> = seen[half..].iter().copied().filter(|&v| active[v]).collect();
    if first.is_empty() || second.is_empty() {
        for &v in &seen {
            active[v] = false;
        }
        minimum_degree_leaf_all(g, &seen, order);
        return;
    }
    dissect(g, first, active, level, order);
    dissect(g, second, active, level, order);
    order.extend(sep);
}

/// Minimum vertex cover of the edges between side 0 and side 1 (marked in `side`),
/// found from a maximum matching.
fn crossing_cover(g: &Graph, left: &[usize], active: &[bool], side: &[usize]) -> Vec<usize> {
    let crosses = |v: usize| g.adj[v].iter().filter(move |&&w| active[w] && side[w] == 1);
    let boundary: Vec<usize> = left.iter().copied().filter(|&v| crosses(v).next().is_some()).collect();
    let mut mate_of_right: std::collections::HashMap<usize, usize> = Default::default();
    let mut mate_of_left: std::collections::HashMap<usize, usize> = Default::default();
    for &v in &boundary {
        let mut visited = std::collections::HashSet::new();
        augment(v, &crosses, &mut visited, &mut mate_of_left, &mut mate_of_right);
    }
    // Alternating search from unmatched left vertices.
    let mut reached_left: std::collections::HashSet<usize> = Default::default();
    let mut reached_right: std::collections::HashSet<usize> = Default::default();
    let mut stack: Vec<usize> = boundary
        .iter()
        .copied()
        .filter(|v| !mate_of_left.contains_key(v))
        .collect();
    reached_left.extend(stack.iter().copied());
    while let Some(v) = stack.pop() {
        for &w in crosses(v) {
            if reached_right.insert(w) {
                if let Some(&u) = mate_of_right.get(&w) {
                    if reached_left.insert(u) {
                        stack.push(u);
                    }
                }
            }
        }
    }
    let mut cover: Vec<usize> = boundary.iter().copied().filter(|v| !reached_left.contains(v)).collect();
    let mut right: Vec<usize> = reached_right.into_iter().collect();
    right.sort_unstable();
    cover.extend(right);
    cover
}

fn augment<'a, I: Iterator<Item = &'a usize>>(
    v: usize,
    crosses: &impl Fn(usize) -> I,
    visited: &mut std::collections::HashSet<usize>,
    mate_of_left: &mut std::collections::HashMap<usize, usize>,
    mate_of_right: &mut std::collections::HashMap<usize, usize>,
) -> bool {
    for &w in crosses(v) {
        if !visited.insert(w) {
            continue;
        }
        let free = match mate_of_right.get(&w) {
            None => true,
            Some(&u) => augment(u, crosses, visited, mate_of_left, mate_of_right),
        };
        if free {
            mate_of_right.insert(w, v);
            mate_of_left.insert(v, w);
            return true;
        }
    }
    false
}

fn minimum_degree_leaf(g: &Graph, nodes: &[usize], active: &mut [bool], order: &mut Vec<usize>) {
    for &v in nodes {
        active[v] = false;
    }
    minimum_degree_leaf_all(g, nodes, order);
}

/// Explicit minimum-degree elimination of the subgraph induced by `nodes`.
fn minimum_degree_leaf_all(g: &Graph, nodes: &[usize], order: &mut Vec<usize>) {
    let local: std::collections::HashMap<usize, usize> = nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut adj: Vec<std::collections::BTreeSet<usize>> = nodes
        .iter()
        .map(|&v| g.adj[v].iter().filter_map(|w| local.get(w).copied()).collect())
        .collect();
    let mut alive = vec![true; nodes.len()];
    for _ in 0..nodes.len() {
        let p = (0..nodes.len())
            .filter(|&i| alive[i])
            .min_by_key(|&i| (adj[i].len(), i))
            .unwrap();
        alive[p] = false;
        let nbrs: Vec<usize> = std::mem::take(&mut adj[p]).into_iter().collect();
        for &a in &nbrs {
            adj[a].remove(&p);
            for &b in &nbrs {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
        order.push(nodes[p]);
    }
}

fn pseudo_peripheral(g: &Graph, start: usize, active: &[bool], level: &mut [usize]) -> usize {
    let mut root = start;
    let mut ecc = 0;
    for _ in 0..8 {
        let (seen, starts) = bfs(g, root, active, level);
        reset(level, &seen);
        let depth = starts.len();
        if depth <= ecc {
            break;
        }
        ecc = depth;
        // Lowest-degree node of the last level.
        let last = &seen[*starts.last().unwrap()..];
        let next = *last
            .iter()
            .min_by_key(|&&v| g.adj[v].iter().filter(|&&w| active[w]).count())
            .unwrap();
        if next == root {
            break;
        }
        root = next;
    }
    root
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::TripletMatrix;

    fn grid_laplacian(m: usize) -> CscMatrix {
        let n = m * m;
        let mut t = TripletMatrix::new(n, n);
        for i in 0..m {
            for j in 0..m {
                let v = i * m + j;
                t.push(v, v, 4.0);
                if i + 1 < m {
                    t.push(v, v + m, -1.0);
                    t.push(v + m, v, -1.0);
                }
                if j + 1 < m {
                    t.push(v, v + 1, -1.0);
                    t.push(v + 1, v, -1.0);
                }
            }
        }
        t.to_csc()
    }

    fn is_permutation(p: &[usize], n: usize) -> bool {
        let mut seen = vec![false; n];
        p.len() == n && p.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
    }

    #[test]
    fn permutation_and_fill() {
        use crate::linalg::SparseLu;
        let a = grid_laplacian(40);
        let q = nested_dissection(&a);
        assert!(is_permutation(&q, a.ncols()));
        let natural = SparseLu::factor(&a, None, 0.1).unwrap().nnz();
        let nd = SparseLu::factor(&a, Some(&q), 0.1).unwrap().nnz();
        assert!(nd < natural, "nd {nd} vs natural {natural}");
    }

    #[test]
    fn dense_row_goes_last_and_components_are_covered() {
        let mut t = TripletMatrix::new(200, 200);
        for i in 0..199 {
            t.push(i, i, 1.0);
            t.push(i, 199, 1.0);
            t.push(199, i, 1.0);
            if i % 50 != 49 {
                t.push(i, i + 1, 1.0);
            }
        }
        let a = t.to_csc();
        let q = nested_dissection(&a);
        assert!(is_permutation(&q, 200));
        assert_eq!(*q.last().unwrap(), 199);
    }
}
