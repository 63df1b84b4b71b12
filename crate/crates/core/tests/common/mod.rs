#![allow(dead_code)]

use hrushovski::graph::FinGraph;
use rand::Rng;

/// `2 + ⌈n/2⌉` for `n >= 2`, `f(1) = 2`, `f(0) = 0`.
pub fn p0_f(n: usize) -> i64 {
    match n {
        0 => 0,
        1 => 2,
        _ => 2 + n.div_ceil(2) as i64,
    }
}

/// Whether `g` has a cycle of length exactly `k` (as a subgraph), by
/// extending simple paths from each start vertex.
pub fn has_cycle(g: &FinGraph, k: usize) -> bool {
    fn extend(g: &FinGraph, path: &mut Vec<usize>, k: usize) -> bool {
        let last = *path.last().unwrap();
        if path.len() == k {
            return g.has_edge(last.min(path[0]), last.max(path[0]));
        }
        for v in 0..g.order() {
            if v > path[0] && !path.contains(&v) && g.has_edge(last.min(v), last.max(v)) {
                path.push(v);
                if extend(g, path, k) {
                    return true;
                }
                path.pop();
            }
        }
        false
    }
    (0..g.order()).any(|s| extend(g, &mut vec![s], k))
}

/// Membership in P0 (or P0 with a different forbidden list) by sweeping
/// every vertex subset.
pub fn brute_member(g: &FinGraph, forbidden: &[usize]) -> bool {
    if forbidden.iter().any(|&k| has_cycle(g, k)) {
        return false;
    }
    let n = g.order();
    assert!(n <= 16, "oracle is exponential");
    let edges = g.edges();
    (1u32..1 << n).all(|s| {
        let e = edges.iter().filter(|&&(u, v)| s >> u & 1 == 1 && s >> v & 1 == 1).count() as i64;
        let m = s.count_ones() as usize;
        2 * m as i64 - e >= p0_f(m)
    })
}

/// Uniform random graph on `n` vertices with edge probability `num/den`.
pub fn random_graph(rng: &mut impl Rng, n: usize, num: u32, den: u32) -> FinGraph {
    let mut g = FinGraph::empty(n).unwrap();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_ratio(num, den) {
                g.add_edge(u, v).unwrap();
            }
        }
    }
    g
}

/// BFS distances, written independently of the library.
pub fn distances(g: &FinGraph, s: usize) -> Vec<Option<usize>> {
    let mut d = vec![None; g.order()];
    d[s] = Some(0);
    let mut frontier = vec![s];
    let mut k = 0;
    while !frontier.is_empty() {
        k += 1;
        let mut next = Vec::new();
        for &u in &frontier {
            for v in 0..g.order() {
                if d[v].is_none() && u != v && g.has_edge(u.min(v), u.max(v)) {
                    d[v] = Some(k);
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    d
}
