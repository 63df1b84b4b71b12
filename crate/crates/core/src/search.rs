//! Backtracking subgraph search.

use std::ops::ControlFlow;

use crate::error::{invalid, Result};
use crate::graph::{FinGraph, VertexSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EmbeddingKind {
    /// Injective and edge-preserving (subgraph, not necessarily induced).
    Mono,
    /// Additionally preserves non-edges (induced subgraph).
    Strong,
}

/// An injective map from pattern vertices to host vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Embedding {
    pub map: Vec<usize>,
    pub kind: EmbeddingKind,
}

impl Embedding {
    /// Re-checks the map against both graphs.
    pub fn verify(&self, pattern: &FinGraph, host: &FinGraph) -> bool {
        if self.map.len() != pattern.order() {
            return false;
        }
        let image: VertexSet = self.map.iter().copied().collect();
        if image.len() != self.map.len() || !image.is_subset(host.vertex_set()) {
            return false;
        }
        for u in 0..pattern.order() {
            for v in u + 1..pattern.order() {
                let e = host.has_edge(self.map[u], self.map[v]);
                if pattern.has_edge(u, v) && !e {
                    return false;
                }
                if self.kind == EmbeddingKind::Strong && !pattern.has_edge(u, v) && e {
                    return false;
                }
            }
        }
        true
    }

    pub fn image(&self) -> VertexSet {
        self.map.iter().copied().collect()
    }
}

impl std::fmt::Display for Embedding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.map.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{i}->{v}")?;
        }
        write!(f, "]")
    }
}

/// Finds an embedding of `pattern` into `host` extending `partial`
/// (pairs `(pattern vertex, host vertex)`). The search is exhaustive.
pub fn find_embedding(
    pattern: &FinGraph,
    host: &FinGraph,
    partial: &[(usize, usize)],
    kind: EmbeddingKind,
) -> Result<Option<Embedding>> {
    let mut found = None;
    for_each_embedding(pattern, host, partial, kind, |map| {
        found = Some(Embedding {
            map: map.to_vec(),
            kind,
        });
        ControlFlow::Break(())
    })?;
    Ok(found)
}

/// Counts embeddings, stopping once `cap` have been seen.
pub fn count_embeddings(
    pattern: &FinGraph,
    host: &FinGraph,
    partial: &[(usize, usize)],
    kind: EmbeddingKind,
    cap: usize,
) -> Result<usize> {
    let mut count = 0;
    for_each_embedding(pattern, host, partial, kind, |_| {
        count += 1;
        if count >= cap {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(count)
}

/// Visits every embedding extending `partial` in a deterministic order.
pub fn for_each_embedding<F>(
    pattern: &FinGraph,
    host: &FinGraph,
    partial: &[(usize, usize)],
    kind: EmbeddingKind,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    let n = pattern.order();
    let mut map = vec![usize::MAX; n];
    let mut used = VertexSet::EMPTY;
    for &(p, h) in partial {
        pattern.check_vertex(p)?;
        host.check_vertex(h)?;
        if map[p] != usize::MAX {
            return invalid(format!("pattern vertex {p} mapped twice"));
        }
        if used.contains(h) {
            return invalid(format!("host vertex {h} used twice"));
        }
        map[p] = h;
        used.insert(h);
    }
    for &(p, _) in partial {
        for &(q, _) in partial {
            if p < q && !compatible(pattern, host, kind, p, q, &map) {
                return invalid(format!("partial map does not preserve the pair {p} {q}"));
            }
        }
    }
    let order = search_order(pattern, &map);
    let mut search = Search {
        pattern,
        host,
        kind,
        order: &order,
        map,
        used,
    };
    let _ = search.extend(0, &mut visit);
    Ok(())
}

fn compatible(
    pattern: &FinGraph,
    host: &FinGraph,
    kind: EmbeddingKind,
    p: usize,
    q: usize,
    map: &[usize],
) -> bool {
    let e = host.has_edge(map[p], map[q]);
    if pattern.has_edge(p, q) {
        e
    } else {
        kind == EmbeddingKind::Mono || !e
    }
}

/// Unmapped vertices, each next one chosen to have as many already-placed
/// neighbours as possible (ties: higher degree, then lower id).
fn search_order(pattern: &FinGraph, map: &[usize]) -> Vec<usize> {
    let n = pattern.order();
    let mut placed: VertexSet = (0..n).filter(|&v| map[v] != usize::MAX).collect();
    let mut order = Vec::new();
    while placed.len() < n {
        let next = (0..n)
            .filter(|&v| !placed.contains(v))
            .max_by_key(|&v| {
                (
                    pattern.edges_into(v, placed),
                    pattern.degree(v),
                    std::cmp::Reverse(v),
                )
            })
            .unwrap();
        placed.insert(next);
        order.push(next);
    }
    order
}

struct Search<'a> {
    pattern: &'a FinGraph,
    host: &'a FinGraph,
    kind: EmbeddingKind,
    order: &'a [usize],
    map: Vec<usize>,
    used: VertexSet,
}

impl Search<'_> {
    fn extend<F>(&mut self, depth: usize, visit: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&[usize]) -> ControlFlow<()>,
    {
        if depth == self.order.len() {
            return visit(&self.map);
        }
        let p = self.order[depth];
        let anchor = self
            .pattern
            .neighbors(p)
            .iter()
            .find(|&q| self.map[q] != usize::MAX);
        let candidates = match anchor {
            Some(q) => self.host.neighbors(self.map[q]),
            None => self.host.vertex_set(),
        }
        .difference(self.used);
        let need = self.pattern.degree(p);
        for h in candidates.iter() {
            if self.host.degree(h) < need {
                continue;
            }
            self.map[p] = h;
            let ok = (0..self.pattern.order()).all(|q| {
                q == p
                    || self.map[q] == usize::MAX
                    || compatible(self.pattern, self.host, self.kind, p, q, &self.map)
            });
            if ok {
                self.used.insert(h);
                let flow = self.extend(depth + 1, visit);
                self.used.remove(h);
                if flow.is_break() {
                    self.map[p] = usize::MAX;
                    return flow;
                }
            }
            self.map[p] = usize::MAX;
        }
        ControlFlow::Continue(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_not_in_hexagon() {
        let r = find_embedding(&FinGraph::cycle(3), &FinGraph::cycle(6), &[], EmbeddingKind::Mono);
        assert_eq!(r.unwrap(), None);
    }

    #[test]
    fn single_edge_found() {
        let host = FinGraph::from_edges(4, &[(2, 3)]).unwrap();
        let e = find_embedding(&FinGraph::path(2), &host, &[], EmbeddingKind::Strong)
            .unwrap()
            .unwrap();
        assert!(e.verify(&FinGraph::path(2), &host));
    }

    #[test]
    fn pentagon_in_petersen() {
        let pat = FinGraph::cycle(5);
        let host = FinGraph::petersen();
        let e = find_embedding(&pat, &host, &[], EmbeddingKind::Mono).unwrap().unwrap();
        assert!(e.verify(&pat, &host));
        // Petersen has 12 pentagons, each traversed 10 ways.
        assert_eq!(count_embeddings(&pat, &host, &[], EmbeddingKind::Mono, 1000).unwrap(), 120);
    }

    #[test]
    fn partial_maps() {
        let host = FinGraph::path(3);
        let pat = FinGraph::path(2);
        let e = find_embedding(&pat, &host, &[(0, 2)], EmbeddingKind::Mono).unwrap().unwrap();
        assert_eq!(e.map, vec![2, 1]);
        assert!(find_embedding(&pat, &host, &[(0, 0), (1, 2)], EmbeddingKind::Mono).is_err());
        assert!(find_embedding(&pat, &host, &[(0, 7)], EmbeddingKind::Mono).is_err());
    }

    #[test]
    fn strong_respects_non_edges() {
        let host = FinGraph::complete(3);
        let pat = FinGraph::path(3);
        assert!(find_embedding(&pat, &host, &[], EmbeddingKind::Mono).unwrap().is_some());
        assert!(find_embedding(&pat, &host, &[], EmbeddingKind::Strong).unwrap().is_none());
    }
}
