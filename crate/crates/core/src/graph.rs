//! Finite simple graphs on dense vertex identifiers `0..n`.
//!
//! Vertex sets are 128-bit masks, so a [`FinGraph`] holds at most
//! [`MAX_VERTICES`] vertices. That is far beyond what the exhaustive
//! searches elsewhere in the crate can handle anyway.

use std::collections::VecDeque;
use std::fmt;

use crate::error::{invalid, parse_err, Result};

pub const MAX_VERTICES: usize = 128;

/// A subset of the vertices of some host graph.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct VertexSet(u128);

impl VertexSet {
    pub const EMPTY: VertexSet = VertexSet(0);

    pub fn from_bits(bits: u128) -> Self {
        VertexSet(bits)
    }

    pub fn bits(self) -> u128 {
        self.0
    }

    pub fn singleton(v: usize) -> Self {
        VertexSet(1u128 << v)
    }

    /// `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        if n >= 128 {
            VertexSet(u128::MAX)
        } else {
            VertexSet((1u128 << n) - 1)
        }
    }

    pub fn contains(self, v: usize) -> bool {
        v < 128 && self.0 >> v & 1 == 1
    }

    pub fn insert(&mut self, v: usize) {
        self.0 |= 1u128 << v;
    }

    pub fn remove(&mut self, v: usize) {
        self.0 &= !(1u128 << v);
    }

    pub fn with(mut self, v: usize) -> Self {
        self.insert(v);
        self
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: VertexSet) -> Self {
        VertexSet(self.0 | other.0)
    }

    pub fn intersection(self, other: VertexSet) -> Self {
        VertexSet(self.0 & other.0)
    }

    pub fn difference(self, other: VertexSet) -> Self {
        VertexSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: VertexSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn min(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Members in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(v)
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl FromIterator<usize> for VertexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = VertexSet::EMPTY;
        for v in iter {
            s.insert(v);
        }
        s
    }
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

/// A length that may be unbounded: path lengths between components, girth of forests.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Length {
    Finite(usize),
    Infinite,
}

impl Length {
    pub fn finite(self) -> Option<usize> {
        match self {
            Length::Finite(k) => Some(k),
            Length::Infinite => None,
        }
    }
}

impl fmt::Display for Length {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Length::Finite(k) => write!(f, "{k}"),
            Length::Infinite => write!(f, "inf"),
        }
    }
}

/// A finite simple graph with vertices `0..order()`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct FinGraph {
    adj: Vec<u128>,
}

impl FinGraph {
    /// The edgeless graph on `n` vertices.
    pub fn empty(n: usize) -> Result<Self> {
        if n > MAX_VERTICES {
            return invalid(format!("{n} vertices exceeds the limit of {MAX_VERTICES}"));
        }
        Ok(FinGraph { adj: vec![0; n] })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = FinGraph::empty(n)?;
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn cycle(k: usize) -> Self {
        assert!((3..=MAX_VERTICES).contains(&k), "cycle length out of range");
        let edges: Vec<_> = (0..k).map(|i| (i, (i + 1) % k)).collect();
        FinGraph::from_edges(k, &edges).unwrap()
    }

    /// The path on `n` vertices `0 - 1 - .. - n-1`.
    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        FinGraph::from_edges(n, &edges).unwrap()
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        FinGraph::from_edges(n, &edges).unwrap()
    }

    pub fn petersen() -> Self {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        FinGraph::from_edges(10, &edges).unwrap()
    }

    pub fn order(&self) -> usize {
        self.adj.len()
    }

    pub fn vertex_set(&self) -> VertexSet {
        VertexSet::full(self.order())
    }

    pub fn add_vertex(&mut self) -> Result<usize> {
        if self.order() >= MAX_VERTICES {
            return invalid(format!("graph already has {MAX_VERTICES} vertices"));
        }
        self.adj.push(0);
        Ok(self.adj.len() - 1)
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return invalid(format!("self-loop at vertex {u}"));
        }
        self.adj[u] |= 1u128 << v;
        self.adj[v] |= 1u128 << u;
        Ok(())
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.order() && self.adj[u] >> v & 1 == 1
    }

    pub fn neighbors(&self, v: usize) -> VertexSet {
        VertexSet(self.adj[v])
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count_ones() as usize
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.order() {
            Ok(())
        } else {
            invalid(format!("unknown vertex {v} (graph has {} vertices)", self.order()))
        }
    }

    pub fn check_set(&self, s: VertexSet) -> Result<()> {
        if s.is_subset(self.vertex_set()) {
            Ok(())
        } else {
            invalid(format!("{s} is not a subset of the {} host vertices", self.order()))
        }
    }

    /// Edges `(u, v)` with `u < v`, lexicographically sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.order() {
            for v in VertexSet(self.adj[u] >> u >> 1 << u << 1).iter() {
                out.push((u, v));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.count_ones() as usize).sum::<usize>() / 2
    }

    /// Number of edges with both ends in `s`.
    pub fn edges_within(&self, s: VertexSet) -> usize {
        s.iter()
            .map(|v| (self.adj[v] & s.0).count_ones() as usize)
            .sum::<usize>()
            / 2
    }

    /// Number of edges from `v` into `s`.
    pub fn edges_into(&self, v: usize, s: VertexSet) -> usize {
        (self.adj[v] & s.0).count_ones() as usize
    }

    /// The induced subgraph on `s`, renumbered in ascending order.
    /// Returns the subgraph and the map from new to old identifiers.
    pub fn induced(&self, s: VertexSet) -> (FinGraph, Vec<usize>) {
        let old: Vec<usize> = s.iter().collect();
        let mut g = FinGraph::empty(old.len()).unwrap();
        for (i, &u) in old.iter().enumerate() {
            for (j, &v) in old.iter().enumerate().skip(i + 1) {
                if self.has_edge(u, v) {
                    g.add_edge(i, j).unwrap();
                }
            }
        }
        (g, old)
    }

    /// The graph with vertex `v` renamed to `perm[v]`; `perm` must be a permutation.
    pub fn relabel(&self, perm: &[usize]) -> Result<FinGraph> {
        let n = self.order();
        let mut seen = VertexSet::EMPTY;
        if perm.len() != n {
            return invalid("relabeling has the wrong length");
        }
        for &p in perm {
            if p >= n || seen.contains(p) {
                return invalid("relabeling is not a permutation");
            }
            seen.insert(p);
        }
        let edges: Vec<_> = self.edges().into_iter().map(|(u, v)| (perm[u], perm[v])).collect();
        FinGraph::from_edges(n, &edges)
    }

    /// Disjoint union; vertices of `other` are shifted by `self.order()`.
    pub fn disjoint_union(&self, other: &FinGraph) -> Result<FinGraph> {
        let shift = self.order();
        let mut g = FinGraph::empty(shift + other.order())?;
        for (u, v) in self.edges() {
            g.add_edge(u, v)?;
        }
        for (u, v) in other.edges() {
            g.add_edge(u + shift, v + shift)?;
        }
        Ok(g)
    }

    /// BFS distances from `source`; `None` marks unreachable vertices.
    pub fn distances_from(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.order()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            for w in self.neighbors(u).iter() {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn distance(&self, u: usize, v: usize) -> Result<Length> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        Ok(match self.distances_from(u)[v] {
            Some(d) => Length::Finite(d),
            None => Length::Infinite,
        })
    }

    /// Length of a shortest cycle.
    pub fn girth(&self) -> Length {
        let n = self.order();
        let mut best: Option<usize> = None;
        for root in 0..n {
            let mut dist = vec![usize::MAX; n];
            let mut parent = vec![usize::MAX; n];
            dist[root] = 0;
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                if let Some(b) = best {
                    if 2 * dist[u] + 1 >= b {
                        break;
                    }
                }
                for w in self.neighbors(u).iter() {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[u] + 1;
                        parent[w] = u;
                        queue.push_back(w);
                    } else if parent[u] != w {
                        let len = dist[u] + dist[w] + 1;
                        best = Some(best.map_or(len, |b| b.min(len)));
                    }
                }
            }
        }
        best.map_or(Length::Infinite, Length::Finite)
    }

    pub fn is_connected(&self) -> bool {
        self.order() == 0 || self.distances_from(0).iter().all(Option::is_some)
    }

    /// Canonical text form: `graph <n>` then sorted `e <u> <v>` lines.
    pub fn serialize(&self) -> String {
        let mut out = format!("graph {}\n", self.order());
        for (u, v) in self.edges() {
            out.push_str(&format!("e {u} {v}\n"));
        }
        out
    }

    /// Parses the graph file format. `#` starts a comment, blank lines are ignored.
    /// Anything after the edge lines (such as a `log` section) is left to the caller:
    /// parsing stops at the first line that is neither blank, a comment, nor an edge.
    pub fn parse(text: &str) -> Result<FinGraph> {
        Self::parse_prefix(text).map(|(g, _)| g)
    }

    /// Like [`FinGraph::parse`], also returning the 1-based line where parsing stopped.
    pub fn parse_prefix(text: &str) -> Result<(FinGraph, usize)> {
        let mut graph: Option<FinGraph> = None;
        let lines: Vec<&str> = text.lines().collect();
        for (idx, raw) in lines.iter().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match (fields[0], &mut graph) {
                ("graph", None) => {
                    let n = parse_count(fields.get(1), lineno)?;
                    if fields.len() != 2 {
                        return parse_err(lineno, "expected `graph <n>`");
                    }
                    graph = Some(FinGraph::empty(n).or_else(|e| parse_err(lineno, e.to_string()))?);
                }
                ("graph", Some(_)) => return parse_err(lineno, "duplicate `graph` header"),
                ("e", Some(g)) => {
                    if fields.len() != 3 {
                        return parse_err(lineno, "expected `e <u> <v>`");
                    }
                    let u = parse_count(fields.get(1), lineno)?;
                    let v = parse_count(fields.get(2), lineno)?;
                    if u >= v {
                        return parse_err(lineno, "edge endpoints must satisfy u < v");
                    }
                    if g.has_edge(u, v) {
                        return parse_err(lineno, format!("duplicate edge {u} {v}"));
                    }
                    g.add_edge(u, v).or_else(|e| parse_err(lineno, e.to_string()))?;
                }
                ("e", None) => return parse_err(lineno, "edge before `graph` header"),
                (_, Some(g)) => return Ok((g.clone(), lineno)),
                (other, None) => return parse_err(lineno, format!("unexpected `{other}`")),
            }
        }
        match graph {
            Some(g) => Ok((g, lines.len() + 1)),
            None => parse_err(lines.len().max(1), "missing `graph <n>` header"),
        }
    }
}

fn parse_count(field: Option<&&str>, line: usize) -> Result<usize> {
    match field.and_then(|s| s.parse::<usize>().ok()) {
        Some(n) => Ok(n),
        None => parse_err(line, "expected a non-negative integer"),
    }
}

impl fmt::Debug for FinGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FinGraph({}; {:?})", self.order(), self.edges())
    }
}

impl fmt::Display for FinGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}
