//! Free amalgamation, extension enumeration and the generic builder.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::acl::{acl_approx, closure_type_key};
use crate::class::{ClassSpec, Violation};
use crate::error::{invalid, parse_err, Error, Result};
use crate::graph::{FinGraph, VertexSet};
use crate::search::{find_embedding, EmbeddingKind};
use crate::symmetry::canonical_form;

/// Largest base the builder amalgamates over.
pub const BUILD_BASE_SIZE: usize = 2;
/// Largest number of vertices one build step adds.
pub const BUILD_EXTENSION_SIZE: usize = 2;
/// Extensions with more candidate edges than this are not enumerated.
const EXTENSION_PAIR_LIMIT: usize = 20;

/// Glues `g2` onto `g1` along `over`, a vertex set present in both with the
/// same induced subgraph. Returns the amalgam and, for each vertex of `g2`,
/// its id in the amalgam. Vertices of `g1` keep their ids.
pub fn free_amalgam_with_map(g1: &FinGraph, g2: &FinGraph, over: VertexSet) -> Result<(FinGraph, Vec<usize>)> {
    g1.check_set(over)?;
    g2.check_set(over)?;
    for u in over.iter() {
        for v in over.iter().filter(|&v| v > u) {
            if g1.has_edge(u, v) != g2.has_edge(u, v) {
                return invalid(format!("base subgraphs disagree on the pair {u} {v}"));
            }
        }
    }
    let mut out = g1.clone();
    let mut map = vec![0; g2.order()];
    for v in 0..g2.order() {
        map[v] = if over.contains(v) { v } else { out.add_vertex()? };
    }
    for (u, v) in g2.edges() {
        if !(over.contains(u) && over.contains(v)) {
            let (a, b) = (map[u], map[v]);
            out.add_edge(a.min(b), a.max(b))?;
        }
    }
    Ok((out, map))
}

/// [`free_amalgam_with_map`] without the map.
pub fn free_amalgam(g1: &FinGraph, g2: &FinGraph, over: VertexSet) -> Result<FinGraph> {
    Ok(free_amalgam_with_map(g1, g2, over)?.0)
}

/// A way of adding new vertices over a base. In `pattern`, vertices
/// `0..base.len()` stand for the base (in increasing host order) and the
/// remaining ones are new.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extension {
    pub base: Vec<usize>,
    pub pattern: FinGraph,
    /// Canonical form of the pattern with base vertices individually coloured.
    pub key: String,
    /// The base is STRICT-closed in the pattern.
    pub strong: bool,
}

impl Extension {
    pub fn new_vertices(&self) -> usize {
        self.pattern.order() - self.base.len()
    }

    /// Adds the extension to `g`; returns the result and the new vertex ids.
    pub fn apply(&self, g: &FinGraph) -> Result<(FinGraph, Vec<usize>)> {
        let b = self.base.len();
        for u in 0..b {
            for v in u + 1..b {
                if self.pattern.has_edge(u, v) != g.has_edge(self.base[u], self.base[v]) {
                    return invalid("extension base does not match the host");
                }
            }
        }
        let mut out = g.clone();
        let mut ids = self.base.clone();
        for _ in 0..self.new_vertices() {
            ids.push(out.add_vertex()?);
        }
        for (u, v) in self.pattern.edges() {
            if v >= b {
                let (x, y) = (ids[u], ids[v]);
                out.add_edge(x.min(y), x.max(y))?;
            }
        }
        Ok((out, ids.split_off(b)))
    }

    /// Whether `g` already has an induced copy of the pattern over the base.
    pub fn is_realized(&self, g: &FinGraph) -> Result<bool> {
        let partial: Vec<(usize, usize)> = self.base.iter().copied().enumerate().collect();
        Ok(find_embedding(&self.pattern, g, &partial, EmbeddingKind::Strong)?.is_some())
    }
}

/// Pattern-level extensions over a base graph (vertices `0..b`), before any
/// host is considered: legal, deduplicated, in `(size, key)` order.
fn extension_patterns(class: &ClassSpec, base: &FinGraph, k: usize) -> Result<Vec<(FinGraph, String, bool)>> {
    let b = base.order();
    let mut out: Vec<(FinGraph, String, bool)> = Vec::new();
    for j in 1..=k {
        let mut pairs = Vec::new();
        for i in 0..j {
            for t in 0..b {
                pairs.push((t, b + i));
            }
            for l in 0..i {
                pairs.push((b + l, b + i));
            }
        }
        if pairs.len() > EXTENSION_PAIR_LIMIT {
            return Err(Error::Resource(format!(
                "{} candidate edges for {j} new vertices over a base of {b}",
                pairs.len()
            )));
        }
        let mut level: Vec<(FinGraph, String, bool)> = Vec::new();
        let marks: Vec<usize> = (0..b + j).map(|v| if v < b { v + 1 } else { 0 }).collect();
        let base_set = VertexSet::full(b);
        for mask in 0u32..(1 << pairs.len()) {
            let mut p = base.clone();
            for _ in 0..j {
                p.add_vertex()?;
            }
            for (bit, &(u, v)) in pairs.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    p.add_edge(u, v)?;
                }
            }
            if !class.in_class(&p)?.is_member() {
                continue;
            }
            let key = canonical_form(&p, &marks)?.0.key();
            if level.iter().any(|(_, k2, _)| *k2 == key) {
                continue;
            }
            let strong = class.pre.is_closed(&p, base_set)?;
            level.push((p, key, strong));
        }
        level.sort_by(|x, y| x.1.cmp(&y.1));
        out.extend(level);
    }
    Ok(out)
}

/// All class-legal ways to add at most `k` new vertices to `g` over `base`,
/// up to isomorphism fixing the base pointwise.
pub fn enumerate_extensions(class: &ClassSpec, g: &FinGraph, base: VertexSet, k: usize) -> Result<Vec<Extension>> {
    g.check_set(base)?;
    let base_list = base.to_vec();
    let (base_graph, _) = g.induced(base);
    let mut out = Vec::new();
    for (pattern, key, strong) in extension_patterns(class, &base_graph, k)? {
        let ext = Extension {
            base: base_list.clone(),
            pattern,
            key,
            strong,
        };
        let (h, fresh) = ext.apply(g)?;
        if class.in_class_extending(&h, fresh.iter().copied().collect())?.is_member() {
            out.push(ext);
        }
    }
    Ok(out)
}

/// One amalgamation step of the builder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub base: Vec<usize>,
    pub new: Vec<usize>,
    /// Edges of the extension, in graph ids.
    pub edges: Vec<(usize, usize)>,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step")?;
        if self.base.is_empty() {
            write!(f, " -")?;
        }
        for v in &self.base {
            write!(f, " {v}")?;
        }
        write!(f, " |")?;
        for v in &self.new {
            write!(f, " +{v}")?;
        }
        for (u, v) in &self.edges {
            write!(f, " {u}-{v}")?;
        }
        Ok(())
    }
}

impl Step {
    fn parse(line: &str, line_no: usize) -> Result<Step> {
        let body = line.strip_prefix("step").ok_or(()).or_else(|_| parse_err(line_no, "expected `step`"))?;
        let (base, ext) = body.split_once('|').ok_or(()).or_else(|_| parse_err(line_no, "missing `|`"))?;
        let num = |s: &str| s.parse::<usize>().or_else(|_| parse_err(line_no, format!("bad vertex `{s}`")));
        let mut step = Step {
            base: Vec::new(),
            new: Vec::new(),
            edges: Vec::new(),
        };
        for tok in base.split_whitespace().filter(|t| *t != "-") {
            step.base.push(num(tok)?);
        }
        for tok in ext.split_whitespace() {
            if let Some(v) = tok.strip_prefix('+') {
                step.new.push(num(v)?);
            } else if let Some((u, v)) = tok.split_once('-') {
                step.edges.push((num(u)?, num(v)?));
            } else {
                return parse_err(line_no, format!("bad token `{tok}`"));
            }
        }
        Ok(step)
    }
}

/// A finite piece of the generic structure together with how it was built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenericApproximation {
    pub graph: FinGraph,
    pub log: Vec<Step>,
    pub class: ClassSpec,
    pub seed: u64,
    pub budget: usize,
    /// The schedule wanted a step that no longer fit in the budget.
    pub truncated: bool,
}

impl GenericApproximation {
    /// Graph lines, then `seed`, `budget`, `truncated`, then the `log` section.
    pub fn to_text(&self) -> String {
        let mut out = self.graph.serialize();
        out.push_str(&format!("seed {}\nbudget {}\ntruncated {}\nlog\n", self.seed, self.budget, self.truncated));
        for s in &self.log {
            out.push_str(&format!("{s}\n"));
        }
        out
    }

    /// Parses [`GenericApproximation::to_text`] output and replays the log
    /// against the graph: every step must be present and the graph must be
    /// in `class`.
    pub fn parse(text: &str, class: &ClassSpec) -> Result<GenericApproximation> {
        let (graph, consumed) = FinGraph::parse_prefix(text)?;
        let mut seed = None;
        let mut budget = None;
        let mut truncated = false;
        let mut log = Vec::new();
        let mut in_log = false;
        for (idx, raw) in text.lines().enumerate().skip(consumed - 1) {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if in_log {
                log.push(Step::parse(line, line_no)?);
                continue;
            }
            let (key, value) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "seed" => seed = Some(value.trim().parse().or_else(|_| parse_err(line_no, "bad seed"))?),
                "budget" => budget = Some(value.trim().parse().or_else(|_| parse_err(line_no, "bad budget"))?),
                "truncated" => truncated = value.trim() == "true",
                "log" => in_log = true,
                _ => return parse_err(line_no, format!("unexpected `{line}`")),
            }
        }
        let approx = GenericApproximation {
            graph,
            log,
            class: class.clone(),
            seed: seed.unwrap_or(0),
            budget: budget.unwrap_or(0),
            truncated,
        };
        approx.replay()?;
        Ok(approx)
    }

    /// Rebuilds the graph from one vertex by the logged steps, checking that
    /// each step adds fresh vertices, keeps the graph in the class and that
    /// the final graph is the stored one.
    pub fn replay(&self) -> Result<()> {
        let mut g = FinGraph::empty(1)?;
        for (i, s) in self.log.iter().enumerate() {
            for (k, &v) in s.new.iter().enumerate() {
                if v != g.order() + k {
                    return invalid(format!("step {i}: vertex {v} is not fresh"));
                }
            }
            for _ in &s.new {
                g.add_vertex()?;
            }
            let fresh: VertexSet = s.new.iter().copied().collect();
            for &(u, v) in &s.edges {
                if !fresh.contains(u) && !fresh.contains(v) {
                    return invalid(format!("step {i}: edge {u}-{v} joins old vertices"));
                }
                if u >= v {
                    return invalid(format!("step {i}: edge {u}-{v} is not ordered"));
                }
                g.add_edge(u, v)?;
            }
            if let Some(v) = self.class.in_class_extending(&g, fresh)?.violation() {
                return invalid(format!("step {i} leaves the class: {v}"));
            }
        }
        if g != self.graph {
            return invalid("the log does not rebuild the stored graph");
        }
        Ok(())
    }
}

struct Candidate {
    base_key: (usize, String),
    ext_key: (usize, String),
    base: Vec<usize>,
    pattern: Rc<(FinGraph, String, bool)>,
}

/// Builds a class member of at most `budget` vertices by repeated free
/// amalgamation, starting from one vertex.
///
/// Each round lists every STRICT-closed base of at most two vertices with
/// every strong extension of at most two new vertices, ordered by (base
/// closure-type key, extension key); the seed only permutes ties. Pairs
/// already realized are skipped, the rest are amalgamated when the result
/// stays in the class. Building stops when a round changes nothing, or when
/// the next step does not fit (setting `truncated`).
pub fn build_generic(class: &ClassSpec, budget: usize, seed: u64) -> Result<GenericApproximation> {
    if budget == 0 {
        return invalid("budget must be at least 1");
    }
    if budget > crate::graph::MAX_VERTICES {
        return Err(Error::Resource(format!(
            "budget {budget} exceeds the {}-vertex capacity",
            crate::graph::MAX_VERTICES
        )));
    }
    let mut g = FinGraph::empty(1)?;
    let mut log = Vec::new();
    let mut truncated = false;
    let mut cache: HashMap<(usize, Vec<(usize, usize)>), Vec<Rc<(FinGraph, String, bool)>>> = HashMap::new();
    let mut round = 0u64;
    'rounds: loop {
        let mut candidates = Vec::new();
        for base in bases(&g) {
            if !class.pre.is_closed(&g, base)? {
                continue;
            }
            let list = base.to_vec();
            let (bg, _) = g.induced(base);
            let cache_key = (list.len(), bg.edges());
            let patterns = match cache.get(&cache_key) {
                Some(p) => p.clone(),
                None => {
                    let p: Vec<_> = extension_patterns(class, &bg, BUILD_EXTENSION_SIZE)?
                        .into_iter()
                        .filter(|p| p.2 && attached(&p.0, list.len()))
                        .map(Rc::new)
                        .collect();
                    cache.insert(cache_key, p.clone());
                    p
                }
            };
            let key = closure_type_key(class, &g, &list)?;
            for p in patterns {
                candidates.push(Candidate {
                    base_key: (list.len(), key.clone()),
                    ext_key: (p.0.order() - list.len(), p.1.clone()),
                    base: list.clone(),
                    pattern: p,
                });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ round.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        candidates.shuffle(&mut rng);
        candidates.sort_by(|x, y| (&x.base_key, &x.ext_key).cmp(&(&y.base_key, &y.ext_key)));
        let mut changed = false;
        for c in candidates {
            let base_set: VertexSet = c.base.iter().copied().collect();
            if !class.pre.is_closed(&g, base_set)? {
                continue;
            }
            let ext = Extension {
                base: c.base.clone(),
                pattern: c.pattern.0.clone(),
                key: c.pattern.1.clone(),
                strong: true,
            };
            if ext.is_realized(&g)? {
                continue;
            }
            if g.order() + ext.new_vertices() > budget {
                truncated = true;
                break 'rounds;
            }
            let (h, fresh) = ext.apply(&g)?;
            let fresh_set: VertexSet = fresh.iter().copied().collect();
            if !class.in_class_extending(&h, fresh_set)?.is_member() {
                continue;
            }
            let edges = h
                .edges()
                .into_iter()
                .filter(|&(u, v)| fresh_set.contains(u) || fresh_set.contains(v))
                .collect();
            log.push(Step {
                base: c.base,
                new: fresh,
                edges,
            });
            g = h;
            changed = true;
        }
        if !changed {
            break;
        }
        round += 1;
    }
    Ok(GenericApproximation {
        graph: g,
        log,
        class: class.clone(),
        seed,
        budget,
        truncated,
    })
}

/// Every new vertex of the pattern reaches the base and every base vertex
/// has a new neighbour. Otherwise the extension is a free amalgam of an
/// extension over a smaller base, which the schedule reaches separately.
fn attached(pattern: &FinGraph, b: usize) -> bool {
    let new = pattern.vertex_set().difference(VertexSet::full(b));
    if (0..b).any(|v| pattern.neighbors(v).intersection(new).is_empty()) {
        return false;
    }
    let mut reached = VertexSet::full(b);
    let mut frontier = reached;
    while !frontier.is_empty() {
        let mut next = VertexSet::EMPTY;
        for v in frontier.iter() {
            next = next.union(pattern.neighbors(v));
        }
        frontier = next.difference(reached);
        reached = reached.union(next);
    }
    reached == pattern.vertex_set()
}

/// Nonempty vertex sets of at most [`BUILD_BASE_SIZE`] vertices, by size
/// then lexicographically.
fn bases(g: &FinGraph) -> Vec<VertexSet> {
    let n = g.order();
    let mut out: Vec<VertexSet> = (0..n).map(VertexSet::singleton).collect();
    if BUILD_BASE_SIZE >= 2 {
        for u in 0..n {
            for v in u + 1..n {
                out.push(VertexSet::from_iter([u, v]));
            }
        }
    }
    out
}

/// A disjoint copy of the closure of a tuple, placed with no edges to the
/// host: the realization of the type saying the copy is unrelated to
/// everything already there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndependentExtension {
    pub tuple: Vec<usize>,
    /// Closure of the tuple in the host, copied.
    pub closure: Vec<usize>,
    pub amalgam: FinGraph,
    /// Id in `amalgam` of the copy of each closure vertex.
    pub copy: Vec<usize>,
    /// `None` when the amalgam is legal; otherwise what rules it out.
    pub violation: Option<Violation>,
}

impl IndependentExtension {
    pub fn is_legal(&self) -> bool {
        self.violation.is_none()
    }

    /// The copy of the tuple itself.
    pub fn copied_tuple(&self) -> Vec<usize> {
        self.tuple
            .iter()
            .map(|v| self.copy[self.closure.iter().position(|c| c == v).unwrap()])
            .collect()
    }
}

pub fn independent_type_extension(class: &ClassSpec, g: &FinGraph, tuple: &[usize]) -> Result<IndependentExtension> {
    let set: VertexSet = tuple.iter().copied().collect();
    g.check_set(set)?;
    let closure = acl_approx(class, g, set)?.weak_closure();
    let (piece, old) = g.induced(closure);
    let (amalgam, copy) = free_amalgam_with_map(g, &piece, VertexSet::EMPTY)?;
    let fresh: VertexSet = copy.iter().copied().collect();
    let violation = class.in_class_extending(&amalgam, fresh)?.violation().cloned();
    Ok(IndependentExtension {
        tuple: tuple.to_vec(),
        closure: old,
        amalgam,
        copy,
        violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(vs: &[usize]) -> VertexSet {
        vs.iter().copied().collect()
    }

    #[test]
    fn amalgam_examples() {
        let e = FinGraph::path(2);
        let p = free_amalgam(&e, &e, set(&[0])).unwrap();
        assert_eq!(p, FinGraph::from_edges(3, &[(0, 1), (0, 2)]).unwrap());
        let d = free_amalgam(&e, &e, VertexSet::EMPTY).unwrap();
        assert_eq!(d, FinGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap());
        // a = 0, b = 1, joined by a path of length 3 on each side.
        let p3 = FinGraph::from_edges(4, &[(0, 2), (2, 3), (3, 1)]).unwrap();
        let c = free_amalgam(&p3, &p3, set(&[0, 1])).unwrap();
        assert_eq!(c.girth().finite(), Some(6));
        assert_eq!(c.edge_count(), 6);
        assert!(ClassSpec::p0().in_class(&c).unwrap().is_member());
        let k2 = FinGraph::empty(2).unwrap();
        assert!(free_amalgam(&e, &k2, set(&[0, 1])).is_err());
    }

    #[test]
    fn extension_examples() {
        let class = ClassSpec::p0();
        let one = FinGraph::empty(1).unwrap();
        let exts = enumerate_extensions(&class, &one, set(&[0]), 1).unwrap();
        assert_eq!(exts.len(), 2);
        let edges: Vec<usize> = exts.iter().map(|e| e.pattern.edge_count()).collect();
        assert!(edges.contains(&0) && edges.contains(&1));
        let e = FinGraph::path(2);
        let exts = enumerate_extensions(&class, &e, set(&[0, 1]), 1).unwrap();
        assert!(exts.iter().all(|x| x.pattern.edge_count() < 3));
        assert_eq!(exts.len(), 3);
        assert!(enumerate_extensions(&class, &e, set(&[0, 1]), 0).unwrap().is_empty());
    }

    #[test]
    fn apply_adds_fresh_vertices_only() {
        let class = ClassSpec::p0();
        let g = FinGraph::path(3);
        for ext in enumerate_extensions(&class, &g, set(&[0, 2]), 2).unwrap() {
            let (h, fresh) = ext.apply(&g).unwrap();
            assert_eq!(h.order(), 3 + ext.new_vertices());
            assert_eq!(fresh, (3..h.order()).collect::<Vec<_>>());
            assert!(ext.is_realized(&h).unwrap());
            let (old, _) = h.induced(set(&[0, 1, 2]));
            assert_eq!(old, g);
        }
    }

    #[test]
    fn small_budgets() {
        let class = ClassSpec::p0();
        let one = build_generic(&class, 1, 0).unwrap();
        assert_eq!(one.graph.order(), 1);
        assert!(build_generic(&class, 0, 0).is_err());
    }

    #[test]
    fn builder_examples() {
        let class = ClassSpec::p0();
        let twelve = build_generic(&class, 12, 0).unwrap();
        let cherry = FinGraph::path(3);
        assert!(find_embedding(&cherry, &twelve.graph, &[], EmbeddingKind::Mono).unwrap().is_some());
        let forty = build_generic(&class, 40, 0).unwrap();
        assert_eq!(forty.graph.girth().finite(), Some(6));
        assert!(forty.graph.order() <= 40);
        assert!(class.in_class(&forty.graph).unwrap().is_member());
        forty.replay().unwrap();
    }

    #[test]
    fn builds_are_reproducible_and_round_trip() {
        let class = ClassSpec::p0();
        let a = build_generic(&class, 24, 7).unwrap();
        let b = build_generic(&class, 24, 7).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        let back = GenericApproximation::parse(&a.to_text(), &class).unwrap();
        assert_eq!(back, a);
        let mut tampered = a.clone();
        tampered.log.pop();
        assert!(GenericApproximation::parse(&tampered.to_text(), &class).is_err());
    }

    #[test]
    fn step_text_round_trip() {
        let s = Step {
            base: vec![0, 3],
            new: vec![5],
            edges: vec![(0, 5), (3, 5)],
        };
        assert_eq!(s.to_string(), "step 0 3 | +5 0-5 3-5");
        assert_eq!(Step::parse(&s.to_string(), 1).unwrap(), s);
        let empty = Step {
            base: vec![],
            new: vec![1],
            edges: vec![],
        };
        assert_eq!(Step::parse(&empty.to_string(), 1).unwrap(), empty);
    }

    #[test]
    fn independent_copies_are_legal() {
        let class = ClassSpec::p0();
        let approx = build_generic(&class, 20, 0).unwrap();
        let g = &approx.graph;
        let (u, v) = g.edges()[0];
        for tuple in [vec![], vec![u], vec![u, v]] {
            let ext = independent_type_extension(&class, g, &tuple).unwrap();
            assert!(ext.is_legal());
            assert_eq!(ext.amalgam.order(), g.order() + tuple.len());
            let copied = ext.copied_tuple();
            for &c in &copied {
                assert!((0..g.order()).all(|h| !ext.amalgam.has_edge(c.min(h), c.max(h))));
            }
            if let [a, b] = copied[..] {
                assert!(ext.amalgam.has_edge(a.min(b), a.max(b)));
            }
        }
    }
}
