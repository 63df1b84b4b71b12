//! Certifying that a formula has no realization in any class member.
//!
//! Each disjunct of the normal form asks for `x` at certain distances from
//! the parameters. A realization would contain, for every parameter with an
//! upper bound, a shortest path from `x`; its inner vertices are witnesses.
//! A profile decides the exact distances used, where `x` sits and, for each
//! witness, whether it is new, a vertex of the parameters' closure, or equal
//! to an earlier witness. The graph of a profile carries only the edges it
//! must have, so if it is outside the class, so is every realization
//! following that profile. Profiles whose own distances already contradict
//! the formula are pruned.

use std::fmt;

use crate::acl::acl_approx;
use crate::class::{ClassSpec, Violation};
use crate::error::{Error, Result};
use crate::formula::{Clause, FormulaInstance, K_MAX};
use crate::graph::{FinGraph, VertexSet};
use crate::search::{find_embedding, EmbeddingKind};
use crate::symmetry::canonical_form;

/// Most witness vertices a single profile may need.
pub const WITNESS_LIMIT: usize = 8;
/// Most profiles examined per disjunct.
pub const PROFILE_LIMIT: usize = 2_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertificateCase {
    /// Index of the disjunct in the normal form.
    pub clause: usize,
    /// Name of each vertex of `graph`.
    pub labels: Vec<String>,
    pub graph: FinGraph,
    pub violation: Violation,
}

impl fmt::Display for CertificateCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "vertices {}", self.labels.join(" "))?;
        let edges: Vec<String> = self
            .graph
            .edges()
            .iter()
            .map(|&(u, v)| format!("{}-{}", self.labels[u], self.labels[v]))
            .collect();
        write!(f, " edges {}", edges.join(" "))?;
        match &self.violation {
            Violation::Forbidden { pattern, embedding } => {
                let map: Vec<String> = embedding
                    .map
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| format!("{i}->{}", self.labels[v]))
                    .collect();
                write!(f, " forbidden {pattern} at [{}]", map.join(" "))
            }
            Violation::Predimension { set, delta, bound } => {
                let names: Vec<&str> = set.iter().map(|v| self.labels[v].as_str()).collect();
                write!(f, " predimension {delta} < {} on {{{}}}", crate::predim::Dim(*bound), names.join(","))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InconsistencyCertificate {
    pub target: FormulaInstance,
    pub cases: Vec<CertificateCase>,
    /// Profiles whose distances contradict the formula outright.
    pub pruned: usize,
    /// Disjuncts contradictory on their face (for example `E(x,a) & !E(x,a)`).
    pub contradictory_clauses: usize,
}

impl InconsistencyCertificate {
    /// Re-checks every case: the named pattern embeds (found afresh by
    /// subgraph search), or the predimension bound really fails.
    pub fn replay(&self, class: &ClassSpec) -> Result<bool> {
        for case in &self.cases {
            let ok = match &case.violation {
                Violation::Forbidden { pattern, embedding } => {
                    let Some(p) = class.forbidden.iter().find(|p| &p.name == pattern) else {
                        return Ok(false);
                    };
                    embedding.verify(&p.graph, &case.graph)
                        && find_embedding(&p.graph, &case.graph, &[], EmbeddingKind::Mono)?.is_some()
                }
                Violation::Predimension { set, .. } => {
                    class.pre.delta(&case.graph, *set)?.0 < class.f.at(set.len())
                }
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl fmt::Display for InconsistencyCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "INCONSISTENT {}", self.target)?;
        for (i, c) in self.cases.iter().enumerate() {
            writeln!(f, "case {i}: {c}")?;
        }
        writeln!(f, "pruned {} profiles by distance", self.pruned)?;
        writeln!(f, "contradictory disjuncts {}", self.contradictory_clauses)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsistentWitness {
    pub labels: Vec<String>,
    /// The profile graph on the parameters' closure, `x` and the witnesses.
    pub graph: FinGraph,
    /// The host with the profile glued on over the closure.
    pub amalgam: FinGraph,
    /// The realization of `x` in `amalgam`.
    pub x: usize,
    /// Id in `amalgam` of each vertex of `graph`.
    pub map: Vec<usize>,
}

impl ConsistentWitness {
    /// Name of an amalgam vertex: its profile label, or `h<id>` for other
    /// host vertices.
    pub fn name(&self, v: usize) -> String {
        match self.map.iter().position(|&m| m == v) {
            Some(i) => self.labels[i].clone(),
            None => format!("h{v}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Consistency {
    Inconsistent(InconsistencyCertificate),
    Consistent(ConsistentWitness),
    /// A legal profile exists but could not be glued onto the host.
    Undetermined(String),
}

impl Consistency {
    pub fn certificate(&self) -> Option<&InconsistencyCertificate> {
        match self {
            Consistency::Inconsistent(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Place {
    New,
    /// Local index of a closure vertex.
    Base(usize),
    /// Same vertex as an earlier witness.
    Same(usize),
}

pub fn certify_inconsistent(class: &ClassSpec, g: &FinGraph, target: &FormulaInstance) -> Result<Consistency> {
    let mut cert = InconsistencyCertificate {
        target: target.clone(),
        cases: Vec::new(),
        pruned: 0,
        contradictory_clauses: 0,
    };
    let mut undetermined = None;
    let mut found = None;
    cert.contradictory_clauses = explore(class, g, target, &mut |profile| {
        match profile {
            Profile::Pruned => cert.pruned += 1,
            Profile::Illegal(case) => cert.cases.push(case),
            Profile::Legal { glued: Some(w), .. } => {
                found = Some(w);
                return Ok(true);
            }
            Profile::Legal { glued: None, .. } => {
                undetermined.get_or_insert_with(|| "a legal profile does not survive gluing onto the host".to_string());
            }
        }
        Ok(false)
    })?;
    if let Some(w) = found {
        return Ok(Consistency::Consistent(w));
    }
    if let Some(reason) = undetermined {
        return Ok(Consistency::Undetermined(reason));
    }
    Ok(Consistency::Inconsistent(cert))
}

/// What one witness profile turned out to be.
pub(crate) enum Profile {
    /// Its own distances contradict the formula.
    Pruned,
    Illegal(CertificateCase),
    /// Legal on its own; `glued` is the realization on the host, if the
    /// glued graph is legal too.
    Legal { glued: Option<ConsistentWitness> },
}

/// Walks every witness profile of every disjunct, deduplicated up to
/// isomorphism fixing the closure and `x`. `visit` returns `Ok(true)` to
/// stop. Returns the number of disjuncts contradictory on their face.
pub(crate) fn explore(
    class: &ClassSpec,
    g: &FinGraph,
    target: &FormulaInstance,
    visit: &mut dyn FnMut(Profile) -> Result<bool>,
) -> Result<usize> {
    target.check_host(g)?;
    let params_set: VertexSet = target.params.iter().copied().collect();
    let acl = acl_approx(class, g, params_set)?;
    let base = acl.weak_closure().to_vec();
    let (base_graph, _) = g.induced(acl.weak_closure());
    let param_local: Vec<usize> = target
        .params
        .iter()
        .map(|v| base.iter().position(|b| b == v).unwrap())
        .collect();
    let base_labels: Vec<String> = base
        .iter()
        .map(|&v| match target.params.iter().position(|&p| p == v) {
            Some(i) => target.names[i].clone(),
            None => format!("h{v}"),
        })
        .collect();
    let names_for = |order: usize, x_local: usize| {
        let mut names = base_labels.clone();
        let mut w = 0;
        for v in base.len()..order {
            if v == x_local {
                names.push("x".into());
            } else {
                names.push(format!("w{w}"));
                w += 1;
            }
        }
        if x_local < base.len() {
            names[x_local] = format!("x={}", names[x_local]);
        }
        names
    };

    let clauses = target.formula.dnf(target.params.len())?;
    let mut contradictory = 0;
    let mut seen = std::collections::HashSet::new();
    for (ci, clause) in clauses.iter().enumerate() {
        if clause.is_contradictory() {
            contradictory += 1;
            continue;
        }
        let ctx = Ctx {
            class,
            g,
            base: &base,
            base_graph: &base_graph,
            param_local: &param_local,
            clause,
        };
        for dists in distance_choices(clause) {
            let witness_count: usize = dists.iter().map(|d| d.map_or(0, |d| d.saturating_sub(1))).sum();
            if witness_count > WITNESS_LIMIT {
                return Err(Error::Unsupported(format!(
                    "{witness_count} witness vertices exceed the bound {WITNESS_LIMIT}"
                )));
            }
            let mut profiles = 0usize;
            let x_places = std::iter::once(Place::New).chain((0..base.len()).map(Place::Base));
            for x in x_places {
                let mut places = Vec::with_capacity(witness_count);
                let stop = ctx.walk(&dists, x, witness_count, &mut places, &mut profiles, &mut |graph, x_local| {
                    let mut marks: Vec<usize> =
                        (0..graph.order()).map(|v| if v < base.len() { v + 2 } else { 0 }).collect();
                    marks[x_local] = 1;
                    if !seen.insert((ci, canonical_form(&graph, &marks)?.0)) {
                        return Ok(false);
                    }
                    if !ctx.distances_ok(&graph, x_local) {
                        return visit(Profile::Pruned);
                    }
                    match class.in_class(&graph)?.violation() {
                        Some(v) => visit(Profile::Illegal(CertificateCase {
                            clause: ci,
                            labels: names_for(graph.order(), x_local),
                            violation: v.clone(),
                            graph,
                        })),
                        None => {
                            let glued = ctx.glue(&graph, x_local)?.map(|mut w| {
                                w.labels = names_for(graph.order(), x_local);
                                w
                            });
                            visit(Profile::Legal { glued })
                        }
                    }
                })?;
                if stop {
                    return Ok(contradictory);
                }
            }
        }
    }
    Ok(contradictory)
}

/// For every parameter, the exact distance its witness path will have
/// (`None`: no path needed). Upper-bounded parameters range over their
/// interval; the rest get no path.
fn distance_choices(clause: &Clause) -> Vec<Vec<Option<usize>>> {
    let mut out: Vec<Vec<Option<usize>>> = vec![Vec::new()];
    for i in &clause.bounds {
        let opts: Vec<Option<usize>> = match i.hi {
            Some(h) => (i.lo..=h.min(K_MAX)).map(Some).collect(),
            None => vec![None],
        };
        out = out
            .into_iter()
            .flat_map(|prefix| {
                opts.iter().map(move |&d| {
                    let mut p = prefix.clone();
                    p.push(d);
                    p
                })
            })
            .collect();
    }
    out
}

struct Ctx<'a> {
    class: &'a ClassSpec,
    g: &'a FinGraph,
    base: &'a [usize],
    base_graph: &'a FinGraph,
    param_local: &'a [usize],
    clause: &'a Clause,
}

impl Ctx<'_> {
    /// Visits the graph of every witness placement. `visit` returns
    /// `Ok(true)` to stop.
    fn walk(
        &self,
        dists: &[Option<usize>],
        x: Place,
        k: usize,
        places: &mut Vec<Place>,
        count: &mut usize,
        visit: &mut dyn FnMut(FinGraph, usize) -> Result<bool>,
    ) -> Result<bool> {
        if places.len() == k {
            *count += 1;
            if *count > PROFILE_LIMIT {
                return Err(Error::Resource(format!("more than {PROFILE_LIMIT} witness profiles")));
            }
            return match self.build(dists, x, places) {
                Some((graph, x_local)) => visit(graph, x_local),
                None => Ok(false),
            };
        }
        let i = places.len();
        let mut options = vec![Place::New];
        options.extend((0..self.base.len()).map(Place::Base));
        options.extend((0..i).filter(|&j| places[j] == Place::New).map(Place::Same));
        for o in options {
            places.push(o);
            let stop = self.walk(dists, x, k, places, count, visit)?;
            places.pop();
            if stop {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// The profile graph: closure vertices first (local ids), then `x` if
    /// new, then new witnesses. `None` when the profile would need a loop
    /// or an edge between closure vertices that the host lacks.
    fn build(&self, dists: &[Option<usize>], x: Place, places: &[Place]) -> Option<(FinGraph, usize)> {
        let b = self.base.len();
        let mut g = self.base_graph.clone();
        let x_id = match x {
            Place::New => g.add_vertex().ok()?,
            Place::Base(v) => v,
            Place::Same(_) => unreachable!(),
        };
        let mut ids: Vec<usize> = Vec::with_capacity(places.len());
        for &p in places {
            let id = match p {
                Place::New => g.add_vertex().ok()?,
                Place::Base(v) => v,
                Place::Same(j) => ids[j],
            };
            ids.push(id);
        }
        let mut next = 0;
        for (pi, d) in dists.iter().enumerate() {
            let Some(d) = *d else { continue };
            let target = self.param_local[pi];
            if d == 0 {
                if x_id != target {
                    return None;
                }
                continue;
            }
            let mut path = vec![x_id];
            path.extend(&ids[next..next + d - 1]);
            next += d - 1;
            path.push(target);
            for w in path.windows(2) {
                let (u, v) = (w[0].min(w[1]), w[0].max(w[1]));
                if u == v {
                    return None;
                }
                if v < b {
                    if !self.base_graph.has_edge(u, v) {
                        return None;
                    }
                } else if !g.has_edge(u, v) {
                    g.add_edge(u, v).ok()?;
                }
            }
        }
        Some((g, x_id))
    }

    fn distances_ok(&self, graph: &FinGraph, x: usize) -> bool {
        let dist = graph.distances_from(x);
        self.clause
            .bounds
            .iter()
            .enumerate()
            .all(|(p, i)| i.contains(dist[self.param_local[p]]))
    }

    /// Glues a legal profile onto the host over the closure and re-checks
    /// legality and the distances there.
    fn glue(&self, graph: &FinGraph, x_local: usize) -> Result<Option<ConsistentWitness>> {
        let b = self.base.len();
        let mut h = self.g.clone();
        let mut map: Vec<usize> = self.base.to_vec();
        for _ in b..graph.order() {
            map.push(h.add_vertex()?);
        }
        for (u, v) in graph.edges() {
            if v >= b {
                let (x, y) = (map[u], map[v]);
                h.add_edge(x.min(y), x.max(y))?;
            }
        }
        let fresh: VertexSet = map[b..].iter().copied().collect();
        if !self.class.in_class_extending(&h, fresh)?.is_member() {
            return Ok(None);
        }
        let x = map[x_local];
        let dist = h.distances_from(x);
        let ok = self
            .clause
            .bounds
            .iter()
            .enumerate()
            .all(|(p, i)| i.contains(dist[self.base[self.param_local[p]]]));
        Ok(ok.then(|| ConsistentWitness {
            labels: Vec::new(),
            graph: graph.clone(),
            amalgam: h,
            x,
            map,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance(text: &str, a: usize, b: usize) -> FormulaInstance {
        FormulaInstance::parse(text, &|n| match n {
            "a" => Some(a),
            "b" => Some(b),
            _ => None,
        })
        .unwrap()
    }

    #[test]
    fn adjacent_parameters_give_two_cases() {
        let class = ClassSpec::p0();
        let g = FinGraph::path(6);
        let f = instance("dist2(x,a) & dist2(x,b)", 2, 3);
        let out = certify_inconsistent(&class, &g, &f).unwrap();
        let cert = out.certificate().expect("inconsistent");
        let mut patterns: Vec<&str> = cert.cases.iter().map(|c| c.violation.pattern().unwrap()).collect();
        patterns.sort();
        assert_eq!(patterns, vec!["C3", "C5"]);
        assert!(cert.replay(&class).unwrap());
        let text = cert.to_string();
        assert!(text.contains("case 0: vertices"));
        assert!(text.contains("forbidden C"));
    }

    #[test]
    fn parameters_at_distance_two_are_consistent() {
        let class = ClassSpec::p0();
        let g = FinGraph::path(7);
        let f = instance("dist2(x,a) & dist2(x,b)", 2, 4);
        match certify_inconsistent(&class, &g, &f).unwrap() {
            Consistency::Consistent(w) => {
                assert!(f.holds_at(&w.amalgam, w.x));
                assert_eq!(w.graph.girth().finite(), Some(6));
                assert!(class.in_class(&w.amalgam).unwrap().is_member());
            }
            other => panic!("expected a witness, got {other:?}"),
        }
    }

    #[test]
    fn propositional_contradiction() {
        let class = ClassSpec::p0();
        let g = FinGraph::path(2);
        let f = instance("E(x,a) & !E(x,a)", 0, 1);
        let cert = certify_inconsistent(&class, &g, &f).unwrap();
        let cert = cert.certificate().unwrap();
        assert!(cert.cases.is_empty());
        assert_eq!(cert.contradictory_clauses, 2);
    }

    #[test]
    fn tampered_certificates_fail_replay() {
        let class = ClassSpec::p0();
        let g = FinGraph::path(6);
        let f = instance("dist2(x,a) & dist2(x,b)", 2, 3);
        let mut cert = certify_inconsistent(&class, &g, &f).unwrap().certificate().unwrap().clone();
        let victim = cert.cases.iter_mut().find(|c| c.violation.pattern() == Some("C5")).unwrap();
        victim.graph = FinGraph::empty(victim.graph.order()).unwrap();
        assert!(!cert.replay(&class).unwrap());
    }

    #[test]
    fn simple_consistent_formulas() {
        let class = ClassSpec::p0();
        let g = FinGraph::path(6);
        for text in ["E(x,a)", "x=a", "x=x", "!E(x,a)", "distle3(x,a) & dist3(x,b)", "dist4(x,a)"] {
            let f = instance(text, 2, 3);
            assert!(
                matches!(certify_inconsistent(&class, &g, &f).unwrap(), Consistency::Consistent(_)),
                "{text}"
            );
        }
        // Adjacent to a and two steps from b forces x, a, b onto a path: fine.
        let f = instance("E(x,a) & dist2(x,b)", 2, 3);
        assert!(matches!(certify_inconsistent(&class, &g, &f).unwrap(), Consistency::Consistent(_)));
        // Adjacent to both endpoints of an edge is a triangle.
        let f = instance("E(x,a) & E(x,b)", 2, 3);
        assert!(certify_inconsistent(&class, &g, &f).unwrap().certificate().is_some());
    }
}
