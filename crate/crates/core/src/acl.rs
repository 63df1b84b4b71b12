//! Certified approximation of algebraic closure.
//!
//! `acl_approx(A)` starts from the WEAK closure `W` of `A`. A vertex `v` of
//! `W ∖ A` is kept only when every way of overlapping `W` with a second copy
//! of itself over `A` that moves `v` yields a graph outside the class. Since
//! extra edges never repair an illegal graph, this rules out any second
//! conjugate of `v` over `A`. Vertices lacking such a certificate are
//! reported as unresolved and left out of the closure.

use std::fmt;

use crate::class::{ClassSpec, Violation};
use crate::error::{Error, Result};
use crate::graph::{FinGraph, VertexSet};
use crate::predim::ClosureMode;
use crate::symmetry::canonical_form;

/// Largest `|W ∖ A|` for which overlaps are enumerated.
pub const OVERLAP_LIMIT: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OverlapOutcome {
    /// The overlap would change the induced graph on one of the copies.
    NotACopy,
    /// The union of the two copies is outside the class.
    Illegal(Violation),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OverlapCase {
    /// `(absorbed vertex, host vertex)` pairs: the copy of the first is
    /// identified with the second. Unlisted absorbed vertices get fresh copies.
    pub identified: Vec<(usize, usize)>,
    pub outcome: OverlapOutcome,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinitenessCertificate {
    pub vertex: usize,
    pub cases: Vec<OverlapCase>,
}

impl fmt::Display for FinitenessCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vertex {}: {} overlap cases", self.vertex, self.cases.len())?;
        for (i, case) in self.cases.iter().enumerate() {
            let ids: Vec<String> = case.identified.iter().map(|(r, h)| format!("{r}'={h}")).collect();
            let ids = if ids.is_empty() { "none".to_string() } else { ids.join(" ") };
            match &case.outcome {
                OverlapOutcome::NotACopy => writeln!(f, "  case {i}: identify {ids} -> not a copy")?,
                OverlapOutcome::Illegal(v) => writeln!(f, "  case {i}: identify {ids} -> {v}")?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AclApprox {
    pub base: VertexSet,
    /// `A` together with every certified vertex.
    pub closure: VertexSet,
    /// Absorbed by the WEAK closure but without a certificate.
    pub unresolved: VertexSet,
    pub certificates: Vec<FinitenessCertificate>,
}

impl AclApprox {
    pub fn is_resolved(&self) -> bool {
        self.unresolved.is_empty()
    }

    /// The WEAK closure: certified and unresolved vertices together.
    pub fn weak_closure(&self) -> VertexSet {
        self.closure.union(self.unresolved)
    }
}

pub fn acl_approx(class: &ClassSpec, g: &FinGraph, a: VertexSet) -> Result<AclApprox> {
    let w = class.pre.closure(g, a, ClosureMode::Weak)?;
    let absorbed = w.difference(a);
    let mut out = AclApprox {
        base: a,
        closure: a,
        unresolved: VertexSet::EMPTY,
        certificates: Vec::new(),
    };
    if absorbed.len() > OVERLAP_LIMIT {
        out.unresolved = absorbed;
        return Ok(out);
    }
    let (local, old) = g.induced(w);
    let rest: Vec<usize> = (0..local.order()).filter(|&i| !a.contains(old[i])).collect();
    for (k, &rv) in rest.iter().enumerate() {
        match certify_vertex(class, &local, &rest, k)? {
            Some(cases) => {
                let cases = cases
                    .into_iter()
                    .map(|(ident, outcome)| OverlapCase {
                        identified: ident
                            .into_iter()
                            .map(|(i, j)| (old[rest[i]], old[rest[j]]))
                            .collect(),
                        outcome,
                    })
                    .collect();
                out.closure.insert(old[rv]);
                out.certificates.push(FinitenessCertificate {
                    vertex: old[rv],
                    cases,
                });
            }
            None => out.unresolved.insert(old[rv]),
        }
    }
    Ok(out)
}

type Cases = Vec<(Vec<(usize, usize)>, OverlapOutcome)>;

/// Every overlap moving `rest[k]` must be illegal; returns the case list or
/// `None` when some overlap is a legal graph.
fn certify_vertex(class: &ClassSpec, w: &FinGraph, rest: &[usize], k: usize) -> Result<Option<Cases>> {
    let mut cases = Vec::new();
    let mut assign: Vec<Option<usize>> = vec![None; rest.len()];
    let ok = overlaps(class, w, rest, k, 0, &mut assign, &mut cases)?;
    Ok(ok.then_some(cases))
}

fn overlaps(
    class: &ClassSpec,
    w: &FinGraph,
    rest: &[usize],
    k: usize,
    i: usize,
    assign: &mut Vec<Option<usize>>,
    cases: &mut Cases,
) -> Result<bool> {
    if i == rest.len() {
        let outcome = match overlap_graph(w, rest, assign)? {
            None => OverlapOutcome::NotACopy,
            Some(u) => match class.in_class(&u)? {
                crate::class::Membership::Member => return Ok(false),
                crate::class::Membership::Rejected(v) => OverlapOutcome::Illegal(v),
            },
        };
        let ident = assign
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| (i, j)))
            .collect();
        cases.push((ident, outcome));
        return Ok(true);
    }
    let options = std::iter::once(None).chain((0..rest.len()).map(Some));
    for choice in options {
        if let Some(j) = choice {
            if (i == k && j == k) || assign[..i].contains(&Some(j)) {
                continue;
            }
        }
        assign[i] = choice;
        if !overlaps(class, w, rest, k, i + 1, assign, cases)? {
            return Ok(false);
        }
    }
    assign[i] = None;
    Ok(true)
}

/// `W` glued to a second copy of itself over the base, copy vertex
/// `rest[i]'` identified with `rest[assign[i]]` where given.
fn overlap_graph(w: &FinGraph, rest: &[usize], assign: &[Option<usize>]) -> Result<Option<FinGraph>> {
    let n = w.order();
    let mut copy: Vec<usize> = (0..n).collect();
    let mut u = w.clone();
    for (i, &r) in rest.iter().enumerate() {
        copy[r] = match assign[i] {
            Some(j) => rest[j],
            None => u.add_vertex()?,
        };
    }
    for x in 0..n {
        for y in x + 1..n {
            let (cx, cy) = (copy[x], copy[y]);
            if cx < n && cy < n {
                if w.has_edge(cx, cy) != w.has_edge(x, y) {
                    return Ok(None);
                }
            } else if w.has_edge(x, y) {
                u.add_edge(cx.min(cy), cx.max(cy))?;
            }
        }
    }
    Ok(Some(u))
}

/// Real-sort weak algebraic independence: `acl(aC) ∩ acl(bC) = acl(C)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeakIndependence {
    pub independent: bool,
    /// Some closure involved had unresolved vertices.
    pub unresolved: bool,
    pub acl_ac: VertexSet,
    pub acl_bc: VertexSet,
    pub acl_c: VertexSet,
}

pub fn weakly_alg_independent(
    class: &ClassSpec,
    g: &FinGraph,
    a: VertexSet,
    b: VertexSet,
    c: VertexSet,
) -> Result<WeakIndependence> {
    let ac = acl_approx(class, g, a.union(c))?;
    let bc = acl_approx(class, g, b.union(c))?;
    let cc = acl_approx(class, g, c)?;
    Ok(WeakIndependence {
        independent: ac.closure.intersection(bc.closure) == cc.closure,
        unresolved: !(ac.is_resolved() && bc.is_resolved() && cc.is_resolved()),
        acl_ac: ac.closure,
        acl_bc: bc.closure,
        acl_c: cc.closure,
    })
}

/// Isomorphism type of the induced graph on the WEAK closure of a tuple,
/// with tuple positions marked. Tuples with equal keys satisfy the same
/// quantifier-free formulas over their closures.
pub fn closure_type_key(class: &ClassSpec, g: &FinGraph, tuple: &[usize]) -> Result<String> {
    if tuple.len() > 16 {
        return Err(Error::InvalidInput("tuples longer than 16 are not keyed".into()));
    }
    let set: VertexSet = tuple.iter().copied().collect();
    g.check_set(set)?;
    let w = class.pre.closure(g, set, ClosureMode::Weak)?;
    let (local, old) = g.induced(w);
    let marks: Vec<usize> = old
        .iter()
        .map(|&v| {
            tuple
                .iter()
                .enumerate()
                .filter(|&(_, &t)| t == v)
                .map(|(i, _)| 1usize << i)
                .sum()
        })
        .collect();
    let mut raw = marks.clone();
    raw.sort_unstable();
    raw.dedup();
    let raw: Vec<String> = raw.iter().map(|m| m.to_string()).collect();
    let (form, _) = canonical_form(&local, &marks)?;
    Ok(format!("t{}m{}:{}", tuple.len(), raw.join("."), form.key()))
}
