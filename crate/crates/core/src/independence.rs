//! Testing the (strong) independence theorem on a generic approximation.
//!
//! Given `a`, `b` and realizations `c0` of a type over `a` and `c1` of a type
//! over `b`, we look for a common realization `c*` independent from `ab`.
//! The type of `c0` over `a` is represented by the induced graph on the WEAK
//! closure of `c0 ∪ a`, and likewise for `c1` over `b`. A candidate amalgam
//! copies both closures onto the host, gluing `c0` to `c1`, and decides for
//! every other witness vertex whether it is new, an existing vertex of
//! `acl(ab)`, or shared between the two copies. Only edges of the copies are
//! added; extra edges can never repair an illegal configuration.

use std::fmt;

use crate::acl::{closure_type_key, weakly_alg_independent};
use crate::class::{ClassSpec, Violation};
use crate::error::{invalid, Error, Result};
use crate::graph::{FinGraph, VertexSet};
use crate::predim::{ClosureMode, Dim};

/// Most witness vertices (closure vertices beyond `c` and the parameters)
/// the case analysis accepts.
pub const WITNESS_LIMIT: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IndependenceMode {
    /// Requires `a` and `b` to be weakly algebraically independent.
    Strong,
    /// Requires `a` and `b` to be independent in the dimension sense.
    Standard,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Quadruple {
    pub a: VertexSet,
    pub b: VertexSet,
    pub c0: VertexSet,
    pub c1: VertexSet,
}

impl fmt::Display for Quadruple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a={} b={} c0={} c1={}", self.a, self.b, self.c0, self.c1)
    }
}

/// Where a witness vertex of one of the copies goes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Placement {
    New,
    /// An existing vertex of `acl(ab)`.
    Host(usize),
    /// The same new vertex as the given witness of the first copy.
    Shared(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    /// `(witness vertex in the host, placement)` for the copy over `a`, then over `b`.
    pub over_a: Vec<(usize, Placement)>,
    pub over_b: Vec<(usize, Placement)>,
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |f: &mut fmt::Formatter<'_>, side: &str, list: &[(usize, Placement)]| -> fmt::Result {
            for (w, p) in list {
                match p {
                    Placement::New => write!(f, " {side}{w}->new")?,
                    Placement::Host(h) => write!(f, " {side}{w}->{h}")?,
                    Placement::Shared(s) => write!(f, " {side}{w}->same-as-a{s}")?,
                }
            }
            Ok(())
        };
        if self.over_a.is_empty() && self.over_b.is_empty() {
            return write!(f, " no witnesses");
        }
        show(f, "a", &self.over_a)?;
        show(f, "b", &self.over_b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FailureReason {
    Illegal(Violation),
    Dependent { conditional: Dim, base: Dim },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FailureCase {
    pub assignment: Assignment,
    /// The amalgam restricted to `acl(ab)` and the copied closures.
    pub local: FinGraph,
    pub reason: FailureReason,
}

impl FailureCase {
    /// Short label: the forbidden pattern, or `dependent`.
    pub fn label(&self) -> String {
        match &self.reason {
            FailureReason::Illegal(v) => v.pattern().map_or_else(|| "predimension".to_string(), str::to_string),
            FailureReason::Dependent { .. } => "dependent".to_string(),
        }
    }

    /// Whether at least one witness is shared between the two copies.
    pub fn shares_witness(&self) -> bool {
        self.assignment.over_b.iter().any(|(_, p)| matches!(p, Placement::Shared(_)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExclusionReason {
    /// The placement contradicts edges already present among host vertices.
    NotACopy,
    /// The copies do not realize the required types.
    TypeClash,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndependenceOutcome {
    Holds {
        /// The host with the copies added (equal to the host when `c0 = c1` already works).
        amalgam: FinGraph,
        realization: Vec<usize>,
        conditional: Dim,
        base: Dim,
        assignment: Option<Assignment>,
    },
    Fails {
        cases: Vec<FailureCase>,
        excluded: Vec<(Assignment, ExclusionReason)>,
    },
}

impl IndependenceOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, IndependenceOutcome::Holds { .. })
    }
}

impl fmt::Display for IndependenceOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndependenceOutcome::Holds {
                amalgam,
                realization,
                conditional,
                base,
                assignment,
            } => {
                writeln!(f, "HOLDS c* = {realization:?}, d(c*/ab) = {conditional} = d(c*) = {base}")?;
                if let Some(a) = assignment {
                    writeln!(f, "assignment:{a}")?;
                }
                writeln!(f, "amalgam girth {}", amalgam.girth())
            }
            IndependenceOutcome::Fails { cases, excluded } => {
                writeln!(f, "FAILS ({} cases, {} excluded)", cases.len(), excluded.len())?;
                for (i, c) in cases.iter().enumerate() {
                    match &c.reason {
                        FailureReason::Illegal(v) => writeln!(f, "case {i}:{} -> {v}", c.assignment)?,
                        FailureReason::Dependent { conditional, base } => {
                            writeln!(f, "case {i}:{} -> dependent, d(c*/ab) = {conditional} < {base}", c.assignment)?
                        }
                    }
                }
                for (a, r) in excluded {
                    writeln!(f, "excluded:{a} -> {r:?}")?;
                }
                Ok(())
            }
        }
    }
}

/// Tests one quadruple. Precondition failures are invalid-input errors
/// naming the failed hypothesis.
pub fn test_independence_theorem(
    class: &ClassSpec,
    g: &FinGraph,
    mode: IndependenceMode,
    q: &Quadruple,
) -> Result<IndependenceOutcome> {
    check_preconditions(class, g, mode, q)?;
    let pre = &class.pre;
    let ab = q.a.union(q.b);
    if q.c0 == q.c1 {
        let d = pre.d_independent(g, q.c0, ab, VertexSet::EMPTY)?;
        if d.independent {
            return Ok(IndependenceOutcome::Holds {
                amalgam: g.clone(),
                realization: q.c0.to_vec(),
                conditional: d.conditional,
                base: d.base,
                assignment: None,
            });
        }
    }
    Search::new(class, g, q)?.run()
}

fn check_preconditions(class: &ClassSpec, g: &FinGraph, mode: IndependenceMode, q: &Quadruple) -> Result<()> {
    for s in [q.a, q.b, q.c0, q.c1] {
        g.check_set(s)?;
    }
    if q.c0.is_empty() {
        return invalid("c0 and c1 must be nonempty");
    }
    let none = VertexSet::EMPTY;
    match mode {
        IndependenceMode::Strong => {
            let w = weakly_alg_independent(class, g, q.a, q.b, none)?;
            if w.unresolved {
                return invalid("weak algebraic independence of a and b is unresolved");
            }
            if !w.independent {
                return invalid("a and b are not weakly algebraically independent");
            }
        }
        IndependenceMode::Standard => {
            if !class.pre.d_independent(g, q.a, q.b, none)?.independent {
                return invalid("a and b are not independent");
            }
        }
    }
    if closure_type_key(class, g, &q.c0.to_vec())? != closure_type_key(class, g, &q.c1.to_vec())? {
        return invalid("c0 and c1 do not have the same type");
    }
    if !class.pre.d_independent(g, q.c0, q.a, none)?.independent {
        return invalid("c0 is not independent from a");
    }
    if !class.pre.d_independent(g, q.c1, q.b, none)?.independent {
        return invalid("c1 is not independent from b");
    }
    Ok(())
}

/// One side of the amalgam: the closure of `c ∪ p` in the host.
struct Side {
    c: Vec<usize>,
    params: Vec<usize>,
    closure: VertexSet,
    witnesses: Vec<usize>,
    /// Key of the tuple `c ++ params`.
    key: String,
}

impl Side {
    fn new(class: &ClassSpec, g: &FinGraph, c: VertexSet, p: VertexSet) -> Result<Side> {
        let closure = class.pre.closure(g, c.union(p), ClosureMode::Weak)?;
        let mut tuple = c.to_vec();
        tuple.extend(p.to_vec());
        Ok(Side {
            c: c.to_vec(),
            params: p.to_vec(),
            closure,
            witnesses: closure.difference(c.union(p)).to_vec(),
            key: closure_type_key(class, g, &tuple)?,
        })
    }
}

struct Search<'a> {
    class: &'a ClassSpec,
    g: &'a FinGraph,
    ab: VertexSet,
    acl_ab: Vec<usize>,
    left: Side,
    right: Side,
    cases: Vec<FailureCase>,
    excluded: Vec<(Assignment, ExclusionReason)>,
}

impl<'a> Search<'a> {
    fn new(class: &'a ClassSpec, g: &'a FinGraph, q: &Quadruple) -> Result<Self> {
        let ab = q.a.union(q.b);
        let left = Side::new(class, g, q.c0, q.a)?;
        let right = Side::new(class, g, q.c1, q.b)?;
        if left.witnesses.len() + right.witnesses.len() > WITNESS_LIMIT {
            return Err(Error::Resource(format!(
                "{} witness vertices exceed the limit of {WITNESS_LIMIT}",
                left.witnesses.len() + right.witnesses.len()
            )));
        }
        let acl_ab = class.pre.closure(g, ab, ClosureMode::Weak)?.to_vec();
        Ok(Search {
            class,
            g,
            ab,
            acl_ab,
            left,
            right,
            cases: Vec::new(),
            excluded: Vec::new(),
        })
    }

    fn run(mut self) -> Result<IndependenceOutcome> {
        let left_opts = self.placements(self.left.witnesses.len(), 0, &self.left.params);
        for la in &left_opts {
            let right_opts = self.placements(self.right.witnesses.len(), self.left.witnesses.len(), &self.right.params);
            for ra in &right_opts {
                let shared: Vec<usize> = ra
                    .iter()
                    .filter_map(|p| match p {
                        Placement::Shared(i) => Some(*i),
                        _ => None,
                    })
                    .collect();
                // Only new left witnesses can be shared, each at most once.
                if shared.iter().any(|&i| la[i] != Placement::New) || has_duplicates(&shared) {
                    continue;
                }
                if let Some(holds) = self.try_case(la, ra)? {
                    return Ok(holds);
                }
            }
        }
        Ok(IndependenceOutcome::Fails {
            cases: self.cases,
            excluded: self.excluded,
        })
    }

    /// Injective placements of `k` witnesses: new, a vertex of `acl(ab)`
    /// outside the side's parameters, or (for the right side) shared with
    /// one of `left_count` left witnesses.
    fn placements(&self, k: usize, left_count: usize, params: &[usize]) -> Vec<Vec<Placement>> {
        let mut options = vec![Placement::New];
        options.extend(self.acl_ab.iter().filter(|v| !params.contains(v)).map(|&v| Placement::Host(v)));
        options.extend((0..left_count).map(Placement::Shared));
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(k: usize, options: &[Placement], cur: &mut Vec<Placement>, out: &mut Vec<Vec<Placement>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for &o in options {
                if o != Placement::New && cur.contains(&o) {
                    continue;
                }
                cur.push(o);
                rec(k, options, cur, out);
                cur.pop();
            }
        }
        rec(k, &options, &mut cur, &mut out);
        out
    }

    fn try_case(&mut self, la: &[Placement], ra: &[Placement]) -> Result<Option<IndependenceOutcome>> {
        let assignment = Assignment {
            over_a: self.left.witnesses.iter().copied().zip(la.iter().copied()).collect(),
            over_b: self.right.witnesses.iter().copied().zip(ra.iter().copied()).collect(),
        };
        let mut h = self.g.clone();
        let realization: Vec<usize> = self.left.c.iter().map(|_| h.add_vertex()).collect::<Result<_>>()?;
        let mut left_new = Vec::new();
        let mut left_map = vec![usize::MAX; self.g.order()];
        for (&v, &r) in self.left.c.iter().zip(&realization) {
            left_map[v] = r;
        }
        for &p in &self.left.params {
            left_map[p] = p;
        }
        for (&w, &p) in self.left.witnesses.iter().zip(la) {
            left_map[w] = match p {
                Placement::New => h.add_vertex()?,
                Placement::Host(v) => v,
                Placement::Shared(_) => unreachable!(),
            };
            left_new.push(left_map[w]);
        }
        let mut right_map = vec![usize::MAX; self.g.order()];
        for (&v, &r) in self.right.c.iter().zip(&realization) {
            right_map[v] = r;
        }
        for &p in &self.right.params {
            right_map[p] = p;
        }
        for (&w, &p) in self.right.witnesses.iter().zip(ra) {
            right_map[w] = match p {
                Placement::New => h.add_vertex()?,
                Placement::Host(v) => v,
                Placement::Shared(i) => left_new[i],
            };
        }
        let host_n = self.g.order();
        for (side, map) in [(&self.left, &left_map), (&self.right, &right_map)] {
            let verts = side.closure.to_vec();
            for (i, &x) in verts.iter().enumerate() {
                for &y in &verts[i + 1..] {
                    let (mx, my) = (map[x], map[y]);
                    let edge = self.g.has_edge(x, y);
                    if mx < host_n && my < host_n {
                        if self.g.has_edge(mx, my) != edge {
                            self.excluded.push((assignment, ExclusionReason::NotACopy));
                            return Ok(None);
                        }
                    } else if edge && !h.has_edge(mx, my) {
                        h.add_edge(mx.min(my), mx.max(my))?;
                    }
                }
            }
        }
        let fresh = VertexSet::full(h.order()).difference(self.g.vertex_set());
        // Each copy must be induced in the amalgam.
        for (side, map) in [(&self.left, &left_map), (&self.right, &right_map)] {
            let verts = side.closure.to_vec();
            for (i, &x) in verts.iter().enumerate() {
                for &y in &verts[i + 1..] {
                    if h.has_edge(map[x], map[y]) != self.g.has_edge(x, y) {
                        self.excluded.push((assignment, ExclusionReason::TypeClash));
                        return Ok(None);
                    }
                }
            }
        }
        let local_set = fresh.union(self.acl_ab.iter().copied().collect());
        let local = h.induced(local_set).0;
        if let Some(v) = self.class.in_class_extending(&h, fresh)?.violation() {
            self.cases.push(FailureCase {
                assignment,
                local,
                reason: FailureReason::Illegal(v.clone()),
            });
            return Ok(None);
        }
        // In a legal amalgam the closures must not have grown either.
        let mut left_tuple = realization.clone();
        left_tuple.extend(&self.left.params);
        let mut right_tuple = realization.clone();
        right_tuple.extend(&self.right.params);
        if closure_type_key(self.class, &h, &left_tuple)? != self.left.key
            || closure_type_key(self.class, &h, &right_tuple)? != self.right.key
        {
            self.excluded.push((assignment, ExclusionReason::TypeClash));
            return Ok(None);
        }
        let c_star: VertexSet = realization.iter().copied().collect();
        let d = self.class.pre.d_independent(&h, c_star, self.ab, VertexSet::EMPTY)?;
        if !d.independent {
            self.cases.push(FailureCase {
                assignment,
                local,
                reason: FailureReason::Dependent {
                    conditional: d.conditional,
                    base: d.base,
                },
            });
            return Ok(None);
        }
        Ok(Some(IndependenceOutcome::Holds {
            amalgam: h,
            realization,
            conditional: d.conditional,
            base: d.base,
            assignment: Some(assignment),
        }))
    }
}

fn has_duplicates(v: &[usize]) -> bool {
    let mut s = v.to_vec();
    s.sort_unstable();
    s.windows(2).any(|w| w[0] == w[1])
}

/// One tested quadruple per combination of types found in the host.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchResult {
    pub quadruple: Quadruple,
    pub outcome: IndependenceOutcome,
}

/// Enumerates single-vertex quadruples satisfying the preconditions, keeps
/// one representative per combination of closure types, and tests each.
pub fn search_independence(
    class: &ClassSpec,
    g: &FinGraph,
    mode: IndependenceMode,
    limit: usize,
) -> Result<Vec<SearchResult>> {
    let n = g.order();
    let mut pair_key = vec![vec![String::new(); n]; n];
    for (x, row) in pair_key.iter_mut().enumerate() {
        for (y, slot) in row.iter_mut().enumerate() {
            *slot = closure_type_key(class, g, &[x, y])?;
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let ab_key = &pair_key[a][b];
            for c0 in 0..n {
                let c0a = &pair_key[c0][a];
                for c1 in 0..n {
                    let c1b = &pair_key[c1][b];
                    let key = (ab_key.clone(), c0a.clone(), c1b.clone(), c0 == c1);
                    if seen.contains(&key) {
                        continue;
                    }
                    let q = Quadruple {
                        a: VertexSet::singleton(a),
                        b: VertexSet::singleton(b),
                        c0: VertexSet::singleton(c0),
                        c1: VertexSet::singleton(c1),
                    };
                    match test_independence_theorem(class, g, mode, &q) {
                        Ok(outcome) => {
                            seen.insert(key);
                            out.push(SearchResult { quadruple: q, outcome });
                            if out.len() >= limit {
                                return Ok(out);
                            }
                        }
                        Err(Error::InvalidInput(_)) | Err(Error::Resource(_)) => {
                            seen.insert(key);
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }
    Ok(out)
}
