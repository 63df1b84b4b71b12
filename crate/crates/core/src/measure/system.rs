//! Constraint systems for one ergodic invariant measure.
//!
//! Each formula instance is assigned the variable of its orbit, keyed by
//! the formula shape and the closure type of its parameter tuple. Instances
//! whose parameters have the same type therefore share a variable, which is
//! exactly invariance.

use std::collections::{HashMap, HashSet};
use std::fmt;

use num_traits::{One, Signed, Zero};

use super::{format_q, Q};
use crate::acl::{acl_approx, closure_type_key, weakly_alg_independent};
use crate::class::ClassSpec;
use crate::error::Result;
use crate::formula::{Atom, Formula, FormulaInstance};
use crate::graph::{FinGraph, VertexSet};
use crate::inconsistency::{certify_inconsistent, Consistency};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    /// `<shape> @ <closure type of the parameters>`.
    pub key: String,
    pub shape: String,
    /// Rendered instances sharing this variable, in registration order.
    pub instances: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    Normalization,
    Nonnegativity,
    Additivity,
    /// `μ(φ ∧ ψ) ≤ μ(φ)`.
    Monotonicity,
    FixedZero,
    FixedOne,
    Product,
    /// An extra bound added by a caller, not derived from the fragment.
    Bound,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintKind::Normalization => "normalization",
            ConstraintKind::Nonnegativity => "nonnegativity",
            ConstraintKind::Additivity => "additivity",
            ConstraintKind::Monotonicity => "monotonicity",
            ConstraintKind::FixedZero => "fixed-zero",
            ConstraintKind::FixedOne => "fixed-one",
            ConstraintKind::Product => "product",
            ConstraintKind::Bound => "bound",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

impl Relation {
    pub fn holds(self, lhs: &Q, rhs: &Q) -> bool {
        match self {
            Relation::Eq => lhs == rhs,
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Eq => "=",
            Relation::Le => "<=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Body {
    /// `Σ coeff·var  rel  rhs`.
    Linear { terms: Vec<(usize, Q)>, rel: Relation, rhs: Q },
    /// `z = x·y`.
    Product { z: usize, x: usize, y: usize },
}

impl Body {
    pub fn vars(&self) -> Vec<usize> {
        match self {
            Body::Linear { terms, .. } => terms.iter().map(|t| t.0).collect(),
            Body::Product { z, x, y } => vec![*z, *x, *y],
        }
    }

    pub fn holds(&self, values: &[Q]) -> bool {
        match self {
            Body::Linear { terms, rel, rhs } => {
                let lhs: Q = terms.iter().map(|(v, c)| c * &values[*v]).sum();
                rel.holds(&lhs, rhs)
            }
            Body::Product { z, x, y } => values[*z] == &values[*x] * &values[*y],
        }
    }

    pub(crate) fn single(v: usize, rel: Relation, rhs: Q) -> Body {
        Body::Linear {
            terms: vec![(v, Q::one())],
            rel,
            rhs,
        }
    }
}

impl fmt::Display for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Body::Linear { terms, rel, rhs } => {
                for (i, (v, c)) in terms.iter().enumerate() {
                    let sign = if c.is_negative() { "-" } else { "+" };
                    if i > 0 {
                        write!(f, " {sign} ")?;
                    } else if c.is_negative() {
                        f.write_str("-")?;
                    }
                    let a = c.abs();
                    if a.is_one() {
                        write!(f, "v{v}")?;
                    } else {
                        write!(f, "{}*v{v}", format_q(&a))?;
                    }
                }
                write!(f, " {rel} {}", format_q(rhs))
            }
            Body::Product { z, x, y } => write!(f, "v{z} = v{x}*v{y}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub body: Body,
    pub justification: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConstraintSystem {
    pub vars: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Hypotheses of the product rule that could only be checked by surrogate.
    pub warnings: Vec<String>,
    /// Constraints left out, with the reason.
    pub omitted: Vec<String>,
    /// Variable of each registered instance, by rendered text.
    pub instance_vars: Vec<(String, usize)>,
}

impl ConstraintSystem {
    pub fn var_of_key(&self, key: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.key == key)
    }

    pub fn var_of_instance(&self, text: &str) -> Option<usize> {
        self.instance_vars.iter().find(|(t, _)| t == text).map(|p| p.1)
    }

    pub fn count(&self, kind: ConstraintKind) -> usize {
        self.constraints.iter().filter(|c| c.kind == kind).count()
    }

    pub fn satisfied_by(&self, values: &[Q]) -> bool {
        values.len() == self.vars.len() && self.constraints.iter().all(|c| c.body.holds(values))
    }

    /// A copy with `var rel value` appended.
    pub fn with_bound(&self, var: usize, rel: Relation, value: Q, why: &str) -> ConstraintSystem {
        let mut s = self.clone();
        s.constraints.push(Constraint {
            kind: ConstraintKind::Bound,
            body: Body::single(var, rel, value),
            justification: why.to_string(),
        });
        s
    }

    /// Adds a constraint unless an identical one is present. Returns its id.
    pub fn push(&mut self, kind: ConstraintKind, body: Body, justification: impl Into<String>) -> usize {
        if let Some(i) = self.constraints.iter().position(|c| c.kind == kind && c.body == body) {
            return i;
        }
        self.constraints.push(Constraint {
            kind,
            body,
            justification: justification.into(),
        });
        self.constraints.len() - 1
    }

    /// Registers a variable by key, returning its index.
    pub fn add_var(&mut self, key: &str, shape: &str, instance: &str) -> usize {
        let v = match self.var_of_key(key) {
            Some(v) => v,
            None => {
                self.vars.push(Variable {
                    key: key.to_string(),
                    shape: shape.to_string(),
                    instances: Vec::new(),
                });
                self.vars.len() - 1
            }
        };
        if !self.vars[v].instances.iter().any(|i| i == instance) {
            self.vars[v].instances.push(instance.to_string());
        }
        if self.var_of_instance(instance).is_none() {
            self.instance_vars.push((instance.to_string(), v));
        }
        v
    }
}

impl fmt::Display for ConstraintSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in &self.warnings {
            writeln!(f, "WARNING {w}")?;
        }
        for (i, v) in self.vars.iter().enumerate() {
            writeln!(f, "var v{i} {} ; {}", v.key, v.instances.join(" ; "))?;
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let vars: Vec<String> = c.body.vars().iter().map(|v| format!("v{v}")).collect();
            writeln!(
                f,
                "constraint c{i} {} {} | {} | {}",
                c.kind,
                vars.join(","),
                c.body,
                c.justification
            )?;
        }
        for o in &self.omitted {
            writeln!(f, "omitted {o}")?;
        }
        Ok(())
    }
}

/// Orbit key of an instance: its shape and the closure type of its
/// parameters.
pub fn instance_key(class: &ClassSpec, g: &FinGraph, inst: &FormulaInstance) -> Result<String> {
    Ok(format!(
        "{} @ {}",
        inst.formula.shape(),
        closure_type_key(class, g, &inst.params)?
    ))
}

/// Splits a top-level conjunction into two instances on disjoint,
/// nonempty parameter sets.
fn split_conjunction(inst: &FormulaInstance) -> Option<(FormulaInstance, FormulaInstance)> {
    let Formula::And(l, r) = &inst.formula else {
        return None;
    };
    let (lp, rp) = (l.params(), r.params());
    if lp.is_empty() || rp.is_empty() {
        return None;
    }
    let lv: VertexSet = lp.iter().map(|&p| inst.params[p]).collect();
    let rv: VertexSet = rp.iter().map(|&p| inst.params[p]).collect();
    if !lv.intersection(rv).is_empty() {
        return None;
    }
    Some((restrict(inst, l, &lp), restrict(inst, r, &rp)))
}

fn restrict(inst: &FormulaInstance, f: &Formula, used: &[usize]) -> FormulaInstance {
    // Renumber by first appearance so the shape matches a parsed instance.
    let mut order: Vec<usize> = Vec::new();
    first_appearance(f, &mut order);
    debug_assert_eq!(order.len(), used.len());
    let formula = f.remap(&|p| order.iter().position(|&q| q == p).unwrap());
    FormulaInstance {
        formula,
        params: order.iter().map(|&p| inst.params[p]).collect(),
        names: order.iter().map(|&p| inst.names[p].clone()).collect(),
    }
}

fn first_appearance(f: &Formula, out: &mut Vec<usize>) {
    match f {
        Formula::Atom(a) => {
            let p = match *a {
                Atom::Top => return,
                Atom::Edge(p) | Atom::Eq(p) | Atom::Dist(_, p) | Atom::DistLe(_, p) => p,
            };
            if !out.contains(&p) {
                out.push(p);
            }
        }
        Formula::Not(a) => first_appearance(a, out),
        Formula::And(a, b) | Formula::Or(a, b) => {
            first_appearance(a, out);
            first_appearance(b, out);
        }
    }
}

fn or_instance(a: &FormulaInstance, b: &FormulaInstance) -> FormulaInstance {
    let mut both = a.and(b);
    if let Formula::And(l, r) = both.formula {
        both.formula = Formula::Or(l, r);
    }
    both
}

/// Builds the system for `fragment` over the host `g`.
pub fn build_constraint_system(class: &ClassSpec, g: &FinGraph, fragment: &[FormulaInstance]) -> Result<ConstraintSystem> {
    let mut sys = ConstraintSystem::default();

    let empty = acl_approx(class, g, VertexSet::EMPTY)?;
    if !empty.closure.is_empty() || !empty.is_resolved() {
        sys.warnings
            .push(format!("acl of the empty set is {} in the host, not empty", empty.closure));
    }
    let mut vertex_keys = HashSet::new();
    for v in 0..g.order() {
        vertex_keys.insert(closure_type_key(class, g, &[v])?);
    }
    if vertex_keys.len() > 1 {
        sys.warnings.push(format!(
            "vertices fall into {} closure types; extending the base is not handled",
            vertex_keys.len()
        ));
    }

    // Register every fragment instance and the halves of split conjunctions.
    let mut keys: HashMap<String, usize> = HashMap::new();
    let mut register = |sys: &mut ConstraintSystem, inst: &FormulaInstance| -> Result<usize> {
        let text = inst.to_string();
        let key = instance_key(class, g, inst)?;
        let v = sys.add_var(&key, &inst.formula.shape(), &text);
        keys.insert(text, v);
        Ok(v)
    };
    let mut all: Vec<FormulaInstance> = Vec::new();
    for inst in fragment {
        inst.check_host(g)?;
        register(&mut sys, inst)?;
        all.push(inst.clone());
        if let Some((l, r)) = split_conjunction(inst) {
            for half in [l, r] {
                register(&mut sys, &half)?;
                all.push(half);
            }
        }
    }

    for v in 0..sys.vars.len() {
        sys.push(
            ConstraintKind::Nonnegativity,
            Body::single(v, Relation::Ge, Q::zero()),
            "measures are nonnegative",
        );
        sys.push(
            ConstraintKind::Normalization,
            Body::single(v, Relation::Le, Q::one()),
            "mu(x=x) = 1 bounds every measure",
        );
    }

    let mut certified: HashSet<usize> = HashSet::new();
    for inst in &all {
        let v = keys[&inst.to_string()];
        if inst.formula == Formula::top() {
            sys.push(ConstraintKind::Normalization, Body::single(v, Relation::Eq, Q::one()), "mu(x=x) = 1");
            continue;
        }
        if !certified.insert(v) {
            continue;
        }
        if let Consistency::Inconsistent(cert) = certify_inconsistent(class, g, inst)? {
            sys.push(
                ConstraintKind::FixedZero,
                Body::single(v, Relation::Eq, Q::zero()),
                format!("{inst} is inconsistent ({})", case_summary(&cert)),
            );
        }
        if let Consistency::Inconsistent(cert) = certify_inconsistent(class, g, &inst.negate())? {
            sys.push(
                ConstraintKind::FixedOne,
                Body::single(v, Relation::Eq, Q::one()),
                format!("the negation of {inst} is inconsistent ({})", case_summary(&cert)),
            );
        }
    }

    for inst in &all {
        let Some((l, r)) = split_conjunction(inst) else { continue };
        let (z, x, y) = (keys[&inst.to_string()], keys[&l.to_string()], keys[&r.to_string()]);
        for side in [x, y] {
            let body = Body::Linear {
                terms: vec![(z, Q::one()), (side, -Q::one())],
                rel: Relation::Le,
                rhs: Q::zero(),
            };
            sys.push(ConstraintKind::Monotonicity, body, format!("{inst} implies each conjunct"));
        }
        let a: VertexSet = l.params.iter().copied().collect();
        let b: VertexSet = r.params.iter().copied().collect();
        let wi = weakly_alg_independent(class, g, a, b, VertexSet::EMPTY)?;
        let pair = format!("{{{}}} and {{{}}}", l.names.join(","), r.names.join(","));
        if wi.unresolved {
            sys.omitted.push(format!("product for {inst}: acl of {pair} unresolved"));
        } else if wi.independent {
            sys.push(
                ConstraintKind::Product,
                Body::Product { z, x, y },
                format!("{pair} weakly algebraically independent over the empty set"),
            );
        } else {
            sys.omitted
                .push(format!("product for {inst}: {pair} not weakly algebraically independent"));
        }
    }

    // Finite additivity for pairs whose conjunction and disjunction are
    // both present, and complements.
    for (i, a) in all.iter().enumerate() {
        let va = keys[&a.to_string()];
        let neg = a.negate().to_string();
        if let Some(&vn) = keys.get(&neg) {
            if vn != va {
                let body = Body::Linear {
                    terms: sorted_terms(vec![(va, Q::one()), (vn, Q::one())]),
                    rel: Relation::Eq,
                    rhs: Q::one(),
                };
                sys.push(ConstraintKind::Additivity, body, format!("{a} and {neg} partition x=x"));
            }
        }
        for b in &all[i + 1..] {
            let vb = keys[&b.to_string()];
            let (and, or) = (a.and(b).to_string(), or_instance(a, b).to_string());
            if let (Some(&vand), Some(&vor)) = (keys.get(&and), keys.get(&or)) {
                let body = Body::Linear {
                    terms: sorted_terms(vec![(vor, Q::one()), (vand, Q::one()), (va, -Q::one()), (vb, -Q::one())]),
                    rel: Relation::Eq,
                    rhs: Q::zero(),
                };
                sys.push(ConstraintKind::Additivity, body, format!("inclusion-exclusion for {a} and {b}"));
            }
        }
    }
    Ok(sys)
}

/// Merges repeated variables and drops zero coefficients.
fn sorted_terms(terms: Vec<(usize, Q)>) -> Vec<(usize, Q)> {
    let mut map: std::collections::BTreeMap<usize, Q> = std::collections::BTreeMap::new();
    for (v, c) in terms {
        *map.entry(v).or_insert_with(Q::zero) += c;
    }
    map.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

fn case_summary(cert: &crate::inconsistency::InconsistencyCertificate) -> String {
    if cert.cases.is_empty() {
        return "propositionally".to_string();
    }
    let mut pats: Vec<String> = cert
        .cases
        .iter()
        .map(|c| c.violation.pattern().map_or_else(|| "predimension".to_string(), str::to_string))
        .collect();
    pats.sort();
    let noun = if cert.cases.len() == 1 { "case" } else { "cases" };
    format!("{} {noun}: {}", cert.cases.len(), pats.join(", "))
}
