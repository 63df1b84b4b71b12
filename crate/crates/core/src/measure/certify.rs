//! Forced-zero certificates.
//!
//! Propagation derives exact values from the constraints one rule at a
//! time. When a product of two different unknowns is known to vanish, the
//! derivation splits and each branch must reach the target being zero (or
//! a contradiction). Every step records the rule and constraint it used, so
//! a certificate can be replayed against the system independently.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};

use super::system::{Body, ConstraintKind, ConstraintSystem, Relation};
use super::{format_q, Q};

/// Deepest nesting of product splits tried.
pub const SPLIT_DEPTH: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    /// A constraint on a single variable fixes it.
    Fixed,
    /// All but one quantity in an equation are known.
    Substitution,
    /// Nonnegative terms summing to zero are each zero.
    Additivity,
    /// Nonnegative terms bounded by zero are each zero.
    Monotonicity,
    /// `z = v·v` and `z = 0` give `v = 0`.
    SquareRootOfZero,
    /// `z = x·y` and `z = 0`: one of `x`, `y` is zero.
    ProductSplit,
    /// A constraint fails under the known values, closing the branch.
    Contradiction,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Fixed => "fixed",
            Rule::Substitution => "substitution",
            Rule::Additivity => "additivity",
            Rule::Monotonicity => "monotonicity",
            Rule::SquareRootOfZero => "square-root-of-zero",
            Rule::ProductSplit => "product-split",
            Rule::Contradiction => "contradiction",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub rule: Rule,
    pub constraint: usize,
    pub derived: Vec<(usize, Q)>,
    /// Human-readable conclusion of the step.
    pub equation: String,
    /// For a split: the variable assumed zero and the branch derivation.
    pub branches: Vec<(usize, Vec<Step>)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZeroCertificate {
    pub target: usize,
    /// Instances sharing the target variable.
    pub target_text: String,
    pub steps: Vec<Step>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ZeroOutcome {
    Zero(ZeroCertificate),
    Unknown(String),
}

impl ZeroOutcome {
    pub fn certificate(&self) -> Option<&ZeroCertificate> {
        match self {
            ZeroOutcome::Zero(c) => Some(c),
            ZeroOutcome::Unknown(_) => None,
        }
    }
}

type Facts = BTreeMap<usize, Q>;

/// What `rule` yields from constraint `c` under `facts`, if it applies.
/// Only values not already known are returned, except for a
/// contradiction, which returns an empty list.
fn apply(sys: &ConstraintSystem, rule: Rule, c: usize, facts: &Facts) -> Option<Vec<(usize, Q)>> {
    let body = &sys.constraints[c].body;
    match (rule, body) {
        (Rule::Fixed, Body::Linear { terms, rel: Relation::Eq, rhs }) if terms.len() == 1 => {
            let (v, k) = &terms[0];
            (!facts.contains_key(v)).then(|| vec![(*v, rhs / k)])
        }
        (Rule::Substitution, Body::Linear { terms, rel: Relation::Eq, rhs }) if terms.len() > 1 => {
            let (known, unknown) = split(terms, facts);
            match unknown[..] {
                [(v, k)] => Some(vec![(v, (rhs - known) / k)]),
                _ => None,
            }
        }
        (Rule::Substitution, Body::Product { z, x, y }) => {
            let (vz, vx, vy) = (facts.get(z), facts.get(x), facts.get(y));
            match (vz, vx, vy) {
                (None, Some(a), Some(b)) => Some(vec![(*z, a * b)]),
                (None, Some(a), None) | (None, None, Some(a)) if a.is_zero() => Some(vec![(*z, Q::zero())]),
                (Some(c), Some(a), None) if !a.is_zero() && x != y => Some(vec![(*y, c / a)]),
                (Some(c), None, Some(b)) if !b.is_zero() && x != y => Some(vec![(*x, c / b)]),
                _ => None,
            }
        }
        (Rule::Additivity | Rule::Monotonicity, Body::Linear { terms, rel, rhs }) => {
            let wanted = match rel {
                Relation::Eq => Rule::Additivity,
                Relation::Le | Relation::Ge => Rule::Monotonicity,
            };
            if rule != wanted {
                return None;
            }
            let (known, unknown) = split(terms, facts);
            if unknown.is_empty() || !(rhs - known).is_zero() {
                return None;
            }
            // All unknown terms must push the same way as the relation.
            let ok = match rel {
                Relation::Eq => unknown.iter().all(|t| t.1.is_positive()) || unknown.iter().all(|t| t.1.is_negative()),
                Relation::Le => unknown.iter().all(|t| t.1.is_positive()),
                Relation::Ge => unknown.iter().all(|t| t.1.is_negative()),
            };
            (ok && unknown.iter().all(|t| nonnegative(sys, t.0))).then(|| unknown.iter().map(|t| (t.0, Q::zero())).collect())
        }
        (Rule::SquareRootOfZero, Body::Product { z, x, y }) if x == y && !facts.contains_key(x) => {
            facts.get(z).filter(|v| v.is_zero()).map(|_| vec![(*x, Q::zero())])
        }
        (Rule::Contradiction, body) => {
            let vars = body.vars();
            if vars.iter().all(|v| facts.contains_key(v)) {
                let mut values = vec![Q::zero(); vars.iter().max().map_or(0, |m| m + 1)];
                for v in vars {
                    values[v] = facts[&v].clone();
                }
                (!body.holds(&values)).then(Vec::new)
            } else {
                None
            }
        }
        _ => None,
    }
}

fn split<'a>(terms: &'a [(usize, Q)], facts: &Facts) -> (Q, Vec<(usize, &'a Q)>) {
    let mut known = Q::zero();
    let mut unknown = Vec::new();
    for (v, k) in terms {
        match facts.get(v) {
            Some(val) => known += k * val,
            None => unknown.push((*v, k)),
        }
    }
    (known, unknown)
}

fn nonnegative(sys: &ConstraintSystem, v: usize) -> bool {
    sys.constraints.iter().any(|c| {
        c.kind == ConstraintKind::Nonnegativity && c.body == Body::single(v, Relation::Ge, Q::zero())
    })
}

const RULES: [Rule; 6] = [
    Rule::Contradiction,
    Rule::Fixed,
    Rule::Substitution,
    Rule::Additivity,
    Rule::Monotonicity,
    Rule::SquareRootOfZero,
];

enum Closed {
    /// The target became known with this value.
    Value(Q),
    Contradiction,
    Open,
}

/// Applies rules to a fixpoint, appending steps. Stops when the target is
/// known or a contradiction appears.
fn propagate(sys: &ConstraintSystem, target: usize, facts: &mut Facts, steps: &mut Vec<Step>) -> Closed {
    loop {
        if let Some(v) = facts.get(&target) {
            return Closed::Value(v.clone());
        }
        let mut progressed = false;
        'scan: for c in 0..sys.constraints.len() {
            for rule in RULES {
                if let Some(derived) = apply(sys, rule, c, facts) {
                    steps.push(Step {
                        rule,
                        constraint: c,
                        equation: describe(sys, rule, c, &derived),
                        derived: derived.clone(),
                        branches: Vec::new(),
                    });
                    if rule == Rule::Contradiction {
                        return Closed::Contradiction;
                    }
                    facts.extend(derived);
                    progressed = true;
                    break 'scan;
                }
            }
        }
        if !progressed {
            return Closed::Open;
        }
    }
}

/// Derives `target = 0` or a contradiction from `facts`, splitting on
/// vanishing products when propagation stalls.
fn derive(sys: &ConstraintSystem, target: usize, mut facts: Facts, depth: usize) -> Option<Vec<Step>> {
    let mut steps = Vec::new();
    match propagate(sys, target, &mut facts, &mut steps) {
        Closed::Value(v) => return v.is_zero().then_some(steps),
        Closed::Contradiction => return Some(steps),
        Closed::Open => {}
    }
    if depth == 0 {
        return None;
    }
    for (c, con) in sys.constraints.iter().enumerate() {
        let Body::Product { z, x, y } = con.body else { continue };
        if x == y || !facts.get(&z).is_some_and(|v| v.is_zero()) || facts.contains_key(&x) || facts.contains_key(&y) {
            continue;
        }
        let mut branches = Vec::new();
        for v in [x, y] {
            let mut f = facts.clone();
            f.insert(v, Q::zero());
            match derive(sys, target, f, depth - 1) {
                Some(b) => branches.push((v, b)),
                None => break,
            }
        }
        if branches.len() == 2 {
            steps.push(Step {
                rule: Rule::ProductSplit,
                constraint: c,
                derived: Vec::new(),
                equation: format!("v{z} = v{x}*v{y} = 0 ⇒ v{x} = 0 or v{y} = 0"),
                branches,
            });
            return Some(steps);
        }
    }
    None
}

/// Keeps only the steps the conclusion depends on.
fn slice(sys: &ConstraintSystem, target: usize, steps: Vec<Step>) -> Vec<Step> {
    let mut needed = std::collections::HashSet::from([target]);
    let mut kept = Vec::new();
    for (i, step) in steps.into_iter().enumerate().rev() {
        let terminal = step.rule == Rule::Contradiction || step.rule == Rule::ProductSplit;
        let useful = terminal && kept.is_empty() || step.derived.iter().any(|(v, _)| needed.contains(v));
        if !useful {
            continue;
        }
        for v in sys.constraints[step.constraint].body.vars() {
            needed.insert(v);
        }
        for (_, b) in &step.branches {
            needed.extend(vars_used(sys, b));
        }
        kept.push((i, step));
    }
    kept.reverse();
    kept.into_iter().map(|(_, s)| s).collect()
}

fn vars_used(sys: &ConstraintSystem, steps: &[Step]) -> Vec<usize> {
    let mut out = Vec::new();
    for s in steps {
        out.extend(sys.constraints[s.constraint].body.vars());
        for (_, b) in &s.branches {
            out.extend(vars_used(sys, b));
        }
    }
    out
}

/// Tries to prove that `target` is zero in every solution of `sys`.
/// Never reports a zero it cannot certify.
pub fn certify_zero(sys: &ConstraintSystem, target: usize) -> ZeroOutcome {
    if target >= sys.vars.len() {
        return ZeroOutcome::Unknown(format!("v{target} is not a variable of the system"));
    }
    match derive(sys, target, Facts::new(), SPLIT_DEPTH) {
        Some(steps) => {
            let cert = ZeroCertificate {
                target,
                target_text: sys.vars[target].instances.join(" ; "),
                steps: slice(sys, target, steps),
            };
            debug_assert!(cert.replay(sys));
            ZeroOutcome::Zero(cert)
        }
        None => {
            let mut facts = Facts::new();
            let closed = propagate(sys, target, &mut facts, &mut Vec::new());
            ZeroOutcome::Unknown(match closed {
                Closed::Value(v) => format!("v{target} is fixed to {}", format_q(&v)),
                _ => format!("no derivation forces v{target} to 0"),
            })
        }
    }
}

impl ZeroCertificate {
    /// Checks every step against the system from scratch.
    pub fn replay(&self, sys: &ConstraintSystem) -> bool {
        replay_steps(sys, self.target, &self.steps, Facts::new())
    }
}

fn replay_steps(sys: &ConstraintSystem, target: usize, steps: &[Step], mut facts: Facts) -> bool {
    for step in steps {
        if step.constraint >= sys.constraints.len() {
            return false;
        }
        match step.rule {
            Rule::ProductSplit => {
                let Body::Product { z, x, y } = sys.constraints[step.constraint].body else {
                    return false;
                };
                let assumed: Vec<usize> = step.branches.iter().map(|b| b.0).collect();
                if !facts.get(&z).is_some_and(|v| v.is_zero()) || assumed != [x, y] {
                    return false;
                }
                return step.branches.iter().all(|(v, b)| {
                    let mut f = facts.clone();
                    f.insert(*v, Q::zero());
                    replay_steps(sys, target, b, f)
                });
            }
            Rule::Contradiction => return apply(sys, Rule::Contradiction, step.constraint, &facts).is_some(),
            rule => match apply(sys, rule, step.constraint, &facts) {
                Some(d) if d == step.derived => facts.extend(d),
                _ => return false,
            },
        }
    }
    facts.get(&target).is_some_and(|v| v.is_zero())
}

fn describe(sys: &ConstraintSystem, rule: Rule, c: usize, derived: &[(usize, Q)]) -> String {
    match (rule, &sys.constraints[c].body) {
        (Rule::Contradiction, body) => format!("{body} fails"),
        (Rule::SquareRootOfZero, Body::Product { z, x, .. }) => format!("mu(v{x})^2 = v{z} = 0 ⇒ v{x} = 0"),
        _ => {
            let ds: Vec<String> = derived.iter().map(|(v, q)| format!("v{v} = {}", format_q(q))).collect();
            ds.join(", ")
        }
    }
}

fn write_steps(f: &mut fmt::Formatter<'_>, steps: &[Step], prefix: &str) -> fmt::Result {
    for (i, s) in steps.iter().enumerate() {
        let label = format!("{prefix}{}", i + 1);
        writeln!(f, "step {label}: {} using c{} ⇒ {}", s.rule, s.constraint, s.equation)?;
        for (bi, (_, b)) in s.branches.iter().enumerate() {
            write_steps(f, b, &format!("{label}.{}.", bi + 1))?;
        }
    }
    Ok(())
}

impl fmt::Display for ZeroCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "certificate v{} = 0 ({})", self.target, self.target_text)?;
        write_steps(f, &self.steps, "")?;
        writeln!(
            f,
            "conclusion: v{} = 0 for every invariant Keisler measure on the fragment",
            self.target
        )
    }
}
