//! Exact feasibility for bilinear measure systems.
//!
//! Every variable is a measure and lives in `[0, 1]`. Bounds are tightened
//! by interval propagation over exact rationals. The search then fixes a
//! variable to an end of its interval or to the simplest rational inside
//! it, and bisects if none of those works.
//! Depth and node limits bound the denominators; a search cut off by them
//! reports `Unknown` rather than guessing.

use num_traits::{One, Signed, Zero};

use super::system::{Body, ConstraintSystem, Relation};
use super::{format_q, q, Q};
use crate::error::{Error, Result};

/// Default bound on the number of variables.
pub const VARIABLE_LIMIT: usize = 30;
/// Deepest bisection.
const SPLIT_DEPTH: usize = 20;
/// Search nodes per solve.
const NODE_LIMIT: usize = 200_000;
/// Propagation sweeps per node.
const SWEEPS: usize = 60;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(Vec<Q>),
    /// Constraint ids that are already infeasible together, minimal under
    /// single deletions.
    Infeasible { core: Vec<usize> },
    Unknown(String),
}

impl Feasibility {
    pub fn solution(&self) -> Option<&[Q]> {
        match self {
            Feasibility::Feasible(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, Feasibility::Infeasible { .. })
    }

    pub fn render(&self) -> String {
        match self {
            Feasibility::Feasible(s) => {
                let vs: Vec<String> = s.iter().enumerate().map(|(i, v)| format!("v{i}={}", format_q(v))).collect();
                format!("FEASIBLE {}", vs.join(" "))
            }
            Feasibility::Infeasible { core } => {
                let cs: Vec<String> = core.iter().map(|c| format!("c{c}")).collect();
                format!("INFEASIBLE core {}", cs.join(" "))
            }
            Feasibility::Unknown(why) => format!("UNKNOWN {why}"),
        }
    }
}

pub fn solve_feasible(sys: &ConstraintSystem) -> Result<Feasibility> {
    solve_feasible_with_limit(sys, VARIABLE_LIMIT)
}

pub fn solve_feasible_with_limit(sys: &ConstraintSystem, limit: usize) -> Result<Feasibility> {
    let n = sys.vars.len();
    if n > limit {
        return Err(Error::Resource(format!("{n} variables exceed the solver bound {limit}")));
    }
    let all: Vec<usize> = (0..sys.constraints.len()).collect();
    match search_subset(sys, &all) {
        Verdict::Found(s) => Ok(Feasibility::Feasible(s)),
        Verdict::Unknown(why) => Ok(Feasibility::Unknown(why)),
        Verdict::Refuted => {
            let mut core = all;
            let mut i = 0;
            while i < core.len() {
                let mut trial = core.clone();
                trial.remove(i);
                if matches!(search_subset(sys, &trial), Verdict::Refuted) {
                    core = trial;
                } else {
                    i += 1;
                }
            }
            Ok(Feasibility::Infeasible { core })
        }
    }
}

enum Verdict {
    Found(Vec<Q>),
    Refuted,
    Unknown(String),
}

type Boxes = Vec<(Q, Q)>;

struct Search<'a> {
    bodies: Vec<&'a Body>,
    nodes: usize,
    cut: bool,
}

fn search_subset(sys: &ConstraintSystem, subset: &[usize]) -> Verdict {
    let mut s = Search {
        bodies: subset.iter().map(|&c| &sys.constraints[c].body).collect(),
        nodes: 0,
        cut: false,
    };
    let boxes: Boxes = vec![(Q::zero(), Q::one()); sys.vars.len()];
    match s.dfs(boxes, 0) {
        Some(sol) => Verdict::Found(sol),
        None if s.cut => Verdict::Unknown("search limits reached".into()),
        None => Verdict::Refuted,
    }
}

impl Search<'_> {
    fn dfs(&mut self, mut boxes: Boxes, depth: usize) -> Option<Vec<Q>> {
        self.nodes += 1;
        if self.nodes > NODE_LIMIT {
            self.cut = true;
            return None;
        }
        if !self.propagate(&mut boxes) {
            return None;
        }
        let Some(v) = boxes.iter().position(|(lo, hi)| lo != hi) else {
            let point: Vec<Q> = boxes.into_iter().map(|b| b.0).collect();
            return self.bodies.iter().all(|b| b.holds(&point)).then_some(point);
        };
        let (lo, hi) = boxes[v].clone();
        let mut points = vec![hi.clone(), lo.clone()];
        let inner = simplest(&lo, &hi);
        if inner != lo && inner != hi {
            points.push(inner);
        }
        for p in points {
            let mut b = boxes.clone();
            b[v] = (p.clone(), p);
            if let Some(s) = self.dfs(b, depth) {
                return Some(s);
            }
        }
        if depth >= SPLIT_DEPTH {
            self.cut = true;
            return None;
        }
        let mid = (&lo + &hi) * q(1, 2);
        for half in [(mid.clone(), hi), (lo, mid)] {
            let mut b = boxes.clone();
            b[v] = half;
            if let Some(s) = self.dfs(b, depth + 1) {
                return Some(s);
            }
        }
        None
    }

    /// Tightens `boxes`; false when some interval empties.
    fn propagate(&self, boxes: &mut Boxes) -> bool {
        for _ in 0..SWEEPS {
            let mut changed = false;
            for body in &self.bodies {
                match tighten(body, boxes) {
                    None => return false,
                    Some(c) => changed |= c,
                }
            }
            if !changed {
                break;
            }
        }
        true
    }
}

/// The rational with the least denominator in `[lo, hi]` (`0 <= lo <= hi`).
fn simplest(lo: &Q, hi: &Q) -> Q {
    let fl = lo.floor();
    if &fl == lo {
        return fl;
    }
    let next = &fl + Q::one();
    if &next <= hi {
        return next;
    }
    let inner = simplest(&(Q::one() / (hi - &fl)), &(Q::one() / (lo - &fl)));
    fl + Q::one() / inner
}

/// One propagation pass over a constraint. `None` on emptiness.
fn tighten(body: &Body, boxes: &mut Boxes) -> Option<bool> {
    let mut changed = false;
    match body {
        Body::Linear { terms, rel, rhs } => {
            // Range of each term c·v.
            let ranges: Vec<(Q, Q)> = terms
                .iter()
                .map(|(v, c)| {
                    let (a, b) = (c * &boxes[*v].0, c * &boxes[*v].1);
                    if a <= b { (a, b) } else { (b, a) }
                })
                .collect();
            let total_lo: Q = ranges.iter().map(|r| &r.0).sum();
            let total_hi: Q = ranges.iter().map(|r| &r.1).sum();
            for (i, (v, c)) in terms.iter().enumerate() {
                let others_lo = &total_lo - &ranges[i].0;
                let others_hi = &total_hi - &ranges[i].1;
                // Bounds on c·v.
                let upper = matches!(rel, Relation::Eq | Relation::Le).then(|| rhs - &others_lo);
                let lower = matches!(rel, Relation::Eq | Relation::Ge).then(|| rhs - &others_hi);
                let (mut new_lo, mut new_hi) = (None, None);
                if c.is_positive() {
                    new_hi = upper.map(|u| u / c);
                    new_lo = lower.map(|l| l / c);
                } else if c.is_negative() {
                    new_lo = upper.map(|u| u / c);
                    new_hi = lower.map(|l| l / c);
                }
                changed |= narrow(&mut boxes[*v], new_lo, new_hi)?;
            }
        }
        Body::Product { z, x, y } => {
            let (bx, by) = (boxes[*x].clone(), boxes[*y].clone());
            changed |= narrow(&mut boxes[*z], Some(&bx.0 * &by.0), Some(&bx.1 * &by.1))?;
            let bz = boxes[*z].clone();
            for (a, b) in [(*x, *y), (*y, *x)] {
                let other = boxes[b].clone();
                let hi = (!other.0.is_zero()).then(|| &bz.1 / &other.0);
                let lo = (!other.1.is_zero()).then(|| &bz.0 / &other.1);
                if other.1.is_zero() && bz.0.is_positive() {
                    return None;
                }
                changed |= narrow(&mut boxes[a], lo, hi)?;
            }
        }
    }
    Some(changed)
}

fn narrow(b: &mut (Q, Q), lo: Option<Q>, hi: Option<Q>) -> Option<bool> {
    let mut changed = false;
    if let Some(lo) = lo {
        if lo > b.0 {
            b.0 = lo;
            changed = true;
        }
    }
    if let Some(hi) = hi {
        if hi < b.1 {
            b.1 = hi;
            changed = true;
        }
    }
    (b.0 <= b.1).then_some(changed)
}
