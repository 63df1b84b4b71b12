//! Invariant measures on finite group actions.
//!
//! On a finite set the ergodic invariant measures are the uniform measures
//! on single orbits, so an invariant measure decomposes as the sum over
//! orbits of (orbit mass) × (uniform measure on the orbit).

use std::collections::{HashSet, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{format_q, parse_q, Q};
use crate::error::{invalid, parse_err, Error, Result};

/// Largest point set swept subset by subset when testing ergodicity.
pub const SUBSET_SWEEP_LIMIT: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteAction {
    pub points: usize,
    /// Each element is a permutation: point `i` goes to `element[i]`.
    pub group: Vec<Vec<usize>>,
    pub measure: Vec<Q>,
}

impl FiniteAction {
    pub fn new(points: usize, group: Vec<Vec<usize>>, measure: Vec<Q>) -> Result<FiniteAction> {
        for (k, g) in group.iter().enumerate() {
            let mut seen = vec![false; points];
            if g.len() != points || g.iter().any(|&i| i >= points || std::mem::replace(&mut seen[i], true)) {
                return invalid(format!("element {k} is not a permutation of {points} points"));
            }
        }
        if measure.len() != points {
            return invalid(format!("{} probabilities for {points} points", measure.len()));
        }
        if let Some(i) = measure.iter().position(|p| p.is_negative()) {
            return invalid(format!("probability of point {i} is negative"));
        }
        let total: Q = measure.iter().sum();
        if !total.is_one() {
            return invalid(format!("probabilities sum to {}, not 1", format_q(&total)));
        }
        Ok(FiniteAction { points, group, measure })
    }

    /// Reads `points n`, `element <images>` and `measure <values>` lines.
    pub fn parse(text: &str) -> Result<FiniteAction> {
        let mut points = None;
        let mut group = Vec::new();
        let mut measure = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            let mut words = line.split_whitespace();
            let Some(head) = words.next() else { continue };
            let rest: Vec<&str> = words.collect();
            match head {
                "points" => {
                    let n = rest
                        .first()
                        .and_then(|w| w.parse::<usize>().ok())
                        .ok_or_else(|| Error::Parse { line: i + 1, msg: "expected a point count".into() })?;
                    points = Some(n);
                }
                "element" => {
                    let perm = rest
                        .iter()
                        .map(|w| w.parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
                    group.push(perm);
                }
                "measure" => {
                    let m = rest.iter().map(|w| parse_q(w)).collect::<Result<Vec<_>>>().map_err(|e| Error::Parse {
                        line: i + 1,
                        msg: e.to_string(),
                    })?;
                    measure = Some(m);
                }
                other => return parse_err(i + 1, format!("unknown keyword `{other}`")),
            }
        }
        let points = points.ok_or_else(|| Error::InvalidInput("missing `points` line".into()))?;
        let measure = measure.ok_or_else(|| Error::InvalidInput("missing `measure` line".into()))?;
        FiniteAction::new(points, group, measure)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("points {}\n", self.points);
        for g in &self.group {
            let w: Vec<String> = g.iter().map(|i| i.to_string()).collect();
            out.push_str(&format!("element {}\n", w.join(" ")));
        }
        let m: Vec<String> = self.measure.iter().map(format_q).collect();
        out.push_str(&format!("measure {}\n", m.join(" ")));
        out
    }

    /// Orbits of the generated group, each sorted, ordered by least point.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let mut orbit_of = vec![usize::MAX; self.points];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for start in 0..self.points {
            if orbit_of[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut orbit = vec![start];
            orbit_of[start] = id;
            let mut queue = VecDeque::from([start]);
            while let Some(p) = queue.pop_front() {
                for g in &self.group {
                    let q = g[p];
                    if orbit_of[q] == usize::MAX {
                        orbit_of[q] = id;
                        orbit.push(q);
                        queue.push_back(q);
                    }
                }
            }
            orbit.sort_unstable();
            out.push(orbit);
        }
        out
    }

    /// Errors naming the first element that moves mass.
    pub fn check_invariant(&self) -> Result<()> {
        for (k, g) in self.group.iter().enumerate() {
            for p in 0..self.points {
                if self.measure[p] != self.measure[g[p]] {
                    return invalid(format!(
                        "measure is not invariant under element {k}: point {p} has {} but its image {} has {}",
                        format_q(&self.measure[p]),
                        g[p],
                        format_q(&self.measure[g[p]])
                    ));
                }
            }
        }
        Ok(())
    }
}

/// All elements of the group generated by `generators`, identity first.
/// Errors if the group has more than `cap` elements.
pub fn close_group(points: usize, generators: &[Vec<usize>], cap: usize) -> Result<Vec<Vec<usize>>> {
    let identity: Vec<usize> = (0..points).collect();
    let mut seen: HashSet<Vec<usize>> = HashSet::from([identity.clone()]);
    let mut out = vec![identity.clone()];
    let mut queue = VecDeque::from([identity]);
    while let Some(h) = queue.pop_front() {
        for g in generators {
            let composed: Vec<usize> = h.iter().map(|&i| g[i]).collect();
            if seen.insert(composed.clone()) {
                if out.len() == cap {
                    return Err(Error::Resource(format!("group has more than {cap} elements")));
                }
                out.push(composed.clone());
                queue.push_back(composed);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub orbit: Vec<usize>,
    pub weight: Q,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub points: usize,
    /// Orbits of positive mass, ordered by least point.
    pub components: Vec<Component>,
}

impl Decomposition {
    /// The weighted sum of the uniform orbit measures.
    pub fn reconstruct(&self) -> Vec<Q> {
        let mut out = vec![Q::zero(); self.points];
        for c in &self.components {
            let each = &c.weight / Q::from_integer(BigInt::from(c.orbit.len()));
            for &p in &c.orbit {
                out[p] += &each;
            }
        }
        out
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .components
            .iter()
            .map(|c| {
                let pts: Vec<String> = c.orbit.iter().map(|p| p.to_string()).collect();
                let what = if c.orbit.len() == 1 { "point-mass" } else { "uniform" };
                format!("{} * {what}{{{}}}", format_q(&c.weight), pts.join(","))
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

pub fn ergodic_decompose_finite(action: &FiniteAction) -> Result<Decomposition> {
    action.check_invariant()?;
    let components = action
        .orbits()
        .into_iter()
        .map(|orbit| {
            let weight: Q = orbit.iter().map(|&p| &action.measure[p]).sum();
            Component { orbit, weight }
        })
        .filter(|c| c.weight.is_positive())
        .collect();
    Ok(Decomposition {
        points: action.points,
        components,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErgodicReport {
    pub ergodic: bool,
    /// An invariant set whose mass is strictly between 0 and 1.
    pub witness: Option<Vec<usize>>,
    /// Verdict of the subset-by-subset sweep, when the point set is small
    /// enough for it.
    pub sweep: Option<bool>,
    /// Whether every invariant set `A` has `μ(A ∩ τA) = μ(A)²` for the
    /// group elements `τ`; for invariant sets this is `μ(A) ∈ {0, 1}`.
    pub product_witness: bool,
}

pub fn check_ergodic_finite(action: &FiniteAction) -> Result<ErgodicReport> {
    action.check_invariant()?;
    let orbits = action.orbits();
    let masses: Vec<Q> = orbits
        .iter()
        .map(|o| o.iter().map(|&p| &action.measure[p]).sum())
        .collect();
    let heavy: Vec<usize> = (0..orbits.len()).filter(|&i| masses[i].is_positive()).collect();
    let ergodic = heavy.len() == 1;
    let witness = (!ergodic).then(|| orbits[heavy[0]].clone());

    // Invariant sets are unions of orbits; only those over the heavy orbits
    // can have intermediate mass.
    let identity: Vec<usize> = (0..action.points).collect();
    let product_witness = heavy.len() <= 16
        && (0u32..1 << heavy.len()).all(|mask| {
            let chosen: Vec<usize> = (0..heavy.len()).filter(|i| mask >> i & 1 == 1).map(|i| heavy[i]).collect();
            let m: Q = chosen.iter().map(|&i| &masses[i]).sum();
            let set: HashSet<usize> = chosen.iter().flat_map(|&i| orbits[i].iter().copied()).collect();
            let square = &m * &m;
            action.group.iter().chain(std::iter::once(&identity)).all(|g| {
                let both: Q = set.iter().filter(|&&p| set.contains(&g[p])).map(|&p| &action.measure[p]).sum();
                both == square
            })
        });

    let sweep = (action.points <= SUBSET_SWEEP_LIMIT).then(|| subset_sweep(action));
    Ok(ErgodicReport {
        ergodic,
        witness,
        sweep,
        product_witness,
    })
}

/// Every invariant subset has mass 0 or 1, checked subset by subset in
/// integer arithmetic over a common denominator.
fn subset_sweep(action: &FiniteAction) -> bool {
    let n = action.points;
    let denom = action
        .measure
        .iter()
        .fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
    let weights: Vec<BigInt> = action
        .measure
        .iter()
        .map(|p| p.numer() * (&denom / p.denom()))
        .collect();
    let images: Vec<Vec<u32>> = action
        .group
        .iter()
        .map(|g| (0..n).map(|p| 1u32 << g[p]).collect())
        .collect();
    for set in 1u32..(1u32 << n) {
        let invariant = images.iter().all(|img| {
            let mut mapped = 0u32;
            let mut rest = set;
            while rest != 0 {
                let p = rest.trailing_zeros() as usize;
                mapped |= img[p];
                rest &= rest - 1;
            }
            mapped == set
        });
        if !invariant {
            continue;
        }
        let mut mass = BigInt::zero();
        let mut rest = set;
        while rest != 0 {
            mass += &weights[rest.trailing_zeros() as usize];
            rest &= rest - 1;
        }
        if mass.is_positive() && mass < denom {
            return false;
        }
    }
    true
}
