//! Predimension, self-sufficient closure, dimension and d-independence.
//!
//! For a vertex set `A` of a host graph, `δ(A) = c_v·|A| - alpha·e(A)`.
//! The dimension `d(A)` is the least `δ` over supersets of `A` inside the
//! host. Because `δ` is submodular, the minimisers over supersets of `A` form
//! a lattice: its bottom is the STRICT closure and its top the WEAK closure.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_rational::Ratio;
use num_traits::Signed;

use crate::error::{invalid, Error, Result};
use crate::flow::minimize_over_supersets;
use crate::graph::{FinGraph, VertexSet};

pub type Rational = Ratio<i64>;

/// Parses `p/q` or an integer.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::InvalidInput(format!("not a rational number: `{s}`"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: i64 = p.trim().parse().map_err(|_| bad())?;
            let q: i64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            Ok(Rational::new(p, q))
        }
        None => Ok(Rational::from(s.trim().parse::<i64>().map_err(|_| bad())?)),
    }
}

/// `p/q` in lowest terms, always with an explicit denominator.
pub fn format_rational(q: Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// A (pre)dimension value. Arithmetic is exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Dim(pub Rational);

impl Dim {
    pub fn from_int(n: i64) -> Self {
        Dim(Rational::from(n))
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Add for Dim {
    type Output = Dim;
    fn add(self, rhs: Dim) -> Dim {
        Dim(self.0 + rhs.0)
    }
}

impl Sub for Dim {
    type Output = Dim;
    fn sub(self, rhs: Dim) -> Dim {
        Dim(self.0 - rhs.0)
    }
}

impl Neg for Dim {
    type Output = Dim;
    fn neg(self) -> Dim {
        Dim(-self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClosureMode {
    /// Smallest self-sufficient superset.
    Strict,
    /// Largest superset whose predimension equals the dimension.
    Weak,
}

/// Coefficients of the predimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PredimensionSpec {
    cv: Rational,
    alpha: Rational,
}

impl PredimensionSpec {
    pub fn new(cv: Rational, alpha: Rational) -> Result<Self> {
        if !cv.is_positive() || !alpha.is_positive() {
            return invalid("predimension coefficients must be positive");
        }
        Ok(PredimensionSpec { cv, alpha })
    }

    /// `c_v = 2`, `alpha = 1`: points have dimension 2, an edge drops it by one.
    pub fn p0() -> Self {
        PredimensionSpec {
            cv: Rational::from(2),
            alpha: Rational::from(1),
        }
    }

    pub fn cv(&self) -> Rational {
        self.cv
    }

    pub fn alpha(&self) -> Rational {
        self.alpha
    }

    /// `δ` of a set with `vertices` elements spanning `edges` edges.
    pub fn delta_counts(&self, vertices: usize, edges: usize) -> Dim {
        Dim(self.cv * Rational::from(vertices as i64) - self.alpha * Rational::from(edges as i64))
    }

    pub fn delta(&self, g: &FinGraph, a: VertexSet) -> Result<Dim> {
        g.check_set(a)?;
        Ok(self.delta_counts(a.len(), g.edges_within(a)))
    }

    /// `δ(B/A) = δ(A ∪ B) - δ(A)`.
    pub fn delta_rel(&self, g: &FinGraph, b: VertexSet, a: VertexSet) -> Result<Dim> {
        Ok(self.delta(g, a.union(b))? - self.delta(g, a)?)
    }

    pub fn closure(&self, g: &FinGraph, a: VertexSet, mode: ClosureMode) -> Result<VertexSet> {
        g.check_set(a)?;
        let m = minimize_over_supersets(g, self.cv, self.alpha, a, g.vertex_set());
        Ok(match mode {
            ClosureMode::Strict => m.smallest,
            ClosureMode::Weak => m.largest,
        })
    }

    /// `d(A)`: the least predimension of a superset of `A` in `g`.
    pub fn dimension(&self, g: &FinGraph, a: VertexSet) -> Result<Dim> {
        g.check_set(a)?;
        Ok(Dim(minimize_over_supersets(g, self.cv, self.alpha, a, g.vertex_set()).value))
    }

    /// `d(A/B) = d(A ∪ B) - d(B)`.
    pub fn relative_dimension(&self, g: &FinGraph, a: VertexSet, over: VertexSet) -> Result<Dim> {
        Ok(self.dimension(g, a.union(over))? - self.dimension(g, over)?)
    }

    /// Whether `A` is self-sufficient in `g`: no superset has smaller `δ`.
    pub fn is_closed(&self, g: &FinGraph, a: VertexSet) -> Result<bool> {
        Ok(self.closure(g, a, ClosureMode::Strict)? == a)
    }

    /// `a ⫝_C b` iff `d(a/Cb) = d(a/C)`.
    pub fn d_independent(
        &self,
        g: &FinGraph,
        a: VertexSet,
        b: VertexSet,
        c: VertexSet,
    ) -> Result<DIndependence> {
        let conditional = self.relative_dimension(g, a, c.union(b))?;
        let base = self.relative_dimension(g, a, c)?;
        Ok(DIndependence {
            independent: conditional == base,
            conditional,
            base,
        })
    }
}

/// Outcome of a d-independence test with both compared dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DIndependence {
    pub independent: bool,
    /// `d(a/Cb)`.
    pub conditional: Dim,
    /// `d(a/C)`.
    pub base: Dim,
}

impl fmt::Display for DIndependence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (d(a/Cb) = {}, d(a/C) = {})",
            self.independent, self.conditional, self.base
        )
    }
}

/// Minimum of `δ` over all supersets, by enumeration. Test oracle only.
#[cfg(test)]
pub(crate) fn brute_dimension(spec: &PredimensionSpec, g: &FinGraph, a: VertexSet) -> Dim {
    let n = g.order();
    (0..1u128 << n)
        .map(VertexSet::from_bits)
        .filter(|x| a.is_subset(*x))
        .map(|x| spec.delta(g, x).unwrap())
        .min()
        .unwrap()
}
