//! Amalgamation classes: a predimension, a control function and forbidden
//! subgraphs.
//!
//! A finite graph belongs to the class when no forbidden pattern embeds in
//! it (as a subgraph) and `δ(B) >= f(|B|)` for every vertex set `B`. Both
//! conditions are preserved by deleting vertices and destroyed by adding
//! edges, which the certificates elsewhere rely on.

use std::fmt;
use std::path::Path;

use num_traits::{Signed, Zero};

use crate::error::{invalid, parse_err, Error, Result};
use crate::flow::minimize_over_supersets;
use crate::graph::{FinGraph, VertexSet};
use crate::predim::{format_rational, parse_rational, Dim, PredimensionSpec, Rational};
use crate::search::{find_embedding, Embedding, EmbeddingKind};

/// Largest graph the subset-enumeration fallback of the `δ` sweep accepts.
pub const EXHAUSTIVE_SWEEP_LIMIT: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForbiddenPattern {
    pub name: String,
    pub graph: FinGraph,
    /// How the pattern was declared, for serialisation.
    pub source: PatternSource,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PatternSource {
    Cycle(usize),
    File(String),
}

impl ForbiddenPattern {
    pub fn cycle(k: usize) -> Self {
        ForbiddenPattern {
            name: format!("C{k}"),
            graph: FinGraph::cycle(k),
            source: PatternSource::Cycle(k),
        }
    }
}

/// The control function: an explicit table for small sizes, then an affine tail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlFunction {
    pub table: Vec<Rational>,
    pub tail_slope: Rational,
    pub tail_offset: Rational,
}

impl ControlFunction {
    pub fn at(&self, n: usize) -> Rational {
        match self.table.get(n) {
            Some(&v) => v,
            None => self.tail_slope * Rational::from(n as i64) + self.tail_offset,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.table.first() != Some(&Rational::zero()) {
            return invalid("control function must satisfy f(0) = 0");
        }
        if self.tail_slope.is_negative() {
            return invalid("control function tail slope must be non-negative");
        }
        let upto = self.table.len() + 1;
        for n in 1..=upto {
            if self.at(n) < self.at(n - 1) {
                return invalid(format!("control function decreases at n = {n}"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassSpec {
    pub pre: PredimensionSpec,
    pub f: ControlFunction,
    pub forbidden: Vec<ForbiddenPattern>,
}

/// Why a graph is not in the class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Forbidden {
        pattern: String,
        embedding: Embedding,
    },
    Predimension {
        set: VertexSet,
        delta: Dim,
        bound: Rational,
    },
}

impl Violation {
    /// Name of the forbidden pattern, if that is the reason.
    pub fn pattern(&self) -> Option<&str> {
        match self {
            Violation::Forbidden { pattern, .. } => Some(pattern),
            Violation::Predimension { .. } => None,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Forbidden { pattern, embedding } => {
                write!(f, "forbidden {pattern} at {embedding}")
            }
            Violation::Predimension { set, delta, bound } => write!(
                f,
                "predimension {delta} < f({}) = {} on {set}",
                set.len(),
                Dim(*bound)
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Membership {
    Member,
    Rejected(Violation),
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member)
    }

    pub fn violation(&self) -> Option<&Violation> {
        match self {
            Membership::Member => None,
            Membership::Rejected(v) => Some(v),
        }
    }
}

impl ClassSpec {
    pub fn new(
        pre: PredimensionSpec,
        f: ControlFunction,
        forbidden: Vec<ForbiddenPattern>,
    ) -> Result<Self> {
        f.validate()?;
        for p in &forbidden {
            if p.graph.order() == 0 || !p.graph.is_connected() {
                return invalid(format!("forbidden pattern {} must be connected", p.name));
            }
        }
        Ok(ClassSpec { pre, f, forbidden })
    }

    /// The default preset: `c_v = 2`, `alpha = 1`, `f(n) = 2 + ⌈n/2⌉` for
    /// `n >= 2` (tabulated to 64, tail `n/2 + 2`), forbidding C3, C4 and C5.
    pub fn p0() -> Self {
        ClassSpec::p0_with_forbidden(&[3, 4, 5])
    }

    /// P0's predimension and control function with the given forbidden cycles.
    pub fn p0_with_forbidden(cycles: &[usize]) -> Self {
        let mut table = vec![Rational::from(0), Rational::from(2)];
        for n in 2..=64i64 {
            table.push(Rational::from(2 + (n + 1) / 2));
        }
        let f = ControlFunction {
            table,
            tail_slope: Rational::new(1, 2),
            tail_offset: Rational::from(2),
        };
        let forbidden = cycles.iter().map(|&k| ForbiddenPattern::cycle(k)).collect();
        ClassSpec::new(PredimensionSpec::p0(), f, forbidden).unwrap()
    }

    /// Membership with a violation witness.
    pub fn in_class(&self, g: &FinGraph) -> Result<Membership> {
        self.check(g, g.vertex_set())
    }

    /// Membership of `g`, given that deleting `fresh` leaves a member.
    /// Only configurations meeting `fresh` are examined.
    pub fn in_class_extending(&self, g: &FinGraph, fresh: VertexSet) -> Result<Membership> {
        g.check_set(fresh)?;
        self.check(g, fresh)
    }

    fn check(&self, g: &FinGraph, touching: VertexSet) -> Result<Membership> {
        if let Some(v) = self.forbidden_violation(g, touching)? {
            return Ok(Membership::Rejected(v));
        }
        Ok(match self.delta_sweep(g, touching)? {
            Some(v) => Membership::Rejected(v),
            None => Membership::Member,
        })
    }

    fn forbidden_violation(&self, g: &FinGraph, touching: VertexSet) -> Result<Option<Violation>> {
        let everything = touching == g.vertex_set();
        for p in &self.forbidden {
            let hit = if everything {
                find_embedding(&p.graph, g, &[], EmbeddingKind::Mono)?
            } else {
                let mut found = None;
                'outer: for h in touching.iter() {
                    for pv in 0..p.graph.order() {
                        if let Some(e) = find_embedding(&p.graph, g, &[(pv, h)], EmbeddingKind::Mono)? {
                            found = Some(e);
                            break 'outer;
                        }
                    }
                }
                found
            };
            if let Some(embedding) = hit {
                return Ok(Some(Violation::Forbidden {
                    pattern: p.name.clone(),
                    embedding,
                }));
            }
        }
        Ok(None)
    }

    fn violation_for(&self, g: &FinGraph, set: VertexSet) -> Option<Violation> {
        let delta = self.pre.delta_counts(set.len(), g.edges_within(set));
        let bound = self.f.at(set.len());
        (delta.0 < bound).then_some(Violation::Predimension { set, delta, bound })
    }

    /// Looks for `B` with `δ(B) < f(|B|)` among sets meeting `touching`.
    fn delta_sweep(&self, g: &FinGraph, touching: VertexSet) -> Result<Option<Violation>> {
        let n = g.order();
        if let Some(v) = touching.min() {
            if let Some(viol) = self.violation_for(g, VertexSet::singleton(v)) {
                return Ok(Some(viol));
            }
        }
        if n < 2 {
            return Ok(None);
        }
        let slope = self.f.tail_slope;
        let weight = self.pre.cv() - slope;
        match self.uniform_threshold(n, g.edge_count()) {
            Threshold::EverySetOfSize(k) => {
                let mut set: VertexSet = touching.iter().take(1).collect();
                for v in 0..n {
                    if set.len() >= k {
                        break;
                    }
                    set.insert(v);
                }
                Ok(self.violation_for(g, set))
            }
            Threshold::Uniform(threshold) => {
                // Violation at any size <=> δ(B) - slope·|B| < threshold.
                for u in 0..n {
                    for v in u + 1..n {
                        if !touching.contains(u) && !touching.contains(v) {
                            continue;
                        }
                        let pair = VertexSet::from_iter([u, v]);
                        let m = minimize_over_supersets(
                            g,
                            weight,
                            self.pre.alpha(),
                            pair,
                            g.vertex_set(),
                        );
                        if m.value < threshold {
                            let viol = self.violation_for(g, m.smallest);
                            debug_assert!(viol.is_some());
                            return Ok(viol);
                        }
                    }
                }
                Ok(None)
            }
            Threshold::None => self.exhaustive_sweep(g, touching),
        }
    }

    /// With `s` the tail slope, at size `k` the achievable values of
    /// `δ(B) - s·k` lie on a lattice, and `B` violates iff its value is below
    /// the first lattice point at or above `f(k) - s·k`. When one threshold
    /// works for all sizes up to `n`, a single submodular minimisation per
    /// vertex pair decides the whole sweep.
    fn uniform_threshold(&self, n: usize, total_edges: usize) -> Threshold {
        let s = self.f.tail_slope;
        let w = self.pre.cv() - s;
        let alpha = self.pre.alpha();
        let value = |k: usize, e: i64| w * Rational::from(k as i64) - alpha * Rational::from(e);
        let mut lo: Option<Rational> = None;
        let mut hi: Option<Rational> = None;
        for k in 2..=n {
            let t = self.f.at(k) - s * Rational::from(k as i64);
            let e_max = ((value(k, 0) - t) / alpha).floor().to_integer();
            if e_max < 0 {
                return Threshold::EverySetOfSize(k);
            }
            let e_cap = (k * (k - 1) / 2).min(total_edges) as i64;
            let upper = value(k, e_max.min(e_cap));
            hi = Some(hi.map_or(upper, |h| h.min(upper)));
            if e_max < e_cap {
                let lower = value(k, e_max + 1);
                lo = Some(lo.map_or(lower, |l| l.max(lower)));
            }
        }
        match (lo, hi) {
            (Some(l), Some(h)) if l >= h => Threshold::None,
            (_, Some(h)) => Threshold::Uniform(h),
            (_, None) => Threshold::Uniform(Rational::zero()),
        }
    }

    fn exhaustive_sweep(&self, g: &FinGraph, touching: VertexSet) -> Result<Option<Violation>> {
        let n = g.order();
        if n > EXHAUSTIVE_SWEEP_LIMIT {
            return Err(Error::Resource(format!(
                "exhaustive predimension sweep over {n} vertices"
            )));
        }
        for bits in 1..(1u128 << n) {
            let set = VertexSet::from_bits(bits);
            if set.intersection(touching).is_empty() {
                continue;
            }
            if let Some(v) = self.violation_for(g, set) {
                return Ok(Some(v));
            }
        }
        Ok(None)
    }

    /// Class file text; parses back to an equal spec.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("cv {}\n", format_rational(self.pre.cv())));
        out.push_str(&format!("alpha {}\n", format_rational(self.pre.alpha())));
        let table: Vec<String> = self.f.table.iter().map(|&q| format_rational(q)).collect();
        out.push_str(&format!("f {}\n", table.join(" ")));
        out.push_str(&format!(
            "f_tail {} {}\n",
            format_rational(self.f.tail_slope),
            format_rational(self.f.tail_offset)
        ));
        for p in &self.forbidden {
            match &p.source {
                PatternSource::Cycle(k) => out.push_str(&format!("forbid cycle {k}\n")),
                PatternSource::File(path) => out.push_str(&format!("forbid file {path}\n")),
            }
        }
        out
    }

    /// Parses a class file. `forbid file` paths are resolved against `dir`.
    ///
    /// A `preset p0` line starts from the default preset; later lines override
    /// its fields, and any `forbid` line replaces its forbidden list.
    pub fn parse(text: &str, dir: Option<&Path>) -> Result<ClassSpec> {
        let mut cv = None;
        let mut alpha = None;
        let mut table: Option<Vec<Rational>> = None;
        let mut tail: Option<(Rational, Rational)> = None;
        let mut forbidden: Option<Vec<ForbiddenPattern>> = None;
        let mut preset_forbidden: Option<Vec<ForbiddenPattern>> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let rat = |s: &str| parse_rational(s).or_else(|e| parse_err(line_no, e.to_string()));
            match fields[0] {
                "preset" => {
                    if fields.get(1).map(|s| s.to_ascii_lowercase()) != Some("p0".into()) {
                        return parse_err(line_no, "unknown preset");
                    }
                    let p = ClassSpec::p0();
                    cv = Some(p.pre.cv());
                    alpha = Some(p.pre.alpha());
                    table = Some(p.f.table);
                    tail = Some((p.f.tail_slope, p.f.tail_offset));
                    preset_forbidden = Some(p.forbidden);
                }
                "cv" if fields.len() == 2 => cv = Some(rat(fields[1])?),
                "alpha" if fields.len() == 2 => alpha = Some(rat(fields[1])?),
                "f" => table = Some(fields[1..].iter().map(|s| rat(s)).collect::<Result<_>>()?),
                "f_tail" if fields.len() == 3 => tail = Some((rat(fields[1])?, rat(fields[2])?)),
                "forbid" if fields.len() == 3 => {
                    let pattern = match fields[1] {
                        "cycle" => {
                            let k: usize = fields[2]
                                .parse()
                                .ok()
                                .filter(|k| (3..=crate::graph::MAX_VERTICES).contains(k))
                                .ok_or(())
                                .or_else(|_| parse_err(line_no, "cycle length must be at least 3"))?;
                            ForbiddenPattern::cycle(k)
                        }
                        "file" => {
                            let path = match dir {
                                Some(d) => d.join(fields[2]),
                                None => fields[2].into(),
                            };
                            let text = std::fs::read_to_string(&path).or_else(|e| {
                                parse_err(line_no, format!("{}: {e}", path.display()))
                            })?;
                            ForbiddenPattern {
                                name: fields[2].to_string(),
                                graph: FinGraph::parse(&text)?,
                                source: PatternSource::File(fields[2].to_string()),
                            }
                        }
                        _ => return parse_err(line_no, "expected `forbid cycle <k>` or `forbid file <path>`"),
                    };
                    // A forbid line after a preset replaces the preset list.
                    let list = forbidden.get_or_insert_with(Vec::new);
                    if list.iter().any(|p| p.source == pattern.source) {
                        continue;
                    }
                    list.push(pattern);
                }
                other => return parse_err(line_no, format!("unrecognised line `{other}`")),
            }
        }
        let missing = |what: &str| Error::InvalidInput(format!("class file lacks `{what}`"));
        let pre = PredimensionSpec::new(cv.ok_or_else(|| missing("cv"))?, alpha.ok_or_else(|| missing("alpha"))?)?;
        let (tail_slope, tail_offset) = tail.ok_or_else(|| missing("f_tail"))?;
        let f = ControlFunction {
            table: table.ok_or_else(|| missing("f"))?,
            tail_slope,
            tail_offset,
        };
        ClassSpec::new(pre, f, forbidden.or(preset_forbidden).unwrap_or_default())
    }
}

enum Threshold {
    Uniform(Rational),
    EverySetOfSize(usize),
    None,
}
