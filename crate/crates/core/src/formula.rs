//! Formulas in one free variable `x` over parameters from a host graph.
//!
//! Atoms are `E(x,p)`, `x=p`, `x=x`, `dist<k>(x,p)` and `distle<k>(x,p)`
//! for `k <= K_MAX`, combined with `!`, `&`, `|` and parentheses. Every atom
//! is a statement about the distance from `x` to one parameter, so a
//! conjunction of literals amounts to one distance interval per parameter.

use std::fmt;

use crate::error::{Error, Result};
use crate::graph::FinGraph;

/// Largest distance an atom may mention.
pub const K_MAX: usize = 4;
/// Largest disjunctive normal form accepted.
pub const DNF_LIMIT: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    /// `x = x`.
    Top,
    /// `E(x,p)`.
    Edge(usize),
    /// `x = p`.
    Eq(usize),
    /// `dist(x,p) = k`.
    Dist(usize, usize),
    /// `dist(x,p) <= k`.
    DistLe(usize, usize),
}

/// A formula whose parameters are indices into an ordered parameter list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn top() -> Formula {
        Formula::Atom(Atom::Top)
    }

    /// Parameters mentioned, sorted.
    pub fn params(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit_atoms(&mut |a| match a {
            Atom::Top => {}
            Atom::Edge(p) | Atom::Eq(p) | Atom::Dist(_, p) | Atom::DistLe(_, p) => out.push(p),
        });
        out.sort_unstable();
        out.dedup();
        out
    }

    fn visit_atoms(&self, f: &mut impl FnMut(Atom)) {
        match self {
            Formula::Atom(a) => f(*a),
            Formula::Not(a) => a.visit_atoms(f),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.visit_atoms(f);
                b.visit_atoms(f);
            }
        }
    }

    /// Renames parameters through `map` (old index to new index).
    pub fn remap(&self, map: &impl Fn(usize) -> usize) -> Formula {
        match self {
            Formula::Atom(a) => Formula::Atom(match *a {
                Atom::Top => Atom::Top,
                Atom::Edge(p) => Atom::Edge(map(p)),
                Atom::Eq(p) => Atom::Eq(map(p)),
                Atom::Dist(k, p) => Atom::Dist(k, map(p)),
                Atom::DistLe(k, p) => Atom::DistLe(k, map(p)),
            }),
            Formula::Not(a) => Formula::not(a.remap(map)),
            Formula::And(a, b) => Formula::and(a.remap(map), b.remap(map)),
            Formula::Or(a, b) => Formula::or(a.remap(map), b.remap(map)),
        }
    }

    /// Text with parameters printed by `name`.
    pub fn render(&self, name: &dyn Fn(usize) -> String) -> String {
        match self {
            Formula::Atom(a) => match *a {
                Atom::Top => "x=x".to_string(),
                Atom::Edge(p) => format!("E(x,{})", name(p)),
                Atom::Eq(p) => format!("x={}", name(p)),
                Atom::Dist(k, p) => format!("dist{k}(x,{})", name(p)),
                Atom::DistLe(k, p) => format!("distle{k}(x,{})", name(p)),
            },
            Formula::Not(a) => format!("!{}", a.render_operand(name)),
            Formula::And(a, b) => format!("{} & {}", a.render_operand(name), b.render_operand(name)),
            Formula::Or(a, b) => format!("{} | {}", a.render_operand(name), b.render_operand(name)),
        }
    }

    fn render_operand(&self, name: &dyn Fn(usize) -> String) -> String {
        match self {
            Formula::Atom(_) | Formula::Not(_) => self.render(name),
            _ => format!("({})", self.render(name)),
        }
    }

    /// Parameter-free shape: parameters printed as `$0`, `$1`, ...
    pub fn shape(&self) -> String {
        self.render(&|p| format!("${p}"))
    }

    /// Truth at `x` with parameters `params`, distances taken in `g`.
    pub fn eval(&self, g: &FinGraph, x: usize, params: &[usize]) -> bool {
        let dist = g.distances_from(x);
        self.eval_with(&|p| dist[params[p]])
    }

    /// Truth given the distance from `x` to each parameter (`None` = unreachable).
    pub fn eval_with(&self, dist: &dyn Fn(usize) -> Option<usize>) -> bool {
        match self {
            Formula::Atom(a) => match *a {
                Atom::Top => true,
                Atom::Edge(p) => dist(p) == Some(1),
                Atom::Eq(p) => dist(p) == Some(0),
                Atom::Dist(k, p) => dist(p) == Some(k),
                Atom::DistLe(k, p) => dist(p).is_some_and(|d| d <= k),
            },
            Formula::Not(a) => !a.eval_with(dist),
            Formula::And(a, b) => a.eval_with(dist) && b.eval_with(dist),
            Formula::Or(a, b) => a.eval_with(dist) || b.eval_with(dist),
        }
    }

    /// Disjunctive normal form as distance constraints. Clauses that are
    /// contradictory on their face are kept (with an empty interval) so that
    /// callers can report them.
    pub fn dnf(&self, param_count: usize) -> Result<Vec<Clause>> {
        let clauses = nnf_dnf(self, true)?;
        Ok(clauses
            .into_iter()
            .map(|lits| {
                let mut c = Clause {
                    bounds: vec![Interval::ANY; param_count],
                };
                for (k, p, positive) in lits {
                    let i = &mut c.bounds[p];
                    if positive {
                        i.hi = Some(i.hi.map_or(k, |h| h.min(k)));
                    } else {
                        i.lo = i.lo.max(k + 1);
                    }
                }
                c
            })
            .collect())
    }
}

/// Literals `dist(x,p) <= k` (positive) or `> k` (negative), as `(k, p, positive)`.
type Literal = (usize, usize, bool);

fn nnf_dnf(f: &Formula, positive: bool) -> Result<Vec<Vec<Literal>>> {
    let out = match (f, positive) {
        (Formula::Not(a), _) => nnf_dnf(a, !positive)?,
        (Formula::And(a, b), true) | (Formula::Or(a, b), false) => {
            let (l, r) = (nnf_dnf(a, positive)?, nnf_dnf(b, positive)?);
            if l.len() * r.len() > DNF_LIMIT {
                return Err(Error::Unsupported(format!("normal form exceeds {DNF_LIMIT} clauses")));
            }
            let mut out = Vec::new();
            for x in &l {
                for y in &r {
                    out.push(x.iter().chain(y).copied().collect());
                }
            }
            out
        }
        (Formula::Or(a, b), true) | (Formula::And(a, b), false) => {
            let mut l = nnf_dnf(a, positive)?;
            l.extend(nnf_dnf(b, positive)?);
            l
        }
        (Formula::Atom(a), _) => atom_dnf(*a, positive),
    };
    if out.len() > DNF_LIMIT {
        return Err(Error::Unsupported(format!("normal form exceeds {DNF_LIMIT} clauses")));
    }
    Ok(out)
}

/// Each atom as a distance interval, negated when `positive` is false.
fn atom_dnf(a: Atom, positive: bool) -> Vec<Vec<Literal>> {
    let (lo, hi, p) = match a {
        Atom::Top => return if positive { vec![vec![]] } else { vec![] },
        Atom::Eq(p) => (0, Some(0), p),
        Atom::Edge(p) => (1, Some(1), p),
        Atom::Dist(k, p) => (k, Some(k), p),
        Atom::DistLe(k, p) => (0, Some(k), p),
    };
    // lo <= dist <= hi, i.e. (dist > lo - 1) and (dist <= hi).
    let mut pos = Vec::new();
    if lo > 0 {
        pos.push((lo - 1, p, false));
    }
    if let Some(h) = hi {
        pos.push((h, p, true));
    }
    if positive {
        vec![pos]
    } else {
        pos.into_iter().map(|(k, p, s)| vec![(k, p, !s)]).collect()
    }
}

/// Allowed distances `lo..=hi` (`hi = None`: unbounded, including unreachable).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: usize,
    pub hi: Option<usize>,
}

impl Interval {
    pub const ANY: Interval = Interval { lo: 0, hi: None };

    pub fn is_empty(&self) -> bool {
        self.hi.is_some_and(|h| h < self.lo)
    }

    pub fn contains(&self, d: Option<usize>) -> bool {
        match d {
            Some(d) => d >= self.lo && self.hi.is_none_or(|h| d <= h),
            None => self.hi.is_none(),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hi {
            Some(h) => write!(f, "[{},{h}]", self.lo),
            None => write!(f, "[{},inf]", self.lo),
        }
    }
}

/// A conjunction of distance constraints, one interval per parameter.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Clause {
    pub bounds: Vec<Interval>,
}

impl Clause {
    pub fn is_contradictory(&self) -> bool {
        self.bounds.iter().any(Interval::is_empty)
    }
}

/// A formula with its parameters bound to host vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FormulaInstance {
    pub formula: Formula,
    /// Host vertex of each parameter index.
    pub params: Vec<usize>,
    pub names: Vec<String>,
}

impl FormulaInstance {
    /// Parses `text`, resolving parameter names through `bind`. Parameters
    /// are numbered in order of first appearance.
    pub fn parse(text: &str, bind: &dyn Fn(&str) -> Option<usize>) -> Result<FormulaInstance> {
        let mut p = Parser {
            toks: tokenize(text)?,
            pos: 0,
            names: Vec::new(),
        };
        let formula = p.disjunction()?;
        if p.pos != p.toks.len() {
            return Err(Error::InvalidInput(format!("unexpected `{}` in formula", p.toks[p.pos])));
        }
        let params = p
            .names
            .iter()
            .map(|n| bind(n).ok_or_else(|| Error::InvalidInput(format!("unknown parameter `{n}`"))))
            .collect::<Result<_>>()?;
        Ok(FormulaInstance {
            formula,
            params,
            names: p.names,
        })
    }

    pub fn new(formula: Formula, params: Vec<usize>, names: Vec<String>) -> Result<FormulaInstance> {
        if names.len() != params.len() || formula.params().iter().any(|&p| p >= params.len()) {
            return Err(Error::InvalidInput("parameter list does not match the formula".into()));
        }
        Ok(FormulaInstance { formula, params, names })
    }

    pub fn check_host(&self, g: &FinGraph) -> Result<()> {
        self.params.iter().try_for_each(|&v| g.check_vertex(v))
    }

    pub fn holds_at(&self, g: &FinGraph, x: usize) -> bool {
        self.formula.eval(g, x, &self.params)
    }

    pub fn and(&self, other: &FormulaInstance) -> FormulaInstance {
        let mut params = self.params.clone();
        let mut names = self.names.clone();
        let mut map = Vec::new();
        for (i, &v) in other.params.iter().enumerate() {
            match params.iter().position(|&w| w == v) {
                Some(j) => map.push(j),
                None => {
                    params.push(v);
                    names.push(other.names[i].clone());
                    map.push(params.len() - 1);
                }
            }
        }
        FormulaInstance {
            formula: Formula::and(self.formula.clone(), other.formula.remap(&|p| map[p])),
            params,
            names,
        }
    }

    pub fn negate(&self) -> FormulaInstance {
        FormulaInstance {
            formula: Formula::not(self.formula.clone()),
            ..self.clone()
        }
    }
}

impl fmt::Display for FormulaInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.formula.render(&|p| self.names[p].clone()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(usize),
    Sym(char),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => f.write_str(s),
            Tok::Num(n) => write!(f, "{n}"),
            Tok::Sym(c) => write!(f, "{c}"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Tok::Num(s.parse().map_err(|_| Error::InvalidInput(format!("bad number `{s}`")))?));
        } else if "()!&|=,".contains(c) {
            out.push(Tok::Sym(c));
            i += 1;
        } else {
            return Err(Error::InvalidInput(format!("unexpected character `{c}` in formula")));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    names: Vec<String>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::InvalidInput(match self.peek() {
                Some(t) => format!("expected `{c}`, found `{t}`"),
                None => format!("expected `{c}` at end of formula"),
            }))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.toks.get(self.pos) {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            Some(t) => Err(Error::InvalidInput(format!("expected a name, found `{t}`"))),
            None => Err(Error::InvalidInput("formula ends early".into())),
        }
    }

    fn param(&mut self, name: String) -> usize {
        match self.names.iter().position(|n| *n == name) {
            Some(i) => i,
            None => {
                self.names.push(name);
                self.names.len() - 1
            }
        }
    }

    fn disjunction(&mut self) -> Result<Formula> {
        let mut f = self.conjunction()?;
        while self.eat('|') {
            f = Formula::or(f, self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut f = self.unary()?;
        while self.eat('&') {
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula> {
        if self.eat('!') {
            return Ok(Formula::not(self.unary()?));
        }
        if self.eat('(') {
            let f = self.disjunction()?;
            self.expect(')')?;
            return Ok(f);
        }
        self.atom()
    }

    /// One argument pair `(x,p)` or `(p,x)`; returns the parameter index.
    fn args(&mut self, what: &str) -> Result<usize> {
        self.expect('(')?;
        let u = self.ident()?;
        self.expect(',')?;
        let v = self.ident()?;
        self.expect(')')?;
        match (u == "x", v == "x") {
            (true, false) => Ok(self.param(v)),
            (false, true) => Ok(self.param(u)),
            _ => Err(Error::Unsupported(format!("{what} must relate x to one parameter"))),
        }
    }

    fn atom(&mut self) -> Result<Formula> {
        let head = self.ident()?;
        if self.eat('=') {
            let rhs = self.ident()?;
            return Ok(Formula::Atom(match (head == "x", rhs == "x") {
                (true, true) => Atom::Top,
                (true, false) => Atom::Eq(self.param(rhs)),
                (false, true) => Atom::Eq(self.param(head)),
                _ => return Err(Error::Unsupported("equality must involve x".into())),
            }));
        }
        let distance = |rest: &str| -> Result<usize> {
            let k: usize = rest
                .parse()
                .map_err(|_| Error::InvalidInput(format!("unknown predicate `{head}`")))?;
            if k > K_MAX {
                return Err(Error::Unsupported(format!("distance {k} exceeds the bound {K_MAX}")));
            }
            Ok(k)
        };
        if head == "E" {
            let p = self.args("E")?;
            return Ok(Formula::Atom(Atom::Edge(p)));
        }
        if let Some(rest) = head.strip_prefix("distle") {
            let k = distance(rest)?;
            let p = self.args(&head)?;
            return Ok(Formula::Atom(Atom::DistLe(k, p)));
        }
        if let Some(rest) = head.strip_prefix("dist") {
            // `dist` followed directly by digits; a number token may also follow.
            let k = if rest.is_empty() {
                match self.toks.get(self.pos) {
                    Some(Tok::Num(k)) => {
                        let k = *k;
                        self.pos += 1;
                        distance(&k.to_string())?
                    }
                    _ => return Err(Error::InvalidInput("`dist` needs a distance".into())),
                }
            } else {
                distance(rest)?
            };
            let p = self.args(&head)?;
            return Ok(Formula::Atom(Atom::Dist(k, p)));
        }
        Err(Error::InvalidInput(format!("unknown predicate `{head}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bind(name: &str) -> Option<usize> {
        match name {
            "a" => Some(0),
            "b" => Some(1),
            "c" => Some(2),
            _ => None,
        }
    }

    #[test]
    fn parses_the_headline_formula() {
        let f = FormulaInstance::parse("dist2(x,a) & dist2(x,b)", &bind).unwrap();
        assert_eq!(f.params, vec![0, 1]);
        assert_eq!(f.formula.shape(), "dist2(x,$0) & dist2(x,$1)");
        assert_eq!(f.to_string(), "dist2(x,a) & dist2(x,b)");
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(FormulaInstance::parse("dist5(x,a)", &bind), Err(Error::Unsupported(_))));
        assert!(FormulaInstance::parse("E(x,q)", &bind).is_err());
        assert!(FormulaInstance::parse("E(x,a", &bind).is_err());
        assert!(FormulaInstance::parse("E(x,a) &", &bind).is_err());
        assert!(matches!(FormulaInstance::parse("E(a,b)", &bind), Err(Error::Unsupported(_))));
        assert!(FormulaInstance::parse("x == a", &bind).is_err());
    }

    #[test]
    fn precedence_and_rendering() {
        let f = FormulaInstance::parse("!E(x,a) | x=b & distle3(x,c)", &bind).unwrap();
        assert_eq!(f.to_string(), "!E(x,a) | (x=b & distle3(x,c))");
        let g = FormulaInstance::parse("(E(x,a) | x=b) & x=x", &bind).unwrap();
        assert_eq!(g.to_string(), "(E(x,a) | x=b) & x=x");
    }

    #[test]
    fn contradictions_show_in_the_normal_form() {
        let f = FormulaInstance::parse("E(x,a) & !E(x,a)", &bind).unwrap();
        let dnf = f.formula.dnf(1).unwrap();
        assert!(dnf.iter().all(Clause::is_contradictory));
        let g = FormulaInstance::parse("dist2(x,a) & dist2(x,b)", &bind).unwrap();
        let dnf = g.formula.dnf(2).unwrap();
        assert_eq!(dnf.len(), 1);
        assert_eq!(dnf[0].bounds, vec![Interval { lo: 2, hi: Some(2) }; 2]);
    }

    fn formula_strategy() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            Just(Formula::top()),
            (0usize..2).prop_map(|p| Formula::Atom(Atom::Edge(p))),
            (0usize..2).prop_map(|p| Formula::Atom(Atom::Eq(p))),
            (0usize..=K_MAX, 0usize..2).prop_map(|(k, p)| Formula::Atom(Atom::Dist(k, p))),
            (0usize..=K_MAX, 0usize..2).prop_map(|(k, p)| Formula::Atom(Atom::DistLe(k, p))),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| Formula::or(a, b)),
            ]
        })
    }

    proptest! {
        #[test]
        fn normal_form_is_equivalent(f in formula_strategy(), d0 in proptest::option::of(0usize..7), d1 in proptest::option::of(0usize..7)) {
            let dist = |p: usize| if p == 0 { d0 } else { d1 };
            let dnf = f.dnf(2).unwrap();
            let by_dnf = dnf.iter().any(|c| c.bounds.iter().enumerate().all(|(p, i)| i.contains(dist(p))));
            prop_assert_eq!(by_dnf, f.eval_with(&dist));
        }

        #[test]
        fn rendering_parses_back(f in formula_strategy()) {
            let names = ["a", "b"];
            let text = f.render(&|p| names[p].to_string());
            let g = FormulaInstance::parse(&text, &bind).unwrap();
            let back = g.formula.remap(&|p| bind(&g.names[p]).unwrap());
            for d0 in [None, Some(0), Some(1), Some(2), Some(3), Some(5)] {
                for d1 in [None, Some(0), Some(2), Some(4)] {
                    let dist = |p: usize| if p == 0 { d0 } else { d1 };
                    prop_assert_eq!(back.eval_with(&dist), f.eval_with(&dist));
                }
            }
        }
    }
}
