//! Forking against measure zero, row by row.
//!
//! Forking is read off the dimension: `φ(x, a)` does not fork when some
//! legal extension has a realization `c` with `d(c/a) = d(c)`. The search
//! runs over the same witness profiles used for inconsistency, glued onto
//! the host.

use std::fmt;

use super::certify::{certify_zero, ZeroCertificate, ZeroOutcome};
use super::system::{build_constraint_system, ConstraintSystem};
use crate::class::ClassSpec;
use crate::error::{Error, Result};
use crate::formula::FormulaInstance;
use crate::graph::{FinGraph, VertexSet};
use crate::inconsistency::{explore, Profile};
use crate::predim::{ClosureMode, Dim};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ForkStatus {
    Nonforking { witness: String },
    Forking { reason: String },
    Undecided(String),
}

impl ForkStatus {
    pub fn label(&self) -> &'static str {
        match self {
            ForkStatus::Nonforking { .. } => "NONFORKING",
            ForkStatus::Forking { .. } => "FORKING",
            ForkStatus::Undecided(_) => "UNDECIDED-FORKING",
        }
    }

    fn detail(&self) -> &str {
        match self {
            ForkStatus::Nonforking { witness } => witness,
            ForkStatus::Forking { reason } => reason,
            ForkStatus::Undecided(why) => why,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ZeroStatus {
    Zero(ZeroCertificate),
    Open(String),
}

impl ZeroStatus {
    pub fn label(&self) -> &'static str {
        match self {
            ZeroStatus::Zero(_) => "ZERO",
            ZeroStatus::Open(_) => "OPEN",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForkZeroRow {
    pub instance: String,
    pub var: usize,
    pub fork: ForkStatus,
    pub zero: ZeroStatus,
}

impl fmt::Display for ForkZeroRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let zero_detail = match &self.zero {
            ZeroStatus::Zero(c) if c.steps.len() == 1 => "certificate of 1 step".to_string(),
            ZeroStatus::Zero(c) => format!("certificate of {} steps", c.steps.len()),
            ZeroStatus::Open(why) => why.clone(),
        };
        write!(
            f,
            "row {:<28} v{:<3} {:<18} {:<5} | {} | {}",
            self.instance,
            self.var,
            self.fork.label(),
            self.zero.label(),
            self.fork.detail(),
            zero_detail
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Comparison {
    pub system: ConstraintSystem,
    pub rows: Vec<ForkZeroRow>,
}

impl Comparison {
    pub fn row(&self, instance: &str) -> Option<&ForkZeroRow> {
        self.rows.iter().find(|r| r.instance == instance)
    }
}

pub fn compare_fork_vs_zero(class: &ClassSpec, g: &FinGraph, fragment: &[FormulaInstance]) -> Result<Comparison> {
    let system = build_constraint_system(class, g, fragment)?;
    let mut rows = Vec::new();
    for inst in fragment {
        let text = inst.to_string();
        let var = system.var_of_instance(&text).expect("registered");
        let fork = match fork_status(class, g, inst) {
            Ok(s) => s,
            Err(e @ (Error::Resource(_) | Error::Unsupported(_))) => ForkStatus::Undecided(e.to_string()),
            Err(e) => return Err(e),
        };
        let zero = match certify_zero(&system, var) {
            ZeroOutcome::Zero(c) => ZeroStatus::Zero(c),
            ZeroOutcome::Unknown(why) => ZeroStatus::Open(why),
        };
        rows.push(ForkZeroRow {
            instance: text,
            var,
            fork,
            zero,
        });
    }
    Ok(Comparison { system, rows })
}

fn fork_status(class: &ClassSpec, g: &FinGraph, inst: &FormulaInstance) -> Result<ForkStatus> {
    let params: VertexSet = inst.params.iter().copied().collect();
    let mut best: Option<(Dim, Dim)> = None;
    let mut witness = None;
    let mut unglued = false;
    let mut legal = 0usize;
    explore(class, g, inst, &mut |profile| {
        let Profile::Legal { glued } = profile else { return Ok(false) };
        legal += 1;
        let Some(w) = glued else {
            unglued = true;
            return Ok(false);
        };
        let x = VertexSet::singleton(w.x);
        let h = &w.amalgam;
        let dx = class.pre.dimension(h, x)?;
        let rel = class.pre.relative_dimension(h, x, params)?;
        if best.as_ref().is_none_or(|b| rel > b.0) {
            best = Some((rel, dx));
        }
        if rel == dx && !params.contains(w.x) {
            let closure = class.pre.closure(h, x.union(params), ClosureMode::Weak)?;
            let names: Vec<String> = closure.iter().map(|v| w.name(v)).collect();
            witness = Some(format!(
                "d(x/{}) = {rel} = d(x) via closure {{{}}}",
                over(inst),
                names.join(",")
            ));
            return Ok(true);
        }
        Ok(false)
    })?;
    Ok(match (witness, best) {
        (Some(witness), _) => ForkStatus::Nonforking { witness },
        _ if unglued => ForkStatus::Undecided("a legal profile could not be glued onto the host".into()),
        (None, None) if legal == 0 => ForkStatus::Forking {
            reason: "no legal realization".into(),
        },
        (None, Some((rel, dx))) => ForkStatus::Forking {
            reason: format!("every realization drops dimension: d(x/{}) <= {rel} < {dx}", over(inst)),
        },
        (None, None) => ForkStatus::Undecided("no realization examined".into()),
    })
}

fn over(inst: &FormulaInstance) -> String {
    if inst.names.is_empty() {
        "∅".to_string()
    } else {
        inst.names.join(",")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fragment(texts: &[&str]) -> Vec<FormulaInstance> {
        let bind = |n: &str| match n {
            "a" => Some(0),
            "b" => Some(1),
            _ => None,
        };
        texts.iter().map(|t| FormulaInstance::parse(t, &bind).unwrap()).collect()
    }

    #[test]
    fn headline_rows() {
        let class = ClassSpec::p0();
        let g = FinGraph::cycle(6);
        let frag = fragment(&[
            "x=x",
            "dist2(x,a)",
            "dist2(x,b)",
            "dist2(x,a) & dist2(x,b)",
            "E(x,a)",
            "E(x,b)",
            "E(x,a) & E(x,b)",
            "!E(x,a)",
        ]);
        let cmp = compare_fork_vs_zero(&class, &g, &frag).unwrap();
        let row = |t: &str| cmp.row(t).unwrap();
        let d2 = row("dist2(x,a)");
        assert_eq!((d2.fork.label(), d2.zero.label()), ("NONFORKING", "ZERO"));
        assert!(d2.fork.detail().contains("d(x/a) = 2 = d(x)"), "{}", d2.fork.detail());
        let ZeroStatus::Zero(cert) = &d2.zero else { unreachable!() };
        assert!(cert.replay(&cmp.system));
        let text = cert.to_string();
        let last_step = text.lines().rfind(|l| l.starts_with("step")).unwrap();
        assert!(last_step.contains("square-root-of-zero"), "{text}");
        assert!(text.trim_end().ends_with("for every invariant Keisler measure on the fragment"));

        let e = row("E(x,a)");
        assert_eq!((e.fork.label(), e.zero.label()), ("FORKING", "ZERO"));
        let top = row("x=x");
        assert_eq!((top.fork.label(), top.zero.label()), ("NONFORKING", "OPEN"));
        let ne = row("!E(x,a)");
        assert_eq!((ne.fork.label(), ne.zero.label()), ("NONFORKING", "OPEN"));
        assert_eq!(row("dist2(x,a) & dist2(x,b)").fork.label(), "FORKING");
    }
}
