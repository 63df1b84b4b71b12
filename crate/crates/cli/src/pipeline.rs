//! The full run: build, verify, compare forking with measure zero, certify,
//! audit, and check expectations.

use std::path::Path;

use hrushovski::amalgam::build_generic;
use hrushovski::class::ClassSpec;
use hrushovski::error::{Error, Result};
use hrushovski::formula::FormulaInstance;
use hrushovski::graph::{FinGraph, VertexSet};
use hrushovski::inconsistency::{certify_inconsistent, Consistency};
use hrushovski::independence::{test_independence_theorem, IndependenceMode, IndependenceOutcome, Quadruple};
use hrushovski::measure::{
    compare_fork_vs_zero, format_q, parse_q, solve_feasible, Feasibility, ForkZeroRow, Relation, ZeroStatus,
};
use hrushovski::verify::verify_construction_properties;

use crate::artifacts::ArtifactStore;
use crate::config::{ParamSelector, RunConfig};
use crate::report::{Format, Report, Section};

/// Lower bound pushed onto a variable when auditing its zero status.
pub const AUDIT_BOUND: &str = "1/1000";

/// Candidate `(c0, c1)` pairs tried per independence check.
const QUADRUPLE_TRIES: usize = 64;

pub struct PipelineOutput {
    pub report: Report,
    /// Rendered report, also stored under `report_name`.
    pub rendered: String,
    pub report_name: String,
}

pub fn run_pipeline(config: &RunConfig, out: &Path, format: Format) -> Result<PipelineOutput> {
    let class = &config.class;
    let mut store = ArtifactStore::open(out)?;
    let class_name = store.put("class", "cls", &class.to_text())?;
    let mut report = Report::new(format!("pipeline {class_name} budget {} seed {}", config.budget, config.seed));

    let approx = build_generic(class, config.budget, config.seed)?;
    let g = &approx.graph;
    let approx_name = store.put("approx", "txt", &approx.to_text())?;
    let graph_name = store.put("graph", "g", &g.serialize())?;
    let mut s = Section::new("approximation");
    s.line("class", class_name.clone());
    s.line("vertices", g.order().to_string());
    s.line("edges", g.edge_count().to_string());
    s.line("girth", g.girth().to_string());
    s.line("steps", approx.log.len().to_string());
    s.line("approximation", approx_name.clone());
    s.line("graph", graph_name);
    report.push(s);

    let props = verify_construction_properties(class, &approx)?;
    let mut s = Section::new("properties");
    for c in &props.clauses {
        s.line(c.name, format!("{:<10} {}", c.status.to_string(), c.witness));
    }
    s.line("unresolved", props.unresolved_flags.to_string());
    for a in &props.assumed {
        s.line("assumed", *a);
    }
    if config.require_properties {
        s.require(props.passed());
        if !props.passed() {
            s.line("witness", approx_name.clone());
        }
    }
    report.push(s);

    let (a, b) = select_params(g, config.params)?;
    let fragment = bind_fragment(&config.fragment, a, b)?;
    let cmp = compare_fork_vs_zero(class, g, &fragment)?;
    let system_text = cmp.system.to_string();
    let system_name = store.put("system", "txt", &system_text)?;
    let mut s = Section::new("fragment");
    s.line("params", format!("a={a} b={b} ({})", config.params));
    s.line("system", format!("{system_name} ({} variables, {} constraints)", cmp.system.vars.len(), cmp.system.constraints.len()));
    for w in &cmp.system.warnings {
        s.line("warning", w.clone());
    }
    for o in &cmp.system.omitted {
        s.line("omitted", o.clone());
    }
    for row in &cmp.rows {
        s.line("row", row_text(row));
    }
    report.push(s);

    let mut s = Section::new("certificates");
    for row in &cmp.rows {
        if let ZeroStatus::Zero(cert) = &row.zero {
            let name = store.put("zero", "txt", &format!("{cert}"))?;
            let replays = cert.replay(&cmp.system);
            s.require(replays);
            s.line("zero", format!("{} replays {replays} {name}", row.instance));
            let last = cert.to_string().lines().rfind(|l| l.starts_with("step")).unwrap_or_default().to_string();
            s.line("last-step", last);
        }
    }
    for inst in &fragment {
        if let Consistency::Inconsistent(cert) = certify_inconsistent(class, g, inst)? {
            let name = store.put("inconsistent", "txt", &cert.to_string())?;
            let replays = cert.replay(class)?;
            s.require(replays);
            let patterns: Vec<String> = cert
                .cases
                .iter()
                .map(|c| c.violation.pattern().unwrap_or("predimension").to_string())
                .collect();
            s.line(
                "inconsistent",
                format!("{inst} cases {} replays {replays} {name}", if patterns.is_empty() { "none".to_string() } else { patterns.join(",") }),
            );
        }
    }
    report.push(s);

    if config.independence {
        let mut s = Section::new("independence");
        for (mode, label, selector) in [
            (IndependenceMode::Strong, "strong", ParamSelector::Adjacent),
            (IndependenceMode::Standard, "standard", ParamSelector::DistanceTwo),
        ] {
            let Ok((pa, pb)) = select_params(g, selector) else {
                s.line(label, format!("no {selector} pair in the approximation"));
                continue;
            };
            match independence_check(class, g, pa, pb, mode)? {
                Some((q, outcome)) => {
                    let name = store.put("indep", "txt", &format!("{label} {q}\n{outcome}"))?;
                    s.line(label, format!("{q} ({selector}) {} {name}", outcome_summary(&outcome)));
                }
                None => s.line(label, format!("a={pa} b={pb}: no quadruple meets the hypotheses")),
            }
        }
        report.push(s);
    }

    if config.audit {
        let mut s = Section::new("audit");
        let bound = parse_q(AUDIT_BOUND)?;
        for row in &cmp.rows {
            let pushed = cmp.system.with_bound(row.var, Relation::Ge, bound.clone(), &format!("audit: target >= {AUDIT_BOUND}"));
            let result = solve_feasible(&pushed)?;
            let (ok, what) = match (&row.zero, &result) {
                (ZeroStatus::Zero(_), Feasibility::Infeasible { .. }) => (true, "zero"),
                (ZeroStatus::Open(_), Feasibility::Feasible(values)) => {
                    (values[row.var] >= bound && cmp.system.satisfied_by(values), "open")
                }
                (ZeroStatus::Zero(_), _) => (false, "zero"),
                (ZeroStatus::Open(_), _) => (false, "open"),
            };
            s.require(ok);
            let mut line = format!("{} >= {AUDIT_BOUND}: {}", row.instance, result.render());
            if let Feasibility::Feasible(values) = &result {
                line.push_str(&format!(" (value {})", format_q(&values[row.var])));
            }
            if !ok {
                let witness = store.put("audit", "txt", &pushed.to_string())?;
                line.push_str(&format!(" FAIL witness {witness}"));
            }
            s.line(what, line);
        }
        report.push(s);
    }

    if !config.expectations.is_empty() {
        let mut s = Section::new("expectations");
        for e in &config.expectations {
            let got = cmp.row(&e.instance).map(|r| (r.fork.label(), r.zero.label()));
            let ok = got == Some((e.fork.as_str(), e.zero.as_str()));
            s.require(ok);
            let detail = match got {
                Some((f, z)) if ok => format!("{f} {z} PASS"),
                Some((f, z)) => format!("got {f} {z} FAIL witness {system_name}"),
                None => format!("not in the fragment FAIL witness {system_name}"),
            };
            s.line(e.instance.clone(), format!("{} {} -> {detail}", e.fork, e.zero));
        }
        report.push(s);
    }

    let rendered = report.render(format);
    let ext = match format {
        Format::Text => "txt",
        Format::Records => "records",
    };
    let report_name = store.put("report", ext, &rendered)?;
    Ok(PipelineOutput {
        report,
        rendered,
        report_name,
    })
}

fn row_text(row: &ForkZeroRow) -> String {
    row.to_string().trim_start_matches("row ").to_string()
}

/// The least pair `(a, b)`, `a < b`, in the selected relation.
pub fn select_params(g: &FinGraph, selector: ParamSelector) -> Result<(usize, usize)> {
    let n = g.order();
    for a in 0..n {
        let dist = g.distances_from(a);
        for (b, d) in dist.iter().enumerate().skip(a + 1) {
            let hit = match selector {
                ParamSelector::Adjacent => *d == Some(1),
                ParamSelector::DistanceTwo => *d == Some(2),
            };
            if hit {
                return Ok((a, b));
            }
        }
    }
    Err(Error::InvalidInput(format!("the approximation has no {selector} pair")))
}

/// Parses templates with `a` and `b` bound to host vertices, dropping
/// duplicates.
pub fn bind_fragment(templates: &[String], a: usize, b: usize) -> Result<Vec<FormulaInstance>> {
    let bind = |n: &str| match n {
        "a" => Some(a),
        "b" => Some(b),
        _ => None,
    };
    let mut out: Vec<FormulaInstance> = Vec::new();
    for t in templates {
        let inst = FormulaInstance::parse(t, &bind)?;
        if !out.iter().any(|o| o.to_string() == inst.to_string()) {
            out.push(inst);
        }
    }
    Ok(out)
}

/// Tests a quadruple over `a`, `b` with `c0` two steps from `a` and `c1`
/// two steps from `b`, preferring each `c` three steps from the other
/// parameter. Quadruples failing a hypothesis are skipped.
pub fn independence_check(
    class: &ClassSpec,
    g: &FinGraph,
    a: usize,
    b: usize,
    mode: IndependenceMode,
) -> Result<Option<(Quadruple, IndependenceOutcome)>> {
    let candidates = |near: usize, far: usize| {
        let dn = g.distances_from(near);
        let df = g.distances_from(far);
        let mut c: Vec<usize> = (0..g.order()).filter(|&v| dn[v] == Some(2) && v != a && v != b).collect();
        c.sort_by_key(|&v| (df[v] != Some(3), v));
        c
    };
    let (c0s, c1s) = (candidates(a, b), candidates(b, a));
    let mut tries = 0;
    for &c0 in &c0s {
        for &c1 in &c1s {
            if c0 == c1 {
                continue;
            }
            tries += 1;
            if tries > QUADRUPLE_TRIES {
                return Ok(None);
            }
            let q = Quadruple {
                a: VertexSet::singleton(a),
                b: VertexSet::singleton(b),
                c0: VertexSet::singleton(c0),
                c1: VertexSet::singleton(c1),
            };
            match test_independence_theorem(class, g, mode, &q) {
                Ok(outcome) => return Ok(Some((q, outcome))),
                Err(Error::InvalidInput(_)) => continue,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(None)
}

pub fn outcome_summary(outcome: &IndependenceOutcome) -> String {
    match outcome {
        IndependenceOutcome::Holds { amalgam, .. } => format!("HOLDS amalgam girth {}", amalgam.girth()),
        IndependenceOutcome::Fails { cases, .. } => {
            let labels: Vec<String> = cases
                .iter()
                .map(|c| format!("{} {}", c.label(), if c.shares_witness() { "shared" } else { "distinct" }))
                .collect();
            format!("FAILS {} cases: {}", cases.len(), labels.join(", "))
        }
    }
}
