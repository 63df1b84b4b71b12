//! One function per subcommand. Each returns a report whose required
//! sections decide the exit code.

use std::path::Path;

use hrushovski::acl::weakly_alg_independent;
use hrushovski::amalgam::{build_generic, GenericApproximation};
use hrushovski::class::{ClassSpec, Membership, Violation};
use hrushovski::error::{Error, Result};
use hrushovski::graph::{FinGraph, VertexSet};
use hrushovski::measure::{
    check_ergodic_finite, compare_fork_vs_zero, er_product_check, ergodic_decompose_finite, format_q, EdgeConjunction,
    FiniteAction, SampleMode, ZeroStatus, Q,
};
use hrushovski::verify::verify_construction_properties;

use crate::artifacts::ArtifactStore;
use crate::config::ParamSelector;
use crate::pipeline::{bind_fragment, select_params};
use crate::report::{Report, Section};

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

/// Where the host graph comes from: a graph or approximation file, or a
/// fresh build.
#[derive(Clone, Debug)]
pub enum Host {
    File(std::path::PathBuf),
    Build { budget: usize, seed: u64 },
}

impl Host {
    pub fn load(&self, class: &ClassSpec, store: &mut ArtifactStore) -> Result<(FinGraph, String)> {
        match self {
            Host::File(p) => Ok((FinGraph::parse(&read(p)?)?, p.display().to_string())),
            Host::Build { budget, seed } => {
                if *budget == 0 {
                    return Err(Error::InvalidInput("budget must be at least 1".into()));
                }
                let approx = build_generic(class, *budget, *seed)?;
                let name = store.put("approx", "txt", &approx.to_text())?;
                Ok((approx.graph, name))
            }
        }
    }
}

pub fn class_check(class: &ClassSpec, graph_path: &Path, store: &mut ArtifactStore) -> Result<Report> {
    let g = FinGraph::parse(&read(graph_path)?)?;
    let mut report = Report::new(format!("class check {}", graph_path.display()));
    let mut s = Section::new("class-check");
    s.line("graph", format!("{} vertices, {} edges", g.order(), g.edge_count()));
    match class.in_class(&g)? {
        Membership::Member => {
            s.require(true);
            s.line("result", "ACCEPT");
        }
        Membership::Rejected(v) => {
            s.require(false);
            let support: VertexSet = match &v {
                Violation::Forbidden { embedding, .. } => embedding.map.iter().copied().collect(),
                Violation::Predimension { set, .. } => *set,
            };
            let (witness, _) = g.induced(support);
            let name = store.put("witness", "g", &witness.serialize())?;
            s.line("result", format!("REJECT {v}"));
            s.line("witness", name);
        }
    }
    report.push(s);
    Ok(report)
}

pub fn generic_build(class: &ClassSpec, budget: usize, seed: u64, store: &mut ArtifactStore) -> Result<Report> {
    if budget == 0 {
        return Err(Error::InvalidInput("budget must be at least 1".into()));
    }
    let approx = build_generic(class, budget, seed)?;
    let mut report = Report::new(format!("generic build budget {budget} seed {seed}"));
    let mut s = Section::new("approximation");
    s.line("vertices", approx.graph.order().to_string());
    s.line("edges", approx.graph.edge_count().to_string());
    s.line("girth", approx.graph.girth().to_string());
    s.line("steps", approx.log.len().to_string());
    s.line("truncated", approx.truncated.to_string());
    s.line("approximation", store.put("approx", "txt", &approx.to_text())?);
    s.line("graph", store.put("graph", "g", &approx.graph.serialize())?);
    report.push(s);
    Ok(report)
}

pub fn props_verify(class: &ClassSpec, approx: &GenericApproximation, source: &str, store: &mut ArtifactStore) -> Result<Report> {
    let props = verify_construction_properties(class, approx)?;
    let mut report = Report::new(format!("props verify {source}"));
    let mut s = Section::new("properties");
    for c in &props.clauses {
        s.line(c.name, format!("{:<10} {}", c.status.to_string(), c.witness));
    }
    s.line("unresolved", props.unresolved_flags.to_string());
    for a in &props.assumed {
        s.line("assumed", *a);
    }
    s.require(props.passed());
    if !props.passed() {
        s.line("witness", store.put("approx", "txt", &approx.to_text())?);
    }
    report.push(s);
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndepRequirement {
    None,
    Weak,
    Dim,
}

pub fn indep(
    class: &ClassSpec,
    host: &Host,
    a: usize,
    b: usize,
    need: IndepRequirement,
    store: &mut ArtifactStore,
) -> Result<Report> {
    let (g, source) = host.load(class, store)?;
    let (sa, sb) = (VertexSet::singleton(a), VertexSet::singleton(b));
    g.check_set(sa.union(sb))?;
    let weak = weakly_alg_independent(class, &g, sa, sb, VertexSet::EMPTY)?;
    let dim = class.pre.d_independent(&g, sa, sb, VertexSet::EMPTY)?;
    let mut report = Report::new(format!("indep {a} {b} on {source}"));
    let mut s = Section::new("independence");
    s.line("acl(a)", weak.acl_ac.to_string());
    s.line("acl(b)", weak.acl_bc.to_string());
    s.line("acl(empty)", weak.acl_c.to_string());
    s.line("dimension", dim.to_string());
    if weak.unresolved {
        s.line("unresolved", "some closure has vertices without a finiteness certificate");
    }
    s.line(
        "result",
        format!("weakly independent: {}; d-independent: {}", weak.independent && !weak.unresolved, dim.independent),
    );
    match need {
        IndepRequirement::None => {}
        IndepRequirement::Weak => s.require(weak.independent && !weak.unresolved),
        IndepRequirement::Dim => s.require(dim.independent),
    }
    report.push(s);
    Ok(report)
}

/// Parameter binding for `certify-zero`: explicit vertices or a selector.
#[derive(Clone, Copy, Debug)]
pub enum Binding {
    Vertices(usize, usize),
    Select(ParamSelector),
}

/// Certifies `formula` null. The constraint system also covers the
/// `companions`, whose constraints a derivation may need.
pub fn certify_zero(
    class: &ClassSpec,
    host: &Host,
    formula: &str,
    companions: &[String],
    binding: Binding,
    store: &mut ArtifactStore,
) -> Result<Report> {
    let (g, source) = host.load(class, store)?;
    let (a, b) = match binding {
        Binding::Vertices(a, b) => (a, b),
        Binding::Select(sel) => select_params(&g, sel)?,
    };
    let mut templates = vec![formula.to_string()];
    templates.extend(companions.iter().cloned());
    let fragment = bind_fragment(&templates, a, b)?;
    for inst in &fragment {
        inst.check_host(&g)?;
    }
    let cmp = compare_fork_vs_zero(class, &g, &fragment)?;
    let row = &cmp.rows[0];
    let mut report = Report::new(format!("certify-zero {} on {source}", row.instance));
    let mut s = Section::new("certify-zero");
    s.line("params", format!("a={a} b={b}"));
    s.line("system", store.put("system", "txt", &cmp.system.to_string())?);
    s.line("fork", format!("{} {}", row.fork.label(), fork_detail(row)));
    match &row.zero {
        ZeroStatus::Zero(cert) => {
            s.require(cert.replay(&cmp.system));
            s.line("zero", format!("ZERO {}", store.put("zero", "txt", &cert.to_string())?));
            s.line("certificate", cert.to_string().trim_end().to_string());
        }
        ZeroStatus::Open(why) => {
            s.require(false);
            s.line("zero", format!("OPEN {why}"));
        }
    }
    report.push(s);
    Ok(report)
}

fn fork_detail(row: &hrushovski::measure::ForkZeroRow) -> String {
    let text = row.to_string();
    text.split(" | ").nth(1).unwrap_or_default().to_string()
}

pub fn decompose(action_path: &Path, store: &mut ArtifactStore) -> Result<Report> {
    let action = FiniteAction::parse(&read(action_path)?)?;
    let dec = ergodic_decompose_finite(&action)?;
    let erg = check_ergodic_finite(&action)?;
    let mut report = Report::new(format!("measure decompose {}", action_path.display()));
    let mut s = Section::new("decomposition");
    s.line("points", action.points.to_string());
    s.line("elements", action.group.len().to_string());
    for c in &dec.components {
        let pts: Vec<String> = c.orbit.iter().map(|p| p.to_string()).collect();
        s.line("component", format!("weight {} orbit {{{}}}", format_q(&c.weight), pts.join(",")));
    }
    s.line("measure", dec.to_string());
    let exact = dec.reconstruct() == action.measure;
    s.require(exact);
    s.line("reconstructs", exact.to_string());
    s.line("ergodic", erg.ergodic.to_string());
    if let Some(w) = &erg.witness {
        let pts: Vec<String> = w.iter().map(|p| p.to_string()).collect();
        s.line("split-by", format!("invariant set {{{}}}", pts.join(",")));
    }
    if let Some(sweep) = erg.sweep {
        s.line("subset-sweep", sweep.to_string());
    }
    s.line("action", store.put("action", "act", &action.to_text())?);
    report.push(s);
    Ok(report)
}

pub fn er_check(p: &Q, phi: &str, psi: &str, mode: SampleMode) -> Result<Report> {
    let phi = EdgeConjunction::parse(phi)?;
    let psi = EdgeConjunction::parse(psi)?;
    let r = er_product_check(p, &phi, &psi, mode)?;
    let mut report = Report::new(format!("measure er-check p {}", format_q(p)));
    let mut s = Section::new("er-check");
    for line in r.to_string().lines() {
        let (k, v) = line.split_once(' ').unwrap_or((line, ""));
        s.line(k, v.trim());
    }
    s.require(r.pass);
    report.push(s);
    Ok(report)
}
