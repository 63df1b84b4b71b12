mod common;

use common::{brute_member, distances};
use hrushovski::amalgam::build_generic;
use hrushovski::class::ClassSpec;
use hrushovski::formula::{Atom, Formula, FormulaInstance};
use hrushovski::graph::FinGraph;
use hrushovski::inconsistency::{certify_inconsistent, Consistency};
use hrushovski::independence::{search_independence, IndependenceMode};
use proptest::prelude::*;

const P0: [usize; 3] = [3, 4, 5];

fn instance(text: &str, a: usize, b: usize) -> FormulaInstance {
    FormulaInstance::parse(text, &|n| match n {
        "a" => Some(a),
        "b" => Some(b),
        _ => None,
    })
    .unwrap()
}

/// Every graph on `a, b, x` and up to two more vertices, with `a-b` an edge
/// and `x` at distance two from both, contains a forbidden cycle.
#[test]
fn no_small_graph_puts_x_two_steps_from_an_edge() {
    let (a, b, x) = (0, 1, 2);
    let mut realizing = 0;
    for n in 3..=5 {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        for mask in 0u32..(1 << pairs.len()) {
            let edges: Vec<(usize, usize)> = pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, e)| *e).collect();
            if !edges.contains(&(a, b)) {
                continue;
            }
            let g = FinGraph::from_edges(n, &edges).unwrap();
            let d = distances(&g, x);
            if d[a] == Some(2) && d[b] == Some(2) {
                realizing += 1;
                assert!(!brute_member(&g, &P0), "{g}");
            }
        }
    }
    assert!(realizing > 0);

    let class = ClassSpec::p0();
    let g = FinGraph::path(6);
    let cert = certify_inconsistent(&class, &g, &instance("dist2(x,a) & dist2(x,b)", 2, 3)).unwrap();
    let cert = cert.certificate().expect("inconsistent");
    let mut patterns: Vec<&str> = cert.cases.iter().map(|c| c.violation.pattern().unwrap()).collect();
    patterns.sort();
    assert_eq!(patterns, ["C3", "C5"]);
    assert!(cert.replay(&class).unwrap());
}

/// Whether some extension of `g` by at most two vertices (or `g` itself)
/// lies in the class and realizes `target` at one of its vertices.
fn small_realization(g: &FinGraph, target: &FormulaInstance) -> bool {
    let n = g.order();
    let realized = |h: &FinGraph| brute_member(h, &P0) && (0..h.order()).any(|x| target.holds_at(h, x));
    if realized(g) {
        return true;
    }
    for extra in 1..=2 {
        let m = n + extra;
        let slots: Vec<(usize, usize)> = (n..m).flat_map(|v| (0..v).map(move |u| (u, v))).collect();
        for mask in 0u64..(1 << slots.len()) {
            let mut h = g.clone();
            for _ in 0..extra {
                h.add_vertex().unwrap();
            }
            for (i, &(u, v)) in slots.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    h.add_edge(u, v).unwrap();
                }
            }
            if realized(&h) {
                return true;
            }
        }
    }
    false
}

fn atom() -> impl Strategy<Value = Formula> {
    prop_oneof![
        (0usize..2).prop_map(|p| Formula::Atom(Atom::Edge(p))),
        (0usize..2).prop_map(|p| Formula::Atom(Atom::Eq(p))),
        (0usize..2, 1usize..=3).prop_map(|(p, k)| Formula::Atom(Atom::Dist(k, p))),
        (0usize..2, 1usize..=3).prop_map(|(p, k)| Formula::Atom(Atom::DistLe(k, p))),
    ]
}

fn formula() -> impl Strategy<Value = Formula> {
    atom().prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::or(a, b)),
        ]
    })
}

fn host() -> impl Strategy<Value = (FinGraph, usize, usize)> {
    prop_oneof![
        Just((FinGraph::path(4), 1, 2)),
        Just((FinGraph::path(5), 1, 3)),
        Just((FinGraph::path(5), 0, 4)),
        Just((FinGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap(), 0, 2)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Inconsistency certificates replay and are never contradicted by a
    /// small realization; consistency witnesses really realize the formula.
    #[test]
    fn verdicts_agree_with_small_realizations(f in formula(), (g, a, b) in host()) {
        let class = ClassSpec::p0();
        let used = f.params();
        let f = f.remap(&|i| used.iter().position(|&u| u == i).unwrap());
        let (hosts, names): (Vec<usize>, Vec<String>) =
            used.iter().map(|&i| ([a, b][i], ["a", "b"][i].to_string())).unzip();
        let target = FormulaInstance::new(f, hosts, names).unwrap();
        match certify_inconsistent(&class, &g, &target).unwrap() {
            Consistency::Inconsistent(cert) => {
                prop_assert!(cert.replay(&class).unwrap());
                prop_assert!(!small_realization(&g, &target), "{target} realized on {g}");
            }
            Consistency::Consistent(w) => {
                prop_assert!(target.holds_at(&w.amalgam, w.x));
                prop_assert!(brute_member(&w.amalgam, &P0));
                for v in 0..g.order() {
                    for u in 0..v {
                        prop_assert_eq!(g.has_edge(u, v), w.amalgam.has_edge(u, v));
                    }
                }
            }
            Consistency::Undetermined(why) => prop_assert!(false, "undetermined: {why}"),
        }
    }
}

/// The strong form fails on adjacent parameters and the standard form
/// holds on every tested quadruple, at every budget from 20 to 60.
#[test]
fn independence_verdicts_are_stable_across_budgets() {
    let class = ClassSpec::p0();
    for budget in (20..=60).step_by(10) {
        let g = build_generic(&class, budget, 0).unwrap().graph;

        let strong = search_independence(&class, &g, IndependenceMode::Strong, 64).unwrap();
        let adjacent_failure = strong.iter().any(|r| {
            let (a, b) = (r.quadruple.a.iter().next().unwrap(), r.quadruple.b.iter().next().unwrap());
            g.has_edge(a.min(b), a.max(b)) && !r.outcome.holds()
        });
        assert!(adjacent_failure, "budget {budget}: no strong failure on an edge");

        let standard = search_independence(&class, &g, IndependenceMode::Standard, 64).unwrap();
        assert!(!standard.is_empty(), "budget {budget}");
        for r in &standard {
            assert!(r.outcome.holds(), "budget {budget}: {} {}", r.quadruple, r.outcome);
        }
    }
}
