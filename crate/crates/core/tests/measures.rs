use std::collections::BTreeSet;

use hrushovski::class::ClassSpec;
use hrushovski::formula::FormulaInstance;
use hrushovski::graph::FinGraph;
use hrushovski::measure::{
    build_constraint_system, check_ergodic_finite, close_group, compare_fork_vs_zero, er_product_check,
    ergodic_decompose_finite, parse_q, solve_feasible, ConstraintSystem, EdgeConjunction, FiniteAction, Relation,
    SampleMode, ZeroStatus, Q,
};
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

fn fragment(texts: &[&str], a: usize, b: usize) -> Vec<FormulaInstance> {
    let bind = |n: &str| match n {
        "a" => Some(a),
        "b" => Some(b),
        _ => None,
    };
    texts.iter().map(|t| FormulaInstance::parse(t, &bind).unwrap()).collect()
}

const TEXTS: [&str; 7] = [
    "x=x",
    "dist2(x,a)",
    "E(x,a)",
    "!E(x,a)",
    "!dist2(x,a)",
    "dist2(x,a) & dist2(x,b)",
    "E(x,a) & E(x,b)",
];

fn hosts() -> Vec<(FinGraph, usize, usize)> {
    vec![(FinGraph::cycle(6), 0, 1), (FinGraph::cycle(6), 0, 3), (FinGraph::cycle(8), 0, 4)]
}

/// Some point of a rational grid satisfies every constraint of `sys` with
/// `var` positive.
fn grid_has_positive(sys: &ConstraintSystem, var: usize) -> bool {
    let n = sys.vars.len();
    let mut steps = 12i64;
    while steps > 1 && (steps as f64 + 1.0).powi(n as i32) > 60_000.0 {
        steps -= 1;
    }
    let mut idx = vec![0i64; n];
    loop {
        if idx[var] > 0 {
            let values: Vec<Q> = idx.iter().map(|&i| q(i, steps)).collect();
            if sys.satisfied_by(&values) {
                return true;
            }
        }
        let mut k = 0;
        while k < n && idx[k] == steps {
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            return false;
        }
        idx[k] += 1;
    }
}

#[test]
fn zero_certificates_are_sound() {
    let class = ClassSpec::p0();
    let mut zeros = 0;
    for (g, a, b) in hosts() {
        let cmp = compare_fork_vs_zero(&class, &g, &fragment(&TEXTS, a, b)).unwrap();
        for row in &cmp.rows {
            let ZeroStatus::Zero(cert) = &row.zero else { continue };
            zeros += 1;
            assert!(cert.replay(&cmp.system), "{}", row.instance);
            let pushed = cmp.system.with_bound(row.var, Relation::Ge, q(1, 1000), "target >= 1/1000");
            assert!(solve_feasible(&pushed).unwrap().is_infeasible(), "{}", row.instance);
            assert!(!grid_has_positive(&cmp.system, row.var), "{}", row.instance);
        }
    }
    // Only the adjacent pair forces measure zero: dist2(x,a), E(x,a) and
    // both conjunctions.
    assert_eq!(zeros, 4);
}

#[test]
fn open_rows_have_positive_solutions() {
    let class = ClassSpec::p0();
    for (i, (g, a, b)) in hosts().into_iter().enumerate() {
        let cmp = compare_fork_vs_zero(&class, &g, &fragment(&TEXTS, a, b)).unwrap();
        for row in &cmp.rows {
            if !matches!(row.zero, ZeroStatus::Open(_)) {
                continue;
            }
            let pushed = cmp.system.with_bound(row.var, Relation::Ge, q(1, 1000), "target >= 1/1000");
            let sol = solve_feasible(&pushed).unwrap();
            let values = sol.solution().unwrap_or_else(|| panic!("{} has no solution", row.instance));
            assert!(cmp.system.satisfied_by(values));
            assert!(values[row.var] >= q(1, 1000));
        }
        let ne = cmp.row("!E(x,a)").unwrap();
        assert_eq!(ne.zero.label(), "OPEN");
        if i > 0 {
            continue;
        }
        // On an edge, E(x,a) is null, so its complement has full measure.
        let sol = solve_feasible(&cmp.system.with_bound(ne.var, Relation::Ge, q(1, 1000), "")).unwrap();
        assert_eq!(sol.solution().unwrap()[ne.var], Q::one());
    }
}

#[test]
fn rotations_share_variables() {
    let class = ClassSpec::p0();
    let g = FinGraph::cycle(6);
    let mut texts = Vec::new();
    let mut frag = Vec::new();
    for r in 0..6 {
        let (a, b) = (r, (r + 2) % 6);
        let inst = &fragment(&["dist2(x,a) & E(x,b)"], a, b)[0];
        // Same rendered text for every rotation, so rename the parameters.
        let inst = FormulaInstance::new(inst.formula.clone(), inst.params.clone(), vec![format!("a{r}"), format!("b{r}")]).unwrap();
        texts.push(inst.to_string());
        frag.push(inst);
    }
    let sys = build_constraint_system(&class, &g, &frag).unwrap();
    let vars: BTreeSet<usize> = texts.iter().map(|t| sys.var_of_instance(t).unwrap()).collect();
    assert_eq!(vars.len(), 1, "{sys}");
}

/// A random permutation group of order at most 24 on at most 12 points
/// with an invariant measure, built from orbit weights.
fn random_action(rng: &mut ChaCha8Rng) -> FiniteAction {
    loop {
        let n = rng.gen_range(1..=12);
        let gens: Vec<Vec<usize>> = (0..rng.gen_range(1..=2))
            .map(|_| {
                let mut p: Vec<usize> = (0..n).collect();
                // Permute only a few points so small groups are common.
                let k = rng.gen_range(1..=n.min(5));
                let idx: Vec<usize> = (0..n).collect::<Vec<_>>().choose_multiple(rng, k).copied().collect();
                let mut moved = idx.clone();
                moved.shuffle(rng);
                for (from, to) in idx.iter().zip(&moved) {
                    p[*from] = *to;
                }
                p
            })
            .collect();
        let Ok(group) = close_group(n, &gens, 24) else { continue };
        let orbits = orbits_oracle(n, &group);
        let weights: Vec<i64> = orbits.iter().map(|_| rng.gen_range(0..4)).collect();
        let total: i64 = orbits.iter().zip(&weights).map(|(o, w)| o.len() as i64 * w).sum();
        if total == 0 {
            continue;
        }
        let mut measure = vec![Q::zero(); n];
        for (o, &w) in orbits.iter().zip(&weights) {
            for &p in o {
                measure[p] = q(w, total);
            }
        }
        return FiniteAction::new(n, group, measure).unwrap();
    }
}

/// Orbits by repeated closure under the group elements.
fn orbits_oracle(n: usize, group: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for p in 0..n {
        if seen[p] {
            continue;
        }
        let orbit: BTreeSet<usize> = group.iter().map(|g| g[p]).chain([p]).collect();
        for &o in &orbit {
            seen[o] = true;
        }
        out.push(orbit.into_iter().collect());
    }
    out
}

/// Every subset closed under the group has mass 0 or 1.
fn ergodic_oracle(action: &FiniteAction) -> bool {
    let n = action.points;
    (1u32..1 << n).all(|set| {
        let inside = |p: usize| set >> p & 1 == 1;
        let closed = action.group.iter().all(|g| (0..n).all(|p| !inside(p) || inside(g[p])));
        let m: Q = (0..n).filter(|&p| inside(p)).map(|p| action.measure[p].clone()).sum();
        !closed || m.is_zero() || m.is_one()
    })
}

#[test]
fn decompositions_reconstruct_and_are_unique() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let action = random_action(&mut rng);
        let dec = ergodic_decompose_finite(&action).unwrap();
        assert_eq!(dec.reconstruct(), action.measure, "{}", action.to_text());

        // The ergodic measures are the uniform orbit measures, which are
        // linearly independent, so the weights are forced.
        let expected: Vec<(Vec<usize>, Q)> = orbits_oracle(action.points, &action.group)
            .into_iter()
            .map(|o| {
                let m: Q = o.iter().map(|&p| action.measure[p].clone()).sum();
                (o, m)
            })
            .filter(|(_, m)| !m.is_zero())
            .collect();
        let got: Vec<(Vec<usize>, Q)> = dec.components.iter().map(|c| (c.orbit.clone(), c.weight.clone())).collect();
        assert_eq!(got, expected);
        let total: Q = got.iter().map(|c| c.1.clone()).sum();
        assert!(total.is_one());

        if action.points <= 10 {
            let report = check_ergodic_finite(&action).unwrap();
            let oracle = ergodic_oracle(&action);
            assert_eq!(report.ergodic, oracle, "{}", action.to_text());
            assert_eq!(report.sweep, Some(oracle));
            assert_eq!(report.product_witness, oracle);
        }
    }
}

/// For an ergodic measure, every invariant function is constant off a null
/// set: its level sets are invariant, so each has mass 0 or 1.
#[test]
fn invariant_functions_are_constant_almost_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0;
    while checked < 50 {
        let action = random_action(&mut rng);
        if action.points > 10 || !ergodic_oracle(&action) {
            continue;
        }
        checked += 1;
        let orbits = orbits_oracle(action.points, &action.group);
        let values: Vec<u32> = orbits.iter().map(|_| rng.gen_range(0..3)).collect();
        let mut f = vec![0; action.points];
        for (o, &v) in orbits.iter().zip(&values) {
            for &p in o {
                f[p] = v;
            }
        }
        let level_masses: Vec<Q> = (0..3)
            .map(|v| (0..action.points).filter(|&p| f[p] == v).map(|p| action.measure[p].clone()).sum())
            .collect();
        assert_eq!(level_masses.iter().filter(|m| m.is_one()).count(), 1);
        assert!(level_masses.iter().all(|m| m.is_zero() || m.is_one()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_product_deviation_is_zero(
        num in 0i64..=12,
        den in 1i64..=12,
        phi in proptest::collection::vec(any::<bool>(), 1..=3),
        psi in proptest::collection::vec(any::<bool>(), 1..=3),
    ) {
        prop_assume!(num <= den);
        let render = |lits: &[bool], prefix: &str| {
            lits.iter()
                .enumerate()
                .map(|(i, &pos)| format!("{}E(x,{prefix}{i})", if pos { "" } else { "!" }))
                .collect::<Vec<_>>()
                .join(" & ")
        };
        let phi = EdgeConjunction::parse(&render(&phi, "a")).unwrap();
        let psi = EdgeConjunction::parse(&render(&psi, "b")).unwrap();
        let p = parse_q(&format!("{num}/{den}")).unwrap();
        let r = er_product_check(&p, &phi, &psi, SampleMode::Exact).unwrap();
        prop_assert!(r.deviation.is_zero());
        prop_assert!(r.pass);
        // Oracle: count literal signs directly.
        let pos = phi.literals.iter().chain(&psi.literals).filter(|l| l.1).count() as i32;
        let neg = (phi.literals.len() + psi.literals.len()) as i32 - pos;
        let expect = num_traits::pow(p.clone(), pos as usize) * num_traits::pow(Q::one() - &p, neg as usize);
        prop_assert_eq!(r.exact, expect);
    }
}
