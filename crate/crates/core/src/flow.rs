//! Maximum-weight closure by minimum cut, over exact rationals.
//!
//! The predimension `c·|X| - alpha·e(X)` is submodular, so minimising it over
//! supersets of a fixed set is a closure problem: choosing an edge earns
//! `alpha` but requires both endpoints, choosing a vertex costs `c`.

use std::collections::VecDeque;

use num_traits::{Signed, Zero};

use crate::graph::{FinGraph, VertexSet};
use crate::predim::Rational;

#[derive(Clone, Copy, Debug)]
enum Cap {
    Finite(Rational),
    Infinite,
}

impl Cap {
    fn positive(self) -> bool {
        match self {
            Cap::Finite(q) => q.is_positive(),
            Cap::Infinite => true,
        }
    }
}

struct Network {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    residual: Vec<Cap>,
}

impl Network {
    fn new(n: usize) -> Self {
        Network {
            head: vec![Vec::new(); n],
            to: Vec::new(),
            residual: Vec::new(),
        }
    }

    fn add(&mut self, u: usize, v: usize, cap: Cap) {
        self.head[u].push(self.to.len());
        self.to.push(v);
        self.residual.push(cap);
        self.head[v].push(self.to.len());
        self.to.push(u);
        self.residual.push(Cap::Finite(Rational::zero()));
    }

    /// Edmonds-Karp. Terminates over the rationals because every augmenting
    /// path is shortest.
    fn max_flow(&mut self, s: usize, t: usize) -> Rational {
        let mut total = Rational::zero();
        loop {
            let mut via = vec![usize::MAX; self.head.len()];
            let mut seen = vec![false; self.head.len()];
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &e in &self.head[u] {
                    let v = self.to[e];
                    if !seen[v] && self.residual[e].positive() {
                        seen[v] = true;
                        via[v] = e;
                        queue.push_back(v);
                    }
                }
            }
            if !seen[t] {
                return total;
            }
            let mut bottleneck: Option<Rational> = None;
            let mut v = t;
            while v != s {
                let e = via[v];
                if let Cap::Finite(q) = self.residual[e] {
                    bottleneck = Some(bottleneck.map_or(q, |b| b.min(q)));
                }
                v = self.to[e ^ 1];
            }
            let push = bottleneck.expect("source arcs are finite");
            let mut v = t;
            while v != s {
                let e = via[v];
                if let Cap::Finite(q) = &mut self.residual[e] {
                    *q -= push;
                }
                if let Cap::Finite(q) = &mut self.residual[e ^ 1] {
                    *q += push;
                }
                v = self.to[e ^ 1];
            }
            total += push;
        }
    }

    fn reachable_from(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.head.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if !seen[v] && self.residual[e].positive() {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    fn reaching(&self, t: usize) -> Vec<bool> {
        let mut seen = vec![false; self.head.len()];
        seen[t] = true;
        let mut stack = vec![t];
        while let Some(v) = stack.pop() {
            for &e in &self.head[v] {
                // e goes v -> u; its partner u -> v carries the residual we need.
                let u = self.to[e];
                if !seen[u] && self.residual[e ^ 1].positive() {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }
}

/// Result of minimising `weight·|X| - alpha·e(X)` over `base ⊆ X ⊆ base ∪ within`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct SupersetMinimum {
    pub value: Rational,
    /// The unique inclusion-minimal minimiser.
    pub smallest: VertexSet,
    /// The unique inclusion-maximal minimiser.
    pub largest: VertexSet,
}

pub(crate) fn minimize_over_supersets(
    g: &FinGraph,
    weight: Rational,
    alpha: Rational,
    base: VertexSet,
    within: VertexSet,
) -> SupersetMinimum {
    let cand: Vec<usize> = within.difference(base).iter().collect();
    let mut index = vec![usize::MAX; g.order()];
    for (i, &v) in cand.iter().enumerate() {
        index[v] = i;
    }
    let inner: Vec<(usize, usize)> = g
        .edges()
        .into_iter()
        .filter(|&(u, v)| index[u] != usize::MAX && index[v] != usize::MAX)
        .collect();
    let m = cand.len() + inner.len();
    let (s, t) = (m, m + 1);
    let mut net = Network::new(m + 2);
    let mut positive_total = Rational::zero();
    let mut add_profit = |net: &mut Network, node: usize, p: Rational| {
        if p.is_positive() {
            positive_total += p;
            net.add(s, node, Cap::Finite(p));
        } else if p.is_negative() {
            net.add(node, t, Cap::Finite(-p));
        }
    };
    for (i, &v) in cand.iter().enumerate() {
        let gain = alpha * Rational::from(g.edges_into(v, base) as i64) - weight;
        add_profit(&mut net, i, gain);
    }
    for (k, &(u, v)) in inner.iter().enumerate() {
        let node = cand.len() + k;
        add_profit(&mut net, node, alpha);
        net.add(node, index[u], Cap::Infinite);
        net.add(node, index[v], Cap::Infinite);
    }
    let cut = net.max_flow(s, t);
    let best_profit = positive_total - cut;
    let from_s = net.reachable_from(s);
    let to_t = net.reaching(t);
    let mut smallest = base;
    let mut largest = base;
    for (i, &v) in cand.iter().enumerate() {
        if from_s[i] {
            smallest.insert(v);
        }
        if !to_t[i] {
            largest.insert(v);
        }
    }
    let base_value = weight * Rational::from(base.len() as i64)
        - alpha * Rational::from(g.edges_within(base) as i64);
    SupersetMinimum {
        value: base_value - best_profit,
        smallest,
        largest,
    }
}
