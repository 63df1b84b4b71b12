//! Colour refinement, canonical labelling, automorphisms and tuple orbits.
//!
//! Everything here is individualisation-refinement backtracking: refine a
//! vertex colouring to an equitable one, and when it is not discrete,
//! individualise each vertex of the first smallest non-singleton cell in turn.

use std::collections::BTreeMap;

use crate::error::{invalid, Error, Result};
use crate::graph::{FinGraph, VertexSet};

/// Node budget for a single canonical-labelling or automorphism search.
pub const SEARCH_NODE_LIMIT: usize = 2_000_000;

/// Refines several coloured graphs against one shared colour dictionary, so
/// that equal colours mean equal refinement histories across all of them.
fn refine_many(graphs: &[&FinGraph], colors: &mut [Vec<usize>]) {
    loop {
        let before: usize = distinct_count(colors);
        let sigs: Vec<Vec<(usize, Vec<usize>)>> = graphs
            .iter()
            .zip(colors.iter())
            .map(|(g, c)| {
                (0..g.order())
                    .map(|v| {
                        let mut nb: Vec<usize> = g.neighbors(v).iter().map(|w| c[w]).collect();
                        nb.sort_unstable();
                        (c[v], nb)
                    })
                    .collect()
            })
            .collect();
        let mut dict: Vec<&(usize, Vec<usize>)> = sigs.iter().flatten().collect();
        dict.sort();
        dict.dedup();
        for (c, s) in colors.iter_mut().zip(&sigs) {
            for (v, sig) in s.iter().enumerate() {
                c[v] = dict.binary_search(&sig).unwrap();
            }
        }
        if distinct_count(colors) == before {
            return;
        }
    }
}

fn distinct_count(colors: &[Vec<usize>]) -> usize {
    let mut all: Vec<usize> = colors.iter().flatten().copied().collect();
    all.sort_unstable();
    all.dedup();
    all.len()
}

/// The first smallest non-singleton cell, as a sorted vertex list.
fn target_cell(colors: &[usize]) -> Option<(usize, Vec<usize>)> {
    let mut cells: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (v, &c) in colors.iter().enumerate() {
        cells.entry(c).or_default().push(v);
    }
    cells
        .into_iter()
        .filter(|(_, vs)| vs.len() > 1)
        .min_by_key(|(c, vs)| (vs.len(), *c))
}

fn individualize(colors: &[usize], v: usize) -> Vec<usize> {
    colors
        .iter()
        .enumerate()
        .map(|(u, &c)| 2 * c + usize::from(u != v))
        .collect()
}

/// Canonical form of a vertex-coloured graph.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalForm {
    /// Colours of the canonically numbered vertices.
    pub colors: Vec<usize>,
    /// Edges of the canonically numbered graph, sorted.
    pub edges: Vec<(usize, usize)>,
}

impl CanonicalForm {
    pub fn graph(&self) -> FinGraph {
        FinGraph::from_edges(self.colors.len(), &self.edges).unwrap()
    }

    /// Compact text key, stable across runs.
    pub fn key(&self) -> String {
        let colors: Vec<String> = self.colors.iter().map(|c| c.to_string()).collect();
        let edges: Vec<String> = self.edges.iter().map(|(u, v)| format!("{u}-{v}")).collect();
        format!("n{}c{}e{}", self.colors.len(), colors.join("."), edges.join("."))
    }
}

/// Canonical form of `g` with initial vertex colours `marks`, together with
/// the labelling (`labeling[old] = new`) that produces it.
///
/// Two coloured graphs receive equal forms iff they are isomorphic by a
/// colour-preserving map.
pub fn canonical_form(g: &FinGraph, marks: &[usize]) -> Result<(CanonicalForm, Vec<usize>)> {
    if marks.len() != g.order() {
        return invalid("one mark per vertex is required");
    }
    // Normalise marks to 0..k preserving order.
    let mut sorted: Vec<usize> = marks.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let initial: Vec<usize> = marks
        .iter()
        .map(|m| sorted.binary_search(m).unwrap())
        .collect();
    let mut canon = Canon {
        g,
        marks: &initial,
        best: None,
        autos: Vec::new(),
        nodes: 0,
    };
    canon.search(initial.clone(), &mut Vec::new())?;
    let (form, labeling) = canon.best.unwrap();
    Ok((form, labeling))
}

/// Canonical form of an uncoloured graph.
pub fn canonical_graph(g: &FinGraph) -> Result<FinGraph> {
    Ok(canonical_form(g, &vec![0; g.order()])?.0.graph())
}

struct Canon<'a> {
    g: &'a FinGraph,
    marks: &'a [usize],
    best: Option<(CanonicalForm, Vec<usize>)>,
    autos: Vec<Vec<usize>>,
    nodes: usize,
}

impl Canon<'_> {
    fn search(&mut self, mut colors: Vec<usize>, prefix: &mut Vec<usize>) -> Result<()> {
        self.nodes += 1;
        if self.nodes > SEARCH_NODE_LIMIT {
            return Err(Error::Resource("canonical labelling search".into()));
        }
        refine_many(&[self.g], std::slice::from_mut(&mut colors));
        let Some((_, cell)) = target_cell(&colors) else {
            self.leaf(&colors);
            return Ok(());
        };
        let mut explored: Vec<usize> = Vec::new();
        for &v in &cell {
            if explored
                .iter()
                .any(|&u| same_orbit(&self.autos, prefix, self.g.order(), u, v))
            {
                continue;
            }
            explored.push(v);
            prefix.push(v);
            let child = individualize(&colors, v);
            let r = self.search(child, prefix);
            prefix.pop();
            r?;
        }
        Ok(())
    }

    fn leaf(&mut self, colors: &[usize]) {
        // Discrete colouring: colour order is the labelling.
        let mut order: Vec<usize> = (0..colors.len()).collect();
        order.sort_by_key(|&v| colors[v]);
        let mut labeling = vec![0; colors.len()];
        for (new, &old) in order.iter().enumerate() {
            labeling[old] = new;
        }
        let form = relabeled_form(self.g, self.marks, &labeling);
        match &self.best {
            None => self.best = Some((form, labeling)),
            Some((best, best_lab)) => {
                if form == *best {
                    // labeling^-1 then best_lab: an automorphism.
                    let mut inv = vec![0; labeling.len()];
                    for (old, &new) in best_lab.iter().enumerate() {
                        inv[new] = old;
                    }
                    let auto: Vec<usize> = labeling.iter().map(|&new| inv[new]).collect();
                    self.autos.push(auto);
                } else if form < *best {
                    self.best = Some((form, labeling));
                }
            }
        }
    }
}

fn relabeled_form(g: &FinGraph, marks: &[usize], labeling: &[usize]) -> CanonicalForm {
    let mut colors = vec![0; marks.len()];
    for (old, &new) in labeling.iter().enumerate() {
        colors[new] = marks[old];
    }
    let mut edges: Vec<(usize, usize)> = g
        .edges()
        .into_iter()
        .map(|(u, v)| {
            let (a, b) = (labeling[u], labeling[v]);
            (a.min(b), a.max(b))
        })
        .collect();
    edges.sort_unstable();
    CanonicalForm { colors, edges }
}

/// Whether `u` and `v` lie in one orbit of the group generated by those
/// stored automorphisms that fix `prefix` pointwise.
fn same_orbit(autos: &[Vec<usize>], prefix: &[usize], n: usize, u: usize, v: usize) -> bool {
    let gens: Vec<&Vec<usize>> = autos
        .iter()
        .filter(|a| prefix.iter().all(|&p| a[p] == p))
        .collect();
    if gens.is_empty() {
        return false;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![u];
    seen[u] = true;
    while let Some(x) = stack.pop() {
        if x == v {
            return true;
        }
        for a in &gens {
            let y = a[x];
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    false
}

/// Colour vector that individualises `fixed` (each vertex its own colour)
/// and marks tuple positions. A vertex occurring at several positions gets
/// the colour of that position set.
fn tuple_colors(n: usize, fixed: VertexSet, tuple: &[usize]) -> Vec<usize> {
    let mut positions: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, &v) in tuple.iter().enumerate() {
        positions[v].push(i);
    }
    let mut keys: Vec<(usize, Vec<usize>, usize)> = (0..n)
        .map(|v| {
            let fixed_id = if fixed.contains(v) { v + 1 } else { 0 };
            (fixed_id, positions[v].clone(), 0)
        })
        .collect();
    let mut dict: Vec<(usize, Vec<usize>, usize)> = keys.clone();
    dict.sort();
    dict.dedup();
    keys.iter_mut()
        .map(|k| dict.binary_search(k).unwrap())
        .collect()
}

/// An automorphism of `g` fixing `fixed` pointwise and mapping `from[i]` to
/// `to[i]` for every position, if one exists.
pub fn find_automorphism(
    g: &FinGraph,
    fixed: VertexSet,
    from: &[usize],
    to: &[usize],
) -> Result<Option<Vec<usize>>> {
    g.check_set(fixed)?;
    if from.len() != to.len() {
        return invalid("tuples of different length");
    }
    for &v in from.iter().chain(to) {
        g.check_vertex(v)?;
    }
    let ca = tuple_colors(g.order(), fixed, from);
    let cb = tuple_colors(g.order(), fixed, to);
    let mut out = Vec::new();
    let mut nodes = 0;
    iso_search(g, ca, cb, false, &mut out, &mut nodes, usize::MAX)?;
    Ok(out.pop())
}

/// Every automorphism of `g` fixing `fixed` pointwise, as explicit
/// permutations (`perm[v]` is the image of `v`). Fails with a resource error
/// once more than `cap` elements are found.
pub fn automorphism_group(g: &FinGraph, fixed: VertexSet, cap: usize) -> Result<Vec<Vec<usize>>> {
    g.check_set(fixed)?;
    let c = tuple_colors(g.order(), fixed, &[]);
    let mut out = Vec::new();
    let mut nodes = 0;
    iso_search(g, c.clone(), c, true, &mut out, &mut nodes, cap)?;
    out.sort();
    Ok(out)
}

fn iso_search(
    g: &FinGraph,
    ca: Vec<usize>,
    cb: Vec<usize>,
    all: bool,
    out: &mut Vec<Vec<usize>>,
    nodes: &mut usize,
    cap: usize,
) -> Result<bool> {
    *nodes += 1;
    if *nodes > SEARCH_NODE_LIMIT {
        return Err(Error::Resource("automorphism search".into()));
    }
    let mut pair = [ca, cb];
    refine_many(&[g, g], &mut pair);
    let [ca, cb] = pair;
    let mut ha = ca.clone();
    let mut hb = cb.clone();
    ha.sort_unstable();
    hb.sort_unstable();
    if ha != hb {
        return Ok(false);
    }
    let Some((color, cell)) = target_cell(&ca) else {
        let mut perm = vec![0; g.order()];
        for v in 0..g.order() {
            perm[v] = cb.iter().position(|&c| c == ca[v]).unwrap();
        }
        let ok = g.edges().iter().all(|&(u, v)| g.has_edge(perm[u], perm[v]));
        if ok {
            out.push(perm);
            if out.len() > cap {
                return Err(Error::Resource(format!(
                    "automorphism group has more than {cap} elements"
                )));
            }
        }
        return Ok(ok);
    };
    let u = cell[0];
    let targets: Vec<usize> = (0..g.order()).filter(|&w| cb[w] == color).collect();
    for w in targets {
        let found = iso_search(
            g,
            individualize(&ca, u),
            individualize(&cb, w),
            all,
            out,
            nodes,
            cap,
        )?;
        if found && !all {
            return Ok(true);
        }
    }
    Ok(!out.is_empty())
}

/// Partition of ordered tuples into orbits under a stabiliser.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitTable {
    pub arity: usize,
    pub fixed: VertexSet,
    /// Each class lists its tuples in lexicographic order; classes are
    /// ordered by their first tuple.
    pub classes: Vec<Vec<Vec<usize>>>,
}

impl OrbitTable {
    pub fn class_of(&self, tuple: &[usize]) -> Option<usize> {
        self.classes.iter().position(|c| c.iter().any(|t| t == tuple))
    }
}

/// Orbits of `arity`-tuples of vertices of `g` under the automorphisms fixing
/// `fixed` pointwise.
pub fn tuple_orbits(g: &FinGraph, arity: usize, fixed: VertexSet) -> Result<OrbitTable> {
    if arity == 0 {
        return invalid("arity must be at least 1");
    }
    g.check_set(fixed)?;
    let n = g.order();
    let total = n.checked_pow(arity as u32).unwrap_or(usize::MAX);
    if total > 1_000_000 {
        return Err(Error::Resource(format!("{total} tuples")));
    }
    let mut classes: Vec<Vec<Vec<usize>>> = Vec::new();
    // Cheap invariant first: refined colours of the individualised tuple.
    let mut invariants: Vec<Vec<usize>> = Vec::new();
    for idx in 0..total {
        let mut tuple = vec![0; arity];
        let mut r = idx;
        for slot in tuple.iter_mut().rev() {
            *slot = r % n;
            r /= n;
        }
        let mut c = tuple_colors(n, fixed, &tuple);
        refine_many(&[g], std::slice::from_mut(&mut c));
        let mut inv = c.clone();
        inv.sort_unstable();
        inv.extend(tuple.iter().map(|&v| c[v]));
        let mut placed = false;
        for (k, class) in classes.iter_mut().enumerate() {
            if invariants[k] != inv {
                continue;
            }
            if find_automorphism(g, fixed, &class[0], &tuple)?.is_some() {
                class.push(tuple.clone());
                placed = true;
                break;
            }
        }
        if !placed {
            classes.push(vec![tuple]);
            invariants.push(inv);
        }
    }
    Ok(OrbitTable {
        arity,
        fixed,
        classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hexagon_has_twelve_automorphisms() {
        let autos = automorphism_group(&FinGraph::cycle(6), VertexSet::EMPTY, 100).unwrap();
        assert_eq!(autos.len(), 12);
        let t = tuple_orbits(&FinGraph::cycle(6), 1, VertexSet::EMPTY).unwrap();
        assert_eq!(t.classes.len(), 1);
        assert_eq!(t.classes[0].len(), 6);
    }

    #[test]
    fn edge_with_fixed_endpoint() {
        let g = FinGraph::path(2);
        let t = tuple_orbits(&g, 1, VertexSet::singleton(0)).unwrap();
        assert_eq!(t.classes, vec![vec![vec![0]], vec![vec![1]]]);
    }

    #[test]
    fn two_isolated_vertices_pairs() {
        let g = FinGraph::empty(2).unwrap();
        let t = tuple_orbits(&g, 2, VertexSet::EMPTY).unwrap();
        assert_eq!(
            t.classes,
            vec![vec![vec![0, 0], vec![1, 1]], vec![vec![0, 1], vec![1, 0]]]
        );
        assert!(tuple_orbits(&g, 0, VertexSet::EMPTY).is_err());
    }

    #[test]
    fn canonical_form_is_relabeling_invariant() {
        let g = FinGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (1, 4)]).unwrap();
        let h = g.relabel(&[4, 2, 0, 3, 1]).unwrap();
        assert_eq!(canonical_graph(&g).unwrap(), canonical_graph(&h).unwrap());
        assert_ne!(
            canonical_graph(&g).unwrap(),
            canonical_graph(&FinGraph::path(5)).unwrap()
        );
    }

    #[test]
    fn symmetric_graphs_stay_cheap() {
        let e = FinGraph::empty(30).unwrap();
        assert_eq!(canonical_graph(&e).unwrap(), e);
        let autos = automorphism_group(&FinGraph::petersen(), VertexSet::EMPTY, 200).unwrap();
        assert_eq!(autos.len(), 120);
    }

    #[test]
    fn marks_distinguish() {
        let g = FinGraph::path(3);
        let a = canonical_form(&g, &[1, 0, 0]).unwrap().0;
        let b = canonical_form(&g, &[0, 0, 1]).unwrap().0;
        let c = canonical_form(&g, &[0, 1, 0]).unwrap().0;
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
