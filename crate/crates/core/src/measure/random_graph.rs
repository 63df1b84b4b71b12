//! The product rule on the random graph.
//!
//! With independent edge probability `p`, the measure of a conjunction of
//! edge literals `E(x,a)` / `!E(x,a)` is a product of `p` and `1 - p`
//! factors, so formulas on disjoint parameters multiply.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{format_q, Q};
use crate::error::{invalid, Error, Result};
use crate::formula::{Atom, Formula, FormulaInstance};

/// Draws per independently seeded chunk.
pub const CHUNK: usize = 8192;

/// A conjunction of edge and non-edge literals in `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeConjunction {
    pub text: String,
    /// Parameter name and whether the edge is required (true) or excluded.
    pub literals: Vec<(String, bool)>,
}

impl EdgeConjunction {
    pub fn parse(text: &str) -> Result<EdgeConjunction> {
        let inst = FormulaInstance::parse(text, &|_| Some(0))?;
        let mut literals = Vec::new();
        collect(&inst.formula, &inst.names, &mut literals)?;
        Ok(EdgeConjunction {
            text: inst.to_string(),
            literals,
        })
    }

    fn params(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.literals.iter().map(|l| l.0.as_str()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Closed-form measure under edge probability `p`.
    pub fn measure(&self, p: &Q) -> Q {
        let mut need: BTreeMap<&str, bool> = BTreeMap::new();
        for (name, pos) in &self.literals {
            if *need.entry(name).or_insert(*pos) != *pos {
                return Q::zero();
            }
        }
        need.values().map(|&pos| if pos { p.clone() } else { Q::one() - p }).product()
    }

    fn holds(&self, edges: &BTreeMap<&str, bool>) -> bool {
        self.literals.iter().all(|(n, pos)| edges[n.as_str()] == *pos)
    }
}

fn collect(f: &Formula, names: &[String], out: &mut Vec<(String, bool)>) -> Result<()> {
    match f {
        Formula::Atom(Atom::Top) => Ok(()),
        Formula::Atom(Atom::Edge(p)) => {
            out.push((names[*p].clone(), true));
            Ok(())
        }
        Formula::Not(inner) => match **inner {
            Formula::Atom(Atom::Edge(p)) => {
                out.push((names[p].clone(), false));
                Ok(())
            }
            _ => invalid("only edge literals may be negated here"),
        },
        Formula::And(a, b) => {
            collect(a, names, out)?;
            collect(b, names, out)
        }
        _ => invalid("expected a conjunction of edge literals"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleMode {
    Exact,
    Sample { draws: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductReport {
    pub p: Q,
    pub phi: String,
    pub psi: String,
    pub mu_phi: Q,
    pub mu_psi: Q,
    /// Closed-form measure of the conjunction.
    pub exact: Q,
    pub product: Q,
    pub deviation: Q,
    pub estimate: Option<f64>,
    pub stderr: Option<f64>,
    pub pass: bool,
}

impl fmt::Display for ProductReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p          {}", format_q(&self.p))?;
        writeln!(f, "phi        {}", self.phi)?;
        writeln!(f, "psi        {}", self.psi)?;
        writeln!(f, "mu-phi     {}", format_q(&self.mu_phi))?;
        writeln!(f, "mu-psi     {}", format_q(&self.mu_psi))?;
        writeln!(f, "exact      {}", format_q(&self.exact))?;
        writeln!(f, "product    {}", format_q(&self.product))?;
        writeln!(f, "deviation  {}", format_q(&self.deviation))?;
        if let (Some(e), Some(s)) = (self.estimate, self.stderr) {
            writeln!(f, "estimate   {e:.6}")?;
            writeln!(f, "stderr     {s:.6}")?;
            writeln!(f, "band       {:.6}", 3.0 * s)?;
        }
        writeln!(f, "pass       {}", self.pass)
    }
}

pub fn er_product_check(p: &Q, phi: &EdgeConjunction, psi: &EdgeConjunction, mode: SampleMode) -> Result<ProductReport> {
    if p.is_negative() || p > &Q::one() {
        return invalid(format!("edge probability {} is outside [0, 1]", format_q(p)));
    }
    let (pa, pb) = (phi.params(), psi.params());
    if pa.iter().any(|n| pb.contains(n)) {
        return invalid("the two formulas must use distinct parameters");
    }
    let mu_phi = phi.measure(p);
    let mu_psi = psi.measure(p);
    let product = &mu_phi * &mu_psi;
    let mut joint = phi.clone();
    joint.literals.extend(psi.literals.iter().cloned());
    let exact = joint.measure(p);
    let deviation = (&exact - &product).abs();
    let mut report = ProductReport {
        p: p.clone(),
        phi: phi.text.clone(),
        psi: psi.text.clone(),
        pass: deviation.is_zero(),
        mu_phi,
        mu_psi,
        exact,
        product,
        deviation,
        estimate: None,
        stderr: None,
    };
    if let SampleMode::Sample { draws, seed } = mode {
        if draws == 0 {
            return invalid("at least one draw is needed");
        }
        let hits = sample_hits(p, &joint, draws, seed)?;
        let estimate = hits as f64 / draws as f64;
        let target = report.product.to_f64().unwrap_or(f64::NAN);
        let stderr = (target * (1.0 - target) / draws as f64).sqrt();
        report.pass = if stderr == 0.0 {
            estimate == target
        } else {
            (estimate - target).abs() <= 3.0 * stderr
        };
        report.estimate = Some(estimate);
        report.stderr = Some(stderr);
    }
    Ok(report)
}

/// Counts draws satisfying `joint`. Chunk `i` uses stream `i` of a ChaCha
/// generator seeded with `seed`, so the count does not depend on how
/// chunks are spread over threads.
fn sample_hits(p: &Q, joint: &EdgeConjunction, draws: usize, seed: u64) -> Result<u64> {
    let params = joint.params();
    let bernoulli = match (p.numer().to_u32(), p.denom().to_u32()) {
        (Some(n), Some(d)) => Bernoulli::Ratio(n, d),
        _ => Bernoulli::Float(p.to_f64().ok_or_else(|| Error::InvalidInput("edge probability out of range".into()))?),
    };
    let chunks = draws.div_ceil(CHUNK);
    let hits = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let n = CHUNK.min(draws - i * CHUNK);
            let mut edges: BTreeMap<&str, bool> = params.iter().map(|&n| (n, false)).collect();
            let mut hits = 0u64;
            for _ in 0..n {
                for e in edges.values_mut() {
                    *e = bernoulli.draw(&mut rng);
                }
                hits += u64::from(joint.holds(&edges));
            }
            hits
        })
        .sum();
    Ok(hits)
}

enum Bernoulli {
    Ratio(u32, u32),
    Float(f64),
}

impl Bernoulli {
    fn draw(&self, rng: &mut ChaCha8Rng) -> bool {
        match *self {
            Bernoulli::Ratio(n, d) => rng.gen_ratio(n, d),
            Bernoulli::Float(p) => rng.gen::<f64>() < p,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::q;

    fn lits(text: &str) -> EdgeConjunction {
        EdgeConjunction::parse(text).unwrap()
    }

    #[test]
    fn exact_half() {
        let r = er_product_check(&q(1, 2), &lits("E(x,a)"), &lits("E(x,b)"), SampleMode::Exact).unwrap();
        assert_eq!(r.exact, q(1, 4));
        assert_eq!(r.product, q(1, 4));
        assert!(r.deviation.is_zero() && r.pass);
        assert!(r.to_string().contains("exact      1/4"));
    }

    #[test]
    fn degenerate_probability() {
        let r = er_product_check(&Q::zero(), &lits("E(x,a) & !E(x,c)"), &lits("E(x,b)"), SampleMode::Exact).unwrap();
        assert!(r.mu_phi.is_zero() && r.mu_psi.is_zero() && r.exact.is_zero());
    }

    #[test]
    fn sampling_is_within_the_band_and_reproducible() {
        let mode = SampleMode::Sample { draws: 100_000, seed: 7 };
        let r = er_product_check(&q(1, 2), &lits("E(x,a)"), &lits("E(x,b)"), mode).unwrap();
        assert!(r.pass, "{r}");
        let band = 3.0 * (0.25f64 * 0.75 / 100_000.0).sqrt();
        assert!((r.stderr.unwrap() * 3.0 - band).abs() < 1e-12);
        let again = er_product_check(&q(1, 2), &lits("E(x,a)"), &lits("E(x,b)"), mode).unwrap();
        assert_eq!(r.estimate, again.estimate);
    }

    #[test]
    fn rejects_bad_input() {
        let (a, b) = (lits("E(x,a)"), lits("E(x,b)"));
        assert!(er_product_check(&q(3, 2), &a, &b, SampleMode::Exact).is_err());
        assert!(er_product_check(&q(1, 2), &a, &a, SampleMode::Exact).is_err());
        assert!(EdgeConjunction::parse("E(x,a) | E(x,b)").is_err());
        assert!(EdgeConjunction::parse("dist2(x,a)").is_err());
    }

    #[test]
    fn conflicting_literals_have_measure_zero() {
        assert!(lits("E(x,a) & !E(x,a)").measure(&q(1, 3)).is_zero());
        assert_eq!(lits("E(x,a) & !E(x,b)").measure(&q(1, 3)), q(2, 9));
    }
}
