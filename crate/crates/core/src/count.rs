//! Exact matching counts, matching polynomials and avoidance probabilities.
//!
//! Counting is a branch-and-count recursion over the edge set: for a pivot
//! edge `e`, the matchings of the residual instance either avoid `e` (drop
//! `e`) or contain it (drop every edge meeting `e`). The residual edge set is
//! split into connected components before branching and the component
//! polynomials are multiplied. Nothing here uses floating point.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::poly::IntPoly;

pub const DEFAULT_COUNT_BUDGET: u64 = 100_000_000;

/// Edge counts above which counting runs on a thread with a larger stack.
const DEEP_RECURSION_EDGES: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CountOptions {
    /// Maximum number of recursion nodes.
    pub budget: u64,
    /// Cache results keyed by residual edge set (off by default).
    pub memoize: bool,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            budget: DEFAULT_COUNT_BUDGET,
            memoize: false,
        }
    }
}

impl CountOptions {
    pub fn with_budget(budget: u64) -> Self {
        CountOptions {
            budget,
            ..Default::default()
        }
    }
}

/// `counts[i]` is the number of matchings of size `i`, for `i in 0..=n/k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchCoeffs {
    k: usize,
    n: usize,
    counts: Vec<BigUint>,
}

impl MatchCoeffs {
    pub(crate) fn from_raw(k: usize, n: usize, mut counts: Vec<BigUint>) -> Self {
        counts.resize(n / k + 1, BigUint::zero());
        MatchCoeffs { k, n, counts }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &[BigUint] {
        &self.counts
    }

    /// Total number of matchings, N(H).
    pub fn total(&self) -> BigUint {
        self.counts.iter().sum()
    }

    /// m_k(H, x) = Σ (-1)^i p(H, i) x^(n - k i).
    pub fn matching_polynomial(&self) -> MatchingPolynomial {
        let mut coeffs = vec![BigInt::zero(); self.n + 1];
        for (i, c) in self.counts.iter().enumerate() {
            let c = BigInt::from(c.clone());
            coeffs[self.n - self.k * i] = if i % 2 == 0 { c } else { -c };
        }
        MatchingPolynomial {
            form: PolyForm::Defect,
            k: self.k,
            n: self.n,
            coeffs,
        }
    }

    /// q_k(H, x) = Σ p(H, i) x^i.
    pub fn generating_polynomial(&self) -> MatchingPolynomial {
        MatchingPolynomial {
            form: PolyForm::Generating,
            k: self.k,
            n: self.n,
            coeffs: self.counts.iter().cloned().map(BigInt::from).collect(),
        }
    }

    /// Σ i p(H, i) / Σ p(H, i).
    pub fn average_size(&self) -> BigRational {
        let weighted: BigUint = self
            .counts
            .iter()
            .enumerate()
            .map(|(i, c)| c * BigUint::from(i))
            .sum();
        BigRational::new(weighted.into(), self.total().into())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PolyForm {
    /// m_k, indexed by the power of x.
    Defect,
    /// q_k, indexed by matching size.
    Generating,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchingPolynomial {
    pub form: PolyForm,
    pub k: usize,
    pub n: usize,
    /// Coefficient of x^i at index i.
    pub coeffs: Vec<BigInt>,
}

impl MatchingPolynomial {
    pub fn poly(&self) -> IntPoly {
        IntPoly::new(self.coeffs.clone())
    }
}

/// x^n q(-x^k), the defect form recovered from a generating polynomial.
pub fn defect_from_generating(q: &IntPoly, n: usize, k: usize) -> IntPoly {
    let mut out = vec![BigInt::zero(); n + 1];
    for (i, c) in q.coeffs().iter().enumerate() {
        let c = if i % 2 == 0 { c.clone() } else { -c };
        // p(H, i) vanishes past n / k, so the power is non-negative
        out[n - k * i] += c;
    }
    IntPoly::new(out)
}

/// Exact probability together with how it was obtained.
#[derive(Clone, Debug)]
pub struct Probability {
    value: BigRational,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// `favourable / total` matching counts.
    Counts { favourable: BigUint, total: BigUint },
    /// Structural recursion on vertex deletions.
    Recursion { evaluations: u64 },
    /// Bottom-up pass over a hypertree.
    Hypertree { nodes: usize },
    /// Closed-form expression.
    Formula,
}

impl Probability {
    pub fn new(value: BigRational, provenance: Provenance) -> Self {
        debug_assert!(value >= BigRational::zero() && value <= BigRational::one());
        Probability { value, provenance }
    }

    pub fn value(&self) -> &BigRational {
        &self.value
    }

    pub fn into_value(self) -> BigRational {
        self.value
    }
}

/// Provenance is ignored.
impl PartialEq for Probability {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

pub fn match_coeffs(h: &Hypergraph, opts: CountOptions) -> Result<MatchCoeffs> {
    let counts = if h.num_edges() > DEEP_RECURSION_EDGES {
        run_with_large_stack(|| count_all(h, opts))?
    } else {
        count_all(h, opts)?
    };
    Ok(MatchCoeffs::from_raw(h.k(), h.n(), counts))
}

pub fn count_matchings(h: &Hypergraph, opts: CountOptions) -> Result<BigUint> {
    Ok(match_coeffs(h, opts)?.total())
}

pub fn matching_polynomial(h: &Hypergraph, opts: CountOptions) -> Result<MatchingPolynomial> {
    Ok(match_coeffs(h, opts)?.matching_polynomial())
}

pub fn generating_polynomial(h: &Hypergraph, opts: CountOptions) -> Result<MatchingPolynomial> {
    Ok(match_coeffs(h, opts)?.generating_polynomial())
}

pub fn avg_matching_size(h: &Hypergraph, opts: CountOptions) -> Result<BigRational> {
    Ok(match_coeffs(h, opts)?.average_size())
}

/// P_H(avoid | given) = N(H - given - avoid) / N(H - given).
pub fn prob_avoid(
    h: &Hypergraph,
    avoid: &[usize],
    given: &[usize],
    opts: CountOptions,
) -> Result<Probability> {
    for &v in avoid.iter().chain(given) {
        if v >= h.n() {
            return Err(Error::UnknownVertex(v));
        }
    }
    if let Some(&v) = avoid.iter().find(|v| given.contains(v)) {
        return Err(Error::DisjointnessViolated(v));
    }
    let base = h.delete_vertices(given)?.graph;
    let both: Vec<usize> = given.iter().chain(avoid).copied().collect();
    let reduced = h.delete_vertices(&both)?.graph;
    let total = count_matchings(&base, opts)?;
    let favourable = count_matchings(&reduced, opts)?;
    let value = BigRational::new(favourable.clone().into(), total.clone().into());
    Ok(Probability::new(
        value,
        Provenance::Counts { favourable, total },
    ))
}

fn count_all(h: &Hypergraph, opts: CountOptions) -> Result<Vec<BigUint>> {
    let mut engine = Engine::new(h, opts);
    let active = BitSet::full(h.num_edges());
    engine.count(&active)
}

pub(crate) fn run_with_large_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(1 << 30)
            .spawn_scoped(s, f)
            .expect("failed to spawn counting thread")
            .join()
            .unwrap_or_else(|e| std::panic::resume_unwind(e))
    })
}

/// Branch-and-count over subsets of the edges of one hypergraph.
pub(crate) struct Engine<'a> {
    h: &'a Hypergraph,
    /// Edges sharing at least one vertex with edge `i`, including `i`.
    conflicts: Vec<BitSet>,
    nodes: u64,
    budget: u64,
    memo: Option<HashMap<BitSet, Vec<BigUint>>>,
    degree: Vec<u32>,
}

impl<'a> Engine<'a> {
    pub(crate) fn new(h: &'a Hypergraph, opts: CountOptions) -> Self {
        let m = h.num_edges();
        let inc = h.incidence();
        let conflicts = (0..m)
            .map(|e| BitSet::with_items(m, h.edge(e).iter().flat_map(|&v| inc[v].iter().copied())))
            .collect();
        Engine {
            h,
            conflicts,
            nodes: 0,
            budget: opts.budget,
            memo: opts.memoize.then(HashMap::new),
            degree: vec![0; h.n()],
        }
    }

    pub(crate) fn conflicts(&self, e: usize) -> &BitSet {
        &self.conflicts[e]
    }

    /// Generating-polynomial coefficients of the matchings inside `active`.
    pub(crate) fn count(&mut self, active: &BitSet) -> Result<Vec<BigUint>> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::BudgetExceeded {
                what: "counting recursion nodes",
                limit: self.budget,
            });
        }
        match active.count() {
            0 => return Ok(vec![BigUint::one()]),
            1 => return Ok(vec![BigUint::one(), BigUint::one()]),
            _ => {}
        }
        if let Some(hit) = self.memo.as_ref().and_then(|m| m.get(active)) {
            return Ok(hit.clone());
        }

        let components = self.components(active);
        let result = if components.len() > 1 {
            let singletons = components.iter().filter(|c| c.count() == 1).count();
            let mut acc = binomial_row(singletons);
            for comp in components.iter().filter(|c| c.count() > 1) {
                let part = self.count(comp)?;
                acc = convolve(&acc, &part);
            }
            acc
        } else {
            let pivot = self.pivot(active);
            let mut without = active.clone();
            without.remove(pivot);
            let mut with = active.clone();
            with.difference_with(&self.conflicts[pivot]);
            let a = self.count(&without)?;
            let b = self.count(&with)?;
            add_shifted(a, &b)
        };
        if let Some(memo) = self.memo.as_mut() {
            memo.insert(active.clone(), result.clone());
        }
        Ok(result)
    }

    fn components(&self, active: &BitSet) -> Vec<BitSet> {
        let mut rest = active.clone();
        let mut out = Vec::new();
        while let Some(seed) = rest.first() {
            let mut comp = BitSet::new(self.conflicts.len());
            comp.insert(seed);
            rest.remove(seed);
            let mut stack = vec![seed];
            while let Some(e) = stack.pop() {
                let mut fresh = self.conflicts[e].clone();
                fresh.intersect_with(&rest);
                for f in fresh.iter() {
                    rest.remove(f);
                    comp.insert(f);
                    stack.push(f);
                }
            }
            out.push(comp);
        }
        out
    }

    /// Edge with the largest total vertex degree inside `active`; lowest index on ties.
    fn pivot(&mut self, active: &BitSet) -> usize {
        for e in active.iter() {
            for &v in self.h.edge(e) {
                self.degree[v] += 1;
            }
        }
        let mut best = (0u32, usize::MAX);
        for e in active.iter() {
            let total: u32 = self.h.edge(e).iter().map(|&v| self.degree[v]).sum();
            if total > best.0 || best.1 == usize::MAX {
                best = (total, e);
            }
        }
        for e in active.iter() {
            for &v in self.h.edge(e) {
                self.degree[v] = 0;
            }
        }
        best.1
    }
}

fn binomial_row(m: usize) -> Vec<BigUint> {
    let mut row = vec![BigUint::one()];
    for i in 0..m {
        let prev = row[i].clone();
        row.push(prev * BigUint::from(m - i) / BigUint::from(i + 1));
    }
    row
}

fn convolve(a: &[BigUint], b: &[BigUint]) -> Vec<BigUint> {
    let mut out = vec![BigUint::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `a + x * b`
fn add_shifted(mut a: Vec<BigUint>, b: &[BigUint]) -> Vec<BigUint> {
    if a.len() < b.len() + 1 {
        a.resize(b.len() + 1, BigUint::zero());
    }
    for (i, y) in b.iter().enumerate() {
        a[i + 1] += y;
    }
    a
}

/// Convolution of two coefficient sequences (matchings of a disjoint union).
pub fn convolve_counts(a: &MatchCoeffs, b: &MatchCoeffs) -> Vec<BigUint> {
    convolve(&a.counts, &b.counts)
}

fn ratio_json(r: &BigRational) -> RatioJson {
    RatioJson {
        num: r.numer().to_string(),
        den: r.denom().to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RatioJson {
    pub num: String,
    pub den: String,
}

impl From<&BigRational> for RatioJson {
    fn from(r: &BigRational) -> Self {
        ratio_json(r)
    }
}

/// JSON result record; big integers are decimal strings.
#[derive(Clone, Debug, Serialize)]
pub struct CountSummary {
    #[serde(rename = "N")]
    pub total: String,
    pub coeffs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prob: Option<RatioJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avg: Option<RatioJson>,
}

impl CountSummary {
    pub fn new(coeffs: &MatchCoeffs) -> Self {
        CountSummary {
            total: coeffs.total().to_string(),
            coeffs: coeffs.counts().iter().map(ToString::to_string).collect(),
            prob: None,
            avg: Some(ratio_json(&coeffs.average_size())),
        }
    }

    pub fn with_prob(mut self, p: &Probability) -> Self {
        self.prob = Some(ratio_json(p.value()));
        self
    }
}
