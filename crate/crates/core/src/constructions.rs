//! Regular and extendable linear hypergraphs, the extension operator `S_d`
//! and its towers, and the regular counterexample built from a tower.
//!
//! `S_d(F)` takes `(d-1)(k-1)` disjoint copies of `F` and a new vertex `v`
//! joined by `d-1` edges, edge `i` running through the designated vertices of
//! copies `(i, 1), ..., (i, k-1)`. Removing `v` leaves disjoint copies of `F`,
//! so the designated-vertex probability of `S_d(F)` is `g_d` of that of `F`
//! whatever `F` is; extendability only matters for regularity.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::Serialize;

use crate::count::{Probability, Provenance, RatioJson};
use crate::dynamics::{self, round_dyadic, DynParams, Enclosure, Side};
use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;

pub const DEFAULT_MAX_VERTICES: usize = 1_000_000;
/// Denominator size (bits) at which exact tower trajectories give up.
pub const DEFAULT_TOWER_BITS: u64 = 1 << 16;

fn vertex_budget(n: u128, max_vertices: usize) -> Result<usize> {
    if n > max_vertices as u128 {
        Err(Error::BudgetExceeded {
            what: "construction vertices",
            limit: max_vertices as u64,
        })
    } else {
        Ok(n as usize)
    }
}

/// A `d`-regular linear `k`-graph on `k^d` vertices: `k` copies of the
/// `(d-1)`-regular graph plus a perfect matching taking vertex `j` from every copy.
pub fn regular_linear(k: usize, d: usize, max_vertices: usize) -> Result<Hypergraph> {
    if k < 2 || d < 1 {
        return Err(Error::InvalidParameter(format!(
            "need k >= 2 and d >= 1, got k={k} d={d}"
        )));
    }
    let n = (k as u128)
        .checked_pow(d as u32)
        .unwrap_or(u128::MAX);
    vertex_budget(n, max_vertices)?;
    let mut edges = vec![(0..k).collect::<Vec<_>>()];
    let mut size = k;
    for _ in 1..d {
        let mut next = Vec::with_capacity(edges.len() * k + size);
        for c in 0..k {
            next.extend(edges.iter().map(|e| e.iter().map(|&v| v + c * size).collect::<Vec<_>>()));
        }
        next.extend((0..size).map(|j| (0..k).map(|c| j + c * size).collect::<Vec<_>>()));
        edges = next;
        size *= k;
    }
    Hypergraph::new(k, size, edges)
}

/// A hypergraph with a designated vertex (the head).
#[derive(Clone, Debug)]
pub struct ExtendableGraph {
    graph: Hypergraph,
    head: usize,
    d: usize,
    strict: bool,
}

impl ExtendableGraph {
    /// Checks that `graph` is linear, `head` has degree `d - 1` and every other vertex degree `d`.
    pub fn new(graph: Hypergraph, head: usize, d: usize) -> Result<Self> {
        if head >= graph.n() {
            return Err(Error::UnknownVertex(head));
        }
        if d < 1 {
            return Err(Error::InvalidParameter(format!("need d >= 1, got {d}")));
        }
        let report = graph.degree_report();
        if !report.is_linear {
            return Err(Error::NotExtendable("not linear".into()));
        }
        if let Some((v, &deg)) = report
            .degrees
            .iter()
            .enumerate()
            .find(|&(v, &deg)| deg != if v == head { d - 1 } else { d })
        {
            return Err(Error::NotExtendable(format!(
                "vertex {v} has degree {deg}, expected {}",
                if v == head { d - 1 } else { d }
            )));
        }
        Ok(ExtendableGraph {
            graph,
            head,
            d,
            strict: true,
        })
    }

    /// Any hypergraph with a designated vertex, for testing the head recursion.
    pub fn designated(graph: Hypergraph, head: usize, d: usize) -> Result<Self> {
        if head >= graph.n() {
            return Err(Error::UnknownVertex(head));
        }
        if d < 1 {
            return Err(Error::InvalidParameter(format!("need d >= 1, got {d}")));
        }
        Ok(ExtendableGraph {
            graph,
            head,
            d,
            strict: false,
        })
    }

    pub fn graph(&self) -> &Hypergraph {
        &self.graph
    }

    pub fn into_graph(self) -> Hypergraph {
        self.graph
    }

    pub fn head(&self) -> usize {
        self.head
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.graph.k()
    }

    /// Whether the extendability conditions were checked.
    pub fn is_strict(&self) -> bool {
        self.strict
    }

    /// The graph with its head labelled `head` and no other labels.
    pub fn labelled(&self) -> Result<Hypergraph> {
        self.graph
            .clone()
            .with_labels(BTreeMap::from([(self.head, "head".to_string())]))
    }
}

/// `copies` disjoint unlabelled copies of `f` after `reserved` leading vertices,
/// returning the edges and the id of each copy's head.
fn copies(f: &ExtendableGraph, count: usize, reserved: usize) -> (Vec<Vec<usize>>, Vec<usize>) {
    let n = f.graph.n();
    let mut edges = Vec::with_capacity(count * f.graph.num_edges());
    let mut heads = Vec::with_capacity(count);
    for c in 0..count {
        let base = reserved + c * n;
        edges.extend(
            f.graph
                .edges()
                .iter()
                .map(|e| e.iter().map(|&v| v + base).collect::<Vec<_>>()),
        );
        heads.push(base + f.head);
    }
    (edges, heads)
}

/// `S_d(F)`: the new head is vertex 0 and copy `(i, j)` (zero-based) occupies
/// the block starting at `1 + (i (k-1) + j) |V(F)|`.
pub fn s_extend(f: &ExtendableGraph, max_vertices: usize) -> Result<ExtendableGraph> {
    let (k, d) = (f.k(), f.d);
    let count = (d - 1) * (k - 1);
    let n = vertex_budget(count as u128 * f.graph.n() as u128 + 1, max_vertices)?;
    let (mut edges, heads) = copies(f, count, 1);
    for i in 0..d - 1 {
        let mut e = vec![0];
        e.extend(&heads[i * (k - 1)..(i + 1) * (k - 1)]);
        edges.push(e);
    }
    let mut labels = BTreeMap::from([(0, "head".to_string())]);
    for i in 0..d - 1 {
        for j in 0..k - 1 {
            labels.insert(heads[i * (k - 1) + j], format!("copy:{},{}", i + 1, j + 1));
        }
    }
    let graph = Hypergraph::new(k, n, edges)?.with_labels(labels)?;
    if f.strict {
        ExtendableGraph::new(graph, 0, d)
    } else {
        ExtendableGraph::designated(graph, 0, d)
    }
}

/// `S_d` applied `levels` times.
pub fn tower_build(f: &ExtendableGraph, levels: usize, max_vertices: usize) -> Result<ExtendableGraph> {
    let mut cur = f.clone();
    for _ in 0..levels {
        cur = s_extend(&cur, max_vertices)?;
    }
    Ok(cur)
}

/// Vertex and edge counts of `S_d^(levels)(F)` without building it.
pub fn tower_size(k: usize, d: usize, n0: usize, m0: usize, levels: usize) -> (BigUint, BigUint) {
    let c = BigUint::from((d - 1) * (k - 1));
    let mut n = BigUint::from(n0);
    let mut m = BigUint::from(m0);
    for _ in 0..levels {
        n = &c * n + 1u32;
        m = &c * m + BigUint::from(d - 1);
    }
    (n, m)
}

/// Smallest `d`-extendable linear `k`-graph with at most `max_n` vertices.
///
/// The head is vertex 0. Backtracking always completes the lowest vertex with
/// spare degree, adds edges through it in increasing order, and introduces
/// untouched vertices in id order.
pub fn extendable_search(k: usize, d: usize, max_n: usize) -> Result<ExtendableGraph> {
    if k < 2 || d < 2 {
        return Err(Error::InvalidParameter(format!(
            "need k >= 2 and d >= 2, got k={k} d={d}"
        )));
    }
    for n in k..=max_n {
        if !(n * d - 1).is_multiple_of(k) {
            continue;
        }
        let mut s = Search::new(k, d, n);
        if s.run() {
            let graph = Hypergraph::new(k, n, s.edges)?;
            return ExtendableGraph::new(graph, 0, d);
        }
    }
    Err(Error::NotFound { max_n })
}

struct Search {
    k: usize,
    n: usize,
    residual: Vec<usize>,
    pair: Vec<bool>,
    fresh: usize,
    edges: Vec<Vec<usize>>,
}

impl Search {
    fn new(k: usize, d: usize, n: usize) -> Self {
        let mut residual = vec![d; n];
        residual[0] = d - 1;
        Search {
            k,
            n,
            residual,
            pair: vec![false; n * n],
            fresh: 0,
            edges: Vec::new(),
        }
    }

    fn run(&mut self) -> bool {
        let Some(v) = (0..self.n).find(|&v| self.residual[v] > 0) else {
            return true;
        };
        if !self.feasible() {
            return false;
        }
        // edges through v are added in increasing order
        let floor = self
            .edges
            .iter()
            .rev()
            .find(|e| e[0] == v)
            .map(|e| e[1])
            .unwrap_or(v);
        let mut chosen = vec![v];
        self.extend(floor, &mut chosen)
    }

    fn extend(&mut self, floor: usize, chosen: &mut Vec<usize>) -> bool {
        if chosen.len() == self.k {
            return self.place(chosen.clone());
        }
        let last = *chosen.last().unwrap();
        let start = if chosen.len() == 1 { floor + 1 } else { last + 1 };
        // untouched vertices are interchangeable, so only the first one is tried
        let first_untouched = self.fresh.max(last + 1);
        for w in start..self.n.min(first_untouched + 1) {
            if self.residual[w] == 0 || chosen.iter().any(|&u| self.pair[u * self.n + w]) {
                continue;
            }
            chosen.push(w);
            if self.extend(floor, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }

    fn place(&mut self, e: Vec<usize>) -> bool {
        let saved_fresh = self.fresh;
        for (i, &a) in e.iter().enumerate() {
            self.residual[a] -= 1;
            self.fresh = self.fresh.max(a + 1);
            for &b in &e[i + 1..] {
                self.pair[a * self.n + b] = true;
                self.pair[b * self.n + a] = true;
            }
        }
        self.edges.push(e);
        if self.run() {
            return true;
        }
        let e = self.edges.pop().unwrap();
        for (i, &a) in e.iter().enumerate() {
            self.residual[a] += 1;
            for &b in &e[i + 1..] {
                self.pair[a * self.n + b] = false;
                self.pair[b * self.n + a] = false;
            }
        }
        self.fresh = saved_fresh;
        false
    }

    /// Every vertex with spare degree needs that many pairwise disjoint
    /// `(k-1)`-sets of fresh partners.
    fn feasible(&self) -> bool {
        (0..self.n).filter(|&v| self.residual[v] > 0).all(|v| {
            let partners = (0..self.n)
                .filter(|&w| w != v && self.residual[w] > 0 && !self.pair[v * self.n + w])
                .count();
            partners >= self.residual[v] * (self.k - 1)
        })
    }
}

/// The inductive construction of a `(kℓ+1)`-extendable linear `k`-graph.
///
/// Level 0 is one edge plus an isolated head. Level `ℓ` takes the hub graph
/// `H'_ℓ` (two-or-more copies of a `(kℓ+1)`-regular linear graph, one edge
/// removed from each and a hub `v'` of degree `k` joined to the loose ends)
/// and glues one copy of it onto every vertex of level `ℓ-1`, identifying the
/// copy's hub with that vertex. The result is validated before it is returned.
pub fn extendable_paper(k: usize, level: usize, max_vertices: usize) -> Result<ExtendableGraph> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("need k >= 2, got {k}")));
    }
    // single edge on 1..=k, isolated head 0
    let mut cur = Hypergraph::new(k, k + 1, [(1..=k).collect::<Vec<_>>()])?;
    for l in 1..=level {
        let d = k * l + 1;
        let hub = hub_graph(k, d, max_vertices)?;
        let hub_n = hub.n() - 1; // vertices besides the hub, which is vertex 0
        let total = cur.n() as u128 * (hub_n as u128 + 1);
        let n = vertex_budget(total, max_vertices)?;
        let mut edges = cur.edges().to_vec();
        for base_v in 0..cur.n() {
            let offset = cur.n() + base_v * hub_n;
            edges.extend(hub.edges().iter().map(|e| {
                e.iter()
                    .map(|&w| if w == 0 { base_v } else { offset + w - 1 })
                    .collect::<Vec<_>>()
            }));
        }
        cur = Hypergraph::new(k, n, edges)?;
    }
    let report = cur.degree_report();
    let d = k * level + 1;
    let valid = report.is_linear
        && report.degrees[0] == d - 1
        && report.degrees[1..].iter().all(|&x| x == d);
    if !valid {
        return Err(Error::ConstructionAmbiguous(format!(
            "level {level} result is not {d}-extendable and linear (linear: {}, head degree {})",
            report.is_linear, report.degrees[0]
        )));
    }
    ExtendableGraph::new(cur, 0, d)
}

/// `H'`: hub vertex 0 of degree `k`, all others of degree `d`.
fn hub_graph(k: usize, d: usize, max_vertices: usize) -> Result<Hypergraph> {
    let f = regular_linear(k, d, max_vertices)?;
    let fn_ = f.n();
    vertex_budget((k as u128 - 1) * fn_ as u128 + 1, max_vertices)?;
    let removed = f.edge(0).to_vec();
    let mut edges = Vec::new();
    let mut last = vec![0];
    for i in 0..k - 1 {
        let base = 1 + i * fn_;
        edges.extend(
            f.edges()[1..]
                .iter()
                .map(|e| e.iter().map(|&v| v + base).collect::<Vec<_>>()),
        );
        let mut through = vec![0];
        through.extend(removed[..k - 1].iter().map(|&v| v + base));
        edges.push(through);
        last.push(removed[k - 1] + base);
    }
    edges.push(last);
    Hypergraph::new(k, 1 + (k - 1) * fn_, edges)
}

/// Exact or rounded head probabilities along a tower: `p_{i+1} = g_d(p_i)`.
#[derive(Clone, Debug)]
pub struct TowerStats {
    pub k: usize,
    pub d: usize,
    pub p0: BigRational,
    /// `trajectory[i] = p_i` for `i in 0..=levels`.
    pub trajectory: Vec<BigRational>,
    /// False when iterates were rounded to the `2^-256` grid.
    pub exact: bool,
    pub side: Side,
    /// `|p_{2i} - β|` and `|p_{2i+1} - γ|` measured to the enclosures (on the β side of α).
    pub even_gaps: Option<Vec<BigRational>>,
    pub odd_gaps: Option<Vec<BigRational>>,
}

impl TowerStats {
    pub fn levels(&self) -> usize {
        self.trajectory.len() - 1
    }

    pub fn last(&self) -> &BigRational {
        self.trajectory.last().unwrap()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TowerArithmetic {
    /// Exact rationals; fail once a denominator exceeds this many bits.
    Exact { max_bits: u64 },
    /// Round each iterate to the `2^-bits` grid.
    Rounded { bits: u32 },
}

pub fn tower_stats(
    k: usize,
    d: usize,
    p0: &BigRational,
    levels: usize,
    arithmetic: TowerArithmetic,
    prec: u32,
) -> Result<TowerStats> {
    if !p0.is_positive() || *p0 > BigRational::one() {
        return Err(Error::DomainError(format!("p0 = {p0} is outside (0, 1]")));
    }
    let params = DynParams::new(k, d as u64)?;
    let mut trajectory = vec![p0.clone()];
    let d_bits = BigInt::from(d).bits();
    for _ in 0..levels {
        let cur = trajectory.last().unwrap();
        if let TowerArithmetic::Exact { max_bits } = arithmetic {
            // the next denominator is at most (d-1) num^(k-1) + den^(k-1);
            // refuse before paying for a reduction past the budget
            let bound = (k as u64 - 1) * cur.numer().bits().max(cur.denom().bits()) + d_bits + 1;
            if bound > max_bits {
                return Err(Error::RationalBlowup {
                    bits: bound,
                    budget: max_bits,
                });
            }
        }
        let next = dynamics::g(params, cur)?;
        let next = match arithmetic {
            TowerArithmetic::Exact { .. } => next,
            TowerArithmetic::Rounded { bits } => round_dyadic(&next, bits),
        };
        trajectory.push(next);
    }
    let side = dynamics::side(&dynamics::alpha(params, prec), p0);
    let fixed = if k >= 3 {
        match dynamics::beta_gamma(params, prec) {
            Ok(fp) => Some(fp),
            Err(Error::NoThreeFixedPoints { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let gaps = |enc: &Enclosure, start: usize| -> Vec<BigRational> {
        trajectory
            .iter()
            .skip(start)
            .step_by(2)
            .map(|p| enc.distance(p))
            .collect()
    };
    let (even_gaps, odd_gaps) = match (&fixed, side) {
        (Some(fp), Side::Beta) => (Some(gaps(&fp.beta, 0)), Some(gaps(&fp.gamma, 1))),
        (Some(fp), Side::Gamma) => (Some(gaps(&fp.gamma, 0)), Some(gaps(&fp.beta, 1))),
        _ => (None, None),
    };
    Ok(TowerStats {
        k,
        d,
        p0: p0.clone(),
        trajectory,
        exact: matches!(arithmetic, TowerArithmetic::Exact { .. }),
        side,
        even_gaps,
        odd_gaps,
    })
}

/// `1 / (1 + Σ_i Π_j factors[i][j])`: a vertex whose deletion splits the
/// hypergraph into components, with `factors[i][j]` the probability that the
/// `j`-th other vertex of the `i`-th edge is uncovered in its component.
pub fn components_join_prob(factors: &[Vec<BigRational>]) -> Result<Probability> {
    let one = BigRational::one();
    let mut denom = one.clone();
    for row in factors {
        let mut prod = one.clone();
        for x in row {
            if x.is_negative() || *x > one {
                return Err(Error::DomainError(format!("factor {x} is outside [0, 1]")));
            }
            prod *= x;
        }
        denom += prod;
    }
    Ok(Probability::new(denom.recip(), Provenance::Formula))
}

/// The regular counterexample around `H0`: `d(k-1)` copies of `H0` and a
/// center joined by `d` edges, edge `i` through the heads of copies
/// `(i, 1), ..., (i, k-1)`. The center is vertex 0.
pub fn counterexample_graph(h0: &ExtendableGraph, max_vertices: usize) -> Result<Hypergraph> {
    let (k, d) = (h0.k(), h0.d);
    let count = d * (k - 1);
    let n = vertex_budget(count as u128 * h0.graph.n() as u128 + 1, max_vertices)?;
    let (mut edges, heads) = copies(h0, count, 1);
    let mut labels = BTreeMap::from([(0, "center".to_string())]);
    for i in 0..d {
        let mut e = vec![0];
        e.extend(&heads[i * (k - 1)..(i + 1) * (k - 1)]);
        edges.push(e);
        for j in 0..k - 1 {
            labels.insert(heads[i * (k - 1) + j], format!("copy:{},{}", i + 1, j + 1));
        }
    }
    Hypergraph::new(k, n, edges)?.with_labels(labels)
}

#[derive(Clone, Debug)]
pub struct CounterexampleStats {
    pub k: usize,
    pub d: usize,
    pub p: BigRational,
    /// P(center uncovered) = 1 / (1 + d p^(k-1)).
    pub p_center: BigRational,
    /// P(head of copy (1,1) uncovered) = p (1 + (d-1) p^(k-1)) / (1 + d p^(k-1)).
    pub p_head: BigRational,
    /// P(a given center edge is in the matching) = p_center p^(k-1).
    pub p_center_edge: BigRational,
    pub epsilon: BigRational,
    /// `p_center > 1 - (1 + ε) / d^(k-2)`
    pub center_ok: bool,
    /// `p_head < (1 + ε) / (d + 1)`
    pub head_ok: bool,
    pub size: Option<CounterexampleSize>,
}

/// Size of the counterexample built from `S_d^(level)(F0)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CounterexampleSize {
    pub level: usize,
    pub vertices: String,
    pub edges: String,
}

pub fn counterexample_size(k: usize, d: usize, f0: &Hypergraph, level: usize) -> CounterexampleSize {
    let (n0, m0) = tower_size(k, d, f0.n(), f0.num_edges(), level);
    let c = BigUint::from(d * (k - 1));
    CounterexampleSize {
        level,
        vertices: (&c * n0 + 1u32).to_string(),
        edges: (&c * m0 + BigUint::from(d)).to_string(),
    }
}

pub fn counterexample_stats(
    k: usize,
    d: usize,
    p: &BigRational,
    epsilon: &BigRational,
) -> Result<CounterexampleStats> {
    if k < 2 || d < 1 {
        return Err(Error::InvalidParameter(format!(
            "need k >= 2 and d >= 1, got k={k} d={d}"
        )));
    }
    let one = BigRational::one();
    if !p.is_positive() || *p > one {
        return Err(Error::DomainError(format!("p = {p} is outside (0, 1]")));
    }
    let int = |x: usize| BigRational::from_integer(BigInt::from(x));
    let pk = p.pow(k as i32 - 1);
    let p_center = (&one + int(d) * &pk).recip();
    let p_head = p * (&one + int(d - 1) * &pk) * &p_center;
    let p_center_edge = &p_center * &pk;
    let slack = &one + epsilon;
    let center_ok = p_center > &one - &slack / int(d).pow(k as i32 - 2);
    let head_ok = p_head < &slack / int(d + 1);
    Ok(CounterexampleStats {
        k,
        d,
        p: p.clone(),
        p_center,
        p_head,
        p_center_edge,
        epsilon: epsilon.clone(),
        center_ok,
        head_ok,
        size: None,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ChecksJson {
    pub center_ok: bool,
    pub head_ok: bool,
    pub epsilon: RatioJson,
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleJson {
    pub k: usize,
    pub d: usize,
    pub p: RatioJson,
    #[serde(rename = "P_center")]
    pub p_center: RatioJson,
    #[serde(rename = "P_head")]
    pub p_head: RatioJson,
    pub checks: ChecksJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<CounterexampleSize>,
}

impl CounterexampleStats {
    pub fn to_json(&self) -> CounterexampleJson {
        CounterexampleJson {
            k: self.k,
            d: self.d,
            p: (&self.p).into(),
            p_center: (&self.p_center).into(),
            p_head: (&self.p_head).into(),
            checks: ChecksJson {
                center_ok: self.center_ok,
                head_ok: self.head_ok,
                epsilon: (&self.epsilon).into(),
            },
            size: self.size.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::count::{prob_avoid, CountOptions};

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn head_prob(f: &ExtendableGraph) -> BigRational {
        prob_avoid(f.graph(), &[f.head()], &[], CountOptions::default())
            .unwrap()
            .into_value()
    }

    #[test]
    fn regular() {
        let e = regular_linear(3, 1, 100).unwrap();
        assert_eq!((e.n(), e.num_edges()), (3, 1));
        let h = regular_linear(3, 2, 100).unwrap();
        assert_eq!((h.n(), h.num_edges()), (9, 6));
        let r = h.degree_report();
        assert!(r.is_linear);
        assert_eq!(r.is_regular, Some(2));
        let c4 = regular_linear(2, 2, 100).unwrap();
        assert_eq!(c4.edges(), &[vec![0, 1], vec![0, 2], vec![1, 3], vec![2, 3]]);
        for (k, d) in [(2, 3), (3, 3), (4, 2), (2, 5)] {
            let h = regular_linear(k, d, 10_000).unwrap();
            let r = h.degree_report();
            assert_eq!(h.n(), k.pow(d as u32));
            assert!(r.is_linear);
            assert_eq!(r.is_regular, Some(d));
        }
        assert!(matches!(
            regular_linear(3, 20, 1000),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn extension() {
        // single edge with a designated vertex of degree 1, d = 2
        let e = Hypergraph::new(3, 3, [[0, 1, 2]]).unwrap();
        let f = ExtendableGraph::designated(e, 0, 2).unwrap();
        let s = s_extend(&f, 100).unwrap();
        assert_eq!((s.graph().n(), s.graph().num_edges()), (7, 3));
        assert_eq!(s.graph().degree(0), 1);
        assert_eq!(head_prob(&s), q(4, 5)); // g(1/2) with d=2, k=3
        assert_eq!(s.graph().label(0), Some("head"));
        assert_eq!(s.graph().find_label("copy:1,2"), Some(4));

        let t = tower_build(&f, 2, 1000).unwrap();
        assert_eq!(t.graph().n(), 2 * 7 + 1);
        assert_eq!(tower_size(3, 2, 3, 1, 2), (15u32.into(), 7u32.into()));
        assert_eq!(t.graph().num_edges(), 7);
        assert!(matches!(
            tower_build(&f, 30, 1000),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn strict_extension() {
        let f = extendable_search(3, 2, 20).unwrap();
        assert!(f.is_strict());
        let s = s_extend(&f, 1000).unwrap();
        assert!(s.is_strict());
        let r = s.graph().degree_report();
        assert_eq!(r.extendable_head, Some(0));
        assert!(r.is_linear);
        let not = Hypergraph::new(3, 3, [[0, 1, 2]]).unwrap();
        assert!(matches!(
            ExtendableGraph::new(not, 0, 2),
            Err(Error::NotExtendable(_))
        ));
    }

    #[test]
    fn search() {
        for (k, d) in [(3, 2), (2, 3), (3, 4), (4, 3), (5, 2), (3, 5)] {
            let f = extendable_search(k, d, 30).unwrap();
            let r = f.graph().degree_report();
            assert!(r.is_linear);
            assert_eq!(r.extendable_head, Some(0), "k={k} d={d}");
        }
        assert!(matches!(extendable_search(3, 2, 4), Err(Error::NotFound { max_n: 4 })));
        // the degree sum n d - 1 is never a multiple of k when k divides d
        assert!(matches!(extendable_search(2, 2, 10), Err(Error::NotFound { .. })));
        assert!(matches!(extendable_search(3, 3, 30), Err(Error::NotFound { .. })));
    }

    #[test]
    fn inductive_recipe() {
        let f0 = extendable_paper(3, 0, 100).unwrap();
        assert_eq!((f0.graph().n(), f0.d()), (4, 1));
        assert_eq!(f0.graph().degree(0), 0);
        let f1 = extendable_paper(3, 1, 10_000).unwrap();
        let r = f1.graph().degree_report();
        assert!(r.is_linear);
        assert_eq!(r.degrees[0], 3);
        assert!(r.degrees[1..].iter().all(|&x| x == 4));
        assert_eq!(f1.graph().n(), 4 * 163);
        let f1 = extendable_paper(2, 1, 10_000).unwrap();
        assert_eq!(f1.d(), 3);
        assert!(matches!(
            extendable_paper(3, 2, DEFAULT_MAX_VERTICES),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn tower_trajectories() {
        let t = tower_stats(3, 2, &q(1, 1), 3, TowerArithmetic::Exact { max_bits: 64 }, 64).unwrap();
        assert_eq!(t.trajectory, vec![q(1, 1), q(1, 2), q(4, 5), q(25, 41)]);
        assert!(t.even_gaps.is_none());
        for p in &t.trajectory[1..] {
            assert!(p.is_positive() && *p <= q(1, 1));
        }
        // the fixed point 1/2 of g at k=3, d=5
        let t = tower_stats(3, 5, &q(1, 2), 6, TowerArithmetic::Exact { max_bits: 64 }, 64).unwrap();
        assert!(t.trajectory.iter().all(|p| *p == q(1, 2)));
        assert_eq!(t.side, Side::AtAlpha);
        assert!(matches!(
            tower_stats(3, 6, &q(1, 1), 40, TowerArithmetic::Exact { max_bits: 4096 }, 64),
            Err(Error::RationalBlowup { .. })
        ));
        let t = tower_stats(3, 6, &q(1, 1), 200, TowerArithmetic::Rounded { bits: 256 }, 128).unwrap();
        assert_eq!(t.side, Side::Beta);
        let even = t.even_gaps.unwrap();
        let odd = t.odd_gaps.unwrap();
        assert!(*even.last().unwrap() < q(1, 1_000_000));
        assert!(*odd.last().unwrap() < q(1, 1_000_000));
        assert!(tower_stats(3, 6, &q(0, 1), 2, TowerArithmetic::Rounded { bits: 64 }, 64).is_err());
    }

    #[test]
    fn join_formula() {
        assert_eq!(components_join_prob(&[]).unwrap().into_value(), q(1, 1));
        assert_eq!(
            components_join_prob(&[vec![q(1, 1), q(1, 1)]]).unwrap().into_value(),
            q(1, 2)
        );
        assert_eq!(
            components_join_prob(&[vec![q(1, 2), q(1, 2)]]).unwrap().into_value(),
            q(4, 5)
        );
        assert!(components_join_prob(&[vec![q(3, 2)]]).is_err());
    }

    #[test]
    fn counterexample_closed_forms() {
        let s = counterexample_stats(3, 4, &q(1, 1), &q(1, 10)).unwrap();
        assert_eq!(s.p_center, q(1, 5));
        assert_eq!(s.p_head, q(4, 5));
        let tiny = counterexample_stats(3, 4, &q(1, 1_000_000), &q(1, 10)).unwrap();
        assert!(tiny.p_center > q(999_999, 1_000_000));
        assert!(tiny.p_head < q(1, 100_000));
        let p = q(2, 7);
        let s = counterexample_stats(3, 3, &p, &q(1, 10)).unwrap();
        assert_eq!(&s.p_center * (q(1, 1) + q(3, 1) * &p * &p), q(1, 1));
        assert_eq!(&s.p_center + q(3, 1) * &s.p_center_edge, q(1, 1));

        // explicit build around a single edge with designated vertex 0
        let e = Hypergraph::new(3, 3, [[0, 1, 2]]).unwrap();
        let h0 = ExtendableGraph::designated(e, 0, 2).unwrap();
        let h = counterexample_graph(&h0, 100).unwrap();
        assert_eq!((h.n(), h.num_edges()), (13, 6));
        let center = prob_avoid(&h, &[0], &[], CountOptions::default()).unwrap();
        let head = h.find_label("copy:1,1").unwrap();
        let head = prob_avoid(&h, &[head], &[], CountOptions::default()).unwrap();
        let s = counterexample_stats(3, 2, &q(1, 2), &q(1, 10)).unwrap();
        assert_eq!(center.value(), &s.p_center);
        assert_eq!(head.value(), &s.p_head);
        let size = counterexample_size(3, 2, h0.graph(), 0);
        assert_eq!((size.vertices.as_str(), size.edges.as_str()), ("13", "6"));
    }

    #[test]
    fn stats_json() {
        let s = counterexample_stats(3, 2, &q(1, 2), &q(1, 10)).unwrap();
        let v = serde_json::to_value(s.to_json()).unwrap();
        assert_eq!(v["P_center"]["num"], "2");
        assert_eq!(v["P_center"]["den"], "3");
        assert_eq!(v["checks"]["epsilon"]["den"], "10");
    }
}
