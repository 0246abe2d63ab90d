//! Conflict-free walks and walk trees.
//!
//! A walk `v_0, e_1, v_1, ..., e_l, v_l` records, for each step, the conflict
//! set `C_i`: the entry vertex `v_{i-1}` plus the non-designated vertices of
//! `e_i` that precede the exit `v_i` in the vertex ordering. A new edge may be
//! appended only if it misses every earlier conflict set. Admissibility of an
//! edge does not depend on the exit vertex, so a walk extends through an
//! admissible edge in all `k - 1` ways at once, which is what makes the walk
//! tree `k`-uniform.

use std::collections::{HashMap, VecDeque};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::bitset::BitSet;
use crate::count::{
    matching_polynomial, prob_avoid, run_with_large_stack, CountOptions, MatchCoeffs,
    Probability, Provenance, DEFAULT_COUNT_BUDGET,
};
use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, VertexOrdering};
use crate::poly::IntPoly;

pub const DEFAULT_MAX_NODES: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictFreeWalk {
    vertices: Vec<usize>,
    edges: Vec<usize>,
    conflicts: BitSet,
}

impl ConflictFreeWalk {
    /// The length-zero walk at `v`.
    pub fn trivial(h: &Hypergraph, v: usize) -> Result<Self> {
        if v >= h.n() {
            return Err(Error::UnknownVertex(v));
        }
        Ok(ConflictFreeWalk {
            vertices: vec![v],
            edges: Vec::new(),
            conflicts: BitSet::new(h.n()),
        })
    }

    /// Validates `v_0, e_1, v_1, ..., e_l, v_l` against `h` and `order`.
    pub fn from_parts(
        h: &Hypergraph,
        order: &VertexOrdering,
        vertices: Vec<usize>,
        edges: Vec<usize>,
    ) -> Result<Self> {
        check_order(h, order)?;
        let (&start, _) = vertices
            .split_first()
            .ok_or_else(|| Error::InvalidWalk("walk has no vertices".into()))?;
        if vertices.len() != edges.len() + 1 {
            return Err(Error::InvalidWalk(format!(
                "{} vertices need {} edges, got {}",
                vertices.len(),
                vertices.len() - 1,
                edges.len()
            )));
        }
        let mut walk = Self::trivial(h, start)?;
        for (&e, &u) in edges.iter().zip(&vertices[1..]) {
            if e >= h.num_edges() {
                return Err(Error::InvalidWalk(format!("no edge {e}")));
            }
            let end = walk.end();
            let edge = h.edge(e);
            if u == end || !edge.contains(&end) || !edge.contains(&u) {
                return Err(Error::InvalidWalk(format!(
                    "edge {e} does not join {end} to {u}"
                )));
            }
            if !walk.admits(edge) {
                return Err(Error::InvalidWalk(format!(
                    "edge {e} meets an earlier conflict set"
                )));
            }
            walk = walk.extend(order, e, edge, u);
        }
        Ok(walk)
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn end(&self) -> usize {
        *self.vertices.last().unwrap()
    }

    /// Union of the conflict sets of all steps so far.
    pub fn conflicts(&self) -> Vec<usize> {
        self.conflicts.iter().collect()
    }

    /// `v_0, e_1, v_1, ...` interleaved.
    pub fn alternating(&self) -> Vec<usize> {
        let mut out = vec![self.vertices[0]];
        for (&e, &v) in self.edges.iter().zip(&self.vertices[1..]) {
            out.push(e);
            out.push(v);
        }
        out
    }

    fn admits(&self, edge: &[usize]) -> bool {
        edge.iter().all(|&w| !self.conflicts.contains(w))
    }

    fn extend(&self, order: &VertexOrdering, e: usize, edge: &[usize], u: usize) -> Self {
        let end = self.end();
        let mut conflicts = self.conflicts.clone();
        conflicts.insert(end);
        for &w in edge {
            if w != end && w != u && order.precedes(w, u) {
                conflicts.insert(w);
            }
        }
        let mut vertices = self.vertices.clone();
        vertices.push(u);
        let mut edges = self.edges.clone();
        edges.push(e);
        debug_assert!(!self.vertices.contains(&u), "designated vertex repeated");
        debug_assert!(!self.edges.contains(&e), "edge repeated");
        ConflictFreeWalk {
            vertices,
            edges,
            conflicts,
        }
    }
}

fn check_order(h: &Hypergraph, order: &VertexOrdering) -> Result<()> {
    if order.len() == h.n() {
        Ok(())
    } else {
        Err(Error::InvalidOrdering(format!(
            "ordering covers {} vertices, hypergraph has {}",
            order.len(),
            h.n()
        )))
    }
}

/// One-edge extensions `(edge, exit vertex, child)` in edge-index then vertex-id order.
pub fn conflict_free_extensions(
    h: &Hypergraph,
    order: &VertexOrdering,
    walk: &ConflictFreeWalk,
) -> Result<Vec<(usize, usize, ConflictFreeWalk)>> {
    check_order(h, order)?;
    if walk.conflicts.iter().any(|v| v >= h.n()) || walk.vertices.iter().any(|&v| v >= h.n()) {
        return Err(Error::InvalidWalk("walk does not belong to this hypergraph".into()));
    }
    let end = walk.end();
    let mut out = Vec::new();
    for (e, edge) in h.edges().iter().enumerate() {
        if !edge.contains(&end) || !walk.admits(edge) {
            continue;
        }
        for &u in edge.iter().filter(|&&u| u != end) {
            out.push((e, u, walk.extend(order, e, edge, u)));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WalkNode {
    pub parent: Option<usize>,
    /// Last designated vertex.
    pub vertex: usize,
    /// Last edge of the walk, `None` at the root.
    pub edge: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct WalkTree {
    tree: Hypergraph,
    nodes: Vec<WalkNode>,
    origins: Vec<usize>,
}

impl WalkTree {
    /// The tree as a hypergraph on node ids; node 0 is the root.
    pub fn tree(&self) -> &Hypergraph {
        &self.tree
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn nodes(&self) -> &[WalkNode] {
        &self.nodes
    }

    /// H-edge that induced tree edge `i`.
    pub fn origin(&self, i: usize) -> usize {
        self.origins[i]
    }

    /// `v_0, e_1, v_1, ...` of the walk at `node`.
    pub fn walk(&self, node: usize) -> Vec<usize> {
        let mut rev = Vec::new();
        let mut cur = Some(node);
        while let Some(c) = cur {
            let n = &self.nodes[c];
            rev.push(n.vertex);
            if let Some(e) = n.edge {
                rev.push(e);
            }
            cur = n.parent;
        }
        rev.reverse();
        rev
    }

    /// Sidecar record: `walks[i]` is the alternating walk of node `i`.
    pub fn sidecar(&self) -> WalkTreeSidecar {
        WalkTreeSidecar {
            root: 0,
            walks: (0..self.nodes.len()).map(|i| self.walk(i)).collect(),
            origins: self.origins.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WalkTreeSidecar {
    pub root: usize,
    pub walks: Vec<Vec<usize>>,
    pub origins: Vec<usize>,
}

/// Breadth-first walk tree rooted at the one-vertex walk `(v)`.
pub fn build_walk_tree(
    h: &Hypergraph,
    v: usize,
    order: &VertexOrdering,
    max_nodes: usize,
) -> Result<WalkTree> {
    check_order(h, order)?;
    let root = ConflictFreeWalk::trivial(h, v)?;
    let over = || Error::BudgetExceeded {
        what: "walk tree nodes",
        limit: max_nodes as u64,
    };
    if max_nodes == 0 {
        return Err(over());
    }
    let inc = h.incidence();
    let mut nodes = vec![WalkNode {
        parent: None,
        vertex: v,
        edge: None,
    }];
    let mut tree_edges: Vec<Vec<usize>> = Vec::new();
    let mut origin_of: Vec<usize> = Vec::new();
    let mut queue = VecDeque::from([(0usize, root)]);
    while let Some((id, walk)) = queue.pop_front() {
        let end = walk.end();
        for &e in &inc[end] {
            let edge = h.edge(e);
            if !walk.admits(edge) {
                continue;
            }
            let mut hyperedge = vec![id];
            for &u in edge.iter().filter(|&&u| u != end) {
                if nodes.len() == max_nodes {
                    return Err(over());
                }
                let child = nodes.len();
                nodes.push(WalkNode {
                    parent: Some(id),
                    vertex: u,
                    edge: Some(e),
                });
                hyperedge.push(child);
                queue.push_back((child, walk.extend(order, e, edge, u)));
            }
            tree_edges.push(hyperedge);
            origin_of.push(e);
        }
    }
    let n = nodes.len();
    let by_edge: HashMap<Vec<usize>, usize> = tree_edges.iter().cloned().zip(origin_of).collect();
    let tree = Hypergraph::new(h.k(), n, tree_edges)?;
    let origins = tree.edges().iter().map(|e| by_edge[e]).collect();
    Ok(WalkTree {
        tree,
        nodes,
        origins,
    })
}

/// Rooted orientation of a hypertree: BFS order plus the child edges of each vertex.
struct Rooted {
    order: Vec<usize>,
    children: Vec<Vec<usize>>,
}

fn orient(t: &Hypergraph, root: usize) -> Result<Rooted> {
    if root >= t.n() {
        return Err(Error::UnknownVertex(root));
    }
    if !t.is_hypertree() {
        return Err(Error::NotAHypertree);
    }
    let inc = t.incidence();
    let mut seen_e = vec![false; t.num_edges()];
    let mut children = vec![Vec::new(); t.n()];
    let mut order = vec![root];
    let mut i = 0;
    while i < order.len() {
        let u = order[i];
        i += 1;
        for &e in &inc[u] {
            if std::mem::replace(&mut seen_e[e], true) {
                continue;
            }
            children[u].push(e);
            order.extend(t.edge(e).iter().filter(|&&w| w != u));
        }
    }
    Ok(Rooted { order, children })
}

/// Bottom-up P_T(root uncovered) on a hypertree; leaves have probability 1.
pub fn prob_on_hypertree(t: &Hypergraph, root: usize) -> Result<Probability> {
    let r = orient(t, root)?;
    let mut p = vec![BigRational::one(); t.n()];
    for &u in r.order.iter().rev() {
        let mut denom = BigRational::one();
        for &e in &r.children[u] {
            let prod = t
                .edge(e)
                .iter()
                .filter(|&&w| w != u)
                .fold(BigRational::one(), |acc, &w| acc * &p[w]);
            denom += prod;
        }
        p[u] = denom.recip();
    }
    let value = std::mem::take(&mut p[root]);
    Ok(Probability::new(value, Provenance::Hypertree { nodes: t.n() }))
}

/// Exact matching counts of a hypertree and of the hypertree minus `root`,
/// by dynamic programming over the rooted tree.
pub fn hypertree_match_coeffs(t: &Hypergraph, root: usize) -> Result<(MatchCoeffs, MatchCoeffs)> {
    let r = orient(t, root)?;
    // all[u]: matchings of the subtree at u; free[u]: those leaving u uncovered
    let mut all: Vec<Vec<BigUint>> = vec![Vec::new(); t.n()];
    let mut free: Vec<Vec<BigUint>> = vec![Vec::new(); t.n()];
    for &u in r.order.iter().rev() {
        let kids = &r.children[u];
        // per child edge: (all of the other ends, free of the other ends)
        let parts: Vec<(Vec<BigUint>, Vec<BigUint>)> = kids
            .iter()
            .map(|&e| {
                let mut a = vec![BigUint::one()];
                let mut f = vec![BigUint::one()];
                for &w in t.edge(e).iter().filter(|&&w| w != u) {
                    a = convolve(&a, &std::mem::take(&mut all[w]));
                    f = convolve(&f, &std::mem::take(&mut free[w]));
                }
                (a, f)
            })
            .collect();
        let m = parts.len();
        let mut prefix = vec![vec![BigUint::one()]];
        for (a, _) in &parts {
            let next = convolve(prefix.last().unwrap(), a);
            prefix.push(next);
        }
        let mut suffix = vec![vec![BigUint::one()]; m + 1];
        for i in (0..m).rev() {
            suffix[i] = convolve(&suffix[i + 1], &parts[i].0);
        }
        let uncovered = prefix[m].clone();
        let mut total = uncovered.clone();
        for (i, (_, f)) in parts.iter().enumerate() {
            let covered = convolve(&convolve(&prefix[i], &suffix[i + 1]), f);
            add_shifted(&mut total, &covered);
        }
        all[u] = total;
        free[u] = uncovered;
    }
    let k = t.k();
    let n = t.n();
    let whole = MatchCoeffs::from_raw(k, n, std::mem::take(&mut all[root]));
    let minus = MatchCoeffs::from_raw(k, n - 1, std::mem::take(&mut free[root]));
    Ok((whole, minus))
}

fn convolve(a: &[BigUint], b: &[BigUint]) -> Vec<BigUint> {
    let mut out = vec![BigUint::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `a += x * b`
fn add_shifted(a: &mut Vec<BigUint>, b: &[BigUint]) {
    if a.len() < b.len() + 1 {
        a.resize(b.len() + 1, BigUint::zero());
    }
    for (i, y) in b.iter().enumerate() {
        a[i + 1] += y;
    }
}

/// P_H(v uncovered) by recursion on vertex deletions:
/// `1 / (1 + Σ_{e ∋ v} Π_j P_{H - v - u_1 - ... - u_{j-1}}(u_j uncovered))`,
/// with the other vertices `u_j` of each edge taken in `order`.
pub fn prob_via_recursion(
    h: &Hypergraph,
    v: usize,
    order: &VertexOrdering,
    budget: u64,
) -> Result<Probability> {
    check_order(h, order)?;
    if v >= h.n() {
        return Err(Error::UnknownVertex(v));
    }
    let mut rec = Recursion {
        h,
        inc: h.incidence(),
        order,
        memo: HashMap::new(),
        evaluations: 0,
        budget,
    };
    let deleted = BitSet::new(h.n());
    let value = if h.n() > 200 {
        run_with_large_stack(move || rec.eval(&deleted, v).map(|p| (p, rec.evaluations)))
    } else {
        rec.eval(&deleted, v).map(|p| (p, rec.evaluations))
    };
    let (value, evaluations) = value?;
    Ok(Probability::new(value, Provenance::Recursion { evaluations }))
}

/// [`prob_via_recursion`] with the identity ordering and the default budget.
pub fn prob_via_recursion_default(h: &Hypergraph, v: usize) -> Result<Probability> {
    prob_via_recursion(h, v, &VertexOrdering::identity(h.n()), DEFAULT_COUNT_BUDGET)
}

struct Recursion<'a> {
    h: &'a Hypergraph,
    inc: Vec<Vec<usize>>,
    order: &'a VertexOrdering,
    memo: HashMap<(BitSet, usize), BigRational>,
    evaluations: u64,
    budget: u64,
}

impl Recursion<'_> {
    fn eval(&mut self, deleted: &BitSet, v: usize) -> Result<BigRational> {
        let key = (deleted.clone(), v);
        if let Some(p) = self.memo.get(&key) {
            return Ok(p.clone());
        }
        self.evaluations += 1;
        if self.evaluations > self.budget {
            return Err(Error::BudgetExceeded {
                what: "recursion evaluations",
                limit: self.budget,
            });
        }
        let mut denom = BigRational::one();
        for i in 0..self.inc[v].len() {
            let e = self.inc[v][i];
            let edge = self.h.edge(e);
            if edge.iter().any(|&w| deleted.contains(w)) {
                continue;
            }
            let mut rest: Vec<usize> = edge.iter().copied().filter(|&w| w != v).collect();
            self.order.sort(&mut rest);
            let mut gone = deleted.clone();
            gone.insert(v);
            let mut prod = BigRational::one();
            for u in rest {
                prod *= self.eval(&gone, u)?;
                gone.insert(u);
            }
            denom += prod;
        }
        let p = denom.recip();
        self.memo.insert(key, p.clone());
        Ok(p)
    }
}

#[derive(Clone, Debug)]
pub struct GodsilReport {
    /// m_k(H - v) m_k(T)
    pub lhs: IntPoly,
    /// m_k(H) m_k(T - V)
    pub rhs: IntPoly,
    pub equal: bool,
    pub prob_h: Probability,
    pub prob_t: Probability,
    pub tree_nodes: usize,
    pub tree_edges: usize,
}

/// Checks m_k(H - v) m_k(T) = m_k(H) m_k(T - V) for the walk tree `T` of `(H, v)`.
pub fn verify_godsil(
    h: &Hypergraph,
    v: usize,
    order: &VertexOrdering,
    opts: CountOptions,
    max_nodes: usize,
) -> Result<GodsilReport> {
    let wt = build_walk_tree(h, v, order, max_nodes)?;
    let (t_all, t_minus) = hypertree_match_coeffs(wt.tree(), wt.root())?;
    let m_h = matching_polynomial(h, opts)?.poly();
    let m_hv = matching_polynomial(&h.delete_vertices(&[v])?.graph, opts)?.poly();
    let m_t = t_all.matching_polynomial().poly();
    let m_tv = t_minus.matching_polynomial().poly();
    let lhs = &m_hv * &m_t;
    let rhs = &m_h * &m_tv;
    let prob_h = prob_avoid(h, &[v], &[], opts)?;
    let (fav, tot) = (t_minus.total(), t_all.total());
    let prob_t = Probability::new(
        BigRational::new(fav.clone().into(), tot.clone().into()),
        Provenance::Counts {
            favourable: fav,
            total: tot,
        },
    );
    Ok(GodsilReport {
        equal: lhs == rhs && prob_h == prob_t,
        lhs,
        rhs,
        prob_h,
        prob_t,
        tree_nodes: wt.tree().n(),
        tree_edges: wt.tree().num_edges(),
    })
}
