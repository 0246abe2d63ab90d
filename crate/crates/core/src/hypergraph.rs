//! k-uniform hypergraphs with canonical edge storage.
//!
//! Every [`Hypergraph`] is immutable once built. Edges are stored as sorted
//! vertex lists and the edge list itself is kept in lexicographic order, so
//! two hypergraphs with the same edge sets compare equal regardless of input
//! order. Derived graphs (vertex deletion, disjoint union) are returned as new
//! values.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    k: usize,
    n: usize,
    edges: Vec<Vec<usize>>,
    labels: BTreeMap<usize, String>,
}

impl Hypergraph {
    /// Builds and canonicalizes a k-uniform hypergraph on vertices `0..n`.
    pub fn new<E, I>(k: usize, n: usize, edges: E) -> Result<Self>
    where
        E: IntoIterator<Item = I>,
        I: IntoIterator<Item = usize>,
    {
        if k < 2 {
            return Err(Error::InvalidUniformity(k));
        }
        let mut canon: Vec<Vec<usize>> = Vec::new();
        for (idx, edge) in edges.into_iter().enumerate() {
            let mut e: Vec<usize> = edge.into_iter().collect();
            if let Some(&v) = e.iter().find(|&&v| v >= n) {
                return Err(Error::OutOfRangeVertex { vertex: v, n });
            }
            e.sort_unstable();
            if let Some(w) = e.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::DuplicateVertexInEdge {
                    edge: idx,
                    vertex: w[0],
                });
            }
            if e.len() != k {
                return Err(Error::NonUniformEdge {
                    edge: idx,
                    expected: k,
                    found: e.len(),
                });
            }
            canon.push(e);
        }
        canon.sort();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEdge(w[0].clone()));
        }
        Ok(Hypergraph {
            k,
            n,
            edges: canon,
            labels: BTreeMap::new(),
        })
    }

    /// Hypergraph with `n` vertices and no edges.
    pub fn edgeless(k: usize, n: usize) -> Result<Self> {
        Self::new(k, n, Vec::<Vec<usize>>::new())
    }

    pub fn with_labels(mut self, labels: BTreeMap<usize, String>) -> Result<Self> {
        if let Some(&v) = labels.keys().find(|&&v| v >= self.n) {
            return Err(Error::OutOfRangeVertex { vertex: v, n: self.n });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn with_label(mut self, v: usize, label: impl Into<String>) -> Result<Self> {
        if v >= self.n {
            return Err(Error::OutOfRangeVertex { vertex: v, n: self.n });
        }
        self.labels.insert(v, label.into());
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &[usize] {
        &self.edges[i]
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn labels(&self) -> &BTreeMap<usize, String> {
        &self.labels
    }

    pub fn label(&self, v: usize) -> Option<&str> {
        self.labels.get(&v).map(String::as_str)
    }

    /// First vertex carrying `label`, if any.
    pub fn find_label(&self, label: &str) -> Option<usize> {
        self.labels
            .iter()
            .find(|(_, l)| l.as_str() == label)
            .map(|(&v, _)| v)
    }

    /// `incidence()[v]` lists the indices of edges containing `v`, ascending.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.n];
        for (i, e) in self.edges.iter().enumerate() {
            for &v in e {
                inc[v].push(i);
            }
        }
        inc
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.contains(&v)).count()
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v))
        }
    }

    /// Removes the vertices in `removed` together with every edge meeting them.
    pub fn delete_vertices(&self, removed: &[usize]) -> Result<Deletion> {
        let mut gone = vec![false; self.n];
        for &v in removed {
            self.check_vertex(v)?;
            gone[v] = true;
        }
        let mut old_to_new = vec![None; self.n];
        let mut next = 0;
        for v in 0..self.n {
            if !gone[v] {
                old_to_new[v] = Some(next);
                next += 1;
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| e.iter().all(|&v| !gone[v]))
            .map(|e| e.iter().map(|&v| old_to_new[v].unwrap()).collect::<Vec<_>>());
        let labels = self
            .labels
            .iter()
            .filter_map(|(&v, l)| old_to_new[v].map(|w| (w, l.clone())))
            .collect();
        let graph = Hypergraph::new(self.k, next, edges)?.with_labels(labels)?;
        Ok(Deletion { graph, old_to_new })
    }

    /// Vertex-disjoint union; part `i` occupies ids `offsets[i]..offsets[i] + n_i`.
    pub fn disjoint_union(parts: &[Hypergraph]) -> Result<(Hypergraph, Vec<usize>)> {
        let k = match parts.first() {
            Some(p) => p.k,
            None => return Err(Error::InvalidParameter("empty disjoint union".into())),
        };
        let mut offsets = Vec::with_capacity(parts.len());
        let mut edges = Vec::new();
        let mut labels = BTreeMap::new();
        let mut base = 0;
        for p in parts {
            if p.k != k {
                return Err(Error::MixedUniformity {
                    expected: k,
                    found: p.k,
                });
            }
            offsets.push(base);
            edges.extend(
                p.edges
                    .iter()
                    .map(|e| e.iter().map(|&v| v + base).collect::<Vec<_>>()),
            );
            labels.extend(p.labels.iter().map(|(&v, l)| (v + base, l.clone())));
            base += p.n;
        }
        let g = Hypergraph::new(k, base, edges)?.with_labels(labels)?;
        Ok((g, offsets))
    }

    /// Applies `perm` (old id -> new id) to every vertex.
    pub fn relabel(&self, perm: &[usize]) -> Result<Hypergraph> {
        VertexOrdering::from_perm(perm.to_vec())?;
        if perm.len() != self.n {
            return Err(Error::InvalidOrdering(format!(
                "permutation has length {}, expected {}",
                perm.len(),
                self.n
            )));
        }
        let edges = self
            .edges
            .iter()
            .map(|e| e.iter().map(|&v| perm[v]).collect::<Vec<_>>());
        let labels = self
            .labels
            .iter()
            .map(|(&v, l)| (perm[v], l.clone()))
            .collect();
        Hypergraph::new(self.k, self.n, edges)?.with_labels(labels)
    }

    pub fn degree_report(&self) -> DegreeReport {
        let mut degrees = vec![0usize; self.n];
        let mut codegrees: HashMap<(usize, usize), usize> = HashMap::new();
        for e in &self.edges {
            for (i, &a) in e.iter().enumerate() {
                degrees[a] += 1;
                for &b in &e[i + 1..] {
                    *codegrees.entry((a, b)).or_default() += 1;
                }
            }
        }
        let max_codegree = codegrees.values().copied().max().unwrap_or(0);
        let is_linear = max_codegree <= 1;
        let is_regular = match degrees.first() {
            Some(&d0) if degrees.iter().all(|&d| d == d0) => Some(d0),
            _ => None,
        };
        let extendable_head = match degrees.iter().max() {
            Some(&top) if top >= 1 && self.n >= 2 => {
                let low: Vec<usize> = (0..self.n).filter(|&v| degrees[v] != top).collect();
                if low.len() == 1 && degrees[low[0]] + 1 == top {
                    Some(low[0])
                } else {
                    None
                }
            }
            _ => None,
        };
        DegreeReport {
            degrees,
            max_codegree,
            is_linear,
            is_regular,
            extendable_head,
        }
    }

    /// True iff the vertex/edge incidence graph is a tree.
    pub fn is_hypertree(&self) -> bool {
        let n = self.n;
        let m = self.edges.len();
        if n == 0 || n + m - 1 != m * self.k {
            return false;
        }
        let inc = self.incidence();
        let mut seen_v = vec![false; n];
        let mut seen_e = vec![false; m];
        let mut queue = VecDeque::from([0usize]);
        seen_v[0] = true;
        let mut reached = 1;
        while let Some(v) = queue.pop_front() {
            for &ei in &inc[v] {
                if seen_e[ei] {
                    continue;
                }
                seen_e[ei] = true;
                for &w in &self.edges[ei] {
                    if !seen_v[w] {
                        seen_v[w] = true;
                        reached += 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        // connected with |V| + |E| - 1 incidences is a tree
        reached == n
    }

    /// Parses the line-oriented text format.
    pub fn parse(text: &str) -> Result<Hypergraph> {
        let mut k = None;
        let mut n = None;
        let mut edges = Vec::new();
        let mut labels = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let syntax = |message: String| Error::Syntax {
                line: line_no,
                message,
            };
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let key = words.next().unwrap();
            let int = |w: &str| {
                w.parse::<usize>()
                    .map_err(|_| syntax(format!("expected a non-negative integer, got {w:?}")))
            };
            match key {
                "k" | "vertices" => {
                    let value = words
                        .next()
                        .ok_or_else(|| syntax(format!("missing value after {key}")))?;
                    let value = int(value)?;
                    if words.next().is_some() {
                        return Err(syntax(format!("trailing tokens after {key}")));
                    }
                    let slot = if key == "k" { &mut k } else { &mut n };
                    if slot.replace(value).is_some() {
                        return Err(syntax(format!("{key} given twice")));
                    }
                }
                "edge" => {
                    let e = words.map(int).collect::<Result<Vec<_>>>()?;
                    edges.push(e);
                }
                "label" => {
                    let v = words
                        .next()
                        .ok_or_else(|| syntax("missing vertex after label".into()))?;
                    let v = int(v)?;
                    let name = words.collect::<Vec<_>>().join(" ");
                    if name.is_empty() {
                        return Err(syntax("empty label".into()));
                    }
                    labels.insert(v, name);
                }
                other => return Err(syntax(format!("unknown directive {other:?}"))),
            }
        }
        let last = text.lines().count().max(1);
        let k = k.ok_or(Error::Syntax {
            line: last,
            message: "missing `k` line".into(),
        })?;
        let n = n.ok_or(Error::Syntax {
            line: last,
            message: "missing `vertices` line".into(),
        })?;
        Hypergraph::new(k, n, edges)?.with_labels(labels)
    }

    /// Canonical text form; `parse(serialize(h)) == h`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        writeln!(out, "k {}", self.k).unwrap();
        writeln!(out, "vertices {}", self.n).unwrap();
        for e in &self.edges {
            out.push_str("edge");
            for v in e {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
        }
        for (v, l) in &self.labels {
            writeln!(out, "label {v} {l}").unwrap();
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(HypergraphJson {
            k: self.k,
            n: self.n,
            edges: self.edges.clone(),
            labels: self.labels.clone(),
        })
        .expect("hypergraph JSON is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Hypergraph> {
        let raw: HypergraphJson = serde_json::from_str(text)?;
        Hypergraph::new(raw.k, raw.n, raw.edges)?.with_labels(raw.labels)
    }

    /// Parses either format: JSON when the first non-blank character is `{`.
    pub fn parse_any(text: &str) -> Result<Hypergraph> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text)
        } else {
            Self::parse(text)
        }
    }

    /// Vertices reachable from `v` through edges.
    pub fn component_of(&self, v: usize) -> BTreeSet<usize> {
        let inc = self.incidence();
        let mut seen = BTreeSet::from([v]);
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for &ei in &inc[u] {
                for &w in &self.edges[ei] {
                    if seen.insert(w) {
                        stack.push(w);
                    }
                }
            }
        }
        seen
    }
}

#[derive(Serialize, Deserialize)]
struct HypergraphJson {
    k: usize,
    n: usize,
    edges: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    labels: BTreeMap<usize, String>,
}

/// Result of [`Hypergraph::delete_vertices`].
#[derive(Clone, Debug)]
pub struct Deletion {
    pub graph: Hypergraph,
    /// `old_to_new[v]` is the new id of `v`, or `None` if it was deleted.
    pub old_to_new: Vec<Option<usize>>,
}

/// A linear order on the vertices; `perm[r]` is the vertex of rank `r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexOrdering {
    perm: Vec<usize>,
    rank: Vec<usize>,
}

impl VertexOrdering {
    pub fn identity(n: usize) -> Self {
        VertexOrdering {
            perm: (0..n).collect(),
            rank: (0..n).collect(),
        }
    }

    pub fn from_perm(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut rank = vec![usize::MAX; n];
        for (r, &v) in perm.iter().enumerate() {
            if v >= n || rank[v] != usize::MAX {
                return Err(Error::InvalidOrdering(format!(
                    "{perm:?} is not a permutation of 0..{n}"
                )));
            }
            rank[v] = r;
        }
        Ok(VertexOrdering { perm, rank })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        Self::from_perm(perm).unwrap()
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    #[inline]
    pub fn rank(&self, v: usize) -> usize {
        self.rank[v]
    }

    /// `a ≺ b`
    #[inline]
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.rank[a] < self.rank[b]
    }

    /// Sorts vertices ascending in this order.
    pub fn sort(&self, vs: &mut [usize]) {
        vs.sort_by_key(|&v| self.rank[v]);
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeReport {
    pub degrees: Vec<usize>,
    pub max_codegree: usize,
    pub is_linear: bool,
    /// `Some(d)` when every vertex has degree `d`.
    pub is_regular: Option<usize>,
    /// The unique vertex of degree `d - 1` when all others have degree `d`.
    pub extendable_head: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_edges() -> Hypergraph {
        Hypergraph::new(3, 5, [[0, 1, 2], [2, 3, 4]]).unwrap()
    }

    fn triangle() -> Hypergraph {
        Hypergraph::new(2, 3, [[0, 1], [1, 2], [0, 2]]).unwrap()
    }

    #[test]
    fn construction_and_errors() {
        let h = Hypergraph::new(3, 3, [[2, 0, 1]]).unwrap();
        assert_eq!(h.edges(), &[vec![0, 1, 2]]);
        assert_eq!(two_edges().num_edges(), 2);
        assert_eq!(triangle().edges(), &[vec![0, 1], vec![0, 2], vec![1, 2]]);

        assert!(matches!(
            Hypergraph::new(3, 3, [vec![0, 1]]),
            Err(Error::NonUniformEdge { found: 2, .. })
        ));
        assert!(matches!(
            Hypergraph::new(3, 3, [[0, 1, 3]]),
            Err(Error::OutOfRangeVertex { vertex: 3, .. })
        ));
        assert!(matches!(
            Hypergraph::new(3, 4, [[0, 1, 2], [2, 1, 0]]),
            Err(Error::DuplicateEdge(_))
        ));
        assert!(matches!(
            Hypergraph::new(3, 4, [[0, 1, 1]]),
            Err(Error::DuplicateVertexInEdge { vertex: 1, .. })
        ));
        assert!(matches!(
            Hypergraph::edgeless(1, 3),
            Err(Error::InvalidUniformity(1))
        ));
    }

    #[test]
    fn deletion() {
        let d = triangle().delete_vertices(&[0]).unwrap();
        assert_eq!(d.graph.n(), 2);
        assert_eq!(d.graph.edges(), &[vec![0, 1]]);
        assert_eq!(d.old_to_new, vec![None, Some(0), Some(1)]);

        let d = two_edges().delete_vertices(&[2]).unwrap();
        assert_eq!(d.graph.n(), 4);
        assert_eq!(d.graph.num_edges(), 0);

        let h = two_edges();
        assert_eq!(h.delete_vertices(&[]).unwrap().graph, h);
        assert!(matches!(h.delete_vertices(&[7]), Err(Error::UnknownVertex(7))));
    }

    #[test]
    fn union() {
        let e = Hypergraph::new(3, 3, [[0, 1, 2]]).unwrap();
        let (u, offs) = Hypergraph::disjoint_union(&[e.clone(), e.clone()]).unwrap();
        assert_eq!((u.n(), u.num_edges()), (6, 2));
        assert_eq!(offs, vec![0, 3]);
        assert_eq!(Hypergraph::disjoint_union(std::slice::from_ref(&e)).unwrap().0, e);

        let (u3, _) = Hypergraph::disjoint_union(&[e.clone(), e.clone(), e.clone()]).unwrap();
        let r = u3.degree_report();
        assert_eq!((u3.n(), u3.num_edges()), (9, 3));
        assert_eq!(r.is_regular, Some(1));
        assert!(r.is_linear);

        assert!(matches!(
            Hypergraph::disjoint_union(&[e, triangle()]),
            Err(Error::MixedUniformity { .. })
        ));
    }

    #[test]
    fn degrees() {
        let r = Hypergraph::new(3, 3, [[0, 1, 2]]).unwrap().degree_report();
        assert_eq!(r.degrees, vec![1, 1, 1]);
        assert_eq!(r.is_regular, Some(1));
        assert!(r.is_linear);

        let r = two_edges().degree_report();
        assert_eq!(r.degrees, vec![1, 1, 2, 1, 1]);
        assert_eq!(r.is_regular, None);
        assert!(r.is_linear);
        assert_eq!(r.extendable_head, None);

        let nonlinear = Hypergraph::new(3, 4, [[0, 1, 2], [0, 1, 3]]).unwrap();
        let r = nonlinear.degree_report();
        assert_eq!(r.max_codegree, 2);
        assert!(!r.is_linear);

        // single edge plus an isolated vertex: head of degree 0
        let h = Hypergraph::new(3, 4, [[0, 1, 2]]).unwrap();
        assert_eq!(h.degree_report().extendable_head, Some(3));
    }

    #[test]
    fn hypertrees() {
        assert!(Hypergraph::new(3, 3, [[0, 1, 2]]).unwrap().is_hypertree());
        assert!(!triangle().is_hypertree());
        assert!(two_edges().is_hypertree());
        assert!(Hypergraph::edgeless(3, 1).unwrap().is_hypertree());
        assert!(!Hypergraph::edgeless(3, 2).unwrap().is_hypertree());
        assert!(!Hypergraph::edgeless(3, 0).unwrap().is_hypertree());
        // two edges sharing two vertices: Berge cycle
        assert!(!Hypergraph::new(3, 4, [[0, 1, 2], [0, 1, 3]])
            .unwrap()
            .is_hypertree());
    }

    #[test]
    fn text_format() {
        let h = Hypergraph::parse("k 3\nvertices 3\nedge 0 1 2\n").unwrap();
        assert_eq!(h, Hypergraph::new(3, 3, [[0, 1, 2]]).unwrap());

        let messy = "# comment\nvertices 5\nk 3\n\nedge 4 3 2 # trailing\nedge 0 1 2\nlabel 0 head\n";
        let h = Hypergraph::parse(messy).unwrap();
        assert_eq!(
            h.serialize(),
            "k 3\nvertices 5\nedge 0 1 2\nedge 2 3 4\nlabel 0 head\n"
        );
        assert_eq!(Hypergraph::parse(&h.serialize()).unwrap(), h);

        assert!(matches!(
            Hypergraph::parse("k 3\nvertices 3\nedge 0 1 1\n"),
            Err(Error::DuplicateVertexInEdge { .. })
        ));
        assert!(matches!(
            Hypergraph::parse("k 3\nvertices 3\nedge 0 x 1\n"),
            Err(Error::Syntax { line: 3, .. })
        ));
        assert!(matches!(
            Hypergraph::parse("k 3\nbogus 1\n"),
            Err(Error::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            Hypergraph::parse("k 3\n"),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn json_format() {
        let h = two_edges().with_label(0, "head").unwrap();
        let j = h.to_json();
        assert_eq!(
            j,
            serde_json::json!({"k":3,"n":5,"edges":[[0,1,2],[2,3,4]],"labels":{"0":"head"}})
        );
        let back = Hypergraph::from_json(&j.to_string()).unwrap();
        assert_eq!(back, h);
        assert_eq!(Hypergraph::parse_any(&j.to_string()).unwrap(), h);
    }

    #[test]
    fn orderings() {
        let o = VertexOrdering::from_perm(vec![2, 0, 1]).unwrap();
        assert!(o.precedes(2, 0));
        assert_eq!(o.rank(1), 2);
        let mut vs = vec![0, 1, 2];
        o.sort(&mut vs);
        assert_eq!(vs, vec![2, 0, 1]);
        assert!(VertexOrdering::from_perm(vec![0, 0, 1]).is_err());
    }
}
