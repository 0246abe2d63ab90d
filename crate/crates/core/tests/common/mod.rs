//! Shared test corpora and brute-force helpers.
#![allow(dead_code)]

use std::collections::BTreeSet;

use hypermatch_core::Hypergraph;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            go(v + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, a, out);
            let j = if k.is_multiple_of(2) { i } else { 0 };
            a.swap(j, k - 1);
        }
    }
    let mut out = Vec::new();
    heap(n, &mut (0..n).collect(), &mut out);
    out
}

/// Canonical form of an edge set over the `k`-subsets `sets` of `0..n`:
/// the lexicographically least sorted image under all vertex permutations.
struct Canon {
    /// `image[p][i]` is the index of the image of `sets[i]` under permutation `p`.
    image: Vec<Vec<usize>>,
}

impl Canon {
    fn new(n: usize, sets: &[Vec<usize>]) -> Self {
        let index = |s: &[usize]| sets.binary_search_by(|t| t.as_slice().cmp(s)).unwrap();
        let image = permutations(n)
            .into_iter()
            .map(|p| {
                sets.iter()
                    .map(|s| {
                        let mut t: Vec<usize> = s.iter().map(|&v| p[v]).collect();
                        t.sort_unstable();
                        index(&t)
                    })
                    .collect()
            })
            .collect();
        Canon { image }
    }

    fn form(&self, edges: &[usize]) -> Vec<usize> {
        let mut best: Option<Vec<usize>> = None;
        for img in &self.image {
            let mut e: Vec<usize> = edges.iter().map(|&i| img[i]).collect();
            e.sort_unstable();
            if best.as_ref().is_none_or(|b| e < *b) {
                best = Some(e);
            }
        }
        best.unwrap_or_default()
    }
}

fn is_linear(sets: &[Vec<usize>], chosen: &[usize], next: usize) -> bool {
    chosen.iter().all(|&i| {
        sets[i].iter().filter(|v| sets[next].contains(v)).count() <= 1
    })
}

/// Non-isomorphic `k`-graphs on exactly `n` vertices with at most `max_edges`
/// edges, optionally linear.
pub fn iso_classes(k: usize, n: usize, max_edges: usize, linear: bool) -> Vec<Hypergraph> {
    let sets = subsets(n, k);
    let canon = Canon::new(n, &sets);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    fn go(
        start: usize,
        sets: &[Vec<usize>],
        chosen: &mut Vec<usize>,
        max_edges: usize,
        linear: bool,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        visit(chosen);
        if chosen.len() == max_edges {
            return;
        }
        for i in start..sets.len() {
            if linear && !is_linear(sets, chosen, i) {
                continue;
            }
            chosen.push(i);
            go(i + 1, sets, chosen, max_edges, linear, visit);
            chosen.pop();
        }
    }
    go(0, &sets, &mut Vec::new(), max_edges, linear, &mut |chosen| {
        let f = canon.form(chosen);
        if seen.insert(f.clone()) {
            out.push(Hypergraph::new(k, n, f.iter().map(|&i| sets[i].clone())).unwrap());
        }
    });
    out
}

/// Non-isomorphic simple graphs on exactly `n` vertices, via edge bitmasks.
pub fn graph_classes(n: usize) -> Vec<Hypergraph> {
    let pairs = subsets(n, 2);
    let m = pairs.len();
    let canon = Canon::new(n, &pairs);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for mask in 0u32..(1 << m) {
        let edges: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).collect();
        let f = canon.form(&edges);
        if seen.insert(f.clone()) {
            out.push(Hypergraph::new(2, n, f.iter().map(|&i| pairs[i].clone())).unwrap());
        }
    }
    out
}

/// Linear 3-graphs with at most 7 vertices and 3 edges, plus all graphs with
/// at most 6 vertices, each up to isomorphism.
pub fn small_corpus() -> Vec<Hypergraph> {
    let mut out = Vec::new();
    for n in 3..=7 {
        out.extend(iso_classes(3, n, 3, true));
    }
    for n in 1..=6 {
        out.extend(graph_classes(n));
    }
    out
}

/// A random `k`-graph on `n` vertices with `m` distinct edges.
pub fn random_graph<R: Rng>(rng: &mut R, k: usize, n: usize, m: usize) -> Hypergraph {
    let mut edges = BTreeSet::new();
    let all = subsets(n, k);
    let m = m.min(all.len());
    while edges.len() < m {
        edges.insert(all.choose(rng).unwrap().clone());
    }
    Hypergraph::new(k, n, edges).unwrap()
}

/// 200 seeded random instances with k in {3, 4} and at most 12 vertices.
pub fn random_corpus() -> Vec<Hypergraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..200)
        .map(|_| {
            let k = rng.gen_range(3..=4);
            let n = rng.gen_range(k..=12);
            let m = rng.gen_range(1..=if k == 3 { 7 } else { 6 });
            random_graph(&mut rng, k, n, m)
        })
        .collect()
}

/// Matchings of `h` listed by brute force over edge subsets.
pub fn all_matchings(h: &Hypergraph) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn go(h: &Hypergraph, start: usize, used: &mut Vec<bool>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(cur.clone());
        for e in start..h.num_edges() {
            if h.edge(e).iter().all(|&v| !used[v]) {
                for &v in h.edge(e) {
                    used[v] = true;
                }
                cur.push(e);
                go(h, e + 1, used, cur, out);
                cur.pop();
                for &v in h.edge(e) {
                    used[v] = false;
                }
            }
        }
    }
    go(h, 0, &mut vec![false; h.n()], &mut Vec::new(), &mut out);
    out
}

/// P(all of `avoid` uncovered) by listing matchings.
pub fn brute_prob(h: &Hypergraph, avoid: &[usize]) -> BigRational {
    let all = all_matchings(h);
    let good = all
        .iter()
        .filter(|m| m.iter().all(|&e| avoid.iter().all(|v| !h.edge(e).contains(v))))
        .count();
    q(good as i64, all.len() as i64)
}
