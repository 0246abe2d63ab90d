mod common;

use common::q;
use hypermatch_core::constructions::{counterexample_stats, s_extend, ExtendableGraph};
use hypermatch_core::count::{
    self, convolve_counts, defect_from_generating, match_coeffs, matching_polynomial, prob_avoid,
};
use hypermatch_core::dynamics::{self, DynParams};
use hypermatch_core::poly::IntPoly;
use hypermatch_core::walktree::{build_walk_tree, prob_on_hypertree, prob_via_recursion};
use hypermatch_core::{CountOptions, ExactSampler, Hypergraph, VertexOrdering};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use proptest::sample::subsequence;

fn opts() -> CountOptions {
    CountOptions::default()
}

fn arb_graph(k: std::ops::RangeInclusive<usize>, max_n: usize, max_m: usize) -> impl Strategy<Value = Hypergraph> {
    k.prop_flat_map(move |k| (Just(k), k..=max_n.max(k)))
        .prop_flat_map(move |(k, n)| {
            (
                Just(k),
                Just(n),
                prop::collection::vec(subsequence((0..n).collect::<Vec<_>>(), k), 0..=max_m),
            )
        })
        .prop_map(|(k, n, mut edges)| {
            edges.sort();
            edges.dedup();
            Hypergraph::new(k, n, edges).unwrap()
        })
}

fn arb_graph_with_vertex() -> impl Strategy<Value = (Hypergraph, usize)> {
    arb_graph(2..=4, 9, 7).prop_flat_map(|h| {
        let n = h.n();
        (Just(h), 0..n)
    })
}

fn arb_unit() -> impl Strategy<Value = BigRational> {
    (0i64..=1000, 1i64..=1000).prop_map(|(a, b)| q(a.min(b), b))
}

fn poly_of(counts: &[num_bigint::BigUint]) -> IntPoly {
    IntPoly::new(counts.iter().map(|c| BigInt::from(c.clone())).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn deletion_composes(h in arb_graph(2..=4, 10, 8), picks in prop::collection::vec(any::<(bool, bool)>(), 10)) {
        let n = h.n();
        let s: Vec<usize> = (0..n).filter(|&v| picks[v].0).collect();
        let t: Vec<usize> = (0..n).filter(|&v| !picks[v].0 && picks[v].1).collect();
        let both: Vec<usize> = s.iter().chain(&t).copied().collect();
        let once = h.delete_vertices(&both).unwrap();
        let first = h.delete_vertices(&s).unwrap();
        let t_new: Vec<usize> = t.iter().map(|&v| first.old_to_new[v].unwrap()).collect();
        let twice = first.graph.delete_vertices(&t_new).unwrap();
        prop_assert_eq!(&once.graph, &twice.graph);
        for v in 0..n {
            let composed = first.old_to_new[v].and_then(|w| twice.old_to_new[w]);
            prop_assert_eq!(once.old_to_new[v], composed);
        }
    }

    #[test]
    fn union_degree_report_merges(a in arb_graph(3..=3, 8, 6), b in arb_graph(3..=3, 8, 6)) {
        let (u, offsets) = Hypergraph::disjoint_union(&[a.clone(), b.clone()]).unwrap();
        prop_assert_eq!(offsets, vec![0, a.n()]);
        let (ra, rb, ru) = (a.degree_report(), b.degree_report(), u.degree_report());
        let mut degrees = ra.degrees.clone();
        degrees.extend(&rb.degrees);
        prop_assert_eq!(ru.degrees, degrees);
        prop_assert_eq!(ru.max_codegree, ra.max_codegree.max(rb.max_codegree));
        prop_assert_eq!(ru.is_linear, ra.is_linear && rb.is_linear);
        let regular = match (ra.is_regular, rb.is_regular) {
            (Some(x), Some(y)) if x == y => Some(x),
            _ => None,
        };
        prop_assert_eq!(ru.is_regular, regular);
    }

    #[test]
    fn serialization_round_trips(h in arb_graph(2..=5, 12, 10), label in "[a-z]{1,6}") {
        let h = h.with_label(0, label).unwrap();
        let text = h.serialize();
        let back = Hypergraph::parse(&text).unwrap();
        prop_assert_eq!(&back, &h);
        prop_assert_eq!(back.serialize(), text);
        let json = serde_json::to_string(&h.to_json()).unwrap();
        prop_assert_eq!(Hypergraph::parse_any(&json).unwrap(), h);
    }

    #[test]
    fn product_rule(a in arb_graph(3..=3, 8, 6), b in arb_graph(3..=3, 8, 6)) {
        let (u, _) = Hypergraph::disjoint_union(&[a.clone(), b.clone()]).unwrap();
        let (ca, cb) = (match_coeffs(&a, opts()).unwrap(), match_coeffs(&b, opts()).unwrap());
        let cu = match_coeffs(&u, opts()).unwrap();
        prop_assert_eq!(poly_of(cu.counts()), poly_of(&convolve_counts(&ca, &cb)));
        let prod = &matching_polynomial(&a, opts()).unwrap().poly() * &matching_polynomial(&b, opts()).unwrap().poly();
        prop_assert_eq!(matching_polynomial(&u, opts()).unwrap().poly(), prod);
    }

    #[test]
    fn vertex_recursion_and_substitution((h, v) in arb_graph_with_vertex()) {
        let m = matching_polynomial(&h, opts()).unwrap().poly();
        let mut rhs = matching_polynomial(&h.delete_vertices(&[v]).unwrap().graph, opts()).unwrap().poly().shift(1);
        for e in h.edges().iter().filter(|e| e.contains(&v)) {
            rhs = &rhs - &matching_polynomial(&h.delete_vertices(e).unwrap().graph, opts()).unwrap().poly();
        }
        prop_assert_eq!(&rhs, &m);
        let qk = count::generating_polynomial(&h, opts()).unwrap().poly();
        prop_assert_eq!(defect_from_generating(&qk, h.n(), h.k()), m);
    }

    #[test]
    fn avoidance_is_a_ratio_of_totals((h, v) in arb_graph_with_vertex()) {
        let p = prob_avoid(&h, &[v], &[], opts()).unwrap().into_value();
        let q1 = |g: &Hypergraph| -> BigInt {
            count::generating_polynomial(g, opts()).unwrap().poly().eval(&BigInt::one())
        };
        let hv = h.delete_vertices(&[v]).unwrap().graph;
        prop_assert_eq!(&p, &BigRational::new(q1(&hv), q1(&h)));
        if h.degree(v) == 0 {
            prop_assert!(p.is_one());
        }
    }

    #[test]
    fn chain_rule((h, a) in arb_graph_with_vertex(), shift in 1usize..9) {
        let b = (a + shift) % h.n();
        prop_assume!(a != b);
        let joint = prob_avoid(&h, &[a, b], &[], opts()).unwrap().into_value();
        let pa = prob_avoid(&h, &[a], &[], opts()).unwrap().into_value();
        let pb_a = prob_avoid(&h, &[b], &[a], opts()).unwrap().into_value();
        prop_assert_eq!(joint, pa * pb_a);
    }

    #[test]
    fn components_are_independent(a in arb_graph(3..=3, 7, 5), b in arb_graph(3..=3, 7, 5), x in 0usize..7, y in 0usize..7) {
        let (x, y) = (x % a.n(), y % b.n());
        let (u, off) = Hypergraph::disjoint_union(&[a.clone(), b.clone()]).unwrap();
        let joint = prob_avoid(&u, &[x, off[1] + y], &[], opts()).unwrap().into_value();
        let pa = prob_avoid(&a, &[x], &[], opts()).unwrap().into_value();
        let pb = prob_avoid(&b, &[y], &[], opts()).unwrap().into_value();
        prop_assert_eq!(joint, pa * pb);
    }

    #[test]
    fn three_routes_agree((h, v) in arb_graph_with_vertex(), seed in any::<u64>()) {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let order = VertexOrdering::random(h.n(), &mut rng);
        let brute = prob_avoid(&h, &[v], &[], opts()).unwrap().into_value();
        let rec = prob_via_recursion(&h, v, &order, 1 << 30).unwrap().into_value();
        let wt = build_walk_tree(&h, v, &order, 1_000_000).unwrap();
        prop_assert!(wt.tree().is_hypertree());
        let tree = prob_on_hypertree(wt.tree(), wt.root()).unwrap().into_value();
        prop_assert_eq!(&brute, &rec);
        prop_assert_eq!(&brute, &tree);
    }

    #[test]
    fn hypertrees_map_onto_themselves(k in 2usize..=4, parents in prop::collection::vec(any::<prop::sample::Index>(), 0..6), root in any::<prop::sample::Index>()) {
        // grow a random hypertree edge by edge from existing vertices
        let mut n = 1;
        let mut edges = Vec::new();
        for p in &parents {
            let at = p.index(n);
            let mut e = vec![at];
            e.extend(n..n + k - 1);
            n += k - 1;
            edges.push(e);
        }
        let h = Hypergraph::new(k, n, edges).unwrap();
        prop_assert!(h.is_hypertree());
        let v = root.index(n);
        let wt = build_walk_tree(&h, v, &VertexOrdering::identity(n), 1_000_000).unwrap();
        prop_assert_eq!(wt.tree().n(), n);
        prop_assert_eq!(wt.tree().num_edges(), h.num_edges());
        prop_assert_eq!(
            prob_on_hypertree(wt.tree(), wt.root()).unwrap().into_value(),
            prob_avoid(&h, &[v], &[], opts()).unwrap().into_value()
        );
    }

    #[test]
    fn head_law_on_arbitrary_bases(h in arb_graph(2..=3, 6, 4), head in any::<prop::sample::Index>(), d in 2usize..=3) {
        let head = head.index(h.n());
        let f = ExtendableGraph::designated(h, head, d).unwrap();
        let s = s_extend(&f, 10_000).unwrap();
        let p = prob_avoid(f.graph(), &[head], &[], opts()).unwrap().into_value();
        let ps = prob_avoid(s.graph(), &[s.head()], &[], opts()).unwrap().into_value();
        prop_assert_eq!(ps, dynamics::g(DynParams::new(f.k(), d as u64).unwrap(), &p).unwrap());
    }

    #[test]
    fn unranking_is_a_bijection(h in arb_graph(2..=3, 8, 7)) {
        let mut sampler = ExactSampler::new(&h, opts()).unwrap();
        let total: u64 = sampler.total().try_into().unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for r in 0..total {
            seen.insert(sampler.unrank(r.into()).unwrap());
        }
        prop_assert_eq!(seen.len() as u64, total);
        prop_assert!(sampler.unrank(total.into()).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn g_decreases_and_f_increases(k in 2usize..=5, d in 2u64..=50, x in arb_unit(), y in arb_unit()) {
        prop_assume!(x != y);
        let (x, y) = if x < y { (x, y) } else { (y, x) };
        let p = DynParams::new(k, d).unwrap();
        prop_assert!(dynamics::g(p, &x).unwrap() > dynamics::g(p, &y).unwrap());
        prop_assert!(dynamics::f(p, &x).unwrap() < dynamics::f(p, &y).unwrap());
    }

    #[test]
    fn alpha_enclosure_is_sound(k in 2usize..=5, d in 2u64..=500) {
        let p = DynParams::new(k, d).unwrap();
        let a = dynamics::alpha(p, 64);
        prop_assert!(dynamics::phi_alpha(p, &a.lo) < BigRational::zero());
        prop_assert!(dynamics::phi_alpha(p, &a.hi) > BigRational::zero());
        // g is decreasing, so g maps [lo, hi] onto [g(hi), g(lo)]
        let (glo, ghi) = (dynamics::g(p, &a.hi).unwrap(), dynamics::g(p, &a.lo).unwrap());
        prop_assert!(glo <= a.hi && ghi >= a.lo);
    }

    #[test]
    fn center_closed_form(k in 2usize..=5, d in 1usize..=30, p in arb_unit()) {
        prop_assume!(!p.is_zero());
        let s = counterexample_stats(k, d, &p, &q(1, 10)).unwrap();
        let pk = num_traits::pow(p.clone(), k - 1);
        let lhs = &s.p_center * (BigRational::one() + BigRational::from_integer(d.into()) * pk);
        prop_assert!(lhs.is_one());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn parity_subsequences_settle(d in 6u64..=40, a in 1i64..=999) {
        let p = DynParams::new(3, d).unwrap();
        let t = dynamics::iterate(p, &q(a, 1000), 120, &q(0, 1), 64).unwrap();
        // f is increasing, so f-iterates never turn; rounding may only stall them
        let steps: Vec<std::cmp::Ordering> = t
            .points
            .windows(2)
            .map(|w| w[1].cmp(&w[0]))
            .filter(|o| o.is_ne())
            .collect();
        prop_assert!(steps.windows(2).all(|w| w[0] == w[1]), "trajectory turns");
    }

    #[test]
    fn certified_triples_are_ordered(k in 3usize..=4, d in 6u64..=400) {
        let p = DynParams::new(k, d).unwrap();
        let fp = dynamics::beta_gamma(p, 64).unwrap();
        prop_assert!(fp.gamma.hi < fp.alpha.lo);
        prop_assert!(fp.alpha.hi < fp.beta.lo);
        let gb = (dynamics::g(p, &fp.beta.hi).unwrap(), dynamics::g(p, &fp.beta.lo).unwrap());
        prop_assert!(gb.0 <= fp.gamma.hi && gb.1 >= fp.gamma.lo);
    }
}
