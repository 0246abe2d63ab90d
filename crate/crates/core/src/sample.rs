//! Uniform sampling of matchings.
//!
//! [`ExactSampler`] is exact: it draws a uniform rank in `0..N(H)` and
//! unranks it by walking the edges in canonical order, taking edge `e` when
//! the rank falls among the matchings of the residual instance that contain
//! `e`. [`mc_estimate_avoid`] runs the lazy Glauber chain instead and is only
//! an estimate.

use std::collections::HashMap;

use num_bigint::{BigUint, RandBigInt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitset::BitSet;
use crate::count::{CountOptions, Engine};
use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;

/// Pairwise vertex-disjoint edge indices, ascending.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matching {
    edges: Vec<usize>,
}

impl Matching {
    pub fn new(h: &Hypergraph, mut edges: Vec<usize>) -> Result<Self> {
        edges.sort_unstable();
        edges.dedup();
        let mut used = vec![false; h.n()];
        for &e in &edges {
            if e >= h.num_edges() {
                return Err(Error::InvalidParameter(format!("no edge {e}")));
            }
            for &v in h.edge(e) {
                if std::mem::replace(&mut used[v], true) {
                    return Err(Error::InvalidParameter(format!(
                        "edges {edges:?} overlap at vertex {v}"
                    )));
                }
            }
        }
        Ok(Matching { edges })
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

    pub fn covers(&self, h: &Hypergraph, v: usize) -> bool {
        self.edges.iter().any(|&e| h.edge(e).contains(&v))
    }
}

pub struct ExactSampler<'a> {
    h: &'a Hypergraph,
    engine: Engine<'a>,
    totals: HashMap<BitSet, BigUint>,
    total: BigUint,
}

impl<'a> ExactSampler<'a> {
    pub fn new(h: &'a Hypergraph, opts: CountOptions) -> Result<Self> {
        let mut engine = Engine::new(
            h,
            CountOptions {
                memoize: true,
                ..opts
            },
        );
        let total = engine.count(&BitSet::full(h.num_edges()))?.iter().sum();
        Ok(ExactSampler {
            h,
            engine,
            totals: HashMap::new(),
            total,
        })
    }

    /// N(H).
    pub fn total(&self) -> &BigUint {
        &self.total
    }

    fn residual_total(&mut self, active: &BitSet) -> Result<BigUint> {
        if let Some(t) = self.totals.get(active) {
            return Ok(t.clone());
        }
        let t: BigUint = self.engine.count(active)?.iter().sum();
        self.totals.insert(active.clone(), t.clone());
        Ok(t)
    }

    /// The matching of rank `rank` (`0 <= rank < N(H)`); a bijection onto all matchings.
    pub fn unrank(&mut self, mut rank: BigUint) -> Result<Matching> {
        if rank >= self.total {
            return Err(Error::InvalidParameter(format!(
                "rank {rank} out of range for {} matchings",
                self.total
            )));
        }
        let mut active = BitSet::full(self.h.num_edges());
        let mut chosen = Vec::new();
        while let Some(e) = active.first() {
            let mut with = active.clone();
            with.difference_with(self.engine.conflicts(e));
            let n_with = self.residual_total(&with)?;
            if rank < n_with {
                chosen.push(e);
                active = with;
            } else {
                rank -= n_with;
                active.remove(e);
            }
        }
        Ok(Matching { edges: chosen })
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Matching> {
        let rank = rng.gen_biguint_below(&self.total);
        self.unrank(rank)
    }
}

/// One uniformly random matching, deterministic in `seed`.
pub fn sample_matching_exact(h: &Hypergraph, seed: u64, opts: CountOptions) -> Result<Matching> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ExactSampler::new(h, opts)?.sample(&mut rng)
}

/// Lazy Glauber dynamics on the matchings of a hypergraph.
pub struct GlauberChain<'a, R> {
    h: &'a Hypergraph,
    /// Edge covering each vertex in the current matching.
    owner: Vec<Option<usize>>,
    in_matching: Vec<bool>,
    rng: R,
}

impl<'a, R: Rng> GlauberChain<'a, R> {
    /// Starts from the empty matching.
    pub fn new(h: &'a Hypergraph, rng: R) -> Self {
        GlauberChain {
            h,
            owner: vec![None; h.n()],
            in_matching: vec![false; h.num_edges()],
            rng,
        }
    }

    /// Picks a uniform edge; removes it (if present) or adds it (if addable)
    /// with probability 1/2, otherwise stays.
    pub fn step(&mut self) {
        let m = self.h.num_edges();
        if m == 0 {
            return;
        }
        let e = self.rng.gen_range(0..m);
        let flip: bool = self.rng.gen();
        if !flip {
            return;
        }
        if self.in_matching[e] {
            self.in_matching[e] = false;
            for &v in self.h.edge(e) {
                self.owner[v] = None;
            }
        } else if self.h.edge(e).iter().all(|&v| self.owner[v].is_none()) {
            self.in_matching[e] = true;
            for &v in self.h.edge(e) {
                self.owner[v] = Some(e);
            }
        }
    }

    pub fn covers(&self, v: usize) -> bool {
        self.owner[v].is_some()
    }

    pub fn matching(&self) -> Matching {
        Matching {
            edges: (0..self.h.num_edges())
                .filter(|&e| self.in_matching[e])
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    /// Batch-means standard error.
    pub stderr: f64,
    pub samples: usize,
    pub steps: u64,
}

const BATCHES: usize = 20;

/// Glauber estimate of P_H(v̄); the first `steps / 2` steps are discarded.
pub fn mc_estimate_avoid(
    h: &Hypergraph,
    v: usize,
    steps: u64,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    mc_estimate_avoid_all(h, &[v], steps, samples, seed)
}

/// Glauber estimate of the probability that none of `avoid` is covered.
pub fn mc_estimate_avoid_all(
    h: &Hypergraph,
    avoid: &[usize],
    steps: u64,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if steps == 0 || samples == 0 {
        return Err(Error::InvalidParameter(
            "steps and samples must be positive".into(),
        ));
    }
    if let Some(&v) = avoid.iter().find(|&&v| v >= h.n()) {
        return Err(Error::UnknownVertex(v));
    }
    let mut chain = GlauberChain::new(h, ChaCha8Rng::seed_from_u64(seed));
    let burn_in = steps / 2;
    for _ in 0..burn_in {
        chain.step();
    }
    let stride = ((steps - burn_in) / samples as u64).max(1);
    let mut hits = Vec::with_capacity(samples);
    for _ in 0..samples {
        for _ in 0..stride {
            chain.step();
        }
        hits.push(avoid.iter().all(|&v| !chain.covers(v)));
    }
    let mean = hits.iter().filter(|&&b| b).count() as f64 / samples as f64;
    let batches = BATCHES.min(samples);
    let stderr = if batches < 2 {
        (mean * (1.0 - mean) / samples as f64).sqrt()
    } else {
        let size = samples / batches;
        let means: Vec<f64> = hits
            .chunks(size)
            .take(batches)
            .map(|c| c.iter().filter(|&&b| b).count() as f64 / c.len() as f64)
            .collect();
        let grand = means.iter().sum::<f64>() / batches as f64;
        let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
        (var / batches as f64).sqrt()
    };
    Ok(McEstimate {
        estimate: mean,
        stderr,
        samples,
        steps: burn_in + stride * samples as u64,
    })
}

/// Exact sampler frequencies, for diagnostics: `counts[m]` per sampled matching.
pub fn sample_histogram(
    h: &Hypergraph,
    samples: usize,
    seed: u64,
    opts: CountOptions,
) -> Result<(BigUint, HashMap<Matching, usize>)> {
    let mut sampler = ExactSampler::new(h, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hist = HashMap::new();
    for _ in 0..samples {
        *hist.entry(sampler.sample(&mut rng)?).or_insert(0) += 1;
    }
    Ok((sampler.total().clone(), hist))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn shared() -> Hypergraph {
        Hypergraph::new(3, 5, [[0, 1, 2], [2, 3, 4]]).unwrap()
    }

    #[test]
    fn unrank_is_bijective() {
        let fano = Hypergraph::new(
            3,
            7,
            [[0, 1, 2], [0, 3, 4], [0, 5, 6], [1, 3, 5], [1, 4, 6], [2, 3, 6], [2, 4, 5]],
        )
        .unwrap();
        let mut s = ExactSampler::new(&fano, CountOptions::default()).unwrap();
        let n: usize = s.total().try_into().unwrap();
        assert_eq!(n, 8); // empty + 7 single edges; any two lines meet
        let all: BTreeSet<_> = (0..n).map(|r| s.unrank(r.into()).unwrap()).collect();
        assert_eq!(all.len(), n);
        assert!(s.unrank(n.into()).is_err());
    }

    #[test]
    fn single_and_empty() {
        let e = Hypergraph::new(3, 3, [[0, 1, 2]]).unwrap();
        for seed in 0..20 {
            let m = sample_matching_exact(&e, seed, CountOptions::default()).unwrap();
            assert!(m.len() <= 1);
        }
        let empty = Hypergraph::edgeless(3, 4).unwrap();
        for seed in 0..5 {
            assert!(sample_matching_exact(&empty, seed, CountOptions::default())
                .unwrap()
                .is_empty());
        }
        assert_eq!(
            sample_matching_exact(&e, 7, CountOptions::default()).unwrap(),
            sample_matching_exact(&e, 7, CountOptions::default()).unwrap()
        );
    }

    #[test]
    fn shared_vertex_frequencies() {
        let h = shared();
        let samples = 30_000;
        let (total, hist) = sample_histogram(&h, samples, 11, CountOptions::default()).unwrap();
        assert_eq!(total, 3u32.into());
        assert_eq!(hist.len(), 3);
        let p = 1.0 / 3.0;
        let sigma = (samples as f64 * p * (1.0 - p)).sqrt();
        for &c in hist.values() {
            assert!((c as f64 - samples as f64 * p).abs() < 3.0 * sigma, "{hist:?}");
        }
    }

    #[test]
    fn glauber_estimates() {
        let e = Hypergraph::new(3, 3, [[0, 1, 2]]).unwrap();
        let r = mc_estimate_avoid(&e, 0, 200_000, 20_000, 1).unwrap();
        assert!((r.estimate - 0.5).abs() < 3.0 * r.stderr, "{r:?}");

        let r = mc_estimate_avoid(&shared(), 2, 400_000, 20_000, 2).unwrap();
        assert!((r.estimate - 1.0 / 3.0).abs() < 3.0 * r.stderr, "{r:?}");

        let empty = Hypergraph::edgeless(3, 3).unwrap();
        let r = mc_estimate_avoid(&empty, 1, 100, 10, 3).unwrap();
        assert_eq!((r.estimate, r.stderr), (1.0, 0.0));

        assert!(mc_estimate_avoid(&e, 0, 0, 10, 1).is_err());
        assert_eq!(
            mc_estimate_avoid(&e, 0, 1000, 10, 5).unwrap(),
            mc_estimate_avoid(&e, 0, 1000, 10, 5).unwrap()
        );
    }

    #[test]
    fn matching_validation() {
        let h = shared();
        assert!(Matching::new(&h, vec![0, 1]).is_err());
        let m = Matching::new(&h, vec![1]).unwrap();
        assert!(m.covers(&h, 2));
        assert!(!m.covers(&h, 0));
    }
}
