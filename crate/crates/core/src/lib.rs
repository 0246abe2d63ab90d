//! Exact random-matching statistics for k-uniform hypergraphs.
//!
//! The crate counts matchings exactly, builds conflict-free walk trees (the
//! hypergraph analogue of Godsil's path tree), evaluates the probability that
//! a uniformly random matching leaves a vertex uncovered by three independent
//! routes, builds the extension towers used to separate those probabilities
//! in regular linear hypergraphs, and certifies the fixed points of the
//! associated one-dimensional dynamics.

pub mod bitset;
pub mod constructions;
pub mod count;
pub mod dynamics;
pub mod error;
pub mod hypergraph;
pub mod poly;
pub mod sample;
pub mod walktree;

pub use count::{CountOptions, MatchCoeffs, MatchingPolynomial, PolyForm, Probability};
pub use error::{Error, Result};
pub use hypergraph::{DegreeReport, Hypergraph, VertexOrdering};
pub use sample::{ExactSampler, Matching, McEstimate};
pub use walktree::{ConflictFreeWalk, WalkTree};
