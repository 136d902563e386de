//! Similarity estimation over fully dynamic bipartite graph streams.
//!
//! A stream is a sequence of `(user, item, +/-)` edge events. This crate
//! estimates, for any two users, the number of items they share and their
//! Jaccard coefficient:
//!
//! * [`vos`] keeps a virtual odd sketch per user inside one shared bit array
//!   and handles deletions exactly (xor cancels), with O(1) work per event;
//! * [`baselines`] holds MinHash and one-permutation hashing extended to
//!   deletions, and a random-pairing sampler;
//! * [`oracle`] keeps the exact sets for ground truth;
//! * [`stream`], [`metrics`] and [`experiment`] build streams, score
//!   estimates and run the comparison end to end.

pub mod baselines;
pub mod error;
pub mod experiment;
pub mod hashing;
pub mod method;
pub mod metrics;
pub mod oracle;
pub mod stream;
pub mod vos;

pub use error::{Error, Result};
pub use hashing::{HashConfig, HashKey};
pub use method::{MethodKind, SimilarityMethod};
pub use oracle::{ExactState, PairTruth};
pub use stream::{Action, CommunityGraph, DynConfig, ItemId, StreamElement, UserId};
pub use vos::{OddSketch, PairEstimate, VosState};
