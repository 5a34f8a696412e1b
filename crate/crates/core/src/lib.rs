//! Two-layer NMF dynamic topic modeling for timestamped text corpora.
//!
//! Layer one fits an NMF topic model per disjoint time window, choosing the
//! number of topics by word-embedding coherence. Layer two stacks the
//! truncated topic-term rows of every window model into a single matrix and
//! factorizes it again; each window topic is assigned to the dynamic topic
//! that carries its largest weight.
//!
//! The crate is `no_std` and only needs an allocator. File formats, ingestion
//! and the command line live in the `dyntopic` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod math;

pub mod coherence;
pub mod corpus;
pub mod dynamic;
pub mod embeddings;
pub mod error;
pub mod linalg;
pub mod nmf;
pub mod synth;
pub mod validation;

pub use error::{Error, Result};
