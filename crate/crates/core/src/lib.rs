//! Generation and evaluation of code-switched minimal pairs.
//!
//! The crate is organised as a pipeline of independent stages:
//!
//! - [`ingest`]: normalisation, sentence segmentation and admission gates
//! - [`lid`]: token-level language labels and label-based gates
//! - [`bundle`]: translation/alignment/parse bundles and their gates
//! - [`pairgen`]: switch points, candidate manipulations and corpus assembly
//! - [`scoring`]: sentence log-probabilities, margins and accuracy
//! - [`stats`]: permutation tests, Fleiss's kappa and the margin analyses
//!
//! Every stage is a pure function over its inputs except where an external
//! backend (segmenter, monolingual LID, scorer) is involved; those sit
//! behind traits with an HTTP implementation and a deterministic local one.

pub mod backend;
pub mod bundle;
pub mod error;
pub mod ingest;
pub mod judgment;
pub mod jsonl;
pub mod levenshtein;
pub mod lid;
pub mod pairgen;
pub mod rng;
pub mod scoring;
pub mod sentence;
pub mod stats;
pub mod synth;
pub mod upos;

pub use error::{Error, Result};
pub use sentence::{CsLabel, CsSentence, OtherReason, SentenceRecord};
pub use upos::Upos;
