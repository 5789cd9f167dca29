//! Interpretable dependency-path patterns ("simplifications") between
//! co-occurring entity mentions, their ranking with or without seed labels,
//! and batch generation of new relation pairs from accepted patterns.
//!
//! The pipeline runs in stages:
//!
//! 1. [`corpus`] ingests pre-parsed, entity-annotated sentences.
//! 2. [`pattern`] extracts dependency-path patterns and lexicalizes them;
//!    [`filters`] drops negated or hedged sentences.
//! 3. [`index`] stores (sentence, pair, simplification) records.
//! 4. [`ranking`] and [`clustering`] select simplifications, automatically
//!    or through an expert [`session`].
//! 5. [`pairgen`] turns accepted simplifications into new pairs, evaluated
//!    by [`eval`] and, downstream, by the [`kbc`] link-prediction model.

pub mod clustering;
pub mod conllu;
pub mod corpus;
pub mod eval;
pub mod filters;
pub mod index;
pub mod kbc;
pub mod pairgen;
pub mod pattern;
pub mod pipeline;
pub mod ranking;
pub mod session;
pub mod synthetic;

pub use corpus::{EntityPair, Mention, Sentence, Token, TypeRoles};
pub use index::{IndexRecord, PairIndex};
pub use pattern::{PatternSet, Simplification};
pub use ranking::{LabelledPairs, Verdict, VerdictValue};
