//! Bounded analysis for a fragment of Alloy: parsing, exhaustive
//! equivalence checking, sketch solving and an LLM evaluation harness.

pub mod checker;
pub mod corpus;
pub mod eval;
pub mod harness;
pub mod parser;
pub mod relcore;
pub mod sketch;
pub mod pipeline;
#[cfg(feature = "testkit")]
pub mod testkit;
