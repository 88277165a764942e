//! Pseudonymization toolkit for multilingual annotated corpora.
//!
//! Documents flow through detection, a role-based anonymization policy, text
//! substitution backed by a separately stored correspondence ledger, and a
//! final audit.

pub mod audit;
pub mod corpus;
pub mod detect;
pub mod eval;
pub mod ledger;
pub mod pipeline;
pub mod policy;
pub mod pools;
pub mod substitute;
pub mod synth;
pub mod text;
