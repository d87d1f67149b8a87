//! Ground forward chaining to the named-individual entailment closure.

mod closure;
mod engine;
mod union_find;

pub use closure::{EntailmentClosure, MaterializeStats};
pub use engine::{entails, is_consistent, materialize, Reasoner};
