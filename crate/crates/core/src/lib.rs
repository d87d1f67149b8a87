pub mod domain;
pub mod entailment;
pub mod error;
pub mod evidence;
pub mod fixtures;
pub mod kb;
pub mod mining;
pub mod ontology;
pub mod oracle;
pub mod pipeline;
pub mod reasoner;
pub mod report;
pub mod search;
pub mod selftest;
pub mod stats;
pub mod synth;
pub mod transfer;

pub use entailment::{Entailment, Name};
pub use error::{Error, Result};
