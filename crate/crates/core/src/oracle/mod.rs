//! Reference implementations used to cross-check the production code paths.
//!
//! Each one is deliberately the most direct reading of its definition:
//! quadratic pair counting, whole-universe enumeration, numerical
//! integration. They are exposed so the integration suites and the `selftest`
//! command can share them; nothing in the pipeline calls them.

mod contexts;
mod naive;
mod numeric;
mod subsets;

pub use contexts::{exhaustive_contexts, synchronized_pairwise};
pub use naive::{naive_materialize, NaiveClosure};
pub use numeric::{auc_pairs, p_value_integrated, pearson_pairwise};
pub use subsets::{effective_subsets_brute, frequent_brute};
