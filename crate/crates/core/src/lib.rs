//! Modal-logic analysis of natural language inference labels.
//!
//! The NLI relations entailment, contradiction and neutral are read as
//! formulas of the modal logic K under three readings (material conditional,
//! strict conditional, strict conditional with existential import). The
//! crate decides K-validity with a prefixed tableau, reproduces the catalog
//! of meta-inferential relations, derives possible labels for items built
//! from labelled items, and scores model predictions for consistency.

pub mod dataset;
pub mod formula;
pub mod kripke;
pub mod meta;
pub mod readings;
pub mod scorer;
pub mod tableau;

pub use formula::{parse, Formula, ParseError};
pub use kripke::KripkeModel;
pub use readings::{encode, Label, Reading};
pub use tableau::{Prover, ProverError, TableauResult, Verdict};
