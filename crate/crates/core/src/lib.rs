//! Framewise: a forward-chaining engine that classifies structured data
//! containers under several compliance frameworks at once.
//!
//! Containers (databases, tables, columns) form a containment forest with
//! declared joinability edges. Frameworks contribute labels and rules;
//! rules fire per governance scope, and inference runs the immediate
//! consequence operator to its least fixed point. Because every derived
//! assertion is attributed to the framework whose rule produced it,
//! divergent regimes coexist side by side instead of being reconciled.
//!
//! The crate is organized around the pipeline:
//!
//! * [`turtle`] / [`graph`] — parse declaration documents into triples
//! * [`skolem`] — replace anonymous nodes with content-hashed ids
//! * [`manifest`] — framework manifests and dependency ordering
//! * [`loader`] — discover bundles, build the model and environment
//! * [`resolver`] — effective rule sets under inheritance and override
//! * [`store`] — indexed fact store, containment materialization, cache
//! * [`conditions`] — the condition language and its evaluator
//! * [`engine`] — fixed-point inference, release, explanation
//! * [`kanon`] — k-anonymity measurement over record tables
//! * [`compare`] — release-suitability verdicts across frameworks

pub mod cache;
pub mod compare;
pub mod conditions;
pub mod engine;
pub mod error;
pub mod graph;
pub mod ids;
pub mod kanon;
pub mod loader;
pub mod manifest;
pub mod metamodel;
pub mod resolver;
pub mod skolem;
pub mod store;
pub mod turtle;
pub mod vocab;

pub use error::{Error, Result};
pub use ids::Id;
