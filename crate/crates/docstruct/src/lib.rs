//! Hierarchical document structure parsing toolkit.
//!
//! Takes flat sets of detected document entities (from annotation files or an
//! external detector) and produces valid hierarchical document trees, via:
//!
//! - a trainable relation classifier with frequency bias and pairwise fusion
//!   ([`relhead`]),
//! - a grammar-based repair engine that turns arbitrary predicted graphs into
//!   valid trees ([`grammar`]),
//! - an hOCR conversion engine with hierarchy extensions ([`hocr`]) and a
//!   structure query language over the result ([`query`]),
//! - a strict structure-evaluation protocol: IoU, unique matching,
//!   per-category AP/mAP, and exact relation-triple F1 ([`metrics`]),
//! - corpus ingestion and statistics ([`dataio`]).
//!
//! The `docstruct` binary exposes each stage as a subcommand plus an
//! end-to-end `pipeline` command; see [`cli`].

pub mod cli;
pub mod dataio;
pub mod grammar;
pub mod hocr;
pub mod metrics;
pub mod model;
pub mod query;
pub mod relhead;
pub mod validation;

pub use model::{
    BBox, Category, CategorySet, DocumentGraph, DocumentTree, Entity, EntityId, ModelError,
    PageSize, Relation, RelationType,
};
pub use validation::{
    children_in_order, validate_tree, validate_tree_with, ValidationConfig, ValidationReport,
    Violation,
};
