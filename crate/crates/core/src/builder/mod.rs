//! Conversion of a Schema.org-style class graph and JSON-LD data into an
//! annotated relational schema.

pub mod annotate;
pub mod build;
pub mod cardinality;
pub mod classify;
pub mod vocab;

pub use annotate::{auto_annotate, merge_annotations, split_camel};
pub use build::{build, load_documents, AnnotationOverlay, BuildConfig, BuildOutput};
pub use cardinality::infer_cardinality;
pub use classify::{classify_entities, resolve_range, RangeKind};
pub use vocab::{ClassDef, PropertyDef, SchemaGraph};
