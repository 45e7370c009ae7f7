//! Typed relational query language over an annotated schema, an in-memory
//! executor, and template-based synthesis of question/query training pairs.

pub mod ast;
pub mod augment;
pub mod builder;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod geo;
pub mod kb;
pub mod library;
pub mod schema;
pub mod stats;
pub mod syntax;
pub mod template;
pub mod typecheck;
pub mod types;
pub mod validate;
pub mod value;

pub use ast::{AggOp, BinOp, CmpOp, Expr, Filter, Query, SortDir};
pub use augment::{augment, Augmented, ValuePool};
pub use dataset::DatasetRecord;
pub use engine::{execute, ExecContext, ResultSet};
pub use error::*;
pub use kb::{KnowledgeBase, Row};
pub use library::{builtin_templates, Library, LibraryOptions};
pub use schema::{AnnotationSet, FieldDef, NlSchema, Pos, TableDef};
pub use stats::{synthesis_stats, SynthesisStats};
pub use syntax::{parse, print};
pub use template::{expand, Derivation, ExpansionConfig, Template};
pub use typecheck::{typecheck, typecheck_with_slots};
pub use types::{Dimension, RowType, TypeTag};
pub use validate::{validate_text, ValidationReport};
pub use value::{Location, Value};
