//! Core data model: scalars, values, elements, sets, predicates and
//! transform references. Everything here is an immutable value after
//! construction and safe to share across threads.

mod codec;
mod dataset;
mod predicate;
mod transform;
mod value;

pub use codec::{decode_element, element_size_bytes, encode_element};
pub use dataset::{DataSet, Multiset};
pub use predicate::{compare_scalar, eval_predicate, CmpOp, Predicate};
pub use transform::TransformSpec;
pub use value::{
    field, Element, FieldValue, ScalarTag, ScalarValue, Value, DEFAULT_ELEMENT_SIZE_CAP,
    MAX_KEY_BYTES,
};

use thiserror::Error;

/// Errors raised by model construction, evaluation and codecs.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("float payload must be finite, got {0}")]
    NonFiniteFloat(f64),
    #[error("element key must be nonempty")]
    EmptyKey,
    #[error("element key too long: {0} bytes (max {MAX_KEY_BYTES})")]
    KeyTooLong(usize),
    #[error("record field name must be nonempty")]
    EmptyFieldName,
    #[error("duplicate record field name {0:?}")]
    DuplicateFieldName(String),
    #[error("id list entries must be nonempty")]
    EmptyIdListEntry,
    #[error("duplicate key {0:?} in data set")]
    DuplicateKey(String),
    #[error("type mismatch: expected {expected}, got {got}")]
    TypeMismatch { expected: ScalarTag, got: ScalarTag },
    #[error("field {field:?} missing on element {key:?}")]
    MissingField { field: String, key: String },
    #[error("field {field:?} on element {key:?} is not a scalar")]
    NonScalarField { field: String, key: String },
    #[error("codec error: {0}")]
    Codec(String),
}
