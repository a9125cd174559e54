//! Elements and their values: the atoms every set operation works on.
//!
//! An [`Element`] is a uniquely keyed datum. Its value is one of three kinds:
//! a flat record of named fields, a UTF-8 text blob, or an ordered list of
//! element keys (adjacency lists and other cross-references). Record fields
//! hold scalars, plus key lists so graph nodes can carry their out-links next
//! to numeric state.

use serde::{Deserialize, Serialize};
use std::fmt;

use super::ModelError;

/// Maximum key length in bytes.
pub const MAX_KEY_BYTES: usize = 1024;

/// Default cap on the canonical serialized size of a single element (64 MiB).
pub const DEFAULT_ELEMENT_SIZE_CAP: u64 = 64 * 1024 * 1024;

/// A typed scalar. Float payloads are always finite; construct via
/// [`ScalarValue::float`] to keep NaN/Inf out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

/// Tag identifying a scalar's type, used for comparison and predicate checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarTag {
    Int,
    Float,
    Str,
    Bool,
}

impl fmt::Display for ScalarTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScalarTag::Int => "int64",
            ScalarTag::Float => "float64",
            ScalarTag::Str => "string",
            ScalarTag::Bool => "bool",
        };
        f.write_str(s)
    }
}

impl ScalarValue {
    /// Builds a float scalar, rejecting NaN and infinities.
    pub fn float(v: f64) -> Result<Self, ModelError> {
        if v.is_finite() {
            Ok(ScalarValue::Float(v))
        } else {
            Err(ModelError::NonFiniteFloat(v))
        }
    }

    pub fn tag(&self) -> ScalarTag {
        match self {
            ScalarValue::Int(_) => ScalarTag::Int,
            ScalarValue::Float(_) => ScalarTag::Float,
            ScalarValue::Str(_) => ScalarTag::Str,
            ScalarValue::Bool(_) => ScalarTag::Bool,
        }
    }

    /// Numeric payload as f64, if this scalar is int or float.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ScalarValue::Int(i) => Some(*i as f64),
            ScalarValue::Float(f) => Some(*f),
            _ => None,
        }
    }

    /// Checks the finiteness invariant; used at decode boundaries.
    pub fn validate(&self) -> Result<(), ModelError> {
        if let ScalarValue::Float(f) = self {
            if !f.is_finite() {
                return Err(ModelError::NonFiniteFloat(*f));
            }
        }
        Ok(())
    }
}

/// The value of one record field: a scalar, or a list of element keys.
///
/// Key lists inside records let a single element carry both structured state
/// (e.g. a rank) and references to other elements (e.g. graph out-links).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldValue {
    Scalar(ScalarValue),
    IdList(Vec<String>),
}

impl FieldValue {
    pub fn as_scalar(&self) -> Option<&ScalarValue> {
        match self {
            FieldValue::Scalar(s) => Some(s),
            FieldValue::IdList(_) => None,
        }
    }

    pub fn as_idlist(&self) -> Option<&[String]> {
        match self {
            FieldValue::IdList(l) => Some(l),
            FieldValue::Scalar(_) => None,
        }
    }
}

impl From<ScalarValue> for FieldValue {
    fn from(s: ScalarValue) -> Self {
        FieldValue::Scalar(s)
    }
}

/// An element's value: a record, a text blob, or an id list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    /// Ordered list of (field name, value) pairs; names unique and nonempty.
    Record(Vec<(String, FieldValue)>),
    /// UTF-8 text blob.
    Text(String),
    /// Ordered list of element keys; entries nonempty.
    IdList(Vec<String>),
}

impl Value {
    /// Builds a record value, checking field-name uniqueness and nonemptiness.
    pub fn record(fields: Vec<(String, FieldValue)>) -> Result<Self, ModelError> {
        let v = Value::Record(fields);
        v.validate()?;
        Ok(v)
    }

    /// Builds an id-list value, checking that entries are nonempty.
    pub fn idlist(keys: Vec<String>) -> Result<Self, ModelError> {
        let v = Value::IdList(keys);
        v.validate()?;
        Ok(v)
    }

    /// Looks up a record field by name. `None` when the value is not a record
    /// or the field is absent.
    pub fn field(&self, name: &str) -> Option<&FieldValue> {
        match self {
            Value::Record(fields) => fields.iter().find(|(n, _)| n == name).map(|(_, v)| v),
            _ => None,
        }
    }

    pub fn is_record(&self) -> bool {
        matches!(self, Value::Record(_))
    }

    /// Checks all value invariants; used at construction and decode boundaries.
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            Value::Record(fields) => {
                for (i, (name, fv)) in fields.iter().enumerate() {
                    if name.is_empty() {
                        return Err(ModelError::EmptyFieldName);
                    }
                    if fields[..i].iter().any(|(n, _)| n == name) {
                        return Err(ModelError::DuplicateFieldName(name.clone()));
                    }
                    match fv {
                        FieldValue::Scalar(s) => s.validate()?,
                        FieldValue::IdList(keys) => validate_idlist(keys)?,
                    }
                }
                Ok(())
            }
            Value::Text(_) => Ok(()),
            Value::IdList(keys) => validate_idlist(keys),
        }
    }
}

fn validate_idlist(keys: &[String]) -> Result<(), ModelError> {
    if keys.iter().any(|k| k.is_empty()) {
        return Err(ModelError::EmptyIdListEntry);
    }
    Ok(())
}

/// A uniquely keyed datum. Keys are nonempty and at most [`MAX_KEY_BYTES`]
/// bytes; within any [`crate::model::DataSet`] keys are unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub key: String,
    pub value: Value,
}

impl Element {
    pub fn new(key: impl Into<String>, value: Value) -> Result<Self, ModelError> {
        let key = key.into();
        if key.is_empty() {
            return Err(ModelError::EmptyKey);
        }
        if key.len() > MAX_KEY_BYTES {
            return Err(ModelError::KeyTooLong(key.len()));
        }
        value.validate()?;
        Ok(Element { key, value })
    }

    /// Convenience constructor for a record-valued element.
    pub fn record(
        key: impl Into<String>,
        fields: Vec<(String, FieldValue)>,
    ) -> Result<Self, ModelError> {
        Element::new(key, Value::record(fields)?)
    }

    /// Convenience constructor for a text-valued element.
    pub fn text(key: impl Into<String>, text: impl Into<String>) -> Result<Self, ModelError> {
        Element::new(key, Value::Text(text.into()))
    }
}

/// Shorthand for building record fields.
pub fn field(name: &str, value: impl Into<FieldValue>) -> (String, FieldValue) {
    (name.to_string(), value.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_construction_rejects_non_finite() {
        assert!(ScalarValue::float(1.5).is_ok());
        assert!(ScalarValue::float(f64::NAN).is_err());
        assert!(ScalarValue::float(f64::INFINITY).is_err());
        assert!(ScalarValue::float(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn record_rejects_duplicate_and_empty_field_names() {
        let dup = Value::record(vec![
            field("a", ScalarValue::Int(1)),
            field("a", ScalarValue::Int(2)),
        ]);
        assert!(matches!(dup, Err(ModelError::DuplicateFieldName(_))));

        let empty = Value::record(vec![field("", ScalarValue::Int(1))]);
        assert!(matches!(empty, Err(ModelError::EmptyFieldName)));
    }

    #[test]
    fn idlist_rejects_empty_entries() {
        assert!(Value::idlist(vec!["a".into(), String::new()]).is_err());
        assert!(Value::idlist(vec!["a".into(), "b".into()]).is_ok());
    }

    #[test]
    fn element_key_limits() {
        let v = Value::Text("x".into());
        assert!(matches!(
            Element::new("", v.clone()),
            Err(ModelError::EmptyKey)
        ));
        let long = "k".repeat(MAX_KEY_BYTES + 1);
        assert!(matches!(
            Element::new(long, v.clone()),
            Err(ModelError::KeyTooLong(_))
        ));
        assert!(Element::new("k".repeat(MAX_KEY_BYTES), v).is_ok());
    }
}
