//! Predicates: element-local boolean conditions used by the filter operation.
//!
//! A predicate is an expression tree of field comparisons combined with
//! conjunction, disjunction and negation. Comparisons are only evaluable when
//! the element's field carries the same scalar tag as the literal; a mismatch
//! is an evaluation error, never `false`.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

use super::value::{Element, FieldValue, ScalarValue};
use super::ModelError;

/// Comparison operator over same-tagged scalars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

/// Boolean expression tree over one element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    True,
    False,
    /// `field <op> literal`; the field must be a scalar with the literal's tag.
    Cmp {
        field: String,
        op: CmpOp,
        value: ScalarValue,
    },
    /// Conjunction; evaluated left to right with short-circuiting.
    All(Vec<Predicate>),
    /// Disjunction; evaluated left to right with short-circuiting.
    Any(Vec<Predicate>),
    Not(Box<Predicate>),
}

impl Predicate {
    pub fn cmp(field: &str, op: CmpOp, value: ScalarValue) -> Self {
        Predicate::Cmp {
            field: field.to_string(),
            op,
            value,
        }
    }

    pub fn and(a: Predicate, b: Predicate) -> Self {
        Predicate::All(vec![a, b])
    }

    pub fn or(a: Predicate, b: Predicate) -> Self {
        Predicate::Any(vec![a, b])
    }

    pub fn negate(p: Predicate) -> Self {
        Predicate::Not(Box::new(p))
    }
}

/// Total order within one scalar tag: numeric for int64/float64, byte
/// lexicographic for strings, `false < true` for bools. Cross-tag comparison
/// is an error, not a coercion.
pub fn compare_scalar(a: &ScalarValue, b: &ScalarValue) -> Result<Ordering, ModelError> {
    match (a, b) {
        (ScalarValue::Int(x), ScalarValue::Int(y)) => Ok(x.cmp(y)),
        (ScalarValue::Float(x), ScalarValue::Float(y)) => {
            // floats are finite by construction, so partial_cmp is total here
            Ok(x.partial_cmp(y).expect("finite floats compare"))
        }
        (ScalarValue::Str(x), ScalarValue::Str(y)) => Ok(x.as_bytes().cmp(y.as_bytes())),
        (ScalarValue::Bool(x), ScalarValue::Bool(y)) => Ok(x.cmp(y)),
        _ => Err(ModelError::TypeMismatch {
            expected: a.tag(),
            got: b.tag(),
        }),
    }
}

/// Evaluates `p` on `e`. Pure and deterministic; returns an error when a
/// referenced field is missing, the element value is not a record, or a
/// comparison crosses scalar tags.
pub fn eval_predicate(p: &Predicate, e: &Element) -> Result<bool, ModelError> {
    match p {
        Predicate::True => Ok(true),
        Predicate::False => Ok(false),
        Predicate::Cmp { field, op, value } => {
            let fv = e
                .value
                .field(field)
                .ok_or_else(|| ModelError::MissingField {
                    field: field.clone(),
                    key: e.key.clone(),
                })?;
            let scalar = match fv {
                FieldValue::Scalar(s) => s,
                FieldValue::IdList(_) => {
                    return Err(ModelError::NonScalarField {
                        field: field.clone(),
                        key: e.key.clone(),
                    })
                }
            };
            let ord = compare_scalar(scalar, value)?;
            Ok(match op {
                CmpOp::Eq => ord == Ordering::Equal,
                CmpOp::Ne => ord != Ordering::Equal,
                CmpOp::Lt => ord == Ordering::Less,
                CmpOp::Le => ord != Ordering::Greater,
                CmpOp::Gt => ord == Ordering::Greater,
                CmpOp::Ge => ord != Ordering::Less,
            })
        }
        Predicate::All(ps) => {
            for p in ps {
                if !eval_predicate(p, e)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Predicate::Any(ps) => {
            for p in ps {
                if eval_predicate(p, e)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Predicate::Not(inner) => Ok(!eval_predicate(inner, e)?),
    }
}
