//! Named, parameterized transform specifications.
//!
//! Transforms are user-defined computations; a portable prescription cannot
//! carry arbitrary code, so it names a transform from a registry instead. The
//! registry itself (built-ins plus the in-process extension point) lives in
//! the engine; this module defines the declarative reference.

use serde::{Deserialize, Serialize};

use super::value::ScalarValue;

/// Reference to a registered transform plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<(String, ScalarValue)>,
}

impl TransformSpec {
    pub fn new(name: &str) -> Self {
        TransformSpec {
            name: name.to_string(),
            params: Vec::new(),
        }
    }

    pub fn with_param(mut self, name: &str, value: ScalarValue) -> Self {
        self.params.push((name.to_string(), value));
        self
    }

    pub fn param(&self, name: &str) -> Option<&ScalarValue> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}
