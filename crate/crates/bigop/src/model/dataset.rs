//! Keyed collections: [`DataSet`] (unique keys) and [`Multiset`] (pipeline
//! intermediates that may repeat keys).

use std::collections::BTreeMap;

use super::codec::element_size_bytes;
use super::value::Element;
use super::ModelError;

/// A named set of elements with unique keys. `size_bytes` tracks the sum of
/// canonical serialized element sizes and is kept exact across mutations.
///
/// Elements iterate in ascending key order.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    name: String,
    elements: BTreeMap<String, Element>,
    size_bytes: u64,
}

impl DataSet {
    pub fn new(name: impl Into<String>) -> Self {
        DataSet {
            name: name.into(),
            elements: BTreeMap::new(),
            size_bytes: 0,
        }
    }

    /// Builds a set from elements, rejecting duplicate keys.
    pub fn from_elements(
        name: impl Into<String>,
        elements: impl IntoIterator<Item = Element>,
    ) -> Result<Self, ModelError> {
        let mut ds = DataSet::new(name);
        for e in elements {
            if ds.contains_key(&e.key) {
                return Err(ModelError::DuplicateKey(e.key));
            }
            ds.insert(e);
        }
        Ok(ds)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn size_bytes(&self) -> u64 {
        self.size_bytes
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.elements.contains_key(key)
    }

    pub fn get(&self, key: &str) -> Option<&Element> {
        self.elements.get(key)
    }

    /// Inserts an element, replacing any previous value under the same key.
    /// Returns the replaced element, if any.
    pub fn insert(&mut self, element: Element) -> Option<Element> {
        let added = element_size_bytes(&element);
        let prev = self.elements.insert(element.key.clone(), element);
        if let Some(ref p) = prev {
            self.size_bytes -= element_size_bytes(p);
        }
        self.size_bytes += added;
        prev
    }

    /// Removes a key if present; no-op otherwise.
    pub fn remove(&mut self, key: &str) -> Option<Element> {
        let prev = self.elements.remove(key);
        if let Some(ref p) = prev {
            self.size_bytes -= element_size_bytes(p);
        }
        prev
    }

    /// Elements in ascending key order.
    pub fn iter(&self) -> impl Iterator<Item = &Element> {
        self.elements.values()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.elements.keys().map(|k| k.as_str())
    }

    pub fn into_elements(self) -> impl Iterator<Item = Element> {
        self.elements.into_values()
    }
}

/// A transient list of elements in which keys may repeat. Appears only
/// between a fan-out transform and a by-key aggregation; never persisted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Multiset {
    pub elements: Vec<Element>,
}

impl Multiset {
    pub fn new(elements: Vec<Element>) -> Self {
        Multiset { elements }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Element> {
        self.elements.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::value::{field, ScalarValue};

    fn elem(key: &str, n: i64) -> Element {
        Element::record(key, vec![field("x", ScalarValue::Int(n))]).unwrap()
    }

    #[test]
    fn size_bytes_tracks_inserts_overwrites_and_removes() {
        let mut ds = DataSet::new("s");
        assert_eq!(ds.size_bytes(), 0);

        ds.insert(elem("a", 1));
        ds.insert(elem("b", 2));
        let expected: u64 = ds.iter().map(element_size_bytes).sum();
        assert_eq!(ds.size_bytes(), expected);

        // overwrite with a different-size value
        ds.insert(Element::text("a", "a much longer text value").unwrap());
        let expected: u64 = ds.iter().map(element_size_bytes).sum();
        assert_eq!(ds.size_bytes(), expected);

        ds.remove("a");
        ds.remove("missing");
        let expected: u64 = ds.iter().map(element_size_bytes).sum();
        assert_eq!(ds.size_bytes(), expected);
        assert_eq!(ds.len(), 1);
    }

    #[test]
    fn from_elements_rejects_duplicate_keys() {
        let r = DataSet::from_elements("s", vec![elem("a", 1), elem("a", 2)]);
        assert!(matches!(r, Err(ModelError::DuplicateKey(_))));
    }

    #[test]
    fn iteration_is_key_ascending() {
        let ds = DataSet::from_elements("s", vec![elem("c", 1), elem("a", 2), elem("b", 3)])
            .unwrap();
        let keys: Vec<&str> = ds.keys().collect();
        assert_eq!(keys, vec!["a", "b", "c"]);
    }
}
