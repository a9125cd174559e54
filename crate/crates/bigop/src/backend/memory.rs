//! Thread-safe in-memory reference backend.

use parking_lot::RwLock;
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::model::{element_size_bytes, Element, DEFAULT_ELEMENT_SIZE_CAP};

use super::{BackendError, StorageBackend};

#[derive(Default)]
struct SetState {
    elements: BTreeMap<String, Element>,
    size_bytes: u64,
}

/// In-memory [`StorageBackend`]. One `RwLock` per set keeps single-element
/// ops linearizable per key while scans read each key's latest value lazily.
pub struct MemoryBackend {
    sets: RwLock<HashMap<String, Arc<RwLock<SetState>>>>,
    element_size_cap: u64,
}

impl MemoryBackend {
    pub fn new() -> Self {
        Self::with_element_cap(DEFAULT_ELEMENT_SIZE_CAP)
    }

    pub fn with_element_cap(element_size_cap: u64) -> Self {
        MemoryBackend {
            sets: RwLock::new(HashMap::new()),
            element_size_cap,
        }
    }

    fn set(&self, name: &str) -> Result<Arc<RwLock<SetState>>, BackendError> {
        self.sets
            .read()
            .get(name)
            .cloned()
            .ok_or_else(|| BackendError::SetNotFound(name.to_string()))
    }
}

impl Default for MemoryBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl StorageBackend for MemoryBackend {
    fn id(&self) -> &str {
        "memory"
    }

    fn create_set(&self, name: &str) -> Result<(), BackendError> {
        if name.is_empty() {
            return Err(BackendError::SetNotFound(String::new()));
        }
        let mut sets = self.sets.write();
        if sets.contains_key(name) {
            return Err(BackendError::SetAlreadyExists(name.to_string()));
        }
        sets.insert(name.to_string(), Arc::new(RwLock::new(SetState::default())));
        Ok(())
    }

    fn drop_set(&self, name: &str) -> Result<(), BackendError> {
        self.sets
            .write()
            .remove(name)
            .map(|_| ())
            .ok_or_else(|| BackendError::SetNotFound(name.to_string()))
    }

    fn set_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.sets.read().keys().cloned().collect();
        names.sort();
        names
    }

    fn put(&self, set: &str, element: Element) -> Result<(), BackendError> {
        let size = element_size_bytes(&element);
        if size > self.element_size_cap {
            return Err(BackendError::ElementTooLarge {
                key: element.key,
                size,
                cap: self.element_size_cap,
            });
        }
        let state = self.set(set)?;
        let mut state = state.write();
        if let Some(prev) = state.elements.insert(element.key.clone(), element) {
            state.size_bytes -= element_size_bytes(&prev);
        }
        state.size_bytes += size;
        Ok(())
    }

    fn get(&self, set: &str, key: &str) -> Result<Option<Element>, BackendError> {
        Ok(self.set(set)?.read().elements.get(key).cloned())
    }

    fn delete(&self, set: &str, key: &str) -> Result<(), BackendError> {
        let state = self.set(set)?;
        let mut state = state.write();
        if let Some(prev) = state.elements.remove(key) {
            state.size_bytes -= element_size_bytes(&prev);
        }
        Ok(())
    }

    fn scan_snapshot(
        &self,
        set: &str,
    ) -> Result<Box<dyn Iterator<Item = Element> + Send>, BackendError> {
        let state = self.set(set)?;
        // Key population is fixed here; values are fetched lazily so each
        // yielded element is the latest at its read time. Keys deleted
        // between snapshot and read are skipped.
        let keys: Vec<String> = state.read().elements.keys().cloned().collect();
        let iter = keys
            .into_iter()
            .filter_map(move |k| state.read().elements.get(&k).cloned());
        Ok(Box::new(iter))
    }

    fn size_bytes(&self, set: &str) -> Result<u64, BackendError> {
        Ok(self.set(set)?.read().size_bytes)
    }

    fn len(&self, set: &str) -> Result<u64, BackendError> {
        Ok(self.set(set)?.read().elements.len() as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{field, ScalarValue, Value};

    fn elem(key: &str, n: i64) -> Element {
        Element::record(key, vec![field("x", ScalarValue::Int(n))]).unwrap()
    }

    #[test]
    fn create_put_get_roundtrip() {
        let b = MemoryBackend::new();
        b.create_set("s").unwrap();
        assert_eq!(b.size_bytes("s").unwrap(), 0);

        let e = elem("k", 7);
        b.put("s", e.clone()).unwrap();
        assert_eq!(b.get("s", "k").unwrap().unwrap(), e);
    }

    #[test]
    fn create_twice_errors() {
        let b = MemoryBackend::new();
        b.create_set("s").unwrap();
        assert!(matches!(
            b.create_set("s"),
            Err(BackendError::SetAlreadyExists(_))
        ));
    }

    #[test]
    fn drop_clears_state() {
        let b = MemoryBackend::new();
        b.create_set("s").unwrap();
        b.put("s", elem("k", 1)).unwrap();
        b.drop_set("s").unwrap();
        b.create_set("s").unwrap();
        assert_eq!(b.get("s", "k").unwrap(), None);
    }

    #[test]
    fn get_on_missing_set_errors() {
        let b = MemoryBackend::new();
        assert!(matches!(
            b.get("nope", "k"),
            Err(BackendError::SetNotFound(_))
        ));
    }

    #[test]
    fn put_delete_get_not_found() {
        let b = MemoryBackend::new();
        b.create_set("s").unwrap();
        assert_eq!(b.get("s", "k").unwrap(), None);
        b.put("s", elem("k", 1)).unwrap();
        b.delete("s", "k").unwrap();
        assert_eq!(b.get("s", "k").unwrap(), None);
    }

    #[test]
    fn delete_is_idempotent_and_restores_size() {
        let b = MemoryBackend::new();
        b.create_set("s").unwrap();
        b.put("s", elem("a", 1)).unwrap();
        let before = b.size_bytes("s").unwrap();
        b.put("s", elem("b", 2)).unwrap();
        b.delete("s", "b").unwrap();
        assert_eq!(b.size_bytes("s").unwrap(), before);
        b.delete("s", "b").unwrap(); // absent: no-op success
        assert_eq!(b.len("s").unwrap(), 1);
    }

    #[test]
    fn overwrite_keeps_cardinality() {
        let b = MemoryBackend::new();
        b.create_set("s").unwrap();
        b.put("s", elem("k", 1)).unwrap();
        b.put("s", elem("k", 2)).unwrap();
        assert_eq!(b.len("s").unwrap(), 1);
        assert_eq!(b.get("s", "k").unwrap().unwrap(), elem("k", 2));
    }

    #[test]
    fn element_cap_enforced() {
        let b = MemoryBackend::with_element_cap(16);
        b.create_set("s").unwrap();
        let big = Element::text("k", "x".repeat(100)).unwrap();
        assert!(matches!(
            b.put("s", big),
            Err(BackendError::ElementTooLarge { .. })
        ));
    }

    #[test]
    fn scan_yields_key_ascending() {
        let b = MemoryBackend::new();
        b.create_set("s").unwrap();
        for k in ["c", "a", "b"] {
            b.put("s", elem(k, 0)).unwrap();
        }
        let keys: Vec<String> = b
            .scan_snapshot("s")
            .unwrap()
            .map(|e| e.key)
            .collect();
        assert_eq!(keys, vec!["a", "b", "c"]);
    }

    #[test]
    fn scan_does_not_observe_concurrent_new_keys() {
        let b = MemoryBackend::new();
        b.create_set("s").unwrap();
        b.put("s", elem("a", 0)).unwrap();
        let mut iter = b.scan_snapshot("s").unwrap();
        b.put("s", elem("z", 1)).unwrap();
        let seen: Vec<String> = iter.by_ref().map(|e| e.key).collect();
        assert_eq!(seen, vec!["a"]);
    }

    // Randomized put/delete interleavings against a naive map replay.
    #[test]
    fn random_ops_match_map_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let b = MemoryBackend::new();
        b.create_set("s").unwrap();
        let mut oracle: std::collections::HashMap<String, Element> = Default::default();
        for _ in 0..2000 {
            let key = format!("k{}", rng.gen_range(0..50));
            if rng.gen_bool(0.6) {
                let e = elem(&key, rng.gen_range(0..1000));
                b.put("s", e.clone()).unwrap();
                oracle.insert(key, e);
            } else {
                b.delete("s", &key).unwrap();
                oracle.remove(&key);
            }
        }
        assert_eq!(b.len("s").unwrap() as usize, oracle.len());
        let expected: u64 = oracle.values().map(element_size_bytes).sum();
        assert_eq!(b.size_bytes("s").unwrap(), expected);
        for (k, v) in &oracle {
            assert_eq!(b.get("s", k).unwrap().as_ref(), Some(v));
        }
        for e in b.scan_snapshot("s").unwrap() {
            assert_eq!(oracle.get(&e.key), Some(&e));
        }
    }

    #[test]
    fn record_value_kinds_roundtrip_through_backend() {
        let b = MemoryBackend::new();
        b.create_set("s").unwrap();
        let e = Element::new("ids", Value::idlist(vec!["x".into()]).unwrap()).unwrap();
        b.put("s", e.clone()).unwrap();
        assert_eq!(b.get("s", "ids").unwrap().unwrap(), e);
    }
}
