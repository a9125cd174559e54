//! The storage/execution seam between the harness and the system under test.
//!
//! All workload requests flow through [`StorageBackend`]. The reference
//! implementation is [`MemoryBackend`]; adapters for external systems plug in
//! behind the same trait (see the adapter notes in the crate README).

mod memory;
mod snapshot;

pub use memory::MemoryBackend;
pub use snapshot::{restore_from_file, snapshot_to_file};

use crate::model::{Element, ModelError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("set {0:?} not found")]
    SetNotFound(String),
    #[error("set {0:?} already exists")]
    SetAlreadyExists(String),
    #[error("element {key:?} is {size} bytes, exceeding the {cap}-byte cap")]
    ElementTooLarge { key: String, size: u64, cap: u64 },
    #[error("invalid element: {0}")]
    InvalidElement(#[from] ModelError),
    #[error("snapshot i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
}

/// Storage contract every backend must satisfy.
///
/// - `put`/`get`/`delete` are linearizable per key.
/// - `scan_snapshot` iterates a point-in-time snapshot of the key population
///   taken at call time, in ascending key order; keys put after the call are
///   not observed, and each surviving key's value is the latest at read time.
/// - `size_bytes` is the exact sum of canonical element sizes for the
///   reference backend.
pub trait StorageBackend: Send + Sync {
    /// Identifier used in reports (e.g. "memory").
    fn id(&self) -> &str;

    /// Creates an empty set. Errors if the name is already taken.
    fn create_set(&self, name: &str) -> Result<(), BackendError>;

    /// Drops a set and all its elements.
    fn drop_set(&self, name: &str) -> Result<(), BackendError>;

    /// Names of all sets, ascending.
    fn set_names(&self) -> Vec<String>;

    /// Inserts or overwrites (last-writer-wins) one element.
    fn put(&self, set: &str, element: Element) -> Result<(), BackendError>;

    /// Latest element under `key`, or `None`.
    fn get(&self, set: &str, key: &str) -> Result<Option<Element>, BackendError>;

    /// Removes `key` if present; succeeds as a no-op otherwise.
    fn delete(&self, set: &str, key: &str) -> Result<(), BackendError>;

    /// Snapshot iterator per the trait contract above.
    fn scan_snapshot(
        &self,
        set: &str,
    ) -> Result<Box<dyn Iterator<Item = Element> + Send>, BackendError>;

    /// Exact total canonical size of the set's elements.
    fn size_bytes(&self, set: &str) -> Result<u64, BackendError>;

    /// Number of elements in the set.
    fn len(&self, set: &str) -> Result<u64, BackendError>;
}
