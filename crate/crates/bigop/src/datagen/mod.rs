//! Seeded, reproducible synthetic data generators for the three built-in
//! prescription data sets: structured records, server-style logs, and a
//! random directed graph. Identical specs produce identical canonical bytes.

mod graph;
mod import;
mod logs;
mod records;

pub use graph::gen_graph;
pub use import::{import_log_lines, ImportStats};
pub use logs::{gen_logs, LogStream};
pub use records::{gen_records, RecordStream};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Zero-padding width for generated keys, so key-ascending scan order equals
/// generation order.
pub const KEY_PAD_WIDTH: usize = 10;

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("edge count {m} exceeds the n*(n-1) = {max} distinct edges possible")]
    EdgeSpaceExhausted { m: u64, max: u64 },
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// Declarative generator description. The seed is optional in prescriptions;
/// when absent the runner derives one from the prescription seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// Structured records: `f0` int64, `f1` float64 in [0,1), remaining
    /// fields random strings of `value_bytes`.
    Records {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        count: u64,
        field_count: u32,
        value_bytes: u32,
        /// First key index; lets a workload stream continue where dataset
        /// loading stopped.
        #[serde(default, skip_serializing_if = "is_zero")]
        start_index: u64,
    },
    /// Server-style log entries with strictly increasing timestamps.
    Logs {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        count: u64,
        server_count: u32,
        message_bytes: u32,
        #[serde(default, skip_serializing_if = "is_zero")]
        start_index: u64,
    },
    /// Random directed graph with out-degree >= 1; node values carry
    /// `out_links` and an initial uniform `rank`.
    Graph {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        node_count: u64,
        edge_count: u64,
    },
}

fn is_zero(n: &u64) -> bool {
    *n == 0
}

impl GeneratorSpec {
    pub fn seed(&self) -> Option<u64> {
        match self {
            GeneratorSpec::Records { seed, .. }
            | GeneratorSpec::Logs { seed, .. }
            | GeneratorSpec::Graph { seed, .. } => *seed,
        }
    }

    pub fn set_seed(&mut self, value: u64) {
        match self {
            GeneratorSpec::Records { seed, .. }
            | GeneratorSpec::Logs { seed, .. }
            | GeneratorSpec::Graph { seed, .. } => *seed = Some(value),
        }
    }

    /// Checks count/shape invariants.
    pub fn validate(&self) -> Result<(), DatagenError> {
        match self {
            GeneratorSpec::Records {
                count, field_count, ..
            } => {
                if *count == 0 {
                    return Err(DatagenError::InvalidSpec("records count must be positive".into()));
                }
                if *field_count == 0 {
                    return Err(DatagenError::InvalidSpec(
                        "records field_count must be positive".into(),
                    ));
                }
                Ok(())
            }
            GeneratorSpec::Logs {
                count,
                server_count,
                ..
            } => {
                if *count == 0 {
                    return Err(DatagenError::InvalidSpec("logs count must be positive".into()));
                }
                if *server_count == 0 {
                    return Err(DatagenError::InvalidSpec(
                        "logs server_count must be positive".into(),
                    ));
                }
                Ok(())
            }
            GeneratorSpec::Graph {
                node_count,
                edge_count,
                ..
            } => {
                if *node_count < 2 {
                    return Err(DatagenError::InvalidSpec(
                        "graph needs at least 2 nodes".into(),
                    ));
                }
                if *edge_count < *node_count {
                    return Err(DatagenError::InvalidSpec(
                        "graph edge_count must be >= node_count (out-degree >= 1)".into(),
                    ));
                }
                let max = node_count * (node_count - 1);
                if *edge_count > max {
                    return Err(DatagenError::EdgeSpaceExhausted {
                        m: *edge_count,
                        max,
                    });
                }
                Ok(())
            }
        }
    }
}

pub(crate) fn padded_key(prefix: char, index: u64) -> String {
    format!("{prefix}{index:0width$}", width = KEY_PAD_WIDTH)
}
