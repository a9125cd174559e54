//! Prescriptions: declarative test specifications.
//!
//! A prescription names the operation and pattern subset a test may use, a
//! data set (generated or imported), the workload streams that drive the
//! backend, and the metrics to report. Canonical encoding is JSON with the
//! top-level keys `{name, seed, operations, patterns, dataset, streams,
//! metrics}`; `docs/prescription-schema.json` documents the format.

mod builtins;
mod overrides;
mod runner;
mod validate;

pub use builtins::{builtin, builtin_names, fast_storage, log_monitoring, pagerank, rank_plan};
pub use overrides::{apply_override, split_override};
pub use runner::{run_prescription, Phase, RunConfig};
pub use validate::{validate_prescription, Diagnostic};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datagen::GeneratorSpec;
use crate::driver::{MetricKind, StreamSpec};
use crate::engine::{OperationKind, WorkloadPattern};

/// How much of the data set to materialize before streams start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preload {
    /// Generate until the backend set reaches `target_size_bytes`.
    ToTarget,
    /// Generate exactly this many elements (e.g. a small warm-up corpus
    /// when the ingest stream itself is meant to fill the set).
    Elements(u64),
    /// Materialize the generator's full output.
    Full,
}

fn default_preload() -> Preload {
    Preload::ToTarget
}

/// The data set a prescription runs against: a backend set name, a sizing
/// target, and either a generator or an import path (exactly one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    /// Backend set created and loaded before streams start.
    pub set: String,
    /// Size the run is expected to materialize; size-gated streams
    /// terminate against this scale.
    pub target_size_bytes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    /// Log-line import file (see the importer's line format).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub import_path: Option<String>,
    #[serde(default = "default_preload")]
    pub preload: Preload,
}

/// A declarative benchmark test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prescription {
    pub name: String,
    pub seed: u64,
    /// Declared operation subset; streams may only invoke these.
    pub operations: Vec<OperationKind>,
    /// Declared pattern subset; stream pipelines may only exercise these.
    pub patterns: Vec<WorkloadPattern>,
    pub dataset: DatasetSpec,
    pub streams: Vec<StreamSpec>,
    pub metrics: Vec<MetricKind>,
}

#[derive(Debug, Error)]
pub enum PrescriptionError {
    /// Syntax or schema problem, annotated with line/column by the JSON
    /// parser.
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid prescription: {}", format_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("{phase} phase failed: {message}")]
    PhaseFailed { phase: Phase, message: String },
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Parses and fully validates a prescription document.
pub fn parse_prescription(text: &str) -> Result<Prescription, PrescriptionError> {
    let p: Prescription = serde_json::from_str(text)?;
    let diagnostics = validate_prescription(&p, &crate::engine::TransformRegistry::with_builtins());
    if diagnostics.is_empty() {
        Ok(p)
    } else {
        Err(PrescriptionError::Invalid(diagnostics))
    }
}

/// Canonical JSON text of a prescription.
pub fn serialize_prescription(p: &Prescription) -> String {
    serde_json::to_string_pretty(p).expect("prescriptions serialize")
}
