//! Prescription execution: generate/load the data set, run the workload
//! streams, write the report. Errors surface with the phase that produced
//! them.

use std::fmt;
use std::path::PathBuf;

use crate::backend::StorageBackend;
use crate::datagen::{gen_graph, import_log_lines, GeneratorSpec, LogStream, RecordStream};
use crate::driver::{build_report, run_workload, ClockSource, MetricsReport, WorkloadOptions};
use crate::engine::TransformRegistry;
use crate::model::Element;
use crate::seed::derive;

use super::{validate_prescription, Preload, Prescription, PrescriptionError};

/// Salt for deriving the dataset generator seed from the prescription seed.
const DATASET_SEED_SALT: u64 = 0xD474;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Datagen,
    Load,
    Run,
    Report,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Datagen => "datagen",
            Phase::Load => "load",
            Phase::Run => "run",
            Phase::Report => "report",
        })
    }
}

/// Run-time configuration that is not part of the prescription.
pub struct RunConfig {
    pub clock: ClockSource,
    /// Where to write the JSON report; `None` keeps it in memory only.
    pub report_path: Option<PathBuf>,
    /// Optional post-run backend snapshot, for dataset determinism checks.
    pub data_dump_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn real_time() -> Self {
        RunConfig {
            clock: ClockSource::system(),
            report_path: None,
            data_dump_path: None,
        }
    }
}

fn phase_err(phase: Phase, message: impl fmt::Display) -> PrescriptionError {
    PrescriptionError::PhaseFailed {
        phase,
        message: message.to_string(),
    }
}

/// Validates, loads, runs and reports one prescription. Deterministic apart
/// from wall-clock timings given the seed (and fully deterministic under a
/// fake clock).
pub fn run_prescription(
    p: &Prescription,
    backend: &dyn StorageBackend,
    registry: &TransformRegistry,
    config: &RunConfig,
) -> Result<MetricsReport, PrescriptionError> {
    let diagnostics = validate_prescription(p, registry);
    if !diagnostics.is_empty() {
        return Err(PrescriptionError::Invalid(diagnostics));
    }

    load_dataset(p, backend)?;

    let opts = WorkloadOptions::new(p.seed);
    let (outcomes, duration_seconds) =
        run_workload(backend, registry, &p.streams, &opts, &config.clock)
            .map_err(|e| phase_err(Phase::Run, e))?;

    let report = build_report(
        &p.name,
        p.seed,
        backend.id(),
        duration_seconds,
        &outcomes,
        &p.metrics,
    );
    if let Some(path) = &config.report_path {
        std::fs::write(path, report.to_json()).map_err(|e| phase_err(Phase::Report, e))?;
    }
    if let Some(path) = &config.data_dump_path {
        crate::backend::snapshot_to_file(backend, path)
            .map_err(|e| phase_err(Phase::Report, e))?;
    }
    Ok(report)
}

fn load_dataset(p: &Prescription, backend: &dyn StorageBackend) -> Result<(), PrescriptionError> {
    backend
        .create_set(&p.dataset.set)
        .map_err(|e| phase_err(Phase::Load, e))?;

    if let Some(path) = &p.dataset.import_path {
        let file = std::fs::File::open(path).map_err(|e| phase_err(Phase::Datagen, e))?;
        let (elements, _stats) = import_log_lines(std::io::BufReader::new(file))
            .map_err(|e| phase_err(Phase::Datagen, e))?;
        for e in elements {
            backend
                .put(&p.dataset.set, e)
                .map_err(|e| phase_err(Phase::Load, e))?;
        }
        return Ok(());
    }

    let mut generator = p
        .dataset
        .generator
        .clone()
        .expect("validated: generator or import present");
    if generator.seed().is_none() {
        generator.set_seed(derive(p.seed, DATASET_SEED_SALT));
    }

    match &generator {
        GeneratorSpec::Graph { .. } => {
            // graphs materialize whole: topology is not truncatable
            let ds = gen_graph(&p.dataset.set, &generator)
                .map_err(|e| phase_err(Phase::Datagen, e))?;
            for e in ds.into_elements() {
                backend
                    .put(&p.dataset.set, e)
                    .map_err(|e| phase_err(Phase::Load, e))?;
            }
            Ok(())
        }
        GeneratorSpec::Records { .. } | GeneratorSpec::Logs { .. } => {
            let stream: Box<dyn Iterator<Item = Element>> = match &generator {
                GeneratorSpec::Records { .. } => Box::new(
                    RecordStream::new(&generator).map_err(|e| phase_err(Phase::Datagen, e))?,
                ),
                _ => Box::new(
                    LogStream::new(&generator).map_err(|e| phase_err(Phase::Datagen, e))?,
                ),
            };
            load_stream(p, backend, stream)
        }
    }
}

fn load_stream(
    p: &Prescription,
    backend: &dyn StorageBackend,
    stream: impl Iterator<Item = Element>,
) -> Result<(), PrescriptionError> {
    let set = &p.dataset.set;
    let mut loaded: u64 = 0;
    for e in stream {
        match &p.dataset.preload {
            Preload::ToTarget => {
                let size = backend.size_bytes(set).map_err(|e| phase_err(Phase::Load, e))?;
                if size >= p.dataset.target_size_bytes {
                    return Ok(());
                }
            }
            Preload::Elements(k) => {
                if loaded >= *k {
                    return Ok(());
                }
            }
            Preload::Full => {}
        }
        backend
            .put(set, e)
            .map_err(|e| phase_err(Phase::Load, e))?;
        loaded += 1;
    }
    if matches!(p.dataset.preload, Preload::ToTarget) {
        let size = backend.size_bytes(set).map_err(|e| phase_err(Phase::Load, e))?;
        if size < p.dataset.target_size_bytes {
            return Err(phase_err(
                Phase::Load,
                format!(
                    "generator exhausted at {size} bytes, below the {}-byte target",
                    p.dataset.target_size_bytes
                ),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::MemoryBackend;
    use crate::prescription::{builtin, fast_storage};

    fn shrunk_fast_storage() -> Prescription {
        let mut p = fast_storage();
        p.dataset.target_size_bytes = 64 * 1024;
        if let Some(stream) = p.streams.get_mut(0) {
            stream.termination = Some(crate::driver::Termination::OpCount(500));
        }
        p
    }

    #[test]
    fn fast_storage_runs_clean_on_the_reference_backend() {
        let p = shrunk_fast_storage();
        let backend = MemoryBackend::new();
        let registry = TransformRegistry::with_builtins();
        let (clock, _) = ClockSource::fake();
        let config = RunConfig {
            clock,
            report_path: None,
            data_dump_path: None,
        };
        let report = run_prescription(&p, &backend, &registry, &config).unwrap();
        assert_eq!(report.streams.len(), 1);
        assert_eq!(report.streams[0].ops_completed, 500);
        assert_eq!(report.streams[0].ops_failed, 0);
        assert!(report.streams[0].throughput_ops_per_sec.is_some());
        assert!(report.streams[0].latency.is_none()); // not a selected metric
        report.check_invariants().unwrap();
    }

    #[test]
    fn load_phase_respects_preload_to_target() {
        let mut p = shrunk_fast_storage();
        // no stream ops: measure the loaded set untouched
        p.streams[0].termination = Some(crate::driver::Termination::OpCount(0));
        let backend = MemoryBackend::new();
        let registry = TransformRegistry::with_builtins();
        let (clock, _) = ClockSource::fake();
        let config = RunConfig {
            clock,
            report_path: None,
            data_dump_path: None,
        };
        run_prescription(&p, &backend, &registry, &config).unwrap();
        let size = backend.size_bytes("records").unwrap();
        assert!(size >= 64 * 1024, "{size}");
        // one element of overshoot at most
        assert!(size < 64 * 1024 + 200, "{size}");
    }

    #[test]
    fn invalid_prescription_is_rejected_before_any_work() {
        let mut p = fast_storage();
        p.dataset.target_size_bytes = 0;
        let backend = MemoryBackend::new();
        let registry = TransformRegistry::with_builtins();
        let (clock, _) = ClockSource::fake();
        let config = RunConfig {
            clock,
            report_path: None,
            data_dump_path: None,
        };
        let err = run_prescription(&p, &backend, &registry, &config).unwrap_err();
        assert!(matches!(err, PrescriptionError::Invalid(_)));
        assert!(backend.set_names().is_empty());
    }

    #[test]
    fn pagerank_builtin_shrunk_converges_and_reports_duration() {
        let mut p = builtin("pagerank").unwrap();
        p.dataset.generator = Some(GeneratorSpec::Graph {
            seed: None,
            node_count: 50,
            edge_count: 370,
        });
        p.dataset.target_size_bytes = 1024;
        let backend = MemoryBackend::new();
        let registry = TransformRegistry::with_builtins();
        let (clock, _) = ClockSource::fake();
        let config = RunConfig {
            clock,
            report_path: None,
            data_dump_path: None,
        };
        let report = run_prescription(&p, &backend, &registry, &config).unwrap();
        assert_eq!(report.streams[0].ops_completed, 1);
        assert_eq!(report.streams[0].ops_failed, 0);
        assert!(report.duration_seconds.is_some());
        assert!(report.streams[0].result_digest.is_some());
    }
}
