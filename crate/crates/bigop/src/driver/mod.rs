//! The load driver: executes workload streams against a backend and
//! measures everything from the client side — throughput, latency
//! statistics, durations.

mod clock;
mod recorder;
mod report;
mod run;
mod template;

pub use clock::{Clock, ClockSource, FakeClock, SystemClock};
pub use recorder::{LatencyRecorder, RecorderError};
pub use report::{LatencySummary, MetricKind, MetricsReport, StreamReport};
pub use run::{
    run_workload, schedule_next, DriverError, StreamOutcome, WorkloadOptions,
    DATA_SIZE_CHECK_INTERVAL,
};
pub use template::{
    instantiate, InputTemplate, InstantiateError, KeySlot, KeyTracker, MixEntry, OpTemplate,
    PipelineTemplate, PredicateTemplate, SlotContext, StepTemplate, StreamSpec, TemplateScalar,
    Termination, WorkTemplate,
};

/// Assembles the client-side report from stream outcomes, restricted to the
/// requested metric families.
pub fn build_report(
    prescription: &str,
    seed: u64,
    backend_id: &str,
    duration_seconds: f64,
    outcomes: &[StreamOutcome],
    metrics: &[MetricKind],
) -> MetricsReport {
    let want = |m: MetricKind| metrics.contains(&m);
    let timestamp_ms = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    let streams = outcomes
        .iter()
        .map(|o| {
            let throughput = if o.active_seconds > 0.0 {
                o.ops_completed as f64 / o.active_seconds
            } else {
                0.0
            };
            StreamReport {
                name: o.name.clone(),
                ops_completed: o.ops_completed,
                ops_failed: o.ops_failed,
                active_seconds: o.active_seconds,
                throughput_ops_per_sec: want(MetricKind::Throughput).then_some(throughput),
                latency: if want(MetricKind::Latency) {
                    LatencySummary::from_recorder(&o.recorder)
                } else {
                    None
                },
                termination_reason: o.termination_reason.clone(),
                result_digest: o.result_digest.clone(),
            }
        })
        .collect();
    MetricsReport {
        prescription: prescription.to_string(),
        seed,
        backend: backend_id.to_string(),
        timestamp_ms,
        duration_seconds: want(MetricKind::Duration).then_some(duration_seconds),
        streams,
    }
}
