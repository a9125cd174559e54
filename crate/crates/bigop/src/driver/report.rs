//! Client-side metrics report: per-stream throughput, latency statistics and
//! termination, plus run-level duration. Serialized as UTF-8 JSON with keys
//! in declaration order; durations in seconds, latencies in integer
//! microseconds.

use serde::{Deserialize, Serialize};

use super::recorder::LatencyRecorder;

/// Which metric families a prescription asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Hash)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Throughput,
    Latency,
    Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub min_us: u64,
    pub mean_us: u64,
    pub p50_us: u64,
    pub p90_us: u64,
    pub p95_us: u64,
    pub p99_us: u64,
    pub max_us: u64,
}

impl LatencySummary {
    /// Snapshot of a recorder; `None` when nothing was recorded.
    pub fn from_recorder(r: &LatencyRecorder) -> Option<Self> {
        if r.count() == 0 {
            return None;
        }
        let us = |v: f64| v.round() as u64;
        Some(LatencySummary {
            min_us: us(r.min_us().expect("nonempty")),
            mean_us: us(r.mean_us().expect("nonempty")),
            p50_us: us(r.quantile_us(0.50).expect("nonempty")),
            p90_us: us(r.quantile_us(0.90).expect("nonempty")),
            p95_us: us(r.quantile_us(0.95).expect("nonempty")),
            p99_us: us(r.quantile_us(0.99).expect("nonempty")),
            max_us: us(r.max_us().expect("nonempty")),
        })
    }

    /// min <= p50 <= p90 <= p95 <= p99 <= max.
    pub fn is_monotone(&self) -> bool {
        let seq = [
            self.min_us,
            self.p50_us,
            self.p90_us,
            self.p95_us,
            self.p99_us,
            self.max_us,
        ];
        seq.windows(2).all(|w| w[0] <= w[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamReport {
    pub name: String,
    pub ops_completed: u64,
    pub ops_failed: u64,
    /// Wall seconds from stream start to its last completion.
    pub active_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub throughput_ops_per_sec: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latency: Option<LatencySummary>,
    pub termination_reason: String,
    /// CRC32 (hex) of the last completed operation's canonical result bytes;
    /// ties a run's output to its inputs for determinism checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result_digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub prescription: String,
    pub seed: u64,
    pub backend: String,
    /// Wall-clock start (Unix ms); excluded from determinism comparisons.
    pub timestamp_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_seconds: Option<f64>,
    pub streams: Vec<StreamReport>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Structural invariants every report must satisfy: monotone latency
    /// quantiles and throughput * active time = ops completed (within one op
    /// of rounding).
    pub fn check_invariants(&self) -> Result<(), String> {
        for s in &self.streams {
            if let Some(lat) = &s.latency {
                if !lat.is_monotone() {
                    return Err(format!("stream {}: non-monotone quantiles {lat:?}", s.name));
                }
            }
            if let Some(tp) = s.throughput_ops_per_sec {
                let reconstructed = tp * s.active_seconds;
                if (reconstructed - s.ops_completed as f64).abs() > 1.0 {
                    return Err(format!(
                        "stream {}: throughput {tp} * active {} = {reconstructed} vs ops {}",
                        s.name, s.active_seconds, s.ops_completed
                    ));
                }
            }
        }
        Ok(())
    }

    /// The report minus timing-dependent fields, for same-seed comparisons.
    pub fn deterministic_view(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        let obj = v.as_object_mut().expect("report is an object");
        obj.remove("timestamp_ms");
        obj.remove("duration_seconds");
        if let Some(streams) = obj.get_mut("streams").and_then(|s| s.as_array_mut()) {
            for s in streams {
                let so = s.as_object_mut().expect("stream is an object");
                so.remove("active_seconds");
                so.remove("throughput_ops_per_sec");
                so.remove("latency");
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_recorder_gives_no_summary() {
        let r = LatencyRecorder::new();
        assert!(LatencySummary::from_recorder(&r).is_none());
    }

    #[test]
    fn summary_is_monotone_and_roundtrips_json() {
        let r = LatencyRecorder::new();
        for v in [5_000u64, 10_000, 20_000, 1_000_000] {
            r.record(v);
        }
        let s = LatencySummary::from_recorder(&r).unwrap();
        assert!(s.is_monotone());

        let report = MetricsReport {
            prescription: "p".into(),
            seed: 1,
            backend: "memory".into(),
            timestamp_ms: 123,
            duration_seconds: Some(2.0),
            streams: vec![StreamReport {
                name: "s".into(),
                ops_completed: 4,
                ops_failed: 0,
                active_seconds: 2.0,
                throughput_ops_per_sec: Some(2.0),
                latency: Some(s),
                termination_reason: "op_count".into(),
                result_digest: Some("deadbeef".into()),
            }],
        };
        report.check_invariants().unwrap();
        let parsed: MetricsReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(parsed, report);
    }

    #[test]
    fn deterministic_view_strips_timing() {
        let report = MetricsReport {
            prescription: "p".into(),
            seed: 1,
            backend: "memory".into(),
            timestamp_ms: 999,
            duration_seconds: Some(5.0),
            streams: vec![],
        };
        let v = report.deterministic_view();
        assert!(v.get("timestamp_ms").is_none());
        assert!(v.get("duration_seconds").is_none());
        assert_eq!(v.get("seed").unwrap(), 1);
    }
}
