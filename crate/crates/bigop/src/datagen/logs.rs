//! Synthetic server-log generator.
//!
//! Stand-in for real server logs: fields and distributions are plausible
//! defaults, documented as arbitrary. Real logs can be brought in through
//! the line-format importer instead.

use rand::distributions::Alphanumeric;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use crate::model::{field, Element, ScalarValue};
use crate::seed::derive;

use super::{padded_key, DatagenError, GeneratorSpec};

/// Level mix: INFO 90%, WARN 7%, ERROR 3%.
const P_INFO: f64 = 0.90;
const P_WARN: f64 = 0.07;

/// latency_ms ~ LogNormal(mu=3, sigma=1).
const LATENCY_MU: f64 = 3.0;
const LATENCY_SIGMA: f64 = 1.0;

/// Timestamps start here (milliseconds) and advance 1..=1000 ms per entry.
const TS_BASE: i64 = 1_600_000_000_000;
const TS_STRIDE: i64 = 1000;

/// Streaming log generator; constant memory in the entry count. Entry `i`
/// depends only on (seed, i).
pub struct LogStream {
    seed: u64,
    next: u64,
    end: u64,
    server_count: u32,
    message_bytes: u32,
}

impl LogStream {
    pub fn new(spec: &GeneratorSpec) -> Result<Self, DatagenError> {
        spec.validate()?;
        let GeneratorSpec::Logs {
            seed,
            count,
            server_count,
            message_bytes,
            start_index,
        } = spec
        else {
            return Err(DatagenError::InvalidSpec("expected a logs spec".into()));
        };
        Ok(LogStream {
            seed: seed.unwrap_or(0),
            next: *start_index,
            end: start_index.saturating_add(*count),
            server_count: *server_count,
            message_bytes: *message_bytes,
        })
    }
}

impl Iterator for LogStream {
    type Item = Element;

    fn next(&mut self) -> Option<Element> {
        if self.next >= self.end {
            return None;
        }
        let i = self.next;
        self.next += 1;
        Some(log_element(
            self.seed,
            i,
            self.server_count,
            self.message_bytes,
        ))
    }
}

fn log_element(seed: u64, index: u64, server_count: u32, message_bytes: u32) -> Element {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, index));
    // ts = base + i*stride + jitter in [0, stride): strictly increasing and
    // random-access per index
    let jitter: i64 = rng.gen_range(0..TS_STRIDE);
    let ts = TS_BASE + index as i64 * TS_STRIDE + jitter;
    let server_id = rng.gen_range(0..server_count) as i64;
    let roll: f64 = rng.gen();
    let level = if roll < P_INFO {
        "INFO"
    } else if roll < P_INFO + P_WARN {
        "WARN"
    } else {
        "ERROR"
    };
    let latency: f64 = LogNormal::new(LATENCY_MU, LATENCY_SIGMA)
        .expect("valid parameters")
        .sample(&mut rng);
    let msg: String = (&mut rng)
        .sample_iter(&Alphanumeric)
        .take(message_bytes as usize)
        .map(char::from)
        .collect();
    Element::record(
        padded_key('l', index),
        vec![
            field("ts", ScalarValue::Int(ts)),
            field("server_id", ScalarValue::Int(server_id)),
            field("level", ScalarValue::Str(level.to_string())),
            field("latency_ms", ScalarValue::float(latency).expect("finite")),
            field("msg", ScalarValue::Str(msg)),
        ],
    )
    .expect("generated logs are valid")
}

/// Streaming constructor, the usual entry point.
pub fn gen_logs(spec: &GeneratorSpec) -> Result<LogStream, DatagenError> {
    LogStream::new(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FieldValue;

    fn spec(count: u64) -> GeneratorSpec {
        GeneratorSpec::Logs {
            seed: Some(7),
            count,
            server_count: 100,
            message_bytes: 32,
            start_index: 0,
        }
    }

    fn int_field(e: &Element, name: &str) -> i64 {
        match e.value.field(name).unwrap() {
            FieldValue::Scalar(ScalarValue::Int(i)) => *i,
            other => panic!("{name}: {other:?}"),
        }
    }

    fn str_field<'a>(e: &'a Element, name: &str) -> &'a str {
        match e.value.field(name).unwrap() {
            FieldValue::Scalar(ScalarValue::Str(s)) => s,
            other => panic!("{name}: {other:?}"),
        }
    }

    #[test]
    fn timestamps_strictly_increase() {
        let entries: Vec<Element> = gen_logs(&spec(5000)).unwrap().collect();
        for pair in entries.windows(2) {
            assert!(int_field(&pair[0], "ts") < int_field(&pair[1], "ts"));
        }
    }

    #[test]
    fn same_seed_yields_identical_prefix() {
        let a: Vec<Element> = gen_logs(&spec(1000)).unwrap().collect();
        let b: Vec<Element> = gen_logs(&spec(1000)).unwrap().collect();
        assert_eq!(a, b);
    }

    #[test]
    fn level_frequencies_match_the_mix_within_one_percent() {
        let n = 100_000u64;
        let mut counts = std::collections::HashMap::new();
        for e in gen_logs(&spec(n)).unwrap() {
            *counts.entry(str_field(&e, "level").to_string()).or_insert(0u64) += 1;
        }
        let frac = |lvl: &str| counts.get(lvl).copied().unwrap_or(0) as f64 / n as f64;
        assert!((frac("INFO") - 0.90).abs() < 0.01, "INFO {}", frac("INFO"));
        assert!((frac("WARN") - 0.07).abs() < 0.01, "WARN {}", frac("WARN"));
        assert!((frac("ERROR") - 0.03).abs() < 0.01, "ERROR {}", frac("ERROR"));
    }

    #[test]
    fn server_ids_stay_in_range() {
        for e in gen_logs(&spec(2000)).unwrap() {
            let sid = int_field(&e, "server_id");
            assert!((0..100).contains(&sid));
        }
    }
}
