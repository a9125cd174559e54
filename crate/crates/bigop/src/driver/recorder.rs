//! Concurrent latency recorder: a log-bucketed histogram (bucket bounds
//! growing by 1.01x from 1 microsecond to 100 seconds) plus exact min, max,
//! count and sum. Any quantile it reports is within 1% relative error of the
//! exact order statistic; values outside the bucket range are clamped into
//! the edge buckets and the clamps counted.

use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

const LOW_NS: f64 = 1_000.0; // 1 us
const HIGH_NS: f64 = 100_000_000_000.0; // 100 s
const GROWTH: f64 = 1.01;

#[derive(Debug, Error, PartialEq)]
pub enum RecorderError {
    #[error("no samples recorded")]
    EmptyRecorder,
    #[error("quantile must be within [0, 1], got {0}")]
    QuantileOutOfRange(f64),
}

pub struct LatencyRecorder {
    /// bucket k spans (bound[k-1], bound[k]] ns; bucket 0 is (0, LOW_NS].
    buckets: Vec<AtomicU64>,
    upper_bounds_ns: Vec<f64>,
    count: AtomicU64,
    sum_ns: AtomicU64,
    min_ns: AtomicU64,
    max_ns: AtomicU64,
    clamped_low: AtomicU64,
    clamped_high: AtomicU64,
}

impl LatencyRecorder {
    pub fn new() -> Self {
        let mut upper_bounds_ns = vec![LOW_NS];
        while *upper_bounds_ns.last().unwrap() < HIGH_NS {
            upper_bounds_ns.push(upper_bounds_ns.last().unwrap() * GROWTH);
        }
        let buckets = (0..upper_bounds_ns.len()).map(|_| AtomicU64::new(0)).collect();
        LatencyRecorder {
            buckets,
            upper_bounds_ns,
            count: AtomicU64::new(0),
            sum_ns: AtomicU64::new(0),
            min_ns: AtomicU64::new(u64::MAX),
            max_ns: AtomicU64::new(0),
            clamped_low: AtomicU64::new(0),
            clamped_high: AtomicU64::new(0),
        }
    }

    pub fn record(&self, latency_ns: u64) {
        let v = latency_ns as f64;
        let index = if v <= LOW_NS {
            if v < LOW_NS {
                self.clamped_low.fetch_add(1, Ordering::Relaxed);
            }
            0
        } else if v > *self.upper_bounds_ns.last().unwrap() {
            self.clamped_high.fetch_add(1, Ordering::Relaxed);
            self.buckets.len() - 1
        } else {
            self.upper_bounds_ns
                .partition_point(|b| *b < v)
                .min(self.buckets.len() - 1)
        };
        self.buckets[index].fetch_add(1, Ordering::Relaxed);
        self.count.fetch_add(1, Ordering::Relaxed);
        self.sum_ns.fetch_add(latency_ns, Ordering::Relaxed);
        self.min_ns.fetch_min(latency_ns, Ordering::Relaxed);
        self.max_ns.fetch_max(latency_ns, Ordering::Relaxed);
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn clamp_count(&self) -> u64 {
        self.clamped_low.load(Ordering::Relaxed) + self.clamped_high.load(Ordering::Relaxed)
    }

    pub fn min_us(&self) -> Result<f64, RecorderError> {
        if self.count() == 0 {
            return Err(RecorderError::EmptyRecorder);
        }
        Ok(self.min_ns.load(Ordering::Relaxed) as f64 / 1_000.0)
    }

    pub fn max_us(&self) -> Result<f64, RecorderError> {
        if self.count() == 0 {
            return Err(RecorderError::EmptyRecorder);
        }
        Ok(self.max_ns.load(Ordering::Relaxed) as f64 / 1_000.0)
    }

    pub fn mean_us(&self) -> Result<f64, RecorderError> {
        let n = self.count();
        if n == 0 {
            return Err(RecorderError::EmptyRecorder);
        }
        Ok(self.sum_ns.load(Ordering::Relaxed) as f64 / n as f64 / 1_000.0)
    }

    /// Quantile in microseconds. `q = 0` returns the exact min and `q = 1`
    /// the exact max; interior quantiles use the nearest-rank definition on
    /// the histogram, reported as the geometric mean of the matched bucket's
    /// bounds and clamped into [min, max].
    pub fn quantile_us(&self, q: f64) -> Result<f64, RecorderError> {
        if !(0.0..=1.0).contains(&q) {
            return Err(RecorderError::QuantileOutOfRange(q));
        }
        let n = self.count();
        if n == 0 {
            return Err(RecorderError::EmptyRecorder);
        }
        let min = self.min_ns.load(Ordering::Relaxed) as f64;
        let max = self.max_ns.load(Ordering::Relaxed) as f64;
        if q == 0.0 {
            return Ok(min / 1_000.0);
        }
        if q == 1.0 {
            return Ok(max / 1_000.0);
        }
        let rank = ((q * n as f64).ceil() as u64).clamp(1, n);
        let mut cumulative = 0u64;
        for (k, bucket) in self.buckets.iter().enumerate() {
            cumulative += bucket.load(Ordering::Relaxed);
            if cumulative >= rank {
                let hi = self.upper_bounds_ns[k];
                let lo = if k == 0 { hi / GROWTH } else { self.upper_bounds_ns[k - 1] };
                let rep = (lo * hi).sqrt();
                return Ok(rep.clamp(min, max) / 1_000.0);
            }
        }
        Ok(max / 1_000.0)
    }
}

impl Default for LatencyRecorder {
    fn default() -> Self {
        Self::new()
    }
}
