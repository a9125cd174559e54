//! Workload execution: concurrent client streams with open-loop rate
//! control, measured from the client side.
//!
//! Two executors share the per-operation machinery:
//!
//! - the real-time executor runs each stream on its own worker threads,
//!   pacing open-loop streams by sleeping to the intended schedule;
//! - the virtual executor runs everything on one thread against a
//!   [`FakeClock`], interleaving streams in virtual-time order. Same seed,
//!   same results, which is what makes prescription runs reproducible.
//!
//! Open-loop latency is measured from the operation's *intended* start, not
//! its actual issue time, so a stalled backend inflates the latencies of
//! every operation scheduled during the stall instead of silently issuing
//! fewer operations (coordinated omission).

use parking_lot::Mutex;
use rand_chacha::ChaCha8Rng;
use std::collections::BinaryHeap;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Barrier;

use rand::SeedableRng;
use thiserror::Error;

use crate::backend::StorageBackend;
use crate::datagen::{gen_graph, GeneratorSpec, LogStream, RecordStream};
use crate::engine::{run_pipeline, ExecEnv, TransformRegistry};
use crate::model::Element;
use crate::seed::derive;

use super::clock::{Clock, ClockSource, FakeClock};
use super::recorder::LatencyRecorder;
use super::template::{
    instantiate, InputTemplate, InstantiateError, KeyTracker, SlotContext, StreamSpec,
    Termination, WorkTemplate,
};

/// Interval (in operations) between data-size termination checks.
pub const DATA_SIZE_CHECK_INTERVAL: u64 = 100;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("workload setup: {0}")]
    Setup(String),
}

/// Knobs for a workload run.
#[derive(Debug, Clone)]
pub struct WorkloadOptions {
    pub seed: u64,
    pub cross_product_cap: u64,
    /// Modeled per-op service time for closed-loop streams under the
    /// virtual executor (virtual time only advances when something claims
    /// it).
    pub virtual_closed_loop_service_ns: u64,
    /// Modeled per-op service time for open-loop streams under the virtual
    /// executor.
    pub virtual_open_loop_service_ns: u64,
}

impl WorkloadOptions {
    pub fn new(seed: u64) -> Self {
        WorkloadOptions {
            seed,
            cross_product_cap: crate::engine::DEFAULT_CROSS_PRODUCT_CAP,
            virtual_closed_loop_service_ns: 500_000_000,
            virtual_open_loop_service_ns: 0,
        }
    }
}

/// Per-stream results handed to report building.
pub struct StreamOutcome {
    pub name: String,
    pub ops_completed: u64,
    pub ops_failed: u64,
    pub active_seconds: f64,
    pub recorder: LatencyRecorder,
    pub termination_reason: String,
    pub result_digest: Option<String>,
}

/// Intended start of operation `op_index` under open-loop pacing.
pub fn schedule_next(rate: f64, op_index: u64, start_ns: u64) -> u64 {
    start_ns + (op_index as f64 * 1e9 / rate).round() as u64
}

struct InstantiateState {
    tracker: KeyTracker,
    source: Option<Box<dyn Iterator<Item = Element> + Send>>,
}

struct StreamRuntime<'a> {
    spec: &'a StreamSpec,
    seed: u64,
    claim: AtomicU64,
    inst: Mutex<InstantiateState>,
    recorder: LatencyRecorder,
    completed: AtomicU64,
    failed: AtomicU64,
    stopped: AtomicBool,
    reason: Mutex<Option<String>>,
    digest: Mutex<Option<(u64, u32)>>,
    last_completion_ns: AtomicU64,
    workers_left: AtomicUsize,
    finite: bool,
}

impl<'a> StreamRuntime<'a> {
    fn stop(&self, reason: &str) {
        let mut guard = self.reason.lock();
        if guard.is_none() {
            *guard = Some(reason.to_string());
        }
        self.stopped.store(true, Ordering::SeqCst);
    }

    fn is_stopped(&self) -> bool {
        self.stopped.load(Ordering::SeqCst)
    }

    fn record_success(&self, op_index: u64, latency_ns: u64, digest: u32) {
        self.completed.fetch_add(1, Ordering::Relaxed);
        self.recorder.record(latency_ns);
        let mut d = self.digest.lock();
        if d.map_or(true, |(prev, _)| op_index >= prev) {
            *d = Some((op_index, digest));
        }
    }

    fn into_outcome(self, start_ns: u64) -> StreamOutcome {
        let last = self.last_completion_ns.load(Ordering::SeqCst);
        let active_seconds = if last > start_ns {
            (last - start_ns) as f64 / 1e9
        } else {
            0.0
        };
        StreamOutcome {
            name: self.spec.name.clone(),
            ops_completed: self.completed.load(Ordering::SeqCst),
            ops_failed: self.failed.load(Ordering::SeqCst),
            active_seconds,
            recorder: self.recorder,
            termination_reason: self
                .reason
                .into_inner()
                .unwrap_or_else(|| "unknown".to_string()),
            result_digest: self
                .digest
                .into_inner()
                .map(|(_, crc)| format!("{crc:08x}")),
        }
    }
}

fn needs_element_source(work: &WorkTemplate) -> bool {
    match work {
        WorkTemplate::Mix(entries) => entries.iter().any(|e| {
            matches!(
                e.op,
                super::template::OpTemplate::PutFresh { .. }
                    | super::template::OpTemplate::PutExisting { .. }
            )
        }),
        WorkTemplate::Pipeline(p) => matches!(p.input, InputTemplate::NextElement),
    }
}

fn build_source(
    spec: &GeneratorSpec,
) -> Result<Box<dyn Iterator<Item = Element> + Send>, DriverError> {
    match spec {
        GeneratorSpec::Records { .. } => Ok(Box::new(
            RecordStream::new(spec).map_err(|e| DriverError::Setup(e.to_string()))?,
        )),
        GeneratorSpec::Logs { .. } => Ok(Box::new(
            LogStream::new(spec).map_err(|e| DriverError::Setup(e.to_string()))?,
        )),
        GeneratorSpec::Graph { .. } => {
            let ds = gen_graph("source", spec).map_err(|e| DriverError::Setup(e.to_string()))?;
            Ok(Box::new(ds.into_elements()))
        }
    }
}

fn setup_runtimes<'a>(
    backend: &dyn StorageBackend,
    streams: &'a [StreamSpec],
    opts: &WorkloadOptions,
) -> Result<Vec<StreamRuntime<'a>>, DriverError> {
    if streams.is_empty() {
        return Err(DriverError::Setup("no streams".into()));
    }
    if streams.iter().all(|s| s.termination.is_none()) {
        return Err(DriverError::Setup(
            "every stream is continuous; at least one needs a termination clause".into(),
        ));
    }
    let existing = backend.set_names();
    let mut runtimes = Vec::with_capacity(streams.len());
    for (index, spec) in streams.iter().enumerate() {
        if spec.client_threads == 0 {
            return Err(DriverError::Setup(format!(
                "stream {:?}: client_threads must be positive",
                spec.name
            )));
        }
        if let Some(rate) = spec.rate {
            if !(rate > 0.0) {
                return Err(DriverError::Setup(format!(
                    "stream {:?}: rate must be positive",
                    spec.name
                )));
            }
        }
        for set in spec.referenced_sets() {
            if !existing.iter().any(|s| s == set) {
                return Err(DriverError::Setup(format!(
                    "stream {:?} references missing set {set:?}",
                    spec.name
                )));
            }
        }
        if needs_element_source(&spec.work) && spec.element_source.is_none() {
            return Err(DriverError::Setup(format!(
                "stream {:?} generates elements but has no element_source",
                spec.name
            )));
        }

        let stream_seed = derive(opts.seed, index as u64);
        let source = match &spec.element_source {
            Some(g) => {
                let mut g = g.clone();
                if g.seed().is_none() {
                    g.set_seed(derive(opts.seed, 1_000 + index as u64));
                }
                Some(build_source(&g)?)
            }
            None => None,
        };
        let tracker = match &spec.key_pool_from {
            Some(set) => KeyTracker::new(
                backend
                    .scan_snapshot(set)
                    .map_err(|e| DriverError::Setup(e.to_string()))?
                    .map(|e| e.key),
            ),
            None => KeyTracker::new(std::iter::empty()),
        };
        runtimes.push(StreamRuntime {
            spec,
            seed: stream_seed,
            claim: AtomicU64::new(0),
            inst: Mutex::new(InstantiateState { tracker, source }),
            recorder: LatencyRecorder::new(),
            completed: AtomicU64::new(0),
            failed: AtomicU64::new(0),
            stopped: AtomicBool::new(false),
            reason: Mutex::new(None),
            digest: Mutex::new(None),
            last_completion_ns: AtomicU64::new(0),
            workers_left: AtomicUsize::new(spec.client_threads as usize),
            finite: spec.termination.is_some(),
        });
    }
    Ok(runtimes)
}

/// Claim-time termination decision for op `op_index`. Returns the stop
/// reason if the stream is done.
fn termination_reason_for(
    rt: &StreamRuntime<'_>,
    backend: &dyn StorageBackend,
    op_index: u64,
    start_ns: u64,
    now_ns: u64,
    finite_active: &AtomicUsize,
) -> Option<String> {
    match &rt.spec.termination {
        Some(Termination::OpCount(n)) => (op_index >= *n).then(|| "op_count".to_string()),
        Some(Termination::DurationSeconds(d)) => {
            let window_ns = (d * 1e9) as u64;
            let past = match rt.spec.rate {
                // open loop: the schedule alone decides, deterministically
                Some(rate) => schedule_next(rate, op_index, start_ns) >= start_ns + window_ns,
                None => now_ns >= start_ns + window_ns,
            };
            past.then(|| "duration".to_string())
        }
        Some(Termination::DataSize {
            set,
            threshold_bytes,
        }) => {
            if op_index % DATA_SIZE_CHECK_INTERVAL == 0 {
                match backend.size_bytes(set) {
                    Ok(size) if size >= *threshold_bytes => Some("data_size".to_string()),
                    Ok(_) => None,
                    Err(_) => Some("error".to_string()),
                }
            } else {
                None
            }
        }
        None => (finite_active.load(Ordering::SeqCst) == 0).then(|| "co_terminated".to_string()),
    }
}

/// Builds the op's pipeline and runs it; returns (digest, success).
fn execute_op(
    rt: &StreamRuntime<'_>,
    env: &ExecEnv<'_>,
    op_index: u64,
) -> Result<Option<u32>, InstantiateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(rt.seed, op_index));
    let pipeline = {
        let mut inst = rt.inst.lock();
        let InstantiateState { tracker, source } = &mut *inst;
        let mut next = || source.as_mut().and_then(|s| s.next());
        let mut ctx = SlotContext {
            rng: &mut rng,
            tracker,
            next_element: &mut next,
        };
        instantiate(&rt.spec.work, &mut ctx)?
    };
    match run_pipeline(env, &pipeline) {
        Ok(value) => Ok(Some(crc32fast::hash(&value.canonical_bytes()))),
        Err(_) => Ok(None),
    }
}

/// Runs all streams to completion and returns their outcomes plus the run's
/// wall duration in seconds. Streams start together; each stops on its own
/// termination clause (continuous streams co-terminate); one stream's
/// failures never abort its siblings.
pub fn run_workload(
    backend: &dyn StorageBackend,
    registry: &TransformRegistry,
    streams: &[StreamSpec],
    opts: &WorkloadOptions,
    clock: &ClockSource,
) -> Result<(Vec<StreamOutcome>, f64), DriverError> {
    match clock {
        ClockSource::System(c) => run_threaded(backend, registry, streams, opts, c.as_ref()),
        ClockSource::Fake(c) => run_virtual(backend, registry, streams, opts, c),
    }
}

fn run_threaded(
    backend: &dyn StorageBackend,
    registry: &TransformRegistry,
    streams: &[StreamSpec],
    opts: &WorkloadOptions,
    clock: &dyn Clock,
) -> Result<(Vec<StreamOutcome>, f64), DriverError> {
    let runtimes = setup_runtimes(backend, streams, opts)?;
    let finite_active = AtomicUsize::new(runtimes.iter().filter(|r| r.finite).count());
    let total_workers: usize = streams.iter().map(|s| s.client_threads as usize).sum();
    let barrier = Barrier::new(total_workers + 1);

    let mut env = ExecEnv::new(backend, registry);
    env.cross_product_cap = opts.cross_product_cap;

    let start_ns = std::thread::scope(|scope| {
        for rt in &runtimes {
            for _ in 0..rt.spec.client_threads {
                let barrier = &barrier;
                let finite_active = &finite_active;
                let env = env;
                scope.spawn(move || {
                    barrier.wait();
                    let start_ns = clock.now_ns();
                    worker_loop(rt, &env, clock, start_ns, finite_active);
                    if rt.workers_left.fetch_sub(1, Ordering::SeqCst) == 1 && rt.finite {
                        finite_active.fetch_sub(1, Ordering::SeqCst);
                    }
                });
            }
        }
        barrier.wait();
        clock.now_ns()
        // scope joins all workers here
    });
    let end_ns = clock.now_ns();

    let outcomes = runtimes
        .into_iter()
        .map(|rt| rt.into_outcome(start_ns))
        .collect();
    Ok((outcomes, (end_ns - start_ns) as f64 / 1e9))
}

fn worker_loop(
    rt: &StreamRuntime<'_>,
    env: &ExecEnv<'_>,
    clock: &dyn Clock,
    start_ns: u64,
    finite_active: &AtomicUsize,
) {
    loop {
        if rt.is_stopped() {
            return;
        }
        let op_index = rt.claim.fetch_add(1, Ordering::SeqCst);
        if let Some(reason) = termination_reason_for(
            rt,
            env.backend,
            op_index,
            start_ns,
            clock.now_ns(),
            finite_active,
        ) {
            rt.stop(&reason);
            return;
        }
        let intended_ns = match rt.spec.rate {
            Some(rate) => {
                let t = schedule_next(rate, op_index, start_ns);
                clock.sleep_until(t);
                t
            }
            None => clock.now_ns(),
        };
        match execute_op(rt, env, op_index) {
            Ok(Some(digest)) => {
                let completion = clock.now_ns();
                rt.record_success(op_index, completion.saturating_sub(intended_ns), digest);
                rt.last_completion_ns.fetch_max(completion, Ordering::SeqCst);
            }
            Ok(None) => {
                rt.failed.fetch_add(1, Ordering::Relaxed);
                rt.last_completion_ns
                    .fetch_max(clock.now_ns(), Ordering::SeqCst);
            }
            Err(InstantiateError::SourceExhausted) => {
                rt.stop("source_exhausted");
                return;
            }
            Err(_) => {
                rt.failed.fetch_add(1, Ordering::Relaxed);
            }
        }
    }
}

/// Deterministic single-threaded executor over virtual time. Each stream
/// keeps a heap of worker-free times (modeling its client threads); ops run
/// in global issue order; completions advance the fake clock.
fn run_virtual(
    backend: &dyn StorageBackend,
    registry: &TransformRegistry,
    streams: &[StreamSpec],
    opts: &WorkloadOptions,
    clock: &FakeClock,
) -> Result<(Vec<StreamOutcome>, f64), DriverError> {
    use std::cmp::Reverse;

    let runtimes = setup_runtimes(backend, streams, opts)?;
    let finite_active = AtomicUsize::new(runtimes.iter().filter(|r| r.finite).count());
    let mut env = ExecEnv::new(backend, registry);
    env.cross_product_cap = opts.cross_product_cap;

    let start_ns = clock.now_ns();
    let mut workers: Vec<BinaryHeap<Reverse<u64>>> = runtimes
        .iter()
        .map(|rt| {
            (0..rt.spec.client_threads)
                .map(|_| Reverse(start_ns))
                .collect()
        })
        .collect();

    loop {
        // pick the live stream with the earliest issue time
        let mut chosen: Option<(usize, u64, u64)> = None; // (stream, intended, issue)
        for (i, rt) in runtimes.iter().enumerate() {
            if rt.is_stopped() {
                continue;
            }
            let op_index = rt.claim.load(Ordering::SeqCst);
            let free = workers[i].peek().expect("threads > 0").0;
            let (intended, issue) = match rt.spec.rate {
                Some(rate) => {
                    let t = schedule_next(rate, op_index, start_ns);
                    (t, t.max(free))
                }
                None => (free, free),
            };
            if chosen.map_or(true, |(_, _, best)| issue < best) {
                chosen = Some((i, intended, issue));
            }
        }
        let Some((i, intended_ns, issue_ns)) = chosen else {
            break;
        };
        let rt = &runtimes[i];
        let op_index = rt.claim.fetch_add(1, Ordering::SeqCst);

        if let Some(reason) = termination_reason_for(
            rt,
            backend,
            op_index,
            start_ns,
            issue_ns,
            &finite_active,
        ) {
            rt.stop(&reason);
            if rt.finite {
                finite_active.fetch_sub(1, Ordering::SeqCst);
            }
            continue;
        }

        clock.advance_to(issue_ns);
        let service_ns = match rt.spec.rate {
            Some(_) => opts.virtual_open_loop_service_ns,
            None => opts.virtual_closed_loop_service_ns.max(1),
        };
        let before_op_ns = clock.now_ns();
        match execute_op(rt, &env, op_index) {
            Ok(outcome) => {
                // only clock advancement injected inside the op itself (e.g.
                // a stalling backend) extends this op's completion; global
                // time moved by sibling streams does not
                let intra_op_ns = clock.now_ns().saturating_sub(before_op_ns);
                let completion = issue_ns + service_ns + intra_op_ns;
                clock.advance_to(completion);
                workers[i].pop();
                workers[i].push(Reverse(completion));
                match outcome {
                    Some(digest) => {
                        rt.record_success(
                            op_index,
                            completion.saturating_sub(intended_ns),
                            digest,
                        );
                    }
                    None => {
                        rt.failed.fetch_add(1, Ordering::Relaxed);
                    }
                }
                rt.last_completion_ns.fetch_max(completion, Ordering::SeqCst);
            }
            Err(InstantiateError::SourceExhausted) => {
                rt.stop("source_exhausted");
                if rt.finite {
                    finite_active.fetch_sub(1, Ordering::SeqCst);
                }
            }
            Err(_) => {
                rt.failed.fetch_add(1, Ordering::Relaxed);
                workers[i].pop();
                workers[i].push(Reverse(issue_ns + service_ns.max(1)));
            }
        }
    }

    let end_ns = clock.now_ns();
    let outcomes = runtimes
        .into_iter()
        .map(|rt| rt.into_outcome(start_ns))
        .collect();
    Ok((outcomes, (end_ns - start_ns) as f64 / 1e9))
}
