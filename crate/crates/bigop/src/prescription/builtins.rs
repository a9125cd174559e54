//! The three canned prescriptions — fast storage, log monitoring, and rank
//! computation over a random graph — from the simplest to the most complex.
//! Scale parameters default to desk scale; override them from the CLI for
//! bigger runs.

use crate::datagen::GeneratorSpec;
use crate::driver::{
    InputTemplate, MetricKind, MixEntry, OpTemplate, PipelineTemplate, PredicateTemplate,
    StepTemplate, StreamSpec, TemplateScalar, Termination, WorkTemplate,
};
use crate::engine::{
    AggregateFn, AggregateMode, AggregateSpec, IterativePlan, OperationKind, Pipeline,
    PipelineInput, StepSpec, WorkloadPattern, DEFAULT_ITERATION_GUARD,
};
use crate::model::{CmpOp, Predicate, ScalarValue, TransformSpec};

use super::{DatasetSpec, Preload, Prescription};

pub const DEFAULT_SEED: u64 = 42;

/// Names of the built-in prescriptions, in presentation order.
pub fn builtin_names() -> [&'static str; 3] {
    ["fast_storage", "log_monitoring", "pagerank"]
}

/// Looks up a built-in prescription by name.
pub fn builtin(name: &str) -> Option<Prescription> {
    match name {
        "fast_storage" => Some(fast_storage()),
        "log_monitoring" => Some(log_monitoring()),
        "pagerank" => Some(pagerank()),
        _ => None,
    }
}

/// Frequent small storage requests: a put/get/delete mix over uniformly
/// chosen keys of a preloaded structured-record set, measuring throughput.
pub fn fast_storage() -> Prescription {
    Prescription {
        name: "fast_storage".into(),
        seed: DEFAULT_SEED,
        operations: vec![
            OperationKind::Put,
            OperationKind::Get,
            OperationKind::Delete,
            OperationKind::Union,
        ],
        patterns: vec![WorkloadPattern::SingleOperation],
        dataset: DatasetSpec {
            set: "records".into(),
            target_size_bytes: 8 * 1024 * 1024,
            generator: Some(GeneratorSpec::Records {
                seed: None,
                count: 100_000_000,
                field_count: 3,
                value_bytes: 100,
                start_index: 0,
            }),
            import_path: None,
            preload: Preload::ToTarget,
        },
        streams: vec![StreamSpec {
            name: "ops".into(),
            work: WorkTemplate::Mix(vec![
                MixEntry {
                    weight: 0.50,
                    op: OpTemplate::PutExisting {
                        set: "records".into(),
                    },
                },
                MixEntry {
                    weight: 0.45,
                    op: OpTemplate::Get {
                        set: "records".into(),
                    },
                },
                MixEntry {
                    weight: 0.05,
                    op: OpTemplate::Delete {
                        set: "records".into(),
                    },
                },
            ]),
            rate: None,
            client_threads: 1,
            termination: Some(Termination::OpCount(10_000)),
            element_source: Some(GeneratorSpec::Records {
                seed: None,
                count: 100_000_000,
                field_count: 3,
                value_bytes: 100,
                start_index: 0,
            }),
            key_pool_from: Some("records".into()),
        }],
        metrics: vec![MetricKind::Throughput],
    }
}

/// Log element payload size tuned so one entry serializes to ~1 KiB.
const LOG_MESSAGE_BYTES: u32 = 914;

/// Ingest log entries at a fixed rate until the set reaches the target
/// size, while a concurrent query stream filters error rows above a
/// per-query random latency threshold and sums their latencies.
pub fn log_monitoring() -> Prescription {
    let target_size_bytes = 64 * 1024 * 1024;
    Prescription {
        name: "log_monitoring".into(),
        seed: DEFAULT_SEED,
        operations: vec![
            OperationKind::Put,
            OperationKind::Get,
            OperationKind::Filter,
            OperationKind::Aggregate,
        ],
        patterns: vec![
            WorkloadPattern::SingleOperation,
            WorkloadPattern::MultiOperation,
        ],
        dataset: DatasetSpec {
            set: "logs".into(),
            target_size_bytes,
            generator: Some(GeneratorSpec::Logs {
                seed: None,
                count: 100_000_000,
                server_count: 100,
                message_bytes: LOG_MESSAGE_BYTES,
                start_index: 0,
            }),
            import_path: None,
            // small warm-up corpus; the ingest stream fills the rest
            preload: Preload::Elements(1024),
        },
        streams: vec![
            StreamSpec {
                name: "ingest".into(),
                work: WorkTemplate::Pipeline(PipelineTemplate {
                    input: InputTemplate::NextElement,
                    steps: vec![StepTemplate::Put { set: "logs".into() }],
                }),
                rate: Some(5000.0),
                client_threads: 1,
                termination: Some(Termination::DataSize {
                    set: "logs".into(),
                    threshold_bytes: target_size_bytes,
                }),
                element_source: Some(GeneratorSpec::Logs {
                    seed: None,
                    count: 100_000_000,
                    server_count: 100,
                    message_bytes: LOG_MESSAGE_BYTES,
                    start_index: 1024,
                }),
                key_pool_from: None,
            },
            StreamSpec {
                name: "queries".into(),
                work: WorkTemplate::Pipeline(PipelineTemplate {
                    input: InputTemplate::SetRef("logs".into()),
                    steps: vec![
                        StepTemplate::Filter {
                            predicate: PredicateTemplate::All(vec![
                                PredicateTemplate::Cmp {
                                    field: "level".into(),
                                    op: CmpOp::Eq,
                                    value: TemplateScalar::Lit(ScalarValue::Str("ERROR".into())),
                                },
                                PredicateTemplate::Cmp {
                                    field: "latency_ms".into(),
                                    op: CmpOp::Gt,
                                    value: TemplateScalar::UniformFloat { lo: 0.0, hi: 10.0 },
                                },
                            ]),
                        },
                        StepTemplate::Aggregate {
                            spec: AggregateSpec {
                                function: AggregateFn::Sum,
                                field: "latency_ms".into(),
                                mode: AggregateMode::WholeSet,
                            },
                        },
                    ],
                }),
                rate: None,
                client_threads: 1,
                termination: None, // continuous; stops with the ingest stream
                element_source: None,
                key_pool_from: None,
            },
        ],
        metrics: vec![MetricKind::Latency],
    }
}

/// Rank computation over a random directed graph: contribute shares along
/// out-links, reduce by key, apply damping — iterated to a rank fixpoint —
/// then order by rank. Measures test duration.
pub fn pagerank() -> Prescription {
    Prescription {
        name: "pagerank".into(),
        seed: DEFAULT_SEED,
        operations: vec![
            OperationKind::Get,
            OperationKind::Transform,
            OperationKind::Filter,
            OperationKind::OrderBy,
        ],
        patterns: vec![
            WorkloadPattern::SingleOperation,
            WorkloadPattern::MultiOperation,
            WorkloadPattern::Iterative,
        ],
        dataset: DatasetSpec {
            set: "graph".into(),
            target_size_bytes: 64 * 1024,
            generator: Some(GeneratorSpec::Graph {
                seed: None,
                node_count: 1000,
                edge_count: 7400,
            }),
            import_path: None,
            preload: Preload::Full,
        },
        streams: vec![StreamSpec {
            name: "rank".into(),
            work: WorkTemplate::Pipeline(PipelineTemplate {
                input: InputTemplate::SetRef("graph".into()),
                steps: vec![
                    StepTemplate::Iterate {
                        plan: rank_plan("graph", Predicate::True, 1e-6),
                    },
                    StepTemplate::OrderBy {
                        field: "rank".into(),
                        descending: true,
                    },
                ],
            }),
            rate: None,
            client_threads: 1,
            termination: Some(Termination::OpCount(1)),
            element_source: None,
            key_pool_from: None,
        }],
        metrics: vec![MetricKind::Duration],
    }
}

/// The iterative rank body over a topology set: an optional node-subset
/// filter, share contribution along out-links, by-key share reduction, and
/// the damped rank update.
pub fn rank_plan(graph_set: &str, node_filter: Predicate, epsilon: f64) -> IterativePlan {
    IterativePlan {
        body: Pipeline::new(
            PipelineInput::None,
            vec![
                StepSpec::Filter {
                    predicate: node_filter,
                },
                StepSpec::Transform {
                    spec: TransformSpec::new("pagerank-contribute"),
                },
                StepSpec::Aggregate {
                    spec: AggregateSpec {
                        function: AggregateFn::Sum,
                        field: "share".into(),
                        mode: AggregateMode::ByKey,
                    },
                },
                StepSpec::Transform {
                    spec: TransformSpec::new("pagerank-apply")
                        .with_param("graph_set", ScalarValue::Str(graph_set.into())),
                },
            ],
        ),
        stop: crate::engine::StoppingCondition::L1Delta {
            field: "rank".into(),
            epsilon,
        },
        max_iterations: DEFAULT_ITERATION_GUARD,
    }
}
