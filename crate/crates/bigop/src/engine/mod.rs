//! Execution engine for the abstracted operations and workload patterns.
//!
//! Operations come in three categories: element operations (put, get,
//! delete, transform, filter), single-set operations (project, order_by,
//! aggregate) and double-set operations (union, difference, cross_product).
//! Pipelines compose them into multi-operation tasks; iterative plans repeat
//! a pipeline body until a stopping condition holds.

mod iterative;
mod ops;
mod pipeline;
mod transforms;

pub use iterative::{
    run_iterative, IterationOutcome, IterativePlan, StoppingCondition, DEFAULT_ITERATION_GUARD,
};
pub use ops::{
    aggregate, cross_product, difference, filter, order_by, project, union, AggregateFn,
    AggregateInput, AggregateMode, AggregateSpec, Aggregated, DEFAULT_CROSS_PRODUCT_CAP,
};
pub use pipeline::{
    materialize, pattern_of, run_pipeline, run_pipeline_on, ExecEnv, OpCategory, OperationKind,
    PipeValue, Pipeline, PipelineInput, StepSpec, WorkloadPattern,
};
pub use transforms::{
    transform, transform_element, InputKind, ParamDecl, TransformContext, TransformEntry,
    TransformInput, TransformKind, TransformOutput, TransformRegistry, DEFAULT_DAMPING,
};

use crate::backend::BackendError;
use crate::model::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("unknown transform {0:?}")]
    UnknownTransform(String),
    #[error("transform {name:?}: parameter {param:?} {problem}")]
    ParamSchemaViolation {
        name: String,
        param: String,
        problem: String,
    },
    #[error("transform {name:?} expects {expected} input, got {got}")]
    InputKindMismatch {
        name: String,
        expected: String,
        got: String,
    },
    #[error("transform {0:?} reads backend sets and needs a context")]
    ContextRequired(String),
    #[error("aggregate over empty input in whole-set mode")]
    EmptySet,
    #[error("value of element {0:?} is not a record")]
    NonRecordValue(String),
    #[error("cross product of {left} x {right} elements exceeds the cap of {cap} pairs")]
    BlowupCapExceeded { left: u64, right: u64, cap: u64 },
    #[error("pipeline is empty")]
    EmptyPipeline,
    #[error("step {index} ({kind}): input type {got} not accepted")]
    StepInputMismatch {
        index: usize,
        kind: String,
        got: String,
    },
    #[error("multiset intermediate must be consumed by a by-key aggregation")]
    DanglingMultiset,
    #[error("step {index}: {source}")]
    StepFailed {
        index: usize,
        #[source]
        source: Box<EngineError>,
    },
    #[error("iteration {iteration}: {source}")]
    IterationFailed {
        iteration: u64,
        #[source]
        source: Box<EngineError>,
    },
    #[error("iteration guard tripped after {iterations} iterations")]
    GuardTripped {
        iterations: u64,
        partial: crate::model::DataSet,
    },
    #[error("stopping condition field {field:?} missing or non-numeric on element {key:?}")]
    StopFieldInvalid { field: String, key: String },
    #[error("pipeline produced no value (missing get)")]
    MissingValue,
}

impl EngineError {
    pub(crate) fn at_step(self, index: usize) -> EngineError {
        EngineError::StepFailed {
            index,
            source: Box::new(self),
        }
    }
}
