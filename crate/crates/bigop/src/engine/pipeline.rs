//! Operation pipelines: typed step chains executed sequentially.
//!
//! A pipeline names its input (usually a backend set) and a list of steps;
//! each step consumes the previous step's output. Sequential application is
//! the reference semantics; there is no optimizer.

use serde::{Deserialize, Serialize};

use crate::backend::StorageBackend;
use crate::model::{DataSet, Element, Multiset, Predicate, TransformSpec};

use super::iterative::{run_iterative_inner, IterativePlan};
use super::ops::{self, AggregateInput, AggregateMode, AggregateSpec, Aggregated};
use super::transforms::{
    transform, TransformContext, TransformInput, TransformOutput, TransformRegistry,
};
use super::EngineError;

/// The abstracted operation vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Hash)]
#[serde(rename_all = "snake_case")]
pub enum OperationKind {
    Put,
    Get,
    Delete,
    Transform,
    Filter,
    Project,
    OrderBy,
    Aggregate,
    Union,
    Difference,
    CrossProduct,
}

/// Operation category: how many sets the computation needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpCategory {
    Element,
    SingleSet,
    DoubleSet,
}

impl OperationKind {
    pub fn category(self) -> OpCategory {
        match self {
            OperationKind::Put
            | OperationKind::Get
            | OperationKind::Delete
            | OperationKind::Transform
            | OperationKind::Filter => OpCategory::Element,
            OperationKind::Project | OperationKind::OrderBy | OperationKind::Aggregate => {
                OpCategory::SingleSet
            }
            OperationKind::Union | OperationKind::Difference | OperationKind::CrossProduct => {
                OpCategory::DoubleSet
            }
        }
    }

    pub const ALL: [OperationKind; 11] = [
        OperationKind::Put,
        OperationKind::Get,
        OperationKind::Delete,
        OperationKind::Transform,
        OperationKind::Filter,
        OperationKind::Project,
        OperationKind::OrderBy,
        OperationKind::Aggregate,
        OperationKind::Union,
        OperationKind::Difference,
        OperationKind::CrossProduct,
    ];
}

/// How operations compose into a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Hash)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadPattern {
    SingleOperation,
    MultiOperation,
    Iterative,
}

/// Where a pipeline's first value comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineInput {
    /// No input; the first step must be a source (get) or sink fed
    /// externally.
    None,
    /// Materialize a backend set via a scan snapshot.
    SetRef(String),
    /// A literal element (workload drivers bind generated elements here).
    Element(Element),
}

/// One operation invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSpec {
    /// Store the incoming element. First step only.
    Put { set: String },
    /// Fetch one element by key. First step only.
    Get { set: String, key: String },
    /// Remove one key (idempotent). First step only.
    Delete { set: String, key: String },
    Transform { spec: TransformSpec },
    Filter { predicate: Predicate },
    Project { fields: Vec<String> },
    OrderBy { field: String, descending: bool },
    Aggregate { spec: AggregateSpec },
    /// Keyed union with a named backend set (left operand is the incoming
    /// set).
    Union { with_set: String },
    /// Keyed difference, subtracting a named backend set.
    Difference { subtract_set: String },
    /// Cross product with a named backend set.
    CrossProduct { with_set: String },
    /// Run an iterative plan to completion on the incoming set.
    Iterate { plan: Box<IterativePlan> },
}

impl StepSpec {
    /// The Table-style operation this step invokes; `None` for iterate,
    /// which is a pattern rather than an operation.
    pub fn operation(&self) -> Option<OperationKind> {
        Some(match self {
            StepSpec::Put { .. } => OperationKind::Put,
            StepSpec::Get { .. } => OperationKind::Get,
            StepSpec::Delete { .. } => OperationKind::Delete,
            StepSpec::Transform { .. } => OperationKind::Transform,
            StepSpec::Filter { .. } => OperationKind::Filter,
            StepSpec::Project { .. } => OperationKind::Project,
            StepSpec::OrderBy { .. } => OperationKind::OrderBy,
            StepSpec::Aggregate { .. } => OperationKind::Aggregate,
            StepSpec::Union { .. } => OperationKind::Union,
            StepSpec::Difference { .. } => OperationKind::Difference,
            StepSpec::CrossProduct { .. } => OperationKind::CrossProduct,
            StepSpec::Iterate { .. } => return None,
        })
    }

    fn kind_name(&self) -> &'static str {
        match self {
            StepSpec::Put { .. } => "put",
            StepSpec::Get { .. } => "get",
            StepSpec::Delete { .. } => "delete",
            StepSpec::Transform { .. } => "transform",
            StepSpec::Filter { .. } => "filter",
            StepSpec::Project { .. } => "project",
            StepSpec::OrderBy { .. } => "order_by",
            StepSpec::Aggregate { .. } => "aggregate",
            StepSpec::Union { .. } => "union",
            StepSpec::Difference { .. } => "difference",
            StepSpec::CrossProduct { .. } => "cross_product",
            StepSpec::Iterate { .. } => "iterate",
        }
    }
}

/// A composed task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub input: PipelineInput,
    pub steps: Vec<StepSpec>,
}

impl Pipeline {
    pub fn new(input: PipelineInput, steps: Vec<StepSpec>) -> Self {
        Pipeline { input, steps }
    }

    /// Every operation invoked anywhere in the pipeline, including inside
    /// iterate bodies.
    pub fn operations(&self) -> Vec<OperationKind> {
        let mut ops = Vec::new();
        collect_ops(self, &mut ops);
        ops
    }
}

fn collect_ops(p: &Pipeline, out: &mut Vec<OperationKind>) {
    for step in &p.steps {
        if let Some(op) = step.operation() {
            out.push(op);
        }
        if let StepSpec::Iterate { plan } = step {
            collect_ops(&plan.body, out);
        }
    }
}

/// Patterns a pipeline exercises: single vs multi by step count, iterative
/// when an iterate step is present (an iterate-only pipeline is purely
/// iterative).
pub fn pattern_of(p: &Pipeline) -> Vec<WorkloadPattern> {
    let mut patterns = Vec::new();
    let has_iterate = p.steps.iter().any(|s| matches!(s, StepSpec::Iterate { .. }));
    if has_iterate {
        patterns.push(WorkloadPattern::Iterative);
    }
    if p.steps.len() > 1 {
        patterns.push(WorkloadPattern::MultiOperation);
    } else if p.steps.len() == 1 && !has_iterate {
        patterns.push(WorkloadPattern::SingleOperation);
    }
    patterns.sort();
    patterns
}

/// A value flowing between steps.
#[derive(Debug, Clone, PartialEq)]
pub enum PipeValue {
    Element(Element),
    Set(DataSet),
    Multi(Multiset),
    /// Ordered output of order_by.
    Sequence(Vec<Element>),
    /// Acknowledgment of a put/delete.
    Ack,
    /// A get found nothing; short-circuits the rest of the pipeline.
    Missing,
}

impl PipeValue {
    pub fn kind_name(&self) -> &'static str {
        match self {
            PipeValue::Element(_) => "element",
            PipeValue::Set(_) => "data set",
            PipeValue::Multi(_) => "multiset",
            PipeValue::Sequence(_) => "sequence",
            PipeValue::Ack => "ack",
            PipeValue::Missing => "missing",
        }
    }

    /// Canonical bytes of the result, for digests and bit-identity checks.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        use crate::model::encode_element;
        match self {
            PipeValue::Element(e) => encode_element(e),
            PipeValue::Set(s) => {
                let mut buf = Vec::new();
                for e in s.iter() {
                    buf.extend_from_slice(&encode_element(e));
                }
                buf
            }
            PipeValue::Multi(m) => {
                let mut buf = Vec::new();
                for e in m.iter() {
                    buf.extend_from_slice(&encode_element(e));
                }
                buf
            }
            PipeValue::Sequence(es) => {
                let mut buf = Vec::new();
                for e in es {
                    buf.extend_from_slice(&encode_element(e));
                }
                buf
            }
            PipeValue::Ack => b"ack".to_vec(),
            PipeValue::Missing => b"missing".to_vec(),
        }
    }
}

/// Everything step execution needs.
#[derive(Clone, Copy)]
pub struct ExecEnv<'a> {
    pub backend: &'a dyn StorageBackend,
    pub registry: &'a TransformRegistry,
    pub cross_product_cap: u64,
}

impl<'a> ExecEnv<'a> {
    pub fn new(backend: &'a dyn StorageBackend, registry: &'a TransformRegistry) -> Self {
        ExecEnv {
            backend,
            registry,
            cross_product_cap: ops::DEFAULT_CROSS_PRODUCT_CAP,
        }
    }
}

/// Materializes a backend set into a [`DataSet`] via a scan snapshot.
pub fn materialize(backend: &dyn StorageBackend, name: &str) -> Result<DataSet, EngineError> {
    let mut ds = DataSet::new(name);
    for e in backend.scan_snapshot(name)? {
        ds.insert(e);
    }
    Ok(ds)
}

/// Runs a pipeline start to finish. The result equals sequential application
/// of the steps; the first failing step's error is annotated with its index.
pub fn run_pipeline(env: &ExecEnv<'_>, p: &Pipeline) -> Result<PipeValue, EngineError> {
    let initial = match &p.input {
        PipelineInput::None => None,
        PipelineInput::SetRef(name) => Some(PipeValue::Set(materialize(env.backend, name)?)),
        PipelineInput::Element(e) => Some(PipeValue::Element(e.clone())),
    };
    run_steps(env, &p.steps, initial)
}

/// Runs a pipeline on an explicit input value (used by iterate bodies and by
/// single-step folds). The pipeline's own `input` field is ignored.
pub fn run_pipeline_on(
    env: &ExecEnv<'_>,
    p: &Pipeline,
    input: PipeValue,
) -> Result<PipeValue, EngineError> {
    run_steps(env, &p.steps, Some(input))
}

fn run_steps(
    env: &ExecEnv<'_>,
    steps: &[StepSpec],
    initial: Option<PipeValue>,
) -> Result<PipeValue, EngineError> {
    if steps.is_empty() {
        return Err(EngineError::EmptyPipeline);
    }
    let mut value = initial;
    for (index, step) in steps.iter().enumerate() {
        if matches!(value, Some(PipeValue::Missing)) {
            return Ok(PipeValue::Missing);
        }
        value = Some(run_step(env, step, value).map_err(|e| e.at_step(index))?);
    }
    let result = value.expect("nonempty step list");
    if matches!(result, PipeValue::Multi(_)) {
        return Err(EngineError::DanglingMultiset);
    }
    Ok(result)
}

fn run_step(
    env: &ExecEnv<'_>,
    step: &StepSpec,
    value: Option<PipeValue>,
) -> Result<PipeValue, EngineError> {
    let mismatch = |got: &Option<PipeValue>| EngineError::StepInputMismatch {
        index: 0, // overwritten by at_step
        kind: step.kind_name().to_string(),
        got: got
            .as_ref()
            .map(PipeValue::kind_name)
            .unwrap_or("nothing")
            .to_string(),
    };

    match step {
        StepSpec::Put { set } => match value {
            Some(PipeValue::Element(e)) => {
                env.backend.put(set, e)?;
                Ok(PipeValue::Ack)
            }
            other => Err(mismatch(&other)),
        },
        StepSpec::Get { set, key } => match value {
            None => match env.backend.get(set, key)? {
                Some(e) => Ok(PipeValue::Element(e)),
                None => Ok(PipeValue::Missing),
            },
            other => Err(mismatch(&other)),
        },
        StepSpec::Delete { set, key } => match value {
            None => {
                env.backend.delete(set, key)?;
                Ok(PipeValue::Ack)
            }
            other => Err(mismatch(&other)),
        },
        StepSpec::Transform { spec } => {
            let ctx = TransformContext::with_backend(env.backend);
            let output = match &value {
                Some(PipeValue::Element(e)) => {
                    transform(TransformInput::Element(e), spec, env.registry, &ctx)?
                }
                Some(PipeValue::Set(s)) => {
                    transform(TransformInput::Set(s), spec, env.registry, &ctx)?
                }
                other => return Err(mismatch(other)),
            };
            Ok(match output {
                TransformOutput::Element(e) => PipeValue::Element(e),
                TransformOutput::Set(s) => PipeValue::Set(s),
                TransformOutput::Multi(m) => PipeValue::Multi(m),
            })
        }
        StepSpec::Filter { predicate } => match &value {
            Some(PipeValue::Set(s)) => Ok(PipeValue::Set(ops::filter(s, predicate)?)),
            Some(PipeValue::Element(e)) => {
                if crate::model::eval_predicate(predicate, e)? {
                    Ok(value.expect("matched above"))
                } else {
                    Ok(PipeValue::Missing)
                }
            }
            other => Err(mismatch(other)),
        },
        StepSpec::Project { fields } => match &value {
            Some(PipeValue::Set(s)) => Ok(PipeValue::Set(ops::project(s, fields)?)),
            other => Err(mismatch(other)),
        },
        StepSpec::OrderBy { field, descending } => match &value {
            Some(PipeValue::Set(s)) => {
                Ok(PipeValue::Sequence(ops::order_by(s, field, *descending)?))
            }
            other => Err(mismatch(other)),
        },
        StepSpec::Aggregate { spec } => {
            let result = match &value {
                Some(PipeValue::Set(s)) => ops::aggregate(AggregateInput::Set(s), spec)?,
                Some(PipeValue::Multi(m)) => {
                    if spec.mode != AggregateMode::ByKey {
                        return Err(mismatch(&value));
                    }
                    ops::aggregate(AggregateInput::Multi(m), spec)?
                }
                other => return Err(mismatch(other)),
            };
            Ok(match result {
                Aggregated::Whole(e) => PipeValue::Element(e),
                Aggregated::PerKey(s) => PipeValue::Set(s),
            })
        }
        StepSpec::Union { with_set } => match &value {
            Some(PipeValue::Set(s)) => {
                let rhs = materialize(env.backend, with_set)?;
                Ok(PipeValue::Set(ops::union(s, &rhs)))
            }
            other => Err(mismatch(other)),
        },
        StepSpec::Difference { subtract_set } => match &value {
            Some(PipeValue::Set(s)) => {
                let rhs = materialize(env.backend, subtract_set)?;
                Ok(PipeValue::Set(ops::difference(s, &rhs)))
            }
            other => Err(mismatch(other)),
        },
        StepSpec::CrossProduct { with_set } => match &value {
            Some(PipeValue::Set(s)) => {
                let rhs = materialize(env.backend, with_set)?;
                Ok(PipeValue::Set(ops::cross_product(
                    s,
                    &rhs,
                    env.cross_product_cap,
                )?))
            }
            other => Err(mismatch(other)),
        },
        StepSpec::Iterate { plan } => match value {
            Some(PipeValue::Set(s)) => {
                let outcome = run_iterative_inner(env, plan, s)?;
                Ok(PipeValue::Set(outcome.result))
            }
            other => Err(mismatch(&other)),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::MemoryBackend;
    use crate::engine::ops::AggregateFn;
    use crate::model::{field, CmpOp, ScalarValue};

    fn env_backend() -> MemoryBackend {
        let b = MemoryBackend::new();
        b.create_set("logs").unwrap();
        for (i, (level, latency)) in [
            ("ERROR", 12.0),
            ("INFO", 5.0),
            ("ERROR", 30.0),
            ("WARN", 2.0),
        ]
        .iter()
        .enumerate()
        {
            b.put(
                "logs",
                Element::record(
                    format!("l{i}"),
                    vec![
                        field("level", ScalarValue::Str((*level).into())),
                        field("latency_ms", ScalarValue::Float(*latency)),
                    ],
                )
                .unwrap(),
            )
            .unwrap();
        }
        b
    }

    #[test]
    fn single_step_pipeline_equals_direct_filter() {
        let backend = env_backend();
        let registry = TransformRegistry::with_builtins();
        let env = ExecEnv::new(&backend, &registry);
        let pred = Predicate::cmp("level", CmpOp::Eq, ScalarValue::Str("ERROR".into()));

        let p = Pipeline::new(
            PipelineInput::SetRef("logs".into()),
            vec![StepSpec::Filter {
                predicate: pred.clone(),
            }],
        );
        let got = run_pipeline(&env, &p).unwrap();

        let direct = ops::filter(&materialize(&backend, "logs").unwrap(), &pred).unwrap();
        assert_eq!(got, PipeValue::Set(direct));
    }

    #[test]
    fn filter_then_sum_matches_hand_composition() {
        let backend = env_backend();
        let registry = TransformRegistry::with_builtins();
        let env = ExecEnv::new(&backend, &registry);
        let pred = Predicate::cmp("level", CmpOp::Eq, ScalarValue::Str("ERROR".into()));
        let p = Pipeline::new(
            PipelineInput::SetRef("logs".into()),
            vec![
                StepSpec::Filter {
                    predicate: pred.clone(),
                },
                StepSpec::Aggregate {
                    spec: AggregateSpec {
                        function: AggregateFn::Sum,
                        field: "latency_ms".into(),
                        mode: AggregateMode::WholeSet,
                    },
                },
            ],
        );
        let got = run_pipeline(&env, &p).unwrap();
        let PipeValue::Element(e) = got else { panic!() };
        assert_eq!(
            e.value.field("result").unwrap().as_scalar().unwrap(),
            &ScalarValue::Float(42.0)
        );
    }

    #[test]
    fn tokenize_then_by_key_sum_is_word_count() {
        let backend = MemoryBackend::new();
        let registry = TransformRegistry::with_builtins();
        let env = ExecEnv::new(&backend, &registry);
        let doc = Element::text("doc", "the quick the lazy the").unwrap();
        let p = Pipeline::new(
            PipelineInput::Element(doc),
            vec![
                StepSpec::Transform {
                    spec: TransformSpec::new("tokenize-words"),
                },
                StepSpec::Aggregate {
                    spec: AggregateSpec {
                        function: AggregateFn::Sum,
                        field: "count".into(),
                        mode: AggregateMode::ByKey,
                    },
                },
            ],
        );
        let PipeValue::Set(s) = run_pipeline(&env, &p).unwrap() else {
            panic!()
        };
        // independent word-frequency oracle
        let mut oracle = std::collections::BTreeMap::new();
        for w in "the quick the lazy the".split_whitespace() {
            *oracle.entry(w).or_insert(0.0) += 1.0;
        }
        assert_eq!(s.len(), oracle.len());
        for (w, c) in oracle {
            assert_eq!(
                s.get(w).unwrap().value.field("count").unwrap().as_scalar(),
                Some(&ScalarValue::Float(c))
            );
        }
    }

    #[test]
    fn get_missing_short_circuits() {
        let backend = env_backend();
        let registry = TransformRegistry::with_builtins();
        let env = ExecEnv::new(&backend, &registry);
        let p = Pipeline::new(
            PipelineInput::None,
            vec![
                StepSpec::Get {
                    set: "logs".into(),
                    key: "absent".into(),
                },
                StepSpec::Filter {
                    predicate: Predicate::True,
                },
            ],
        );
        assert_eq!(run_pipeline(&env, &p).unwrap(), PipeValue::Missing);
    }

    #[test]
    fn dangling_multiset_is_rejected() {
        let backend = MemoryBackend::new();
        let registry = TransformRegistry::with_builtins();
        let env = ExecEnv::new(&backend, &registry);
        let p = Pipeline::new(
            PipelineInput::Element(Element::text("doc", "a b").unwrap()),
            vec![StepSpec::Transform {
                spec: TransformSpec::new("tokenize-words"),
            }],
        );
        assert!(matches!(
            run_pipeline(&env, &p),
            Err(EngineError::DanglingMultiset)
        ));
    }

    #[test]
    fn step_errors_carry_the_index() {
        let backend = env_backend();
        let registry = TransformRegistry::with_builtins();
        let env = ExecEnv::new(&backend, &registry);
        let p = Pipeline::new(
            PipelineInput::SetRef("logs".into()),
            vec![
                StepSpec::Filter {
                    predicate: Predicate::True,
                },
                StepSpec::Project {
                    fields: vec!["no_such_field".into()],
                },
            ],
        );
        match run_pipeline(&env, &p) {
            Err(EngineError::StepFailed { index: 1, .. }) => {}
            other => panic!("expected step-1 failure, got {other:?}"),
        }
    }

    #[test]
    fn patterns_classify_pipelines() {
        let single = Pipeline::new(
            PipelineInput::None,
            vec![StepSpec::Get {
                set: "s".into(),
                key: "k".into(),
            }],
        );
        assert_eq!(pattern_of(&single), vec![WorkloadPattern::SingleOperation]);

        let multi = Pipeline::new(
            PipelineInput::SetRef("s".into()),
            vec![
                StepSpec::Filter {
                    predicate: Predicate::True,
                },
                StepSpec::OrderBy {
                    field: "x".into(),
                    descending: false,
                },
            ],
        );
        assert_eq!(pattern_of(&multi), vec![WorkloadPattern::MultiOperation]);
    }
}
