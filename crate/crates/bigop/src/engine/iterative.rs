//! Iterative plans: a pipeline body repeated until a stopping condition
//! holds, with a hard iteration guard against runaway loops. The number of
//! operations actually executed is only known at run time.

use serde::{Deserialize, Serialize};

use crate::model::{DataSet, FieldValue, ScalarValue};

use super::pipeline::{run_pipeline_on, ExecEnv, PipeValue, Pipeline};
use super::EngineError;

pub const DEFAULT_ITERATION_GUARD: u64 = 10_000;

/// When to stop iterating. Checked after every iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingCondition {
    /// Run exactly `k` iterations.
    FixedIterations(u64),
    /// Stop when the L1 distance of the named numeric field between
    /// consecutive iteration results (summed over matching keys) drops
    /// below `epsilon`.
    L1Delta { field: String, epsilon: f64 },
}

/// A pipeline body iterated to a stopping condition. The body consumes a
/// data set and must produce one, so iterations chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterativePlan {
    pub body: Pipeline,
    pub stop: StoppingCondition,
    #[serde(default = "default_guard")]
    pub max_iterations: u64,
}

fn default_guard() -> u64 {
    DEFAULT_ITERATION_GUARD
}

/// Result of [`run_iterative`]: the final set, how many iterations ran, and
/// the last observed L1 delta (when the stop is delta-based).
#[derive(Debug, Clone, PartialEq)]
pub struct IterationOutcome {
    pub result: DataSet,
    pub iterations: u64,
    pub final_delta: Option<f64>,
}

/// Applies the plan body repeatedly, each iteration consuming the previous
/// result, until the stopping condition holds. Trips
/// [`EngineError::GuardTripped`] (carrying the partial result) if the guard
/// is reached first.
pub fn run_iterative(
    env: &ExecEnv<'_>,
    plan: &IterativePlan,
    input: DataSet,
) -> Result<IterationOutcome, EngineError> {
    run_iterative_inner(env, plan, input)
}

pub(super) fn run_iterative_inner(
    env: &ExecEnv<'_>,
    plan: &IterativePlan,
    input: DataSet,
) -> Result<IterationOutcome, EngineError> {
    if plan.max_iterations == 0 {
        return Err(EngineError::GuardTripped {
            iterations: 0,
            partial: input,
        });
    }
    let mut current = input;
    let mut final_delta = None;
    for iteration in 1..=plan.max_iterations {
        let produced = run_pipeline_on(env, &plan.body, PipeValue::Set(current.clone()))
            .map_err(|e| EngineError::IterationFailed {
                iteration,
                source: Box::new(e),
            })?;
        let next = match produced {
            PipeValue::Set(s) => s,
            other => {
                return Err(EngineError::IterationFailed {
                    iteration,
                    source: Box::new(EngineError::StepInputMismatch {
                        index: 0,
                        kind: "iterate body result".into(),
                        got: other.kind_name().into(),
                    }),
                })
            }
        };
        let stop = match &plan.stop {
            StoppingCondition::FixedIterations(k) => iteration >= *k,
            StoppingCondition::L1Delta { field, epsilon } => {
                let delta = l1_delta(&current, &next, field)?;
                final_delta = Some(delta);
                delta < *epsilon
            }
        };
        current = next;
        if stop {
            return Ok(IterationOutcome {
                result: current,
                iterations: iteration,
                final_delta,
            });
        }
    }
    Err(EngineError::GuardTripped {
        iterations: plan.max_iterations,
        partial: current,
    })
}

/// Sum of |field(a,k) - field(b,k)| over keys present in both sets. The
/// field must exist with a numeric tag on every element of both sets.
fn l1_delta(a: &DataSet, b: &DataSet, field: &str) -> Result<f64, EngineError> {
    let numeric = |ds: &DataSet, key: &str| -> Result<Option<f64>, EngineError> {
        match ds.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .field(field)
                .and_then(FieldValue::as_scalar)
                .and_then(ScalarValue::as_f64)
                .map(Some)
                .ok_or_else(|| EngineError::StopFieldInvalid {
                    field: field.to_string(),
                    key: key.to_string(),
                }),
        }
    };
    // validate the field everywhere, then sum over the key intersection
    for e in a.iter() {
        numeric(a, &e.key)?;
    }
    let mut delta = 0.0;
    for e in b.iter() {
        let vb = numeric(b, &e.key)?.expect("iterating b");
        if let Some(va) = numeric(a, &e.key)? {
            delta += (va - vb).abs();
        }
    }
    Ok(delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::MemoryBackend;
    use crate::engine::pipeline::{PipelineInput, StepSpec};
    use crate::engine::transforms::TransformRegistry;
    use crate::model::{field, Element, TransformSpec};

    fn identity_body() -> Pipeline {
        Pipeline::new(
            PipelineInput::None,
            vec![StepSpec::Transform {
                spec: TransformSpec::new("identity"),
            }],
        )
    }

    fn int_set(pairs: &[(&str, i64)]) -> DataSet {
        DataSet::from_elements(
            "s",
            pairs.iter().map(|(k, v)| {
                Element::record(*k, vec![field("x", ScalarValue::Int(*v))]).unwrap()
            }),
        )
        .unwrap()
    }

    #[test]
    fn one_fixed_iteration_equals_single_body_run() {
        let backend = MemoryBackend::new();
        let registry = TransformRegistry::with_builtins();
        let env = ExecEnv::new(&backend, &registry);
        let input = int_set(&[("a", 1), ("b", 2)]);
        let plan = IterativePlan {
            body: identity_body(),
            stop: StoppingCondition::FixedIterations(1),
            max_iterations: 10,
        };
        let outcome = run_iterative(&env, &plan, input.clone()).unwrap();
        assert_eq!(outcome.iterations, 1);
        assert_eq!(outcome.result, input);
    }

    #[test]
    fn identity_body_is_a_fixpoint_for_k_iterations() {
        let backend = MemoryBackend::new();
        let registry = TransformRegistry::with_builtins();
        let env = ExecEnv::new(&backend, &registry);
        let input = int_set(&[("a", 5)]);
        let plan = IterativePlan {
            body: identity_body(),
            stop: StoppingCondition::FixedIterations(7),
            max_iterations: 100,
        };
        let outcome = run_iterative(&env, &plan, input.clone()).unwrap();
        assert_eq!(outcome.iterations, 7);
        assert_eq!(outcome.result, input);
    }

    #[test]
    fn guard_trips_with_partial_result() {
        let backend = MemoryBackend::new();
        let registry = TransformRegistry::with_builtins();
        let env = ExecEnv::new(&backend, &registry);
        let input = int_set(&[("a", 1)]);
        let plan = IterativePlan {
            body: identity_body(),
            stop: StoppingCondition::FixedIterations(50),
            max_iterations: 3,
        };
        match run_iterative(&env, &plan, input.clone()) {
            Err(EngineError::GuardTripped {
                iterations: 3,
                partial,
            }) => assert_eq!(partial, input),
            other => panic!("expected guard trip, got {other:?}"),
        }
    }

    #[test]
    fn l1_delta_stop_on_identity_converges_immediately() {
        let backend = MemoryBackend::new();
        let registry = TransformRegistry::with_builtins();
        let env = ExecEnv::new(&backend, &registry);
        let input = DataSet::from_elements(
            "s",
            vec![Element::record("a", vec![field("rank", ScalarValue::Float(0.5))]).unwrap()],
        )
        .unwrap();
        let plan = IterativePlan {
            body: identity_body(),
            stop: StoppingCondition::L1Delta {
                field: "rank".into(),
                epsilon: 1e-9,
            },
            max_iterations: 10,
        };
        let outcome = run_iterative(&env, &plan, input).unwrap();
        assert_eq!(outcome.iterations, 1);
        assert_eq!(outcome.final_delta, Some(0.0));
    }

    #[test]
    fn l1_delta_requires_numeric_field_everywhere() {
        let backend = MemoryBackend::new();
        let registry = TransformRegistry::with_builtins();
        let env = ExecEnv::new(&backend, &registry);
        let input = int_set(&[("a", 1)]); // field "rank" absent
        let plan = IterativePlan {
            body: identity_body(),
            stop: StoppingCondition::L1Delta {
                field: "rank".into(),
                epsilon: 1e-9,
            },
            max_iterations: 10,
        };
        assert!(run_iterative(&env, &plan, input).is_err());
    }
}
