//! Prescription validation: every invariant violation yields one diagnostic
//! with a stable code and the JSON path of the offender, in deterministic
//! order.

use std::collections::BTreeSet;
use std::fmt;

use crate::driver::{InputTemplate, StepTemplate, Termination, WorkTemplate};
use crate::engine::{
    OperationKind, StepSpec, TransformKind, TransformRegistry, WorkloadPattern,
};
use crate::model::TransformSpec;

use super::Prescription;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// Stable machine-readable code, e.g. `undeclared_operation`.
    pub code: &'static str,
    /// JSON path of the violating field.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.code, self.path, self.message)
    }
}

fn diag(out: &mut Vec<Diagnostic>, code: &'static str, path: String, message: String) {
    out.push(Diagnostic {
        code,
        path,
        message,
    });
}

/// Checks every prescription invariant. An empty list means valid.
pub fn validate_prescription(
    p: &Prescription,
    registry: &TransformRegistry,
) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    if p.name.is_empty() {
        diag(&mut out, "empty_name", "name".into(), "prescription name must be nonempty".into());
    }
    check_duplicates(&mut out, "operations", &p.operations);
    check_duplicates(&mut out, "patterns", &p.patterns);
    check_duplicates(&mut out, "metrics", &p.metrics);
    if p.metrics.is_empty() {
        diag(&mut out, "no_metrics", "metrics".into(), "at least one metric is required".into());
    }

    // dataset
    if p.dataset.set.is_empty() {
        diag(&mut out, "empty_set_name", "dataset.set".into(), "set name must be nonempty".into());
    }
    if p.dataset.target_size_bytes == 0 {
        diag(
            &mut out,
            "bad_dataset_target",
            "dataset.target_size_bytes".into(),
            "target size must be positive".into(),
        );
    }
    match (&p.dataset.generator, &p.dataset.import_path) {
        (Some(g), None) => {
            if let Err(e) = g.validate() {
                diag(&mut out, "bad_generator", "dataset.generator".into(), e.to_string());
            }
        }
        (None, Some(path)) => {
            if path.is_empty() {
                diag(
                    &mut out,
                    "bad_import_path",
                    "dataset.import_path".into(),
                    "import path must be nonempty".into(),
                );
            }
        }
        (Some(_), Some(_)) => diag(
            &mut out,
            "ambiguous_dataset_source",
            "dataset".into(),
            "give either a generator or an import_path, not both".into(),
        ),
        (None, None) => diag(
            &mut out,
            "missing_dataset_source",
            "dataset".into(),
            "a generator or an import_path is required".into(),
        ),
    }

    // streams
    if p.streams.is_empty() {
        diag(&mut out, "no_streams", "streams".into(), "at least one stream is required".into());
    }
    if !p.streams.is_empty() && p.streams.iter().all(|s| s.termination.is_none()) {
        diag(
            &mut out,
            "all_continuous",
            "streams".into(),
            "every stream is continuous; at least one needs a termination clause".into(),
        );
    }
    let declared_ops: BTreeSet<OperationKind> = p.operations.iter().copied().collect();
    let declared_patterns: BTreeSet<WorkloadPattern> = p.patterns.iter().copied().collect();
    let known_sets: BTreeSet<&str> = std::iter::once(p.dataset.set.as_str()).collect();

    for (i, stream) in p.streams.iter().enumerate() {
        let path = format!("streams.{i}");
        if stream.name.is_empty() {
            diag(&mut out, "empty_stream_name", format!("{path}.name"), "stream name must be nonempty".into());
        }
        if stream.client_threads == 0 {
            diag(
                &mut out,
                "bad_threads",
                format!("{path}.client_threads"),
                "client_threads must be positive".into(),
            );
        }
        if let Some(rate) = stream.rate {
            if !(rate > 0.0 && rate.is_finite()) {
                diag(&mut out, "bad_rate", format!("{path}.rate"), "rate must be a positive number".into());
            }
        }
        if let Some(Termination::DataSize { threshold_bytes, .. }) = &stream.termination {
            if *threshold_bytes == 0 {
                diag(
                    &mut out,
                    "bad_threshold",
                    format!("{path}.termination"),
                    "data_size threshold must be positive".into(),
                );
            }
        }
        for set in stream.referenced_sets() {
            if !known_sets.contains(set) {
                diag(
                    &mut out,
                    "unknown_set",
                    path.clone(),
                    format!("references set {set:?}, which the prescription does not create"),
                );
            }
        }
        if stream_generates_elements(&stream.work) && stream.element_source.is_none() {
            diag(
                &mut out,
                "missing_element_source",
                format!("{path}.element_source"),
                "the work template generates elements but no element_source is given".into(),
            );
        }
        if let Some(src) = &stream.element_source {
            if let Err(e) = src.validate() {
                diag(&mut out, "bad_element_source", format!("{path}.element_source"), e.to_string());
            }
        }

        // operation subset
        for op in used_operations(&stream.work, registry) {
            if !declared_ops.contains(&op) {
                diag(
                    &mut out,
                    "undeclared_operation",
                    format!("{path}.work"),
                    format!("uses {}, which is not in the declared operations", op_name(op)),
                );
            }
        }
        // pattern subset
        for pattern in used_patterns(&stream.work) {
            if !declared_patterns.contains(&pattern) {
                diag(
                    &mut out,
                    "undeclared_pattern",
                    format!("{path}.work"),
                    format!(
                        "exercises the {} pattern, which is not declared",
                        pattern_name(pattern)
                    ),
                );
            }
        }
        // transforms resolve and their params satisfy the schema
        for spec in transform_specs(&stream.work) {
            if !registry.contains(&spec.name) {
                diag(
                    &mut out,
                    "unknown_transform",
                    format!("{path}.work"),
                    format!("transform {:?} is not registered", spec.name),
                );
            } else if let Err(e) = registry.resolve_params(spec) {
                diag(&mut out, "bad_transform_params", format!("{path}.work"), e.to_string());
            }
        }
    }
    out
}

fn check_duplicates<T: Ord + Copy + fmt::Debug>(
    out: &mut Vec<Diagnostic>,
    field: &'static str,
    values: &[T],
) {
    let mut seen = BTreeSet::new();
    for v in values {
        if !seen.insert(*v) {
            diag(
                out,
                "duplicate_entry",
                field.to_string(),
                format!("{v:?} appears more than once"),
            );
        }
    }
}

fn stream_generates_elements(work: &WorkTemplate) -> bool {
    match work {
        WorkTemplate::Mix(entries) => entries.iter().any(|e| {
            matches!(
                e.op,
                crate::driver::OpTemplate::PutFresh { .. }
                    | crate::driver::OpTemplate::PutExisting { .. }
            )
        }),
        WorkTemplate::Pipeline(p) => matches!(p.input, InputTemplate::NextElement),
    }
}

/// Operations a work template invokes, honoring the declared-subset rule's
/// one exemption: a by-key aggregation that merely reduces a fan-out
/// transform's multiset is bookkeeping of the fan-out device, not a use of
/// the aggregation operation.
fn used_operations(work: &WorkTemplate, registry: &TransformRegistry) -> Vec<OperationKind> {
    let mut ops = Vec::new();
    match work {
        WorkTemplate::Mix(entries) => {
            for e in entries {
                ops.push(match e.op {
                    crate::driver::OpTemplate::PutFresh { .. }
                    | crate::driver::OpTemplate::PutExisting { .. } => OperationKind::Put,
                    crate::driver::OpTemplate::Get { .. } => OperationKind::Get,
                    crate::driver::OpTemplate::Delete { .. } => OperationKind::Delete,
                });
            }
        }
        WorkTemplate::Pipeline(p) => {
            let mut prev_fan_out = false;
            for step in &p.steps {
                collect_template_ops(step, registry, &mut prev_fan_out, &mut ops);
            }
        }
    }
    ops
}

fn collect_template_ops(
    step: &StepTemplate,
    registry: &TransformRegistry,
    prev_fan_out: &mut bool,
    ops: &mut Vec<OperationKind>,
) {
    let this_fans_out = |spec: &TransformSpec| {
        registry
            .lookup(&spec.name)
            .map(|e| e.kind() == TransformKind::ElementFanOut)
            .unwrap_or(false)
    };
    match step {
        StepTemplate::Put { .. } => ops.push(OperationKind::Put),
        StepTemplate::Get { .. } => ops.push(OperationKind::Get),
        StepTemplate::Delete { .. } => ops.push(OperationKind::Delete),
        StepTemplate::Transform { spec } => {
            ops.push(OperationKind::Transform);
            *prev_fan_out = this_fans_out(spec);
            return;
        }
        StepTemplate::Filter { .. } => ops.push(OperationKind::Filter),
        StepTemplate::Project { .. } => ops.push(OperationKind::Project),
        StepTemplate::OrderBy { .. } => ops.push(OperationKind::OrderBy),
        StepTemplate::Aggregate { spec } => {
            let reduces_fan_out =
                *prev_fan_out && spec.mode == crate::engine::AggregateMode::ByKey;
            if !reduces_fan_out {
                ops.push(OperationKind::Aggregate);
            }
        }
        StepTemplate::Union { .. } => ops.push(OperationKind::Union),
        StepTemplate::Difference { .. } => ops.push(OperationKind::Difference),
        StepTemplate::CrossProduct { .. } => ops.push(OperationKind::CrossProduct),
        StepTemplate::Iterate { plan } => {
            let mut inner_prev = false;
            for inner in &plan.body.steps {
                collect_engine_ops(inner, registry, &mut inner_prev, ops);
            }
        }
    }
    *prev_fan_out = false;
}

fn collect_engine_ops(
    step: &StepSpec,
    registry: &TransformRegistry,
    prev_fan_out: &mut bool,
    ops: &mut Vec<OperationKind>,
) {
    match step {
        StepSpec::Transform { spec } => {
            ops.push(OperationKind::Transform);
            *prev_fan_out = registry
                .lookup(&spec.name)
                .map(|e| e.kind() == TransformKind::ElementFanOut)
                .unwrap_or(false);
            return;
        }
        StepSpec::Aggregate { spec } => {
            let reduces_fan_out =
                *prev_fan_out && spec.mode == crate::engine::AggregateMode::ByKey;
            if !reduces_fan_out {
                ops.push(OperationKind::Aggregate);
            }
        }
        StepSpec::Iterate { plan } => {
            let mut inner_prev = false;
            for inner in &plan.body.steps {
                collect_engine_ops(inner, registry, &mut inner_prev, ops);
            }
        }
        other => {
            if let Some(op) = other.operation() {
                ops.push(op);
            }
        }
    }
    *prev_fan_out = false;
}

fn used_patterns(work: &WorkTemplate) -> Vec<WorkloadPattern> {
    match work {
        WorkTemplate::Mix(_) => vec![WorkloadPattern::SingleOperation],
        WorkTemplate::Pipeline(p) => {
            let mut patterns = Vec::new();
            let has_iterate = p
                .steps
                .iter()
                .any(|s| matches!(s, StepTemplate::Iterate { .. }));
            if has_iterate {
                patterns.push(WorkloadPattern::Iterative);
            }
            if p.steps.len() > 1 {
                patterns.push(WorkloadPattern::MultiOperation);
            } else if p.steps.len() == 1 && !has_iterate {
                patterns.push(WorkloadPattern::SingleOperation);
            }
            patterns
        }
    }
}

fn transform_specs(work: &WorkTemplate) -> Vec<&TransformSpec> {
    let mut specs = Vec::new();
    if let WorkTemplate::Pipeline(p) = work {
        for step in &p.steps {
            match step {
                StepTemplate::Transform { spec } => specs.push(spec),
                StepTemplate::Iterate { plan } => {
                    for inner in &plan.body.steps {
                        if let StepSpec::Transform { spec } = inner {
                            specs.push(spec);
                        }
                    }
                }
                _ => {}
            }
        }
    }
    specs
}

fn op_name(op: OperationKind) -> &'static str {
    match op {
        OperationKind::Put => "put",
        OperationKind::Get => "get",
        OperationKind::Delete => "delete",
        OperationKind::Transform => "transform",
        OperationKind::Filter => "filter",
        OperationKind::Project => "project",
        OperationKind::OrderBy => "order_by",
        OperationKind::Aggregate => "aggregate",
        OperationKind::Union => "union",
        OperationKind::Difference => "difference",
        OperationKind::CrossProduct => "cross_product",
    }
}

fn pattern_name(p: WorkloadPattern) -> &'static str {
    match p {
        WorkloadPattern::SingleOperation => "single_operation",
        WorkloadPattern::MultiOperation => "multi_operation",
        WorkloadPattern::Iterative => "iterative",
    }
}
