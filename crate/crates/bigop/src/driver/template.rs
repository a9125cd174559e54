//! Workload stream specifications: pipeline templates whose parameter slots
//! (random existing key, random threshold, next generated element) are
//! filled per operation from the stream's seeded randomizer.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::GeneratorSpec;
use crate::engine::{AggregateSpec, IterativePlan, Pipeline, PipelineInput, StepSpec};
use crate::model::{CmpOp, Element, Predicate, ScalarValue, TransformSpec};

/// When a stream stops issuing operations. A stream with no termination
/// clause runs continuously and co-terminates when every finitely-terminated
/// sibling has finished.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    DurationSeconds(f64),
    OpCount(u64),
    /// Stop once the named backend set reaches the byte threshold; checked
    /// every 100 operations.
    DataSize { set: String, threshold_bytes: u64 },
}

/// Scalar slot: a literal, or a per-operation uniform draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateScalar {
    Lit(ScalarValue),
    UniformFloat { lo: f64, hi: f64 },
    UniformInt { lo: i64, hi: i64 },
}

impl TemplateScalar {
    fn fill(&self, rng: &mut ChaCha8Rng) -> ScalarValue {
        match self {
            TemplateScalar::Lit(v) => v.clone(),
            TemplateScalar::UniformFloat { lo, hi } => {
                ScalarValue::Float(rng.gen_range(*lo..*hi))
            }
            TemplateScalar::UniformInt { lo, hi } => ScalarValue::Int(rng.gen_range(*lo..*hi)),
        }
    }
}

/// Predicate template: same tree as [`Predicate`] with slot-valued literals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredicateTemplate {
    True,
    False,
    Cmp {
        field: String,
        op: CmpOp,
        value: TemplateScalar,
    },
    All(Vec<PredicateTemplate>),
    Any(Vec<PredicateTemplate>),
    Not(Box<PredicateTemplate>),
}

impl PredicateTemplate {
    fn fill(&self, rng: &mut ChaCha8Rng) -> Predicate {
        match self {
            PredicateTemplate::True => Predicate::True,
            PredicateTemplate::False => Predicate::False,
            PredicateTemplate::Cmp { field, op, value } => Predicate::Cmp {
                field: field.clone(),
                op: *op,
                value: value.fill(rng),
            },
            PredicateTemplate::All(ps) => {
                Predicate::All(ps.iter().map(|p| p.fill(rng)).collect())
            }
            PredicateTemplate::Any(ps) => {
                Predicate::Any(ps.iter().map(|p| p.fill(rng)).collect())
            }
            PredicateTemplate::Not(p) => Predicate::Not(Box::new(p.fill(rng))),
        }
    }
}

/// Where a templated pipeline's input comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputTemplate {
    None,
    SetRef(String),
    /// The next element from the stream's element source.
    NextElement,
}

/// Step template; concrete except for slot-bearing filters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepTemplate {
    Put { set: String },
    Get { set: String, key: KeySlot },
    Delete { set: String, key: KeySlot },
    Transform { spec: TransformSpec },
    Filter { predicate: PredicateTemplate },
    Project { fields: Vec<String> },
    OrderBy { field: String, descending: bool },
    Aggregate { spec: AggregateSpec },
    Union { with_set: String },
    Difference { subtract_set: String },
    CrossProduct { with_set: String },
    Iterate { plan: IterativePlan },
}

/// Key slot: fixed, or drawn uniformly from the stream's live-key pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeySlot {
    Literal(String),
    RandomExisting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineTemplate {
    pub input: InputTemplate,
    pub steps: Vec<StepTemplate>,
}

/// One entry of an operation mix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixEntry {
    pub weight: f64,
    pub op: OpTemplate,
}

/// Single-operation templates for mixed key-value workloads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpTemplate {
    /// Store the next generated element under its own (fresh) key.
    PutFresh { set: String },
    /// Overwrite a uniformly chosen existing key with a freshly generated
    /// value.
    PutExisting { set: String },
    /// Read a uniformly chosen existing key.
    Get { set: String },
    /// Delete a uniformly chosen existing key (and retire it from the pool).
    Delete { set: String },
}

/// What a stream executes per operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkTemplate {
    /// Weighted mix of single-operation templates.
    Mix(Vec<MixEntry>),
    /// A fixed pipeline with parameter slots.
    Pipeline(PipelineTemplate),
}

/// A concurrent client stream: what to run, how fast, with how many client
/// threads, and when to stop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub name: String,
    pub work: WorkTemplate,
    /// Target operations per second; `None` issues in a closed loop.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default = "default_threads")]
    pub client_threads: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<Termination>,
    /// Generator feeding `NextElement` / fresh-put slots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_source: Option<GeneratorSpec>,
    /// Backend set whose keys seed the live-key pool for random-key slots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_pool_from: Option<String>,
}

fn default_threads() -> u32 {
    1
}

impl StreamSpec {
    /// Sets any templated pipeline references. Used for setup validation.
    pub fn referenced_sets(&self) -> Vec<&str> {
        let mut sets = Vec::new();
        match &self.work {
            WorkTemplate::Mix(entries) => {
                for e in entries {
                    match &e.op {
                        OpTemplate::PutFresh { set }
                        | OpTemplate::PutExisting { set }
                        | OpTemplate::Get { set }
                        | OpTemplate::Delete { set } => sets.push(set.as_str()),
                    }
                }
            }
            WorkTemplate::Pipeline(p) => {
                if let InputTemplate::SetRef(s) = &p.input {
                    sets.push(s);
                }
                for step in &p.steps {
                    match step {
                        StepTemplate::Put { set }
                        | StepTemplate::Get { set, .. }
                        | StepTemplate::Delete { set, .. } => sets.push(set),
                        StepTemplate::Union { with_set }
                        | StepTemplate::CrossProduct { with_set } => sets.push(with_set),
                        StepTemplate::Difference { subtract_set } => sets.push(subtract_set),
                        _ => {}
                    }
                }
            }
        }
        if let Some(Termination::DataSize { set, .. }) = &self.termination {
            sets.push(set);
        }
        if let Some(s) = &self.key_pool_from {
            sets.push(s);
        }
        sets
    }
}

/// Live-key pool: uniform random choice plus O(1) insert/remove, kept in
/// sync with the stream's puts and deletes.
pub struct KeyTracker {
    keys: Vec<String>,
    index: std::collections::HashMap<String, usize>,
}

impl KeyTracker {
    pub fn new(keys: impl IntoIterator<Item = String>) -> Self {
        let keys: Vec<String> = keys.into_iter().collect();
        let index = keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), i))
            .collect();
        KeyTracker { keys, index }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn insert(&mut self, key: String) {
        if !self.index.contains_key(&key) {
            self.index.insert(key.clone(), self.keys.len());
            self.keys.push(key);
        }
    }

    pub fn remove(&mut self, key: &str) {
        if let Some(pos) = self.index.remove(key) {
            self.keys.swap_remove(pos);
            if pos < self.keys.len() {
                self.index.insert(self.keys[pos].clone(), pos);
            }
        }
    }

    pub fn random(&self, rng: &mut ChaCha8Rng) -> Option<String> {
        if self.keys.is_empty() {
            None
        } else {
            Some(self.keys[rng.gen_range(0..self.keys.len())].clone())
        }
    }
}

/// Per-operation state the instantiation may consume.
pub struct SlotContext<'a> {
    pub rng: &'a mut ChaCha8Rng,
    pub tracker: &'a mut KeyTracker,
    pub next_element: &'a mut dyn FnMut() -> Option<Element>,
}

#[derive(Debug, thiserror::Error)]
pub enum InstantiateError {
    #[error("stream has no element source but the template needs generated elements")]
    NoElementSource,
    #[error("element source exhausted")]
    SourceExhausted,
    #[error("key pool is empty; cannot fill a random-key slot")]
    EmptyKeyPool,
}

/// Fills one operation's slots, producing a runnable pipeline. Tracker
/// bookkeeping (fresh keys in, deleted keys out) happens here so later
/// operations only ever address live keys.
pub fn instantiate(
    work: &WorkTemplate,
    ctx: &mut SlotContext<'_>,
) -> Result<Pipeline, InstantiateError> {
    match work {
        WorkTemplate::Mix(entries) => {
            let total: f64 = entries.iter().map(|e| e.weight).sum();
            let mut roll = ctx.rng.gen_range(0.0..total);
            let mut chosen = &entries[entries.len() - 1].op;
            for e in entries {
                if roll < e.weight {
                    chosen = &e.op;
                    break;
                }
                roll -= e.weight;
            }
            instantiate_mix_op(chosen, ctx)
        }
        WorkTemplate::Pipeline(template) => {
            let input = match &template.input {
                InputTemplate::None => PipelineInput::None,
                InputTemplate::SetRef(s) => PipelineInput::SetRef(s.clone()),
                InputTemplate::NextElement => {
                    let e = (ctx.next_element)().ok_or(InstantiateError::SourceExhausted)?;
                    ctx.tracker.insert(e.key.clone());
                    PipelineInput::Element(e)
                }
            };
            let steps = template
                .steps
                .iter()
                .map(|s| fill_step(s, ctx))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Pipeline::new(input, steps))
        }
    }
}

fn instantiate_mix_op(
    op: &OpTemplate,
    ctx: &mut SlotContext<'_>,
) -> Result<Pipeline, InstantiateError> {
    match op {
        OpTemplate::PutFresh { set } => {
            let e = (ctx.next_element)().ok_or(InstantiateError::SourceExhausted)?;
            ctx.tracker.insert(e.key.clone());
            Ok(Pipeline::new(
                PipelineInput::Element(e),
                vec![StepSpec::Put { set: set.clone() }],
            ))
        }
        OpTemplate::PutExisting { set } => {
            let mut e = (ctx.next_element)().ok_or(InstantiateError::SourceExhausted)?;
            match ctx.tracker.random(ctx.rng) {
                Some(key) => e.key = key,
                None => ctx.tracker.insert(e.key.clone()), // empty pool: insert fresh
            }
            Ok(Pipeline::new(
                PipelineInput::Element(e),
                vec![StepSpec::Put { set: set.clone() }],
            ))
        }
        OpTemplate::Get { set } => {
            let key = ctx
                .tracker
                .random(ctx.rng)
                .ok_or(InstantiateError::EmptyKeyPool)?;
            Ok(Pipeline::new(
                PipelineInput::None,
                vec![StepSpec::Get {
                    set: set.clone(),
                    key,
                }],
            ))
        }
        OpTemplate::Delete { set } => {
            let key = ctx
                .tracker
                .random(ctx.rng)
                .ok_or(InstantiateError::EmptyKeyPool)?;
            ctx.tracker.remove(&key);
            Ok(Pipeline::new(
                PipelineInput::None,
                vec![StepSpec::Delete {
                    set: set.clone(),
                    key,
                }],
            ))
        }
    }
}

fn fill_step(step: &StepTemplate, ctx: &mut SlotContext<'_>) -> Result<StepSpec, InstantiateError> {
    Ok(match step {
        StepTemplate::Put { set } => StepSpec::Put { set: set.clone() },
        StepTemplate::Get { set, key } => StepSpec::Get {
            set: set.clone(),
            key: fill_key(key, ctx)?,
        },
        StepTemplate::Delete { set, key } => StepSpec::Delete {
            set: set.clone(),
            key: fill_key(key, ctx)?,
        },
        StepTemplate::Transform { spec } => StepSpec::Transform { spec: spec.clone() },
        StepTemplate::Filter { predicate } => StepSpec::Filter {
            predicate: predicate.fill(ctx.rng),
        },
        StepTemplate::Project { fields } => StepSpec::Project {
            fields: fields.clone(),
        },
        StepTemplate::OrderBy { field, descending } => StepSpec::OrderBy {
            field: field.clone(),
            descending: *descending,
        },
        StepTemplate::Aggregate { spec } => StepSpec::Aggregate { spec: spec.clone() },
        StepTemplate::Union { with_set } => StepSpec::Union {
            with_set: with_set.clone(),
        },
        StepTemplate::Difference { subtract_set } => StepSpec::Difference {
            subtract_set: subtract_set.clone(),
        },
        StepTemplate::CrossProduct { with_set } => StepSpec::CrossProduct {
            with_set: with_set.clone(),
        },
        StepTemplate::Iterate { plan } => StepSpec::Iterate {
            plan: Box::new(plan.clone()),
        },
    })
}

fn fill_key(slot: &KeySlot, ctx: &mut SlotContext<'_>) -> Result<String, InstantiateError> {
    match slot {
        KeySlot::Literal(k) => Ok(k.clone()),
        KeySlot::RandomExisting => ctx
            .tracker
            .random(ctx.rng)
            .ok_or(InstantiateError::EmptyKeyPool),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn ctx_parts() -> (ChaCha8Rng, KeyTracker) {
        (
            ChaCha8Rng::seed_from_u64(1),
            KeyTracker::new(["a".to_string(), "b".to_string(), "c".to_string()]),
        )
    }

    #[test]
    fn tracker_insert_remove_random() {
        let (mut rng, mut t) = ctx_parts();
        assert_eq!(t.len(), 3);
        t.insert("d".into());
        t.insert("d".into()); // duplicate: no-op
        assert_eq!(t.len(), 4);
        t.remove("b");
        t.remove("b");
        assert_eq!(t.len(), 3);
        for _ in 0..50 {
            let k = t.random(&mut rng).unwrap();
            assert_ne!(k, "b");
        }
    }

    #[test]
    fn mix_respects_weights_roughly() {
        let (mut rng, mut tracker) = ctx_parts();
        let mut idx = 0u64;
        let mut source = move || {
            idx += 1;
            Some(Element::text(format!("fresh{idx}"), "v").unwrap())
        };
        let work = WorkTemplate::Mix(vec![
            MixEntry {
                weight: 0.5,
                op: OpTemplate::PutFresh { set: "s".into() },
            },
            MixEntry {
                weight: 0.5,
                op: OpTemplate::Get { set: "s".into() },
            },
        ]);
        let mut puts = 0;
        for _ in 0..1000 {
            let mut ctx = SlotContext {
                rng: &mut rng,
                tracker: &mut tracker,
                next_element: &mut source,
            };
            let p = instantiate(&work, &mut ctx).unwrap();
            if matches!(p.steps[0], StepSpec::Put { .. }) {
                puts += 1;
            }
        }
        assert!((400..600).contains(&puts), "puts={puts}");
    }

    #[test]
    fn delete_retires_keys_from_the_pool() {
        let (mut rng, mut tracker) = ctx_parts();
        let mut source = || None;
        let work = WorkTemplate::Mix(vec![MixEntry {
            weight: 1.0,
            op: OpTemplate::Delete { set: "s".into() },
        }]);
        for _ in 0..3 {
            let mut ctx = SlotContext {
                rng: &mut rng,
                tracker: &mut tracker,
                next_element: &mut source,
            };
            instantiate(&work, &mut ctx).unwrap();
        }
        assert!(tracker.is_empty());
        let mut ctx = SlotContext {
            rng: &mut rng,
            tracker: &mut tracker,
            next_element: &mut source,
        };
        assert!(matches!(
            instantiate(&work, &mut ctx),
            Err(InstantiateError::EmptyKeyPool)
        ));
    }

    #[test]
    fn predicate_slots_fill_within_bounds() {
        let (mut rng, _) = ctx_parts();
        let t = PredicateTemplate::Cmp {
            field: "latency_ms".into(),
            op: CmpOp::Gt,
            value: TemplateScalar::UniformFloat { lo: 0.0, hi: 10.0 },
        };
        for _ in 0..100 {
            let Predicate::Cmp { value, .. } = t.fill(&mut rng) else {
                panic!()
            };
            let ScalarValue::Float(f) = value else { panic!() };
            assert!((0.0..10.0).contains(&f));
        }
    }
}
