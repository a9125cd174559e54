//! The transform registry: named, parameterized element computations.
//!
//! Prescriptions cannot carry arbitrary code, so every transform is named
//! and registered. Three shapes exist:
//!
//! - element map: one element in, one element out;
//! - element fan-out: one element in, several out (a [`Multiset`], since
//!   emitted keys may repeat across inputs);
//! - set map: a whole set in, a set out, with read access to backend sets
//!   (needed when per-element state must be rejoined with topology held in
//!   the store, as in the rank-apply step).
//!
//! In-process code extends the registry via [`TransformRegistry::register`].

use std::collections::HashMap;
use std::sync::Arc;

use crate::backend::StorageBackend;
use crate::model::{
    field, DataSet, Element, FieldValue, Multiset, ScalarTag, ScalarValue, TransformSpec, Value,
};

use super::EngineError;

/// Default damping factor for the rank transforms.
pub const DEFAULT_DAMPING: f64 = 0.85;

/// Shape of a registered transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    ElementMap,
    ElementFanOut,
    SetMap,
}

/// Value kind a transform accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    Record,
    Text,
    IdList,
    Any,
}

impl InputKind {
    fn accepts(self, v: &Value) -> bool {
        match self {
            InputKind::Record => matches!(v, Value::Record(_)),
            InputKind::Text => matches!(v, Value::Text(_)),
            InputKind::IdList => matches!(v, Value::IdList(_)),
            InputKind::Any => true,
        }
    }

    fn name(self) -> &'static str {
        match self {
            InputKind::Record => "record",
            InputKind::Text => "text",
            InputKind::IdList => "idlist",
            InputKind::Any => "any",
        }
    }
}

/// One declared parameter: name, scalar tag, optional default. Parameters
/// without a default are required.
#[derive(Debug, Clone)]
pub struct ParamDecl {
    pub name: &'static str,
    pub tag: ScalarTag,
    pub default: Option<ScalarValue>,
}

/// Parameters after schema validation, defaults applied.
pub struct ResolvedParams(HashMap<String, ScalarValue>);

impl ResolvedParams {
    fn get(&self, name: &str) -> &ScalarValue {
        self.0.get(name).expect("validated against schema")
    }

    fn f64(&self, name: &str) -> f64 {
        self.get(name).as_f64().expect("schema-checked numeric")
    }

    fn str(&self, name: &str) -> &str {
        match self.get(name) {
            ScalarValue::Str(s) => s,
            _ => unreachable!("schema-checked string"),
        }
    }
}

type MapFn = Arc<dyn Fn(&Element, &ResolvedParams) -> Result<Element, EngineError> + Send + Sync>;
type FanOutFn =
    Arc<dyn Fn(&Element, &ResolvedParams) -> Result<Vec<Element>, EngineError> + Send + Sync>;
type SetMapFn = Arc<
    dyn Fn(&DataSet, &ResolvedParams, &TransformContext<'_>) -> Result<DataSet, EngineError>
        + Send
        + Sync,
>;

enum Behavior {
    Map(MapFn),
    FanOut(FanOutFn),
    SetMap(SetMapFn),
}

pub struct TransformEntry {
    pub input: InputKind,
    pub params: Vec<ParamDecl>,
    behavior: Behavior,
}

impl TransformEntry {
    pub fn kind(&self) -> TransformKind {
        match self.behavior {
            Behavior::Map(_) => TransformKind::ElementMap,
            Behavior::FanOut(_) => TransformKind::ElementFanOut,
            Behavior::SetMap(_) => TransformKind::SetMap,
        }
    }
}

/// Execution context a transform may need; set maps read backend sets.
#[derive(Clone, Copy)]
pub struct TransformContext<'a> {
    pub backend: Option<&'a dyn StorageBackend>,
}

impl<'a> TransformContext<'a> {
    pub fn none() -> Self {
        TransformContext { backend: None }
    }

    pub fn with_backend(backend: &'a dyn StorageBackend) -> Self {
        TransformContext {
            backend: Some(backend),
        }
    }
}

/// Input to [`transform`].
pub enum TransformInput<'a> {
    Element(&'a Element),
    Set(&'a DataSet),
}

/// Output of [`transform`]; the variant is fixed by the transform's kind and
/// input (fan-out always yields a multiset, set maps a set).
#[derive(Debug, Clone, PartialEq)]
pub enum TransformOutput {
    Element(Element),
    Set(DataSet),
    Multi(Multiset),
}

pub struct TransformRegistry {
    entries: HashMap<String, TransformEntry>,
}

impl TransformRegistry {
    /// Empty registry; see [`TransformRegistry::with_builtins`] for the
    /// stock one.
    pub fn new() -> Self {
        TransformRegistry {
            entries: HashMap::new(),
        }
    }

    /// Registry preloaded with the built-in transforms: `identity`,
    /// `tokenize-words`, `pagerank-contribute` and `pagerank-apply`.
    pub fn with_builtins() -> Self {
        let mut r = TransformRegistry::new();
        r.register(
            "identity",
            TransformEntry {
                input: InputKind::Any,
                params: vec![],
                behavior: Behavior::Map(Arc::new(|e, _| Ok(e.clone()))),
            },
        );
        r.register(
            "tokenize-words",
            TransformEntry {
                input: InputKind::Text,
                params: vec![],
                behavior: Behavior::FanOut(Arc::new(tokenize_words)),
            },
        );
        r.register(
            "pagerank-contribute",
            TransformEntry {
                input: InputKind::Record,
                params: vec![],
                behavior: Behavior::FanOut(Arc::new(pagerank_contribute)),
            },
        );
        r.register(
            "pagerank-apply",
            TransformEntry {
                input: InputKind::Record,
                params: vec![
                    ParamDecl {
                        name: "damping",
                        tag: ScalarTag::Float,
                        default: Some(ScalarValue::Float(DEFAULT_DAMPING)),
                    },
                    ParamDecl {
                        name: "graph_set",
                        tag: ScalarTag::Str,
                        default: None,
                    },
                ],
                behavior: Behavior::SetMap(Arc::new(pagerank_apply)),
            },
        );
        r
    }

    /// In-process extension point for programmatic registration.
    pub fn register(&mut self, name: &str, entry: TransformEntry) {
        self.entries.insert(name.to_string(), entry);
    }

    pub fn lookup(&self, name: &str) -> Option<&TransformEntry> {
        self.entries.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    /// Validates `spec.params` against the entry's schema and applies
    /// defaults.
    pub fn resolve_params(
        &self,
        spec: &TransformSpec,
    ) -> Result<(&TransformEntry, ResolvedParams), EngineError> {
        let entry = self
            .lookup(&spec.name)
            .ok_or_else(|| EngineError::UnknownTransform(spec.name.clone()))?;
        let mut resolved = HashMap::new();
        for (pname, pvalue) in &spec.params {
            let decl = entry
                .params
                .iter()
                .find(|d| d.name == pname)
                .ok_or_else(|| EngineError::ParamSchemaViolation {
                    name: spec.name.clone(),
                    param: pname.clone(),
                    problem: "is not declared".into(),
                })?;
            if pvalue.tag() != decl.tag {
                return Err(EngineError::ParamSchemaViolation {
                    name: spec.name.clone(),
                    param: pname.clone(),
                    problem: format!("expects {}, got {}", decl.tag, pvalue.tag()),
                });
            }
            resolved.insert(pname.clone(), pvalue.clone());
        }
        for decl in &entry.params {
            if !resolved.contains_key(decl.name) {
                match &decl.default {
                    Some(d) => {
                        resolved.insert(decl.name.to_string(), d.clone());
                    }
                    None => {
                        return Err(EngineError::ParamSchemaViolation {
                            name: spec.name.clone(),
                            param: decl.name.to_string(),
                            problem: "is required".into(),
                        })
                    }
                }
            }
        }
        Ok((entry, ResolvedParams(resolved)))
    }
}

impl Default for TransformRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

/// Applies a named transform. Element maps over a set yield a set; fan-outs
/// yield a multiset (keys may repeat); set maps require a backend context.
pub fn transform(
    input: TransformInput<'_>,
    spec: &TransformSpec,
    registry: &TransformRegistry,
    ctx: &TransformContext<'_>,
) -> Result<TransformOutput, EngineError> {
    let (entry, params) = registry.resolve_params(spec)?;

    let check_kind = |e: &Element| -> Result<(), EngineError> {
        if entry.input.accepts(&e.value) {
            Ok(())
        } else {
            Err(EngineError::InputKindMismatch {
                name: spec.name.clone(),
                expected: entry.input.name().into(),
                got: value_kind_name(&e.value).into(),
            })
        }
    };

    match (&entry.behavior, input) {
        (Behavior::Map(f), TransformInput::Element(e)) => {
            check_kind(e)?;
            Ok(TransformOutput::Element(f(e, &params)?))
        }
        (Behavior::Map(f), TransformInput::Set(s)) => {
            let mut out = DataSet::new(s.name());
            for e in s.iter() {
                check_kind(e)?;
                let mapped = f(e, &params)?;
                if out.contains_key(&mapped.key) {
                    return Err(crate::model::ModelError::DuplicateKey(mapped.key).into());
                }
                out.insert(mapped);
            }
            Ok(TransformOutput::Set(out))
        }
        (Behavior::FanOut(f), TransformInput::Element(e)) => {
            check_kind(e)?;
            Ok(TransformOutput::Multi(Multiset::new(f(e, &params)?)))
        }
        (Behavior::FanOut(f), TransformInput::Set(s)) => {
            let mut all = Vec::new();
            for e in s.iter() {
                check_kind(e)?;
                all.extend(f(e, &params)?);
            }
            Ok(TransformOutput::Multi(Multiset::new(all)))
        }
        (Behavior::SetMap(f), TransformInput::Set(s)) => {
            Ok(TransformOutput::Set(f(s, &params, ctx)?))
        }
        (Behavior::SetMap(_), TransformInput::Element(_)) => Err(EngineError::InputKindMismatch {
            name: spec.name.clone(),
            expected: "data set".into(),
            got: "element".into(),
        }),
    }
}

/// Single-element convenience wrapper around [`transform`].
pub fn transform_element(
    e: &Element,
    spec: &TransformSpec,
    registry: &TransformRegistry,
) -> Result<TransformOutput, EngineError> {
    transform(
        TransformInput::Element(e),
        spec,
        registry,
        &TransformContext::none(),
    )
}

fn value_kind_name(v: &Value) -> &'static str {
    match v {
        Value::Record(_) => "record",
        Value::Text(_) => "text",
        Value::IdList(_) => "idlist",
    }
}

/// Splits text on whitespace; emits one `(word, {count: 1})` element per
/// occurrence.
fn tokenize_words(e: &Element, _params: &ResolvedParams) -> Result<Vec<Element>, EngineError> {
    let Value::Text(text) = &e.value else {
        unreachable!("input kind checked")
    };
    text.split_whitespace()
        .map(|word| {
            Element::record(word, vec![field("count", ScalarValue::Int(1))]).map_err(Into::into)
        })
        .collect()
}

/// Emits `(target, {share: rank/outdeg})` for every out-link of a node.
fn pagerank_contribute(e: &Element, _params: &ResolvedParams) -> Result<Vec<Element>, EngineError> {
    let out_links = e
        .value
        .field("out_links")
        .and_then(FieldValue::as_idlist)
        .ok_or_else(|| crate::model::ModelError::MissingField {
            field: "out_links".into(),
            key: e.key.clone(),
        })?;
    let rank = e
        .value
        .field("rank")
        .and_then(FieldValue::as_scalar)
        .and_then(ScalarValue::as_f64)
        .ok_or_else(|| crate::model::ModelError::MissingField {
            field: "rank".into(),
            key: e.key.clone(),
        })?;
    let share = rank / out_links.len() as f64;
    out_links
        .iter()
        .map(|target| {
            Element::record(
                target.clone(),
                vec![field("share", ScalarValue::float(share)?)],
            )
            .map_err(Into::into)
        })
        .collect()
}

/// Computes `rank' = (1-d)/N + d * share` for every node of the topology set
/// named by `graph_set`, carrying each node's out-links forward so the
/// output feeds the next contribute round. Nodes that received no share get
/// the base rank `(1-d)/N`.
fn pagerank_apply(
    shares: &DataSet,
    params: &ResolvedParams,
    ctx: &TransformContext<'_>,
) -> Result<DataSet, EngineError> {
    let damping = params.f64("damping");
    let graph_set = params.str("graph_set");
    let backend = ctx
        .backend
        .ok_or_else(|| EngineError::ContextRequired("pagerank-apply".into()))?;

    let node_count = backend.len(graph_set)?;
    let base = (1.0 - damping) / node_count as f64;

    let mut out = DataSet::new(shares.name());
    for node in backend.scan_snapshot(graph_set)? {
        let out_links = node
            .value
            .field("out_links")
            .and_then(FieldValue::as_idlist)
            .ok_or_else(|| crate::model::ModelError::MissingField {
                field: "out_links".into(),
                key: node.key.clone(),
            })?;
        let share = shares
            .get(&node.key)
            .and_then(|e| e.value.field("share"))
            .and_then(FieldValue::as_scalar)
            .and_then(ScalarValue::as_f64)
            .unwrap_or(0.0);
        let rank = base + damping * share;
        out.insert(Element::record(
            node.key.clone(),
            vec![
                field("out_links", FieldValue::IdList(out_links.to_vec())),
                field("rank", ScalarValue::float(rank)?),
            ],
        )?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::MemoryBackend;

    fn registry() -> TransformRegistry {
        TransformRegistry::with_builtins()
    }

    #[test]
    fn identity_on_set_is_bit_identical() {
        let s = DataSet::from_elements(
            "s",
            vec![
                Element::text("a", "x").unwrap(),
                Element::record("b", vec![field("v", ScalarValue::Int(1))]).unwrap(),
            ],
        )
        .unwrap();
        let out = transform(
            TransformInput::Set(&s),
            &TransformSpec::new("identity"),
            &registry(),
            &TransformContext::none(),
        )
        .unwrap();
        assert_eq!(out, TransformOutput::Set(s));
    }

    #[test]
    fn tokenize_words_matches_whitespace_split_oracle() {
        let e = Element::text("doc", "a b a").unwrap();
        let out = transform_element(&e, &TransformSpec::new("tokenize-words"), &registry()).unwrap();
        let TransformOutput::Multi(m) = out else { panic!() };
        let got: Vec<(&str, i64)> = m
            .iter()
            .map(|e| {
                let ScalarValue::Int(c) = e.value.field("count").unwrap().as_scalar().unwrap()
                else {
                    panic!()
                };
                (e.key.as_str(), *c)
            })
            .collect();
        assert_eq!(got, vec![("a", 1), ("b", 1), ("a", 1)]);
    }

    #[test]
    fn contribute_splits_rank_over_out_links() {
        let node = Element::record(
            "n",
            vec![
                field(
                    "out_links",
                    FieldValue::IdList(vec!["b".into(), "c".into()]),
                ),
                field("rank", ScalarValue::Float(0.4)),
            ],
        )
        .unwrap();
        let out =
            transform_element(&node, &TransformSpec::new("pagerank-contribute"), &registry())
                .unwrap();
        let TransformOutput::Multi(m) = out else { panic!() };
        let got: Vec<(&str, f64)> = m
            .iter()
            .map(|e| {
                (
                    e.key.as_str(),
                    e.value
                        .field("share")
                        .unwrap()
                        .as_scalar()
                        .unwrap()
                        .as_f64()
                        .unwrap(),
                )
            })
            .collect();
        assert_eq!(got, vec![("b", 0.2), ("c", 0.2)]);
    }

    #[test]
    fn apply_rejoins_topology_and_defaults_missing_shares() {
        let backend = MemoryBackend::new();
        backend.create_set("g").unwrap();
        for (k, links) in [("a", vec!["b"]), ("b", vec!["a"]), ("c", vec!["a"])] {
            backend
                .put(
                    "g",
                    Element::record(
                        k,
                        vec![
                            field(
                                "out_links",
                                FieldValue::IdList(links.into_iter().map(String::from).collect()),
                            ),
                            field("rank", ScalarValue::Float(1.0 / 3.0)),
                        ],
                    )
                    .unwrap(),
                )
                .unwrap();
        }
        // only a and b received shares; c has no in-links
        let shares = DataSet::from_elements(
            "shares",
            vec![
                Element::record("a", vec![field("share", ScalarValue::Float(0.5))]).unwrap(),
                Element::record("b", vec![field("share", ScalarValue::Float(0.25))]).unwrap(),
            ],
        )
        .unwrap();
        let spec = TransformSpec::new("pagerank-apply")
            .with_param("graph_set", ScalarValue::Str("g".into()));
        let out = transform(
            TransformInput::Set(&shares),
            &spec,
            &registry(),
            &TransformContext::with_backend(&backend),
        )
        .unwrap();
        let TransformOutput::Set(s) = out else { panic!() };
        assert_eq!(s.len(), 3);
        let rank = |k: &str| {
            s.get(k)
                .unwrap()
                .value
                .field("rank")
                .unwrap()
                .as_scalar()
                .unwrap()
                .as_f64()
                .unwrap()
        };
        let base = 0.15 / 3.0;
        assert!((rank("a") - (base + 0.85 * 0.5)).abs() < 1e-12);
        assert!((rank("b") - (base + 0.85 * 0.25)).abs() < 1e-12);
        assert!((rank("c") - base).abs() < 1e-12);
        // out_links carried forward
        assert!(s.get("c").unwrap().value.field("out_links").is_some());
    }

    #[test]
    fn unknown_transform_and_schema_violations() {
        let e = Element::text("t", "x").unwrap();
        let r = registry();
        assert!(matches!(
            transform_element(&e, &TransformSpec::new("nope"), &r),
            Err(EngineError::UnknownTransform(_))
        ));

        // undeclared param
        let spec = TransformSpec::new("identity").with_param("bogus", ScalarValue::Int(1));
        assert!(matches!(
            transform_element(&e, &spec, &r),
            Err(EngineError::ParamSchemaViolation { .. })
        ));

        // missing required param
        let spec = TransformSpec::new("pagerank-apply");
        let s = DataSet::new("s");
        assert!(matches!(
            transform(TransformInput::Set(&s), &spec, &r, &TransformContext::none()),
            Err(EngineError::ParamSchemaViolation { .. })
        ));

        // wrong param tag
        let spec = TransformSpec::new("pagerank-apply")
            .with_param("graph_set", ScalarValue::Int(3));
        assert!(matches!(
            transform(TransformInput::Set(&s), &spec, &r, &TransformContext::none()),
            Err(EngineError::ParamSchemaViolation { .. })
        ));
    }

    #[test]
    fn input_kind_mismatch() {
        let e = Element::record("r", vec![field("x", ScalarValue::Int(1))]).unwrap();
        assert!(matches!(
            transform_element(&e, &TransformSpec::new("tokenize-words"), &registry()),
            Err(EngineError::InputKindMismatch { .. })
        ));
    }

    #[test]
    fn set_map_without_context_errors() {
        let s = DataSet::new("s");
        let spec = TransformSpec::new("pagerank-apply")
            .with_param("graph_set", ScalarValue::Str("g".into()));
        assert!(matches!(
            transform(
                TransformInput::Set(&s),
                &spec,
                &registry(),
                &TransformContext::none()
            ),
            Err(EngineError::ContextRequired(_))
        ));
    }
}
