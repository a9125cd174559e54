//! Single-set and double-set operations, plus filter.
//!
//! These are the reference semantics: sequential, deterministic, no
//! optimizer. Set results inherit the left/primary input's name.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{
    compare_scalar, eval_predicate, field, DataSet, Element, FieldValue, Multiset, Predicate,
    ScalarValue, Value,
};

use super::EngineError;

/// Default cap on |A|*|B| for cross products.
pub const DEFAULT_CROSS_PRODUCT_CAP: u64 = 10_000_000;

/// Separator between the two source keys in a cross-product key (U+241F).
const PAIR_SEPARATOR: char = '\u{241F}';

/// Keeps exactly the elements on which `p` evaluates true. Keys and values
/// pass through untouched.
pub fn filter(input: &DataSet, p: &Predicate) -> Result<DataSet, EngineError> {
    let mut out = DataSet::new(input.name());
    for e in input.iter() {
        if eval_predicate(p, e)? {
            out.insert(e.clone());
        }
    }
    Ok(out)
}

/// Keeps only the named record fields, in the requested order. Every element
/// must be a record containing all of them.
pub fn project(input: &DataSet, fields: &[String]) -> Result<DataSet, EngineError> {
    let mut out = DataSet::new(input.name());
    for e in input.iter() {
        let Value::Record(_) = &e.value else {
            return Err(EngineError::NonRecordValue(e.key.clone()));
        };
        let mut kept = Vec::with_capacity(fields.len());
        for name in fields {
            let fv = e
                .value
                .field(name)
                .ok_or_else(|| crate::model::ModelError::MissingField {
                    field: name.clone(),
                    key: e.key.clone(),
                })?;
            kept.push((name.clone(), fv.clone()));
        }
        out.insert(Element::new(e.key.clone(), Value::record(kept)?)?);
    }
    Ok(out)
}

/// Sorts by the named field, ties broken by key ascending. The field must be
/// a scalar of one tag across all elements.
pub fn order_by(
    input: &DataSet,
    field_name: &str,
    descending: bool,
) -> Result<Vec<Element>, EngineError> {
    let mut keyed: Vec<(&ScalarValue, &Element)> = Vec::with_capacity(input.len());
    for e in input.iter() {
        let fv = e
            .value
            .field(field_name)
            .ok_or_else(|| crate::model::ModelError::MissingField {
                field: field_name.to_string(),
                key: e.key.clone(),
            })?;
        let scalar = fv
            .as_scalar()
            .ok_or_else(|| crate::model::ModelError::NonScalarField {
                field: field_name.to_string(),
                key: e.key.clone(),
            })?;
        keyed.push((scalar, e));
    }
    // verify one tag across elements before sorting
    if let Some((first, _)) = keyed.first() {
        for (s, _) in &keyed {
            if s.tag() != first.tag() {
                return Err(crate::model::ModelError::TypeMismatch {
                    expected: first.tag(),
                    got: s.tag(),
                }
                .into());
            }
        }
    }
    keyed.sort_by(|(sa, ea), (sb, eb)| {
        let ord = compare_scalar(sa, sb).expect("tags verified identical");
        let ord = if descending { ord.reverse() } else { ord };
        ord.then_with(|| ea.key.cmp(&eb.key))
    });
    Ok(keyed.into_iter().map(|(_, e)| e.clone()).collect())
}

/// The five aggregation functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateFn {
    Min,
    Max,
    Sum,
    Median,
    Average,
}

/// Whether to reduce the whole input to one element or reduce per key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateMode {
    WholeSet,
    ByKey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSpec {
    pub function: AggregateFn,
    pub field: String,
    pub mode: AggregateMode,
}

/// Aggregation input: a keyed set or a multiset intermediate.
#[derive(Debug, Clone)]
pub enum AggregateInput<'a> {
    Set(&'a DataSet),
    Multi(&'a Multiset),
}

impl<'a> AggregateInput<'a> {
    fn elements(&self) -> Box<dyn Iterator<Item = &Element> + '_> {
        match self {
            AggregateInput::Set(s) => Box::new(s.iter()),
            AggregateInput::Multi(m) => Box::new(m.iter()),
        }
    }
}

/// Output of [`aggregate`]: one element in whole-set mode, a set in by-key
/// mode.
#[derive(Debug, Clone, PartialEq)]
pub enum Aggregated {
    Whole(Element),
    PerKey(DataSet),
}

/// Reduces the named numeric field. Whole-set mode yields a single element
/// keyed `_agg` with a `result` field; by-key mode yields one element per
/// distinct key whose value keeps the aggregated field's name. Sums and
/// averages run in f64; the median of an even count is the mean of the two
/// middle values.
pub fn aggregate(input: AggregateInput<'_>, spec: &AggregateSpec) -> Result<Aggregated, EngineError> {
    match spec.mode {
        AggregateMode::WholeSet => {
            let mut values = Vec::new();
            for e in input.elements() {
                values.push(numeric_field(e, &spec.field)?);
            }
            if values.is_empty() {
                return Err(EngineError::EmptySet);
            }
            let result = reduce(spec.function, &mut values);
            let element = Element::record(
                "_agg",
                vec![field("result", ScalarValue::float(result)?)],
            )?;
            Ok(Aggregated::Whole(element))
        }
        AggregateMode::ByKey => {
            let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            for e in input.elements() {
                groups
                    .entry(e.key.clone())
                    .or_default()
                    .push(numeric_field(e, &spec.field)?);
            }
            let mut out = DataSet::new("by_key");
            for (key, mut values) in groups {
                let result = reduce(spec.function, &mut values);
                out.insert(Element::record(
                    key,
                    vec![field(&spec.field, ScalarValue::float(result)?)],
                )?);
            }
            Ok(Aggregated::PerKey(out))
        }
    }
}

fn numeric_field(e: &Element, name: &str) -> Result<f64, EngineError> {
    let fv = e
        .value
        .field(name)
        .ok_or_else(|| crate::model::ModelError::MissingField {
            field: name.to_string(),
            key: e.key.clone(),
        })?;
    match fv {
        FieldValue::Scalar(s) => s.as_f64().ok_or_else(|| {
            crate::model::ModelError::TypeMismatch {
                expected: crate::model::ScalarTag::Float,
                got: s.tag(),
            }
            .into()
        }),
        FieldValue::IdList(_) => Err(crate::model::ModelError::NonScalarField {
            field: name.to_string(),
            key: e.key.clone(),
        }
        .into()),
    }
}

fn reduce(function: AggregateFn, values: &mut [f64]) -> f64 {
    match function {
        AggregateFn::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
        AggregateFn::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        AggregateFn::Sum => values.iter().sum(),
        AggregateFn::Average => values.iter().sum::<f64>() / values.len() as f64,
        AggregateFn::Median => {
            values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let n = values.len();
            if n % 2 == 1 {
                values[n / 2]
            } else {
                (values[n / 2 - 1] + values[n / 2]) / 2.0
            }
        }
    }
}

/// Keyed union; on key collision the element from `a` wins.
pub fn union(a: &DataSet, b: &DataSet) -> DataSet {
    let mut out = DataSet::new(a.name());
    for e in b.iter() {
        out.insert(e.clone());
    }
    for e in a.iter() {
        out.insert(e.clone());
    }
    out
}

/// Elements of `a` whose key is not in `b`; values untouched.
pub fn difference(a: &DataSet, b: &DataSet) -> DataSet {
    let mut out = DataSet::new(a.name());
    for e in a.iter() {
        if !b.contains_key(&e.key) {
            out.insert(e.clone());
        }
    }
    out
}

/// One element per pair: key `a.key + U+241F + b.key`, fields prefixed `l_`
/// and `r_`. Both sides must hold record values and |a|*|b| must stay under
/// `cap`.
pub fn cross_product(a: &DataSet, b: &DataSet, cap: u64) -> Result<DataSet, EngineError> {
    let pairs = a.len() as u64 * b.len() as u64;
    if pairs > cap {
        return Err(EngineError::BlowupCapExceeded {
            left: a.len() as u64,
            right: b.len() as u64,
            cap,
        });
    }
    let mut out = DataSet::new(a.name());
    for ea in a.iter() {
        let Value::Record(fa) = &ea.value else {
            return Err(EngineError::NonRecordValue(ea.key.clone()));
        };
        for eb in b.iter() {
            let Value::Record(fb) = &eb.value else {
                return Err(EngineError::NonRecordValue(eb.key.clone()));
            };
            let mut fields = Vec::with_capacity(fa.len() + fb.len());
            for (n, v) in fa {
                fields.push((format!("l_{n}"), v.clone()));
            }
            for (n, v) in fb {
                fields.push((format!("r_{n}"), v.clone()));
            }
            let key = format!("{}{}{}", ea.key, PAIR_SEPARATOR, eb.key);
            out.insert(Element::new(key, Value::record(fields)?)?);
        }
    }
    Ok(out)
}
