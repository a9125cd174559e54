//! Structured-record generator.

use rand::distributions::Alphanumeric;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{field, DataSet, Element, ScalarValue};
use crate::seed::derive;

use super::{padded_key, DatagenError, GeneratorSpec};

/// Streaming record generator. Element `i` depends only on (seed, i), so a
/// stream starting at index `k` continues the index-0 sequence exactly.
pub struct RecordStream {
    seed: u64,
    next: u64,
    end: u64,
    field_count: u32,
    value_bytes: u32,
}

impl RecordStream {
    pub fn new(spec: &GeneratorSpec) -> Result<Self, DatagenError> {
        spec.validate()?;
        let GeneratorSpec::Records {
            seed,
            count,
            field_count,
            value_bytes,
            start_index,
        } = spec
        else {
            return Err(DatagenError::InvalidSpec("expected a records spec".into()));
        };
        Ok(RecordStream {
            seed: seed.unwrap_or(0),
            next: *start_index,
            end: start_index.saturating_add(*count),
            field_count: *field_count,
            value_bytes: *value_bytes,
        })
    }
}

impl Iterator for RecordStream {
    type Item = Element;

    fn next(&mut self) -> Option<Element> {
        if self.next >= self.end {
            return None;
        }
        let i = self.next;
        self.next += 1;
        Some(record_element(
            self.seed,
            i,
            self.field_count,
            self.value_bytes,
        ))
    }
}

fn record_element(seed: u64, index: u64, field_count: u32, value_bytes: u32) -> Element {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, index));
    let mut fields = Vec::with_capacity(field_count as usize);
    for f in 0..field_count {
        let name = format!("f{f}");
        let value = match f {
            0 => ScalarValue::Int(rng.gen()),
            1 => ScalarValue::Float(rng.gen::<f64>()),
            _ => ScalarValue::Str(
                (&mut rng)
                    .sample_iter(&Alphanumeric)
                    .take(value_bytes as usize)
                    .map(char::from)
                    .collect(),
            ),
        };
        fields.push(field(&name, value));
    }
    Element::record(padded_key('r', index), fields).expect("generated records are valid")
}

/// Materializes the whole spec into a [`DataSet`] named `name`.
pub fn gen_records(name: &str, spec: &GeneratorSpec) -> Result<DataSet, DatagenError> {
    let stream = RecordStream::new(spec)?;
    let mut ds = DataSet::new(name);
    for e in stream {
        ds.insert(e);
    }
    Ok(ds)
}
