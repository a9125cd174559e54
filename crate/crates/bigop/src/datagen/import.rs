//! Line-format log importer: one element per input line,
//! `ts<TAB>server_id<TAB>level<TAB>latency_ms<TAB>msg`, UTF-8,
//! LF-terminated. Malformed lines are counted and skipped.

use std::io::BufRead;

use crate::model::{field, Element, ScalarValue};

use super::{padded_key, DatagenError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ImportStats {
    pub imported: u64,
    pub skipped: u64,
}

/// Parses log lines into elements keyed `l<line index>`. Returns the parsed
/// elements and how many lines were skipped as malformed.
pub fn import_log_lines(
    reader: impl BufRead,
) -> Result<(Vec<Element>, ImportStats), DatagenError> {
    let mut elements = Vec::new();
    let mut stats = ImportStats::default();
    for (index, line) in reader.lines().enumerate() {
        let line = match line {
            Ok(l) => l,
            Err(_) => {
                stats.skipped += 1;
                continue;
            }
        };
        match parse_line(index as u64, &line) {
            Some(e) => {
                elements.push(e);
                stats.imported += 1;
            }
            None => stats.skipped += 1,
        }
    }
    Ok((elements, stats))
}

fn parse_line(index: u64, line: &str) -> Option<Element> {
    let mut parts = line.splitn(5, '\t');
    let ts: i64 = parts.next()?.parse().ok()?;
    let server_id: i64 = parts.next()?.parse().ok()?;
    let level = parts.next()?;
    let latency_ms: f64 = parts.next()?.parse().ok()?;
    let msg = parts.next()?;
    if level.is_empty() || !latency_ms.is_finite() {
        return None;
    }
    Element::record(
        padded_key('l', index),
        vec![
            field("ts", ScalarValue::Int(ts)),
            field("server_id", ScalarValue::Int(server_id)),
            field("level", ScalarValue::Str(level.to_string())),
            field("latency_ms", ScalarValue::float(latency_ms).ok()?),
            field("msg", ScalarValue::Str(msg.to_string())),
        ],
    )
    .ok()
}
