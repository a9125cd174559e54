//! Backend state persistence.
//!
//! Snapshot file layout (integers little-endian):
//!
//! ```text
//! magic "BGOP", version u16, set_count u32
//! per set: u32 name_len, name bytes, u64 element_count,
//!          elements in canonical encoding, u32 CRC32 of the element bytes
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::model::{decode_element, encode_element};

use super::{BackendError, MemoryBackend, StorageBackend};

const MAGIC: &[u8; 4] = b"BGOP";
const VERSION: u16 = 1;

/// Writes every set of `backend` to `path`.
pub fn snapshot_to_file(backend: &dyn StorageBackend, path: &Path) -> Result<(), BackendError> {
    let mut w = BufWriter::new(File::create(path)?);
    let names = backend.set_names();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(names.len() as u32).to_le_bytes())?;
    for name in names {
        let mut body = Vec::new();
        let mut count: u64 = 0;
        for element in backend.scan_snapshot(&name)? {
            body.extend_from_slice(&encode_element(&element));
            count += 1;
        }
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&count.to_le_bytes())?;
        w.write_all(&body)?;
        w.write_all(&crc32fast::hash(&body).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a snapshot file into a fresh [`MemoryBackend`].
pub fn restore_from_file(path: &Path) -> Result<MemoryBackend, BackendError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;

    let mut pos = 0usize;
    let magic = take(&bytes, &mut pos, 4)?;
    if magic != MAGIC {
        return Err(BackendError::CorruptSnapshot("bad magic".into()));
    }
    let version = u16::from_le_bytes(take(&bytes, &mut pos, 2)?.try_into().unwrap());
    if version != VERSION {
        return Err(BackendError::CorruptSnapshot(format!(
            "unsupported version {version}"
        )));
    }
    let set_count = u32::from_le_bytes(take(&bytes, &mut pos, 4)?.try_into().unwrap());

    let backend = MemoryBackend::new();
    for _ in 0..set_count {
        let name_len = u32::from_le_bytes(take(&bytes, &mut pos, 4)?.try_into().unwrap()) as usize;
        let name = String::from_utf8(take(&bytes, &mut pos, name_len)?.to_vec())
            .map_err(|_| BackendError::CorruptSnapshot("set name not UTF-8".into()))?;
        let count = u64::from_le_bytes(take(&bytes, &mut pos, 8)?.try_into().unwrap());

        let body_start = pos;
        backend.create_set(&name)?;
        for _ in 0..count {
            let element = decode_element(&bytes, &mut pos)
                .map_err(|e| BackendError::CorruptSnapshot(e.to_string()))?;
            backend.put(&name, element)?;
        }
        let body = &bytes[body_start..pos];
        let stored_crc = u32::from_le_bytes(take(&bytes, &mut pos, 4)?.try_into().unwrap());
        if crc32fast::hash(body) != stored_crc {
            return Err(BackendError::CorruptSnapshot(format!(
                "checksum mismatch for set {name:?}"
            )));
        }
    }
    if pos != bytes.len() {
        return Err(BackendError::CorruptSnapshot("trailing bytes".into()));
    }
    Ok(backend)
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize) -> Result<&'a [u8], BackendError> {
    let end = pos
        .checked_add(n)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| BackendError::CorruptSnapshot("truncated file".into()))?;
    let slice = &bytes[*pos..end];
    *pos = end;
    Ok(slice)
}
