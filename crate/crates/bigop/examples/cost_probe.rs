use std::time::Instant;
fn main() {
    use bigop::datagen::{GeneratorSpec, LogStream};
    let spec = GeneratorSpec::Logs { seed: Some(1), count: 20_000, server_count: 100, message_bytes: 914, start_index: 0 };
    let t = Instant::now();
    let n = LogStream::new(&spec).unwrap().count();
    println!("gen {n} log elements: {:?} ({:?}/op)", t.elapsed(), t.elapsed() / n as u32);

    use bigop::backend::{MemoryBackend, StorageBackend};
    let b = MemoryBackend::new();
    b.create_set("s").unwrap();
    let elems: Vec<_> = LogStream::new(&spec).unwrap().collect();
    let t = Instant::now();
    for e in elems { b.put("s", e).unwrap(); }
    println!("20k puts: {:?}", t.elapsed());
}
