//! Command-line interface: run, validate and inspect prescriptions, and
//! generate data sets to snapshot files.
//!
//! Exit codes: 0 success, 1 run failure, 2 usage or validation error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::backend::{MemoryBackend, StorageBackend};
use crate::datagen::GeneratorSpec;
use crate::engine::TransformRegistry;
use crate::prescription::{
    apply_override, builtin, builtin_names, run_prescription, validate_prescription,
    Prescription, PrescriptionError, RunConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUN_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Default-seed environment variable; the --seed flag wins.
pub const SEED_ENV_VAR: &str = "BIGOP_SEED";

#[derive(Parser)]
#[command(
    name = "bigop",
    about = "Prescription-driven big-data benchmarking harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a prescription against a backend and write the metrics report.
    Run(RunArgs),
    /// Parse and validate a prescription file; print diagnostics.
    Validate { path: PathBuf },
    /// List the built-in prescriptions.
    List,
    /// Generate a data set from a generator spec file into a snapshot file.
    GenData {
        /// JSON file: {"set": "name", "generator": {…}}
        #[arg(long)]
        spec: PathBuf,
        /// Output snapshot path.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Prescription file to run.
    #[arg(long, conflicts_with = "builtin")]
    prescription: Option<PathBuf>,
    /// Built-in prescription name (see `bigop list`).
    #[arg(long)]
    builtin: Option<String>,
    /// Backend to drive. The reference implementation is `memory`.
    #[arg(long, default_value = "memory")]
    backend: String,
    /// Report output path (JSON).
    #[arg(long)]
    report: PathBuf,
    /// Seed override; defaults to BIGOP_SEED or the prescription's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Dotted-path field overrides, e.g. dataset.generator.node_count=100.
    #[arg(long = "override", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
    /// Write a backend snapshot here after the run.
    #[arg(long)]
    dump_data: Option<PathBuf>,
}

/// Entry point; returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders help/version on stdout, usage errors on stderr
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Validate { path } => cmd_validate(&path),
        Command::List => cmd_list(),
        Command::GenData { spec, out } => cmd_gen_data(&spec, &out),
    }
}

fn cmd_list() -> i32 {
    for name in builtin_names() {
        let p = builtin(name).expect("listed builtins exist");
        let ops = p.operations.len();
        let streams = p.streams.len();
        println!("{name}: {ops} operations, {streams} stream(s), dataset {:?}", p.dataset.set);
    }
    EXIT_OK
}

fn load_document(args: &RunArgs) -> Result<serde_json::Value, String> {
    match (&args.prescription, &args.builtin) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
        }
        (None, Some(name)) => {
            let p = builtin(name)
                .ok_or_else(|| format!("unknown builtin {name:?}; see `bigop list`"))?;
            Ok(serde_json::to_value(p).expect("builtins serialize"))
        }
        _ => Err("exactly one of --prescription or --builtin is required".into()),
    }
}

fn cmd_run(args: RunArgs) -> i32 {
    if args.backend != "memory" {
        eprintln!(
            "unknown backend {:?}: only the in-process `memory` backend ships here; \
             external systems plug in through the StorageBackend trait",
            args.backend
        );
        return EXIT_USAGE;
    }
    let mut doc = match load_document(&args) {
        Ok(doc) => doc,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_USAGE;
        }
    };
    let seed = args.seed.or_else(|| {
        std::env::var(SEED_ENV_VAR)
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(seed) = seed {
        if let Err(e) = apply_override(&mut doc, "seed", &seed.to_string()) {
            eprintln!("{e}");
            return EXIT_USAGE;
        }
    }
    for pair in &args.overrides {
        let applied = crate::prescription::split_override(pair)
            .and_then(|(path, value)| apply_override(&mut doc, path, value));
        if let Err(e) = applied {
            eprintln!("{e}");
            return EXIT_USAGE;
        }
    }
    // overrides apply before validation: a broken override never runs
    let p: Prescription = match serde_json::from_value(doc) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("prescription does not match the schema: {e}");
            return EXIT_USAGE;
        }
    };
    let registry = TransformRegistry::with_builtins();
    let diagnostics = validate_prescription(&p, &registry);
    if !diagnostics.is_empty() {
        for d in &diagnostics {
            eprintln!("{d}");
        }
        return EXIT_USAGE;
    }

    let backend = MemoryBackend::new();
    let config = RunConfig {
        clock: crate::driver::ClockSource::system(),
        report_path: Some(args.report.clone()),
        data_dump_path: args.dump_data.clone(),
    };
    match run_prescription(&p, &backend, &registry, &config) {
        Ok(report) => {
            println!(
                "prescription {:?} done: {} stream(s), report written to {}",
                report.prescription,
                report.streams.len(),
                args.report.display()
            );
            for s in &report.streams {
                println!(
                    "  {}: {} completed, {} failed ({})",
                    s.name, s.ops_completed, s.ops_failed, s.termination_reason
                );
            }
            EXIT_OK
        }
        Err(PrescriptionError::Invalid(diags)) => {
            for d in &diags {
                eprintln!("{d}");
            }
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("{e}");
            EXIT_RUN_FAILURE
        }
    }
}

fn cmd_validate(path: &PathBuf) -> i32 {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", path.display());
            return EXIT_USAGE;
        }
    };
    let p: Prescription = match serde_json::from_str(&text) {
        Ok(p) => p,
        Err(e) => {
            // serde_json reports line and column
            eprintln!("{}: {e}", path.display());
            return EXIT_USAGE;
        }
    };
    let diagnostics = validate_prescription(&p, &TransformRegistry::with_builtins());
    if diagnostics.is_empty() {
        println!("{} is valid", path.display());
        EXIT_OK
    } else {
        for d in &diagnostics {
            eprintln!("{d}");
        }
        EXIT_USAGE
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenDataSpec {
    set: String,
    generator: GeneratorSpec,
}

fn cmd_gen_data(spec_path: &PathBuf, out: &PathBuf) -> i32 {
    let text = match std::fs::read_to_string(spec_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", spec_path.display());
            return EXIT_USAGE;
        }
    };
    let spec: GenDataSpec = match serde_json::from_str(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}: {e}", spec_path.display());
            return EXIT_USAGE;
        }
    };
    let backend = MemoryBackend::new();
    if let Err(e) = backend.create_set(&spec.set) {
        eprintln!("{e}");
        return EXIT_RUN_FAILURE;
    }
    let result = materialize_generator(&backend, &spec.set, &spec.generator);
    if let Err(e) = result {
        eprintln!("{e}");
        return EXIT_RUN_FAILURE;
    }
    if let Err(e) = crate::backend::snapshot_to_file(&backend, out) {
        eprintln!("{e}");
        return EXIT_RUN_FAILURE;
    }
    println!(
        "wrote set {:?} ({} elements, {} bytes) to {}",
        spec.set,
        backend.len(&spec.set).unwrap_or(0),
        backend.size_bytes(&spec.set).unwrap_or(0),
        out.display()
    );
    EXIT_OK
}

fn materialize_generator(
    backend: &MemoryBackend,
    set: &str,
    generator: &GeneratorSpec,
) -> Result<(), String> {
    let elements: Box<dyn Iterator<Item = crate::model::Element>> = match generator {
        GeneratorSpec::Records { .. } => Box::new(
            crate::datagen::RecordStream::new(generator).map_err(|e| e.to_string())?,
        ),
        GeneratorSpec::Logs { .. } => {
            Box::new(crate::datagen::LogStream::new(generator).map_err(|e| e.to_string())?)
        }
        GeneratorSpec::Graph { .. } => Box::new(
            crate::datagen::gen_graph(set, generator)
                .map_err(|e| e.to_string())?
                .into_elements(),
        ),
    };
    for e in elements {
        backend.put(set, e).map_err(|e| e.to_string())?;
    }
    Ok(())
}
