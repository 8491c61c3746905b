//! Command-line entry point: key generation, ingestion, finalization,
//! querying, inspection, and benchmarks.
//!
//! Exit codes: 0 success, 1 query found nothing (query command only),
//! 2 usage, configuration, or authorization error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use privshard::bench_harness::{self, BenchConfig};
use privshard::query_engine::{execute_opts, plan_query, ExecOptions};
use privshard::secure_store::SecureStore;
use privshard::{Catalog, Error, KeyBundle};

#[derive(Parser)]
#[command(name = "privshard", version, about = "Privacy-aware document store with encrypted exact-match lookup and clustered ranked search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a 48-byte key file (16-byte cipher key + 32-byte index key).
    Keygen {
        /// Destination path for the key file.
        #[arg(long)]
        out: PathBuf,
        /// Overwrite an existing file.
        #[arg(long)]
        force: bool,
    },
    /// Ingest documents into a store directory (one document per line).
    Ingest {
        /// Key file; falls back to $PRIVSHARD_KEYS.
        #[arg(long, env = "PRIVSHARD_KEYS")]
        keys: PathBuf,
        /// Store directory (created if missing).
        #[arg(long)]
        store: PathBuf,
        /// Input file.
        #[arg(long)]
        input: PathBuf,
        /// Catalog override file: KIND<TAB>regex per line.
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Input format.
        #[arg(long, value_enum, default_value_t = InputFormat::Text)]
        format: InputFormat,
    },
    /// Fit vocabulary, vectors, and clusters; seal the store.
    Finalize {
        #[arg(long)]
        store: PathBuf,
        /// Number of clusters.
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Clustering seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Route a query to blind-index lookup and/or clustered search.
    Query {
        /// Key file; required only for queries containing sensitive terms.
        #[arg(long, env = "PRIVSHARD_KEYS")]
        keys: Option<PathBuf>,
        #[arg(long)]
        store: PathBuf,
        /// Query text.
        #[arg(long)]
        text: String,
        /// Maximum ranked results.
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Number of clusters to probe for ranked search.
        #[arg(long, default_value_t = 1)]
        probe: usize,
    },
    /// Print a stored record; with keys, also reveal entity values.
    Inspect {
        #[arg(long)]
        store: PathBuf,
        /// Document id.
        #[arg(long)]
        id: u64,
        #[arg(long, env = "PRIVSHARD_KEYS")]
        keys: Option<PathBuf>,
    },
    /// Run a performance experiment and write CSV rows.
    Bench {
        #[command(subcommand)]
        experiment: BenchCommand,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    /// Plain text, one document per line.
    Text,
    /// JSON lines with a "text" field.
    Jsonl,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Encryption, blind-index, and total ingest time vs corpus size.
    Build(BenchArgs),
    /// Direct plaintext scan vs blind-index lookup.
    Lookup(BenchArgs),
    /// Full-corpus cosine scan vs clustered search.
    Search(BenchArgs),
}

#[derive(clap::Args)]
struct BenchArgs {
    /// Comma-separated corpus sizes, e.g. 1000,10000.
    #[arg(long)]
    sizes: String,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Measured repetitions per point (minimum 3).
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Queries per trial.
    #[arg(long, default_value_t = 20)]
    queries: usize,
    /// Lower topic separability to stress clustered search.
    #[arg(long)]
    low_separability: bool,
    /// Run background readers during search trials.
    #[arg(long)]
    concurrent: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Keygen { out, force } => cmd_keygen(&out, force),
        Command::Ingest {
            keys,
            store,
            input,
            catalog,
            format,
        } => cmd_ingest(&keys, &store, &input, catalog.as_deref(), format),
        Command::Finalize { store, k, seed } => cmd_finalize(&store, k, seed),
        Command::Query {
            keys,
            store,
            text,
            top,
            probe,
        } => cmd_query(keys.as_deref(), &store, &text, top, probe),
        Command::Inspect { store, id, keys } => cmd_inspect(&store, id, keys.as_deref()),
        Command::Bench { experiment } => cmd_bench(experiment),
    }
}

fn cmd_keygen(out: &Path, force: bool) -> Result<ExitCode, Error> {
    if out.exists() && !force {
        return Err(Error::InvalidArgument(format!(
            "{} already exists; pass --force to overwrite",
            out.display()
        )));
    }
    let keys = KeyBundle::generate(None);
    keys.to_file(out)?;
    println!(
        "wrote {} (fingerprint {})",
        out.display(),
        keys.fingerprint_hex()
    );
    Ok(ExitCode::SUCCESS)
}

fn load_catalog(path: Option<&Path>) -> Result<Catalog, Error> {
    match path {
        Some(p) => Catalog::from_override_file(p),
        None => Ok(Catalog::default_catalog()),
    }
}

fn read_documents(input: &Path, format: InputFormat) -> Result<Vec<String>, Error> {
    let contents = std::fs::read_to_string(input)?;
    let mut docs = Vec::new();
    for (lineno, line) in contents.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match format {
            InputFormat::Text => docs.push(line.to_string()),
            InputFormat::Jsonl => {
                #[derive(serde::Deserialize)]
                struct Line {
                    text: String,
                }
                let parsed: Line = serde_json::from_str(line).map_err(|e| {
                    Error::Format(format!("input line {}: {e}", lineno + 1))
                })?;
                docs.push(parsed.text);
            }
        }
    }
    if docs.is_empty() {
        return Err(Error::InvalidArgument("no documents in input".into()));
    }
    Ok(docs)
}

fn cmd_ingest(
    keys_path: &Path,
    store_dir: &Path,
    input: &Path,
    catalog_path: Option<&Path>,
    format: InputFormat,
) -> Result<ExitCode, Error> {
    let keys = KeyBundle::from_file(keys_path)?;
    let catalog = load_catalog(catalog_path)?;
    let docs = read_documents(input, format)?;

    let mut store = if store_dir.join(privshard::secure_store::MANIFEST_FILE).exists() {
        let store = SecureStore::load_from_dir(store_dir)?;
        if store.is_finalized() {
            return Err(Error::StoreSealed);
        }
        store.verify_keys(&keys)?;
        if store.catalog_hash() != catalog.hash() {
            return Err(Error::InvalidArgument(
                "catalog does not match the one this store was built with".into(),
            ));
        }
        store
    } else {
        SecureStore::new(&keys, catalog.hash())
    };

    for doc in &docs {
        let id = store.ingest_document(doc, &keys, &catalog)?;
        let count = store.record(id).map_or(0, |r| r.entities.len());
        println!("doc {id}: {count} entities");
    }
    store.save_to_dir(store_dir)?;
    println!("ingested {} documents into {}", docs.len(), store_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_finalize(store_dir: &Path, k: usize, seed: u64) -> Result<ExitCode, Error> {
    let mut store = SecureStore::load_from_dir(store_dir)?;
    store.finalize(k, seed)?;
    store.save_to_dir(store_dir)?;
    let model = store.model().expect("finalized");
    println!(
        "k={k} iterations={} sse={:.6}",
        model.iterations_run(),
        model.final_sse()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_query(
    keys_path: Option<&Path>,
    store_dir: &Path,
    text: &str,
    top: usize,
    probe: usize,
) -> Result<ExitCode, Error> {
    let store = SecureStore::load_from_dir(store_dir)?;
    let catalog = Catalog::default_catalog();
    let plan = plan_query(text, &catalog);

    let keys = match keys_path {
        Some(p) => Some(KeyBundle::from_file(p)?),
        None => None,
    };
    if !plan.sensitive_terms.is_empty() && keys.is_none() {
        return Err(Error::MissingKeys);
    }

    let results = execute_opts(
        &plan,
        keys.as_ref(),
        &store,
        top,
        ExecOptions {
            parallel: true,
            probe,
        },
    )?;

    println!("mode: {}", plan.mode.as_str());
    for hit in &results.hits {
        let flags = match (hit.exact, hit.ranked) {
            (true, true) => "exact,ranked",
            (true, false) => "exact",
            _ => "ranked",
        };
        println!("{}\t{:.6}\t{}", hit.doc_id, hit.score, flags);
    }
    if results.hits.is_empty() {
        Ok(ExitCode::from(1))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn cmd_inspect(store_dir: &Path, id: u64, keys_path: Option<&Path>) -> Result<ExitCode, Error> {
    let store = SecureStore::load_from_dir(store_dir)?;
    let record = store
        .record(id)
        .ok_or_else(|| Error::NotFound(format!("doc {id}")))?;

    println!("doc {}\tcluster {}", record.doc_id, record.cluster);
    println!("text: {}", record.redacted_text);
    let keys = match keys_path {
        Some(p) => Some(KeyBundle::from_file(p)?),
        None => None,
    };
    for entity in &record.entities {
        match &keys {
            Some(keys) => {
                let value = store.reveal(id, entity.ordinal, keys)?;
                println!("ent {}: {} = {}", entity.ordinal, entity.kind.as_str(), value);
            }
            None => println!("ent {}: {}", entity.ordinal, entity.kind.as_str()),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_sizes(sizes: &str) -> Result<Vec<usize>, Error> {
    let mut parsed = sizes
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("bad size {s:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    parsed.sort_unstable();
    parsed.dedup();
    Ok(parsed)
}

type BenchRunner = fn(&BenchConfig) -> Result<Vec<bench_harness::BenchRow>, Error>;

fn cmd_bench(experiment: BenchCommand) -> Result<ExitCode, Error> {
    let (args, runner): (&BenchArgs, BenchRunner) = match &experiment {
        BenchCommand::Build(args) => (args, bench_harness::bench_build),
        BenchCommand::Lookup(args) => (args, bench_harness::bench_lookup),
        BenchCommand::Search(args) => (args, bench_harness::bench_search),
    };

    let cfg = BenchConfig {
        sizes: parse_sizes(&args.sizes)?,
        seed: args.seed,
        repetitions: args.reps,
        k: args.k,
        queries: args.queries,
        low_separability: args.low_separability,
        concurrent_readers: args.concurrent,
        ..BenchConfig::default()
    };
    let rows = runner(&cfg)?;
    bench_harness::write_csv(&rows, &args.out)?;
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}
