//! Command-line front end and local analysis service.
//!
//! [`run`] is the whole program: it parses arguments, dispatches to a
//! subcommand and returns the process exit code (0 success, 1 user error,
//! 2 internal error).

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use biblioscope_core::corpus::{load_corpus, load_sets, save_corpus, save_set, Corpus, WriterLock};
use biblioscope_core::dedup::{apply_merges, suggest_clusters, MergeMap, RefTable, DEFAULT_THRESHOLD};
use biblioscope_core::graph::{
    cluster_graph, country_coauthorship, export_graph, keyword_cooccurrence, overlay_mean_year, BiblioGraph,
    GraphFormat,
};
use biblioscope_core::ingest::{parse_export, ExportFormat};
use biblioscope_core::query::{parse_script, run_script, SetTable};
use biblioscope_core::rpys::{
    build_cr_table, mark_selected, n_top10, parse_bands, spectrum, write_cr_table_csv, write_spectrum_csv, CrTable,
    DEFAULT_BANDS,
};
use biblioscope_core::trend::{
    annual_counts, country_table, doubling_time, growth_factor, pooled_share, share_series, write_country_csv,
    write_series_csv, write_share_csv,
};
use biblioscope_core::RecordSet;
use clap::{Args, Parser, Subcommand};

pub mod service;

/// File inside a corpus directory holding the curator's merge decisions.
pub const MERGES_FILE: &str = "merges.json";

#[derive(Debug)]
pub enum Failure {
    /// bad input, missing files, invalid parameters
    User(String),
    Internal(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::User(_) => 1,
            Failure::Internal(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::User(m) | Failure::Internal(m) => f.write_str(m),
        }
    }
}

fn user<E: fmt::Display>(e: E) -> Failure {
    Failure::User(e.to_string())
}

fn internal<E: fmt::Display>(e: E) -> Failure {
    Failure::Internal(e.to_string())
}

type CmdResult = Result<(), Failure>;

#[derive(Debug, Parser)]
#[command(name = "biblioscope", version, about = "Bibliometric analysis workbench", arg_required_else_help = true)]
struct Cli {
    /// Corpus directory
    #[arg(long, global = true, env = "BIBLIOSCOPE_CORPUS")]
    corpus: Option<PathBuf>,
    /// Worker threads (defaults to the number of CPUs)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse an export file into a corpus directory
    Ingest {
        file: PathBuf,
        /// tagged or tab
        #[arg(long, default_value = "tagged")]
        format: ExportFormat,
        /// Target directory (defaults to --corpus)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a saved-set query script and store the resulting sets
    Query {
        #[arg(long)]
        script: PathBuf,
    },
    /// Cited-reference variant clustering and merging
    #[command(subcommand)]
    Dedup(DedupCommand),
    /// Cited-reference table and spectrum
    Rpys(RpysArgs),
    /// Co-occurrence networks
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Publication trends
    #[command(subcommand)]
    Trend(TrendCommand),
    /// Serve the analysis API on localhost
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Debug, Subcommand)]
enum DedupCommand {
    /// Print suggested clusters as JSON
    Suggest {
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Require matching volume and page, and link equal volume/page/source
        #[arg(long)]
        volume_page: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replace the corpus merge map with a decision file
    Apply {
        #[arg(long)]
        merges: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RpysArgs {
    #[arg(long, default_value_t = 1900)]
    min_rpy: i32,
    #[arg(long, default_value_t = 1)]
    min_count: u64,
    /// Period bands, e.g. 1950-1999:50,2000-2014:150
    #[arg(long, default_value = DEFAULT_BANDS)]
    bands: String,
    /// Only print rows passing their band
    #[arg(long)]
    selected_only: bool,
    /// CR table output (stdout when absent)
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    spectrum_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    /// Modularity resolution
    #[arg(long, default_value_t = 1.0)]
    resolution: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// json or pajek
    #[arg(long, default_value = "json")]
    format: GraphFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum GraphCommand {
    /// Keyword-plus co-occurrence network
    Keywords {
        #[arg(long, default_value_t = 10)]
        min_occ: u64,
        #[arg(long)]
        max_nodes: Option<usize>,
        #[command(flatten)]
        cluster: ClusterArgs,
    },
    /// Country co-authorship network
    Countries {
        #[arg(long, default_value_t = 5)]
        min_pubs: u64,
        #[arg(long, default_value_t = 25)]
        max_countries: usize,
        /// Keep components other than the largest
        #[arg(long)]
        keep_disconnected: bool,
        #[command(flatten)]
        cluster: ClusterArgs,
    },
}

#[derive(Debug, Subcommand)]
enum TrendCommand {
    /// Records per year as `year,count`
    Counts {
        /// Saved set (whole corpus when absent)
        #[arg(long)]
        set: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ratio of the counts of two years
    Growth {
        #[arg(long)]
        set: Option<String>,
        #[arg(long)]
        from: i32,
        #[arg(long)]
        to: i32,
    },
    /// Doubling time implied by two years
    Doubling {
        #[arg(long)]
        set: Option<String>,
        #[arg(long)]
        from: i32,
        #[arg(long)]
        to: i32,
    },
    /// Yearly share of one set in another
    Share {
        #[arg(long)]
        num: String,
        #[arg(long)]
        den: Option<String>,
        /// Pooled share over YEAR-YEAR instead of the yearly table
        #[arg(long)]
        window: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Papers per country with corpus percentages
    Countries {
        #[arg(long, default_value_t = 0)]
        min_papers: u64,
        /// Corpus directory used as the percentage baseline
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return 1;
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match pool.install(|| dispatch(cli)) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

fn corpus_dir(cli_dir: &Option<PathBuf>) -> Result<PathBuf, Failure> {
    cli_dir
        .clone()
        .ok_or_else(|| Failure::User("no corpus directory: pass --corpus or set BIBLIOSCOPE_CORPUS".into()))
}

fn open_corpus(dir: &Path) -> Result<Corpus, Failure> {
    load_corpus(dir).map_err(|e| Failure::User(format!("{}: {e}", dir.display())))
}

/// The corpus merge map, empty when no decisions were recorded.
pub fn load_merges(dir: &Path) -> Result<MergeMap, Failure> {
    let path = dir.join(MERGES_FILE);
    if !path.exists() {
        return Ok(MergeMap::new());
    }
    MergeMap::load(&path).map_err(|e| Failure::User(format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> CmdResult {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| Failure::User(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(bytes).map_err(internal),
    }
}

fn json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>, Failure> {
    let mut v = serde_json::to_vec_pretty(value).map_err(internal)?;
    v.push(b'\n');
    Ok(v)
}

fn dispatch(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Ingest { file, format, out } => {
            let dir = match out {
                Some(d) => d,
                None => corpus_dir(&cli.corpus)?,
            };
            ingest(&file, format, &dir)
        }
        Command::Query { script } => query(&corpus_dir(&cli.corpus)?, &script),
        Command::Dedup(cmd) => dedup(&corpus_dir(&cli.corpus)?, cmd),
        Command::Rpys(args) => rpys(&corpus_dir(&cli.corpus)?, &args),
        Command::Graph(cmd) => graph(&corpus_dir(&cli.corpus)?, cmd),
        Command::Trend(cmd) => trend(&corpus_dir(&cli.corpus)?, cmd),
        Command::Serve { port, host } => service::serve_blocking(&corpus_dir(&cli.corpus)?, &host, port),
    }
}

fn ingest(file: &Path, format: ExportFormat, dir: &Path) -> CmdResult {
    let reader = fs::File::open(file).map_err(|e| Failure::User(format!("{}: {e}", file.display())))?;
    let parsed = parse_export(reader, format).map_err(|e| Failure::User(format!("{}: {e}", file.display())))?;
    fs::create_dir_all(dir).map_err(|e| Failure::User(format!("{}: {e}", dir.display())))?;
    let _lock = WriterLock::acquire(dir).map_err(user)?;
    let corpus = Corpus::new(parsed.records).map_err(user)?;
    save_corpus(&corpus, dir).map_err(user)?;
    for w in &parsed.warnings {
        eprintln!("warning: line {}: {}", w.line, w.message);
    }
    let summary = serde_json::json!({
        "records": corpus.len(),
        "warnings": parsed.warnings,
        "fingerprint": corpus.fingerprint(),
    });
    emit(&None, &json_bytes(&summary)?)
}

fn query(dir: &Path, script: &Path) -> CmdResult {
    let text = fs::read_to_string(script).map_err(|e| Failure::User(format!("{}: {e}", script.display())))?;
    let statements = parse_script(&text).map_err(user)?;
    let corpus = open_corpus(dir)?;
    let _lock = WriterLock::acquire(dir).map_err(user)?;
    let mut sets: SetTable = load_sets(dir).map_err(user)?;
    let outcomes = run_script(&statements, &corpus, &mut sets).map_err(user)?;
    let mut out = String::from("set,count,query\n");
    for (o, st) in outcomes.iter().zip(&statements) {
        save_set(dir, &sets[&o.name]).map_err(user)?;
        for w in &o.warnings {
            eprintln!("warning: {}: {w}", o.name);
        }
        out.push_str(&format!("{},{},\"{}\"\n", o.name, o.count, st.query.to_string().replace('"', "\"\"")));
    }
    emit(&None, out.as_bytes())
}

fn dedup(dir: &Path, cmd: DedupCommand) -> CmdResult {
    let corpus = open_corpus(dir)?;
    match cmd {
        DedupCommand::Suggest { threshold, volume_page, out } => {
            let table = RefTable::from_corpus(&corpus);
            let clusters = suggest_clusters(&table.rows, threshold, volume_page).map_err(user)?;
            emit(&out, &json_bytes(&clusters)?)
        }
        DedupCommand::Apply { merges } => {
            let map = MergeMap::load(&merges).map_err(|e| Failure::User(format!("{}: {e}", merges.display())))?;
            map.validate().map_err(user)?;
            let table = RefTable::from_corpus(&corpus);
            let merged = apply_merges(&table, &map).map_err(user)?;
            let _lock = WriterLock::acquire(dir).map_err(user)?;
            map.save(&dir.join(MERGES_FILE)).map_err(user)?;
            let summary = serde_json::json!({
                "variants_before": table.len(),
                "variants_after": merged.len(),
                "occurrences": merged.total(),
                "merge_map_version": map.version(),
            });
            emit(&None, &json_bytes(&summary)?)
        }
    }
}

/// CR table with N_TOP10 and band selection, as served and exported.
pub fn full_cr_table(
    corpus: &Corpus,
    merges: &MergeMap,
    min_rpy: i32,
    min_count: u64,
    bands: &str,
) -> Result<CrTable, Failure> {
    let bands = parse_bands(bands).map_err(user)?;
    let table = build_cr_table(corpus, merges, min_rpy, min_count).map_err(user)?;
    let mut table = n_top10(&table, corpus, merges);
    mark_selected(&mut table, &bands).map_err(user)?;
    Ok(table)
}

fn rpys(dir: &Path, args: &RpysArgs) -> CmdResult {
    let corpus = open_corpus(dir)?;
    let merges = load_merges(dir)?;
    let mut table = full_cr_table(&corpus, &merges, args.min_rpy, args.min_count, &args.bands)?;
    if let Some(path) = &args.spectrum_csv {
        let mut buf = Vec::new();
        write_spectrum_csv(&spectrum(&table), &mut buf).map_err(internal)?;
        emit(&Some(path.clone()), &buf)?;
    }
    if args.selected_only {
        table.rows.retain(|r| r.selected);
    }
    let mut buf = Vec::new();
    write_cr_table_csv(&table, &mut buf).map_err(internal)?;
    emit(&args.out_csv, &buf)
}

fn finish_graph(graph: BiblioGraph, corpus: &Corpus, args: &ClusterArgs) -> CmdResult {
    let graph = overlay_mean_year(&graph, corpus);
    let graph = if graph.nodes.is_empty() { graph } else { cluster_graph(&graph, args.resolution, args.seed).map_err(user)? };
    emit(&args.out, export_graph(&graph, args.format).as_bytes())
}

fn graph(dir: &Path, cmd: GraphCommand) -> CmdResult {
    let corpus = open_corpus(dir)?;
    match cmd {
        GraphCommand::Keywords { min_occ, max_nodes, cluster } => {
            let g = keyword_cooccurrence(&corpus, min_occ, max_nodes).map_err(user)?;
            finish_graph(g, &corpus, &cluster)
        }
        GraphCommand::Countries { min_pubs, max_countries, keep_disconnected, cluster } => {
            let g = country_coauthorship(&corpus, min_pubs, max_countries, !keep_disconnected).map_err(user)?;
            finish_graph(g, &corpus, &cluster)
        }
    }
}

fn named_set(dir: &Path, corpus: &Corpus, name: &Option<String>) -> Result<RecordSet, Failure> {
    match name {
        None => Ok(corpus.all("all")),
        Some(n) => {
            let sets = load_sets(dir).map_err(user)?;
            sets.get(n).cloned().ok_or_else(|| Failure::User(format!("no saved set {n}")))
        }
    }
}

fn parse_window(w: &str) -> Result<(i32, i32), Failure> {
    let bad = || Failure::User(format!("invalid window {w:?}, expected YEAR-YEAR"));
    let (a, b) = w.split_once('-').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn trend(dir: &Path, cmd: TrendCommand) -> CmdResult {
    let corpus = open_corpus(dir)?;
    match cmd {
        TrendCommand::Counts { set, out } => {
            let s = annual_counts(&named_set(dir, &corpus, &set)?, &corpus).map_err(user)?;
            let mut buf = Vec::new();
            write_series_csv(&s, &mut buf).map_err(internal)?;
            emit(&out, &buf)
        }
        TrendCommand::Growth { set, from, to } => {
            let s = annual_counts(&named_set(dir, &corpus, &set)?, &corpus).map_err(user)?;
            let g = growth_factor(&s, from, to).map_err(user)?;
            emit(&None, format!("{g}\n").as_bytes())
        }
        TrendCommand::Doubling { set, from, to } => {
            let s = annual_counts(&named_set(dir, &corpus, &set)?, &corpus).map_err(user)?;
            let d = doubling_time(&s, from, to).map_err(user)?;
            emit(&None, format!("{d:.3}\n").as_bytes())
        }
        TrendCommand::Share { num, den, window, out } => {
            let num = named_set(dir, &corpus, &Some(num))?;
            let den = named_set(dir, &corpus, &den)?;
            match window {
                Some(w) => {
                    let (a, b) = parse_window(&w)?;
                    let share = pooled_share(&num, &den, &corpus, a, b).map_err(user)?;
                    let text = share.map_or_else(|| "undefined".to_string(), |p| format!("{p:.1}"));
                    emit(&out, format!("{text}\n").as_bytes())
                }
                None => {
                    let rows = share_series(&num, &den, &corpus).map_err(user)?;
                    let mut buf = Vec::new();
                    write_share_csv(&rows, &mut buf).map_err(internal)?;
                    emit(&out, &buf)
                }
            }
        }
        TrendCommand::Countries { min_papers, reference, out } => {
            let reference = reference.map(|d| open_corpus(&d)).transpose()?;
            let rows = country_table(&corpus, reference.as_ref(), min_papers);
            let mut buf = Vec::new();
            write_country_csv(&rows, &mut buf).map_err(internal)?;
            emit(&out, &buf)
        }
    }
}
