use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode as ProcessExit;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use sofix::analytics::{
    clopper_pearson, compare_to_reference, score_verdicts, tally_parse_errors, tally_parse_kinds,
    tally_runtime, CategoryMapping, DistributionReport, ReferenceDistribution,
    DEFAULT_TAIL_CUTOFF,
};
use sofix::ingest::{load_posts, read_blocks, select_candidate_blocks, FilterCounts};
use sofix::manifest::{sidecar_path, RunManifest};
use sofix::mutation::{generate_error_distribution, MutationKind, MutationSpec};
use sofix::oracle::{OracleClient, OracleConfig, SnippetRunner};
use sofix::pairing::{build_chains, extract_all, read_pairs, write_pairs, ErrorFixPair};
use sofix::{analytics, Error, ExitCode, Result};

/// Mine syntax-error / fix pairs from Stack Overflow block histories.
#[derive(Debug, Parser)]
#[command(name = "sofix", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Select tagged code blocks, classify every version, write error/fix pairs.
    Extract(ExtractArgs),
    /// Execute the fixed version of every pair and record the runtime outcome.
    Validate(ValidateArgs),
    /// Tabulate parse-error or runtime-outcome distributions.
    Stats(StatsArgs),
    /// Chi-squared goodness of fit of an observed table against a reference.
    Compare(CompareArgs),
    /// Build a token-mutation error distribution from valid snippets.
    Mutate(MutateArgs),
    /// Draw a seeded review sample of pairs.
    Audit(AuditArgs),
    /// Exact binomial confidence interval for an audited error rate.
    Interval(IntervalArgs),
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    posts: PathBuf,
    #[arg(long)]
    blocks: PathBuf,
    #[arg(long, default_value = "python")]
    tag_pattern: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long, default_value_t = 4.0)]
    timeout_secs: f64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Table {
    /// Parse errors by kind and message.
    Parse,
    /// Parse errors by kind only.
    Kind,
    /// Runtime outcomes of the fixed versions.
    Runtime,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long, value_enum, default_value = "parse")]
    table: Table,
    /// Rows kept before the remainder is folded into "other".
    #[arg(long, default_value_t = DEFAULT_TAIL_CUTOFF)]
    cutoff: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Observed table (label,count[,fraction] CSV).
    #[arg(long)]
    observed: PathBuf,
    /// builtin:mit, builtin:cscircles, report:TABLE.csv or a distribution JSON file.
    #[arg(long)]
    dist: String,
    /// Label mapping JSON. Builtin references default to their shipped mapping.
    #[arg(long, conflicts_with = "no_mapping")]
    mapping: Option<PathBuf>,
    /// Align labels one-to-one instead of mapping them.
    #[arg(long)]
    no_mapping: bool,
    /// Drop these labels from both tables first.
    #[arg(long)]
    exclude: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MutateArgs {
    /// JSONL of snippets: one JSON string, or an object with a "code" field, per line.
    #[arg(long, required_unless_present = "pairs", conflicts_with = "pairs")]
    snippets: Option<PathBuf>,
    /// Use the fixed versions of these pairs as the valid snippets.
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long)]
    kind: MutationKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// Cycle through every possible mutant instead of sampling.
    #[arg(long)]
    exhaustive: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long, default_value_t = 100)]
    sample: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct IntervalArgs {
    #[arg(long, requires = "trials", conflicts_with = "verdicts")]
    successes: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Filled-in verdict sheet from `audit`.
    #[arg(long, required_unless_present = "successes")]
    verdicts: Option<PathBuf>,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let mut out = create(path)?;
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Input(format!("cannot start worker threads: {e}")))
}

fn oracle(workers: usize) -> Result<OracleClient> {
    Ok(OracleClient::new(OracleConfig::from_env()?.with_workers(workers)))
}

fn load_pairs(path: &Path) -> Result<Vec<ErrorFixPair>> {
    read_pairs(open(path)?)
}

fn save_pairs(path: &Path, pairs: &[ErrorFixPair]) -> Result<()> {
    let out = create(path)?;
    write_pairs(pairs, out).map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::io(path, io::Error::other(e))
}

fn extract(args: ExtractArgs) -> Result<()> {
    let posts = load_posts(open(&args.posts)?)?;
    let blocks = read_blocks(open(&args.blocks)?);
    let mut selection = select_candidate_blocks(&posts, blocks, &args.tag_pattern);
    let candidates = selection.by_ref().collect::<std::result::Result<Vec<_>, _>>()?;
    let mut counts = FilterCounts {
        total_code_blocks: selection.counts.total_code_blocks,
        tag_matched: selection.counts.tag_matched,
        ..FilterCounts::default()
    };
    let unresolved = selection.diagnostics.unresolved_parent;
    let (chains, chain_diagnostics) = build_chains(candidates);

    let mut manifest = RunManifest::new("extract");
    let pairs = if chains.is_empty() {
        Vec::new()
    } else {
        let client = oracle(args.workers)?;
        manifest.interpreter_version = Some(client.worker_version()?);
        let (pairs, parse_counts) = thread_pool(args.workers)?.install(|| extract_all(&chains, &client))?;
        counts += parse_counts;
        pairs
    };
    save_pairs(&args.out, &pairs)?;

    manifest.add_input(&args.posts)?;
    manifest.add_input(&args.blocks)?;
    manifest.filter_counts = Some(counts);
    manifest.note("tag_pattern", &args.tag_pattern);
    manifest.note("pairs", pairs.len());
    manifest.note("unresolved_parent", unresolved);
    manifest.note("chains", chains.len());
    manifest.note("rejected_chains", chain_diagnostics.rejected_chains);
    manifest.note("rejected_versions", chain_diagnostics.rejected_versions);
    manifest.write(&sidecar_path(&args.out))?;

    print!("{}", counts.to_table(&args.tag_pattern));
    println!("\n{} pairs written to {}", pairs.len(), args.out.display());
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<()> {
    if !(args.timeout_secs.is_finite() && args.timeout_secs > 0.0) {
        return Err(Error::Input(format!("--timeout-secs must be positive, got {}", args.timeout_secs)));
    }
    let mut pairs = load_pairs(&args.pairs)?;
    let mut manifest = RunManifest::new("validate");
    manifest.add_input(&args.pairs)?;
    if !pairs.is_empty() {
        let client = oracle(args.workers)?;
        manifest.interpreter_version = Some(client.worker_version()?);
        let timeout = args.timeout_secs;
        let outcomes: Vec<_> = thread_pool(args.workers)?.install(|| {
            pairs
                .par_iter()
                .map(|p| client.run_snippet(&p.fixed_content, timeout))
                .collect()
        });
        for (pair, outcome) in pairs.iter_mut().zip(outcomes) {
            pair.runtime_outcome = Some(outcome?);
        }
    }
    save_pairs(&args.out, &pairs)?;
    manifest.note("timeout_secs", args.timeout_secs);
    manifest.note("pairs", pairs.len());
    manifest.write(&sidecar_path(&args.out))?;
    let report = tally_runtime(&pairs, None);
    print!("{}", report.to_markdown("Runtime outcomes", false));
    Ok(())
}

fn stats(args: StatsArgs) -> Result<()> {
    let pairs = load_pairs(&args.pairs)?;
    let (name, title, report, split) = match args.table {
        Table::Parse => ("parse", "Parse errors", tally_parse_errors(&pairs, args.cutoff), true),
        Table::Kind => ("kind", "Parse error kinds", tally_parse_kinds(&pairs), false),
        Table::Runtime => ("runtime", "Runtime outcomes", tally_runtime(&pairs, Some(args.cutoff)), false),
    };
    let csv_path = args.out_dir.join(format!("{name}.csv"));
    let md_path = args.out_dir.join(format!("{name}.md"));
    report
        .write_csv(create(&csv_path)?)
        .map_err(|e| csv_error(&csv_path, e))?;
    let markdown = report.to_markdown(title, split);
    write_file(&md_path, &markdown)?;
    let mut manifest = RunManifest::new("stats");
    manifest.add_input(&args.pairs)?;
    manifest.note("table", name);
    manifest.note("cutoff", args.cutoff);
    manifest.write(&sidecar_path(&csv_path))?;
    print!("{markdown}");
    Ok(())
}

fn drop_labels(report: DistributionReport, exclude: &[String]) -> DistributionReport {
    if exclude.is_empty() {
        return report;
    }
    DistributionReport::from_ordered(
        report
            .categories
            .into_iter()
            .filter(|c| !exclude.contains(&c.label))
            .map(|c| (c.label, c.count))
            .collect(),
    )
}

fn read_report(path: &Path) -> Result<DistributionReport> {
    Ok(DistributionReport::read_csv(open(path)?)?)
}

#[derive(Serialize)]
struct Observed {
    label: String,
    count: u64,
}

#[derive(Serialize)]
struct CompareOutput<'a> {
    reference: &'a str,
    observed: Vec<Observed>,
    expected: &'a [analytics::ReferenceCategory],
    #[serde(flatten)]
    result: analytics::ChiSquareResult,
}

fn compare(args: CompareArgs) -> Result<()> {
    let observed = drop_labels(read_report(&args.observed)?, &args.exclude);
    let (reference, default_mapping) = if let Some(name) = args.dist.strip_prefix("builtin:") {
        let reference = ReferenceDistribution::builtin(name)
            .ok_or_else(|| Error::Input(format!("unknown builtin distribution {name:?}")))?;
        (reference, analytics::builtin_mapping(name))
    } else if let Some(path) = args.dist.strip_prefix("report:") {
        let path = Path::new(path);
        let report = drop_labels(read_report(path)?, &args.exclude);
        let name = path.display().to_string();
        (ReferenceDistribution::from_report(&name, &report)?, None)
    } else {
        let path = Path::new(&args.dist);
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        (ReferenceDistribution::from_json(&text)?, None)
    };
    let mapping = match (&args.mapping, args.no_mapping) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Some(CategoryMapping::from_json(&text)?)
        }
        (None, true) => None,
        (None, false) => default_mapping,
    };
    let (mapped, result) = compare_to_reference(&observed, &reference, mapping.as_ref())?;
    let output = CompareOutput {
        reference: &reference.name,
        observed: mapped
            .into_iter()
            .map(|(label, count)| Observed { label, count })
            .collect(),
        expected: &reference.categories,
        result,
    };
    let json = serde_json::to_string_pretty(&output).expect("result serializes") + "\n";
    if let Some(out) = &args.out {
        write_file(out, &json)?;
    }
    print!("{json}");
    Ok(())
}

fn load_snippets(path: &Path) -> Result<Vec<String>> {
    let mut snippets = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| Error::Input(format!("{}:{}: {e}", path.display(), i + 1)))?;
        let code = match &value {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Object(o) => match o.get("code") {
                Some(serde_json::Value::String(s)) => s.clone(),
                _ => return Err(Error::Input(format!("{}:{}: no \"code\" string", path.display(), i + 1))),
            },
            _ => return Err(Error::Input(format!("{}:{}: expected a string or object", path.display(), i + 1))),
        };
        snippets.push(code);
    }
    Ok(snippets)
}

#[derive(Serialize)]
struct MutationManifest {
    kind: MutationKind,
    seed: u64,
    trials: u64,
    snippet_count: usize,
    interpreter: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    partial: Option<String>,
    tool_version: &'static str,
    inputs: std::collections::BTreeMap<String, String>,
}

fn mutate(args: MutateArgs) -> Result<Option<Error>> {
    let (input, snippets) = match (&args.snippets, &args.pairs) {
        (Some(path), _) => (path, load_snippets(path)?),
        (None, Some(path)) => (path, load_pairs(path)?.into_iter().map(|p| p.fixed_content).collect()),
        (None, None) => unreachable!("clap requires one input"),
    };
    if snippets.is_empty() {
        return Err(Error::Input(format!("{}: no snippets", input.display())));
    }
    let client = oracle(args.workers)?;
    let interpreter = client.worker_version()?;
    let mut spec = MutationSpec::new(args.kind, args.seed, args.trials);
    spec.exhaustive = args.exhaustive;
    let run = thread_pool(args.workers)?.install(|| generate_error_distribution(&snippets, &spec, &client))?;
    run.report
        .write_csv(create(&args.out)?)
        .map_err(|e| csv_error(&args.out, e))?;
    let mut digest = RunManifest::new("mutate");
    digest.add_input(input)?;
    let manifest = MutationManifest {
        kind: args.kind,
        seed: args.seed,
        trials: run.trials_completed,
        snippet_count: run.snippet_count,
        interpreter,
        partial: run.partial.clone(),
        tool_version: sofix::manifest::TOOL_VERSION,
        inputs: digest.inputs,
    };
    let path = sidecar_path(&args.out);
    write_file(&path, &(serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"))?;
    print!("{}", run.report.to_markdown(&format!("Mutation outcomes ({})", args.kind), false));
    Ok(run.partial.map(|msg| {
        Error::Oracle(sofix::oracle::OracleError::Unavailable(format!(
            "stopped after {} of {} trials: {msg}",
            run.trials_completed, args.trials
        )))
    }))
}

fn audit(args: AuditArgs) -> Result<()> {
    let pairs = load_pairs(&args.pairs)?;
    let sample = analytics::sample_for_audit(&pairs, args.sample, args.seed)?;
    let md_path = args.out_dir.join("audit.md");
    let csv_path = args.out_dir.join("verdicts.csv");
    write_file(&md_path, &analytics::render_audit_markdown(&sample, args.seed))?;
    analytics::write_verdict_sheet(&sample, create(&csv_path)?).map_err(|e| csv_error(&csv_path, e))?;
    let mut manifest = RunManifest::new("audit");
    manifest.add_input(&args.pairs)?;
    manifest.seed = Some(args.seed);
    manifest.note("sample", args.sample);
    manifest.write(&sidecar_path(&md_path))?;
    println!("{} pairs sampled into {}", sample.len(), args.out_dir.display());
    Ok(())
}

fn interval(args: IntervalArgs) -> Result<()> {
    let (k, n) = match (&args.verdicts, args.successes, args.trials) {
        (Some(path), _, _) => score_verdicts(open(path)?)?,
        (None, Some(k), Some(n)) => (k, n),
        _ => return Err(Error::Input("give --verdicts or --successes with --trials".into())),
    };
    let ci = clopper_pearson(k, n, args.confidence)?;
    println!("{}", serde_json::to_string_pretty(&ci).expect("interval serializes"));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Extract(a) => extract(a),
        Command::Validate(a) => validate(a),
        Command::Stats(a) => stats(a),
        Command::Compare(a) => compare(a),
        Command::Mutate(a) => match mutate(a)? {
            None => Ok(()),
            Some(partial) => Err(partial),
        },
        Command::Audit(a) => audit(a),
        Command::Interval(a) => interval(a),
    }
}

fn main() -> ProcessExit {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ProcessExit::from(ExitCode::Input as u8)
            } else {
                ProcessExit::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ProcessExit::SUCCESS,
        Err(e) => {
            eprintln!("sofix: {e}");
            ProcessExit::from(e.exit_code() as u8)
        }
    }
}
