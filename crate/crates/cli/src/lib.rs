//! The `redactor` command line. The pipeline runs in file-based stages
//! (`detect`, `decide`, `pseudonymize`) so that a human review can sit
//! between deciding and pseudonymizing.
//!
//! Exit codes: 0 success, 1 violations found, 2 usage or I/O error,
//! 3 leakage detected (no output written).

pub mod config;
pub mod error;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use redactor_core::audit::{audit, entity_stats, leakage_scan, mentions};
use redactor_core::corpus::{read_corpus, write_corpus, Document};
use redactor_core::detect::{detect_document, ingest_standoff, load_standoff, DetectorConfig, PatternKind};
use redactor_core::eval::{standard_pairs, variant_grid, Variant};
use redactor_core::ledger::{diff, export_entries, parse_entries, Ledger, LedgerLock};
use redactor_core::pipeline::grid_variants;
use redactor_core::policy::{decide_corpus, Decision, RoleAssignments, RuleSet};
use redactor_core::pools::NamePools;
use redactor_core::substitute::{apply_corpus, PseudonymConstraints, Seed, Strategy};
use redactor_review::{ReviewConfig, ReviewService};

pub use config::{FileConfig, POOLS_ENV};
pub use error::{CliError, EXIT_LEAKAGE, EXIT_OK, EXIT_USAGE, EXIT_VIOLATIONS};

use config::{pick, pools_dir};

#[derive(Debug, Parser)]
#[command(name = "redactor", version, about = "Pseudonymize annotated multilingual corpora")]
pub struct Cli {
    /// TOML config file; flags override its keys.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find candidate spans with patterns, a gazetteer and standoff annotations.
    Detect(DetectArgs),
    /// Assign roles and apply the rulebook to every span.
    Decide(DecideArgs),
    /// Apply a substitution strategy to a decided corpus.
    Pseudonymize(PseudonymizeArgs),
    /// Check a transformed corpus for leakage, inconsistency and quasi-identifiers.
    Audit(AuditArgs),
    /// Entity counts per language, split, NER label and category.
    Stats(StatsArgs),
    /// Utility of each strategy for call-for-action classification.
    Eval(EvalArgs),
    /// Export, import or compare correspondence ledgers.
    #[command(subcommand)]
    Ledger(LedgerCommand),
    /// Run the review service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Input corpus (JSONL).
    #[arg(long, short)]
    pub input: PathBuf,
    /// Annotated corpus to write (JSONL).
    #[arg(long, short)]
    pub output: PathBuf,
    /// Gazetteer file: `CATEGORY<TAB>surface` per line.
    #[arg(long)]
    pub gazetteer: Option<PathBuf>,
    /// Standoff annotations: `doc_id<TAB>start<TAB>end<TAB>label` per line.
    #[arg(long)]
    pub standoff: Option<PathBuf>,
    /// Pattern detectors to run, comma separated (url, email, phone, hashtag, username). Defaults to all.
    #[arg(long, value_delimiter = ',')]
    pub detectors: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct DecideArgs {
    /// Input corpus with spans (JSONL).
    #[arg(long, short)]
    pub input: PathBuf,
    /// Decided corpus to write (JSONL).
    #[arg(long, short)]
    pub output: PathBuf,
    /// Rulebook file. Defaults to the built-in rulebook.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Role sidecar: `doc_id<TAB>start<TAB>end<TAB>role` per line.
    #[arg(long)]
    pub roles: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PseudonymizeArgs {
    /// Decided corpus (JSONL).
    #[arg(long, short)]
    pub input: PathBuf,
    /// Transformed corpus to write (JSONL). Must differ from the input.
    #[arg(long, short)]
    pub output: PathBuf,
    /// S0, S1, S2, S3 or REALISTIC. Defaults to REALISTIC.
    #[arg(long, short)]
    pub strategy: Option<String>,
    /// Correspondence ledger; required for REALISTIC, created when missing.
    #[arg(long)]
    pub ledger: Option<PathBuf>,
    /// Seed for pseudonym selection. Defaults to 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Name pool directory. Also read from REDACTOR_POOLS.
    #[arg(long)]
    pub pools: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Decided corpus the output was produced from.
    #[arg(long)]
    pub original: PathBuf,
    /// Transformed corpus to check.
    #[arg(long)]
    pub transformed: PathBuf,
    /// Strategy that produced the output; consistency is only checked for REALISTIC.
    #[arg(long, short)]
    pub strategy: Option<String>,
    /// Ledger whose originals are searched in every output document.
    #[arg(long)]
    pub ledger: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Print the JSON report instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Corpus with spans (JSONL).
    #[arg(long, short)]
    pub input: PathBuf,
    /// Print JSON instead of tables.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Decided corpus with call-for-action labels and split metadata.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Variants to compare, comma separated (Original, S0, S1, S2, S3, Ours). Defaults to all.
    #[arg(long, value_delimiter = ',')]
    pub variants: Option<Vec<String>>,
    /// Number of training seeds.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    /// First seed, used for pseudonym selection and as the base training seed. Defaults to 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Name pool directory. Also read from REDACTOR_POOLS.
    #[arg(long)]
    pub pools: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum LedgerCommand {
    /// Print or write the ledger entries as JSONL, without the header.
    Export {
        /// Ledger file.
        #[arg(long)]
        ledger: Option<PathBuf>,
        /// Destination file; stdout when absent.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Merge JSONL entries into a ledger, rejecting conflicts.
    Import {
        /// Ledger file, created when missing.
        #[arg(long)]
        ledger: Option<PathBuf>,
        /// Entries file (JSONL).
        #[arg(long, short)]
        input: PathBuf,
    },
    /// Compare two ledgers. Exits 1 when they differ.
    Diff {
        /// Older ledger.
        old: PathBuf,
        /// Newer ledger.
        new: PathBuf,
        /// Print the difference as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Corpus under review (JSONL); rewritten on every change.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Correspondence ledger, created when missing.
    #[arg(long)]
    pub ledger: Option<PathBuf>,
    /// Review audit log (JSONL). Defaults to `<corpus>.audit.jsonl`.
    #[arg(long)]
    pub audit_log: Option<PathBuf>,
    /// Listen address. Defaults to 127.0.0.1:8080.
    #[arg(long)]
    pub addr: Option<String>,
    /// Directory with the review UI bundle.
    #[arg(long)]
    pub ui: Option<PathBuf>,
    /// Lease length in minutes. Defaults to 15.
    #[arg(long)]
    pub lease_minutes: Option<u64>,
    /// Rulebook used when a reviewer changes a role or category.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Seed for suggested pseudonyms. Defaults to 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Name pool directory. Also read from REDACTOR_POOLS.
    #[arg(long)]
    pub pools: Option<PathBuf>,
}

/// Runs a parsed command line, printing results to stdout.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Detect(args) => cmd_detect(args, &config),
        Command::Decide(args) => cmd_decide(args, &config),
        Command::Pseudonymize(args) => cmd_pseudonymize(args, &config),
        Command::Audit(args) => cmd_audit(args, &config),
        Command::Stats(args) => cmd_stats(args),
        Command::Eval(args) => cmd_eval(args, &config),
        Command::Ledger(cmd) => cmd_ledger(cmd, &config),
        Command::Serve(args) => cmd_serve(args, &config),
    }
}

fn require_distinct(input: &Path, output: &Path) -> Result<(), CliError> {
    let resolve = |p: &Path| -> PathBuf {
        if let Ok(c) = p.canonicalize() {
            return c;
        }
        let parent = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        match (parent.canonicalize(), p.file_name()) {
            (Ok(dir), Some(name)) => dir.join(name),
            _ => p.to_path_buf(),
        }
    };
    if resolve(input) == resolve(output) {
        return Err(CliError::Usage(format!(
            "output path {} must differ from the input path",
            output.display()
        )));
    }
    Ok(())
}

fn parse_strategy(flag: &Option<String>, config: &FileConfig) -> Result<Strategy, CliError> {
    pick(flag, &config.strategy)
        .map(|s| s.parse().map_err(CliError::Usage))
        .unwrap_or(Ok(Strategy::Realistic))
}

fn constraints(flag: &Option<PathBuf>, config: &FileConfig) -> Result<PseudonymConstraints, CliError> {
    match pools_dir(flag, std::env::var(POOLS_ENV).ok(), config) {
        Some(dir) => {
            if !dir.is_dir() {
                return Err(CliError::Usage(format!("pool directory {} does not exist", dir.display())));
            }
            Ok(PseudonymConstraints::with_pools(NamePools::load_dir(dir)?))
        }
        None => Ok(PseudonymConstraints::default()),
    }
}

fn rules(flag: &Option<PathBuf>, config: &FileConfig) -> Result<RuleSet, CliError> {
    match pick(flag, &config.rules) {
        Some(path) => Ok(RuleSet::load(path)?),
        None => Ok(RuleSet::default()),
    }
}

fn count_spans(docs: &[Document]) -> usize {
    docs.iter().map(|d| d.spans.len()).sum()
}

pub fn cmd_detect(args: DetectArgs, config: &FileConfig) -> Result<(), CliError> {
    require_distinct(&args.input, &args.output)?;
    let docs = read_corpus(&args.input)?;
    let mut detector = match pick(&args.detectors, &config.detectors) {
        Some(names) => {
            let kinds = names
                .iter()
                .map(|n| n.trim().parse::<PatternKind>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(CliError::Usage)?;
            DetectorConfig::with_kinds(kinds)
        }
        None => DetectorConfig::default(),
    };
    if let Some(path) = pick(&args.gazetteer, &config.gazetteer) {
        detector.load_gazetteer(path)?;
    }
    let docs = match pick(&args.standoff, &config.standoff) {
        Some(path) => {
            let (docs, diagnostics) = ingest_standoff(&docs, &load_standoff(path)?)?;
            for d in &diagnostics {
                eprintln!("warning: standoff {d}");
            }
            docs
        }
        None => docs,
    };
    let out: Vec<Document> = docs.iter().map(|d| detect_document(d, &detector)).collect();
    write_corpus(&out, &args.output)?;
    println!("{} spans in {} documents", count_spans(&out), out.len());
    Ok(())
}

pub fn cmd_decide(args: DecideArgs, config: &FileConfig) -> Result<(), CliError> {
    require_distinct(&args.input, &args.output)?;
    let rules = rules(&args.rules, config)?;
    let roles = match pick(&args.roles, &config.roles) {
        Some(path) => RoleAssignments::load(path)?,
        None => RoleAssignments::new(),
    };
    let docs = read_corpus(&args.input)?;
    let decided = decide_corpus(&docs, &roles, &rules)?;
    write_corpus(&decided, &args.output)?;
    let mut counts: BTreeMap<Decision, usize> = Decision::ALL.iter().map(|d| (*d, 0)).collect();
    for span in decided.iter().flat_map(|d| &d.spans) {
        if let Some(d) = span.decision {
            *counts.entry(d).or_default() += 1;
        }
    }
    let summary: Vec<String> = counts.iter().map(|(d, n)| format!("{n} {}", d.as_str())).collect();
    println!("{} spans decided: {}", count_spans(&decided), summary.join(", "));
    Ok(())
}

pub fn cmd_pseudonymize(args: PseudonymizeArgs, config: &FileConfig) -> Result<(), CliError> {
    require_distinct(&args.input, &args.output)?;
    let strategy = parse_strategy(&args.strategy, config)?;
    let seed = Seed(pick(&args.seed, &config.seed).unwrap_or(0));
    let constraints = constraints(&args.pools, config)?;
    let ledger_path = pick(&args.ledger, &config.ledger);
    if strategy == Strategy::Realistic && ledger_path.is_none() {
        return Err(CliError::Usage("the REALISTIC strategy needs --ledger".into()));
    }
    let decided = read_corpus(&args.input)?;

    let lock = match (&ledger_path, strategy) {
        (Some(path), Strategy::Realistic) => Some(LedgerLock::acquire(path)?),
        _ => None,
    };
    let mut ledger = match &ledger_path {
        Some(path) if lock.is_some() || path.exists() => Some(Ledger::load_or_new(path)?),
        _ => None,
    };
    let writable = if lock.is_some() { ledger.as_mut() } else { None };
    let output = apply_corpus(&decided, strategy, writable, &constraints, seed)?;

    let leaks = leakage_scan(&decided, &output, ledger.as_ref())?;
    if !leaks.is_empty() {
        for v in &leaks {
            eprintln!("leak: {} [{}, {}) {:?} ({:?})", v.doc_id, v.start, v.end, v.surface, v.kind);
        }
        return Err(CliError::Leakage(format!(
            "{} leakage violation(s); no output written",
            leaks.len()
        )));
    }
    write_corpus(&output, &args.output)?;
    if let (Some(lock), Some(ledger)) = (&lock, &ledger) {
        ledger.save_held(lock)?;
    }
    println!(
        "{} documents, {} spans transformed with {strategy}",
        output.len(),
        decided
            .iter()
            .flat_map(|d| &d.spans)
            .filter(|s| s.decision != Some(Decision::Keep))
            .count()
    );
    Ok(())
}

pub fn cmd_audit(args: AuditArgs, config: &FileConfig) -> Result<(), CliError> {
    let strategy = parse_strategy(&args.strategy, config)?;
    let original = read_corpus(&args.original)?;
    let transformed = read_corpus(&args.transformed)?;
    let ledger_path = pick(&args.ledger, &config.ledger);
    let ledger = ledger_path.as_ref().map(Ledger::load).transpose()?;
    let mut report = audit(&original, &transformed, ledger.as_ref(), strategy == Strategy::Realistic)?;
    if let Some(path) = &ledger_path {
        let mut found = mentions(&transformed, &path.display().to_string());
        if let Ok(abs) = path.canonicalize() {
            found.extend(mentions(&transformed, &abs.display().to_string()));
        }
        found.sort();
        found.dedup();
        report.ledger_path_mentions = found;
    }
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Some(path) = &args.report {
        std::fs::write(path, format!("{json}\n")).map_err(CliError::io(path))?;
    }
    if args.json {
        println!("{json}");
    } else {
        print!("{}", report.render_text());
    }
    if report.passes() {
        Ok(())
    } else {
        Err(CliError::Violations("audit found violations".into()))
    }
}

pub fn cmd_stats(args: StatsArgs) -> Result<(), CliError> {
    let stats = entity_stats(&read_corpus(&args.input)?);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
    } else {
        let mut out = stats.render_split_table();
        let _ = writeln!(out);
        out.push_str(&stats.render_ner_table());
        let _ = writeln!(out);
        out.push_str(&stats.render_category_table());
        print!("{out}");
    }
    Ok(())
}

pub fn cmd_eval(args: EvalArgs, config: &FileConfig) -> Result<(), CliError> {
    if args.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let selected: Vec<Variant> = match &args.variants {
        Some(names) => names
            .iter()
            .map(|n| n.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(CliError::Usage)?,
        None => Variant::ALL.to_vec(),
    };
    let base = pick(&args.seed, &config.seed).unwrap_or(0);
    let constraints = constraints(&args.pools, config)?;
    let decided = read_corpus(&args.input)?;
    let mut variants = grid_variants(&decided, &constraints, Seed(base))?;
    variants.retain(|v, _| selected.contains(v) || *v == Variant::Original);
    let seeds: Vec<Seed> = (0..args.seeds).map(|i| Seed(base + i)).collect();
    let report = variant_grid(&variants, &standard_pairs(&selected), &seeds)?;
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(path, format!("{json}\n")).map_err(CliError::io(path))?;
    }
    print!("{}\n{}", report.render_train_table(), report.render_test_table());
    Ok(())
}

fn ledger_arg(flag: &Option<PathBuf>, config: &FileConfig) -> Result<PathBuf, CliError> {
    pick(flag, &config.ledger).ok_or_else(|| CliError::Usage("no ledger given (--ledger or config `ledger`)".into()))
}

pub fn cmd_ledger(cmd: LedgerCommand, config: &FileConfig) -> Result<(), CliError> {
    match cmd {
        LedgerCommand::Export { ledger, output } => {
            let ledger = Ledger::load(ledger_arg(&ledger, config)?)?;
            let text = export_entries(&ledger);
            match output {
                Some(path) => {
                    std::fs::write(&path, &text).map_err(CliError::io(&path))?;
                    println!("{} entries exported", ledger.len());
                }
                None => print!("{text}"),
            }
            Ok(())
        }
        LedgerCommand::Import { ledger, input } => {
            let path = ledger_arg(&ledger, config)?;
            let text = std::fs::read_to_string(&input).map_err(CliError::io(&input))?;
            let entries = parse_entries(&text)?;
            let lock = LedgerLock::acquire(&path)?;
            let mut ledger = Ledger::load_or_new(&path)?;
            let added = ledger.import(entries)?;
            ledger.save_held(&lock)?;
            println!("{added} entries imported, {} total", ledger.len());
            Ok(())
        }
        LedgerCommand::Diff { old, new, json } => {
            let d = diff(&Ledger::load(&old)?, &Ledger::load(&new)?);
            if json {
                println!("{}", serde_json::to_string_pretty(&d).expect("diff serializes"));
            } else {
                for e in &d.added {
                    println!("+ {:?} ({}) -> {:?}", e.original_surface, e.pii_category, e.replacement);
                }
                for e in &d.removed {
                    println!("- {:?} ({}) -> {:?}", e.original_surface, e.pii_category, e.replacement);
                }
                for (a, b) in &d.changed {
                    println!("~ {:?} ({}) {:?} -> {:?}", a.original_surface, a.pii_category, a.replacement, b.replacement);
                }
            }
            if d.is_empty() {
                Ok(())
            } else {
                Err(CliError::Violations(format!(
                    "ledgers differ: {} added, {} removed, {} changed",
                    d.added.len(),
                    d.removed.len(),
                    d.changed.len()
                )))
            }
        }
    }
}

pub fn cmd_serve(args: ServeArgs, config: &FileConfig) -> Result<(), CliError> {
    let ledger = ledger_arg(&args.ledger, config)?;
    let audit_log = pick(&args.audit_log, &config.serve.audit_log).unwrap_or_else(|| {
        let mut name = args.corpus.file_name().unwrap_or_default().to_os_string();
        name.push(".audit.jsonl");
        args.corpus.with_file_name(name)
    });
    let addr: SocketAddr = pick(&args.addr, &config.serve.addr)
        .unwrap_or_else(|| "127.0.0.1:8080".into())
        .parse()
        .map_err(|e| CliError::Usage(format!("invalid --addr: {e}")))?;
    let mut review = ReviewConfig::new(&args.corpus, ledger, audit_log);
    review.rules = rules(&args.rules, config)?;
    review.constraints = constraints(&args.pools, config)?;
    review.seed = Seed(pick(&args.seed, &config.seed).unwrap_or(0));
    review.lease = Duration::from_secs(60 * pick(&args.lease_minutes, &config.serve.lease_minutes).unwrap_or(15));
    review.static_dir = pick(&args.ui, &config.serve.ui);
    let service = Arc::new(ReviewService::open(review)?);
    let runtime = tokio::runtime::Runtime::new().map_err(|source| CliError::Io {
        path: "tokio runtime".into(),
        source,
    })?;
    eprintln!("review service listening on http://{addr}");
    runtime
        .block_on(redactor_review::serve(service, addr))
        .map_err(|source| CliError::Io {
            path: addr.to_string(),
            source,
        })
}
