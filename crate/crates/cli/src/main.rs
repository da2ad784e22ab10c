use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use csk_core::bins::{load_bins, BinRegistry};
use csk_core::client::{ClientConfig, ConceptNetClient, CrawlOptions, UreqTransport};
use csk_core::eval::{
    read_ground_truth, read_trial_specs, run_accuracy, run_adaptability, run_consistency,
    run_explainability_audit, write_accuracy, write_adaptability, write_audit, write_consistency,
    ClassifierEnv, ClassifierRegistry, TrialSpec,
};
use csk_core::kg::{
    load_dump, load_index, load_index_with_source, save_index, ConceptId, KnowledgeGraph,
};
use csk_core::pipeline::{replay, run, write_log, PipelineConfig, SortState};
use csk_core::reasoner::{classify, classify_focused, parse_relations, ConfigFile};

/// Sorts detected objects into context bins by reasoning over a
/// commonsense knowledge graph.
#[derive(Parser)]
#[command(name = "organize", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or inspect a compiled graph index.
    #[command(subcommand)]
    Index(IndexCommand),
    /// Crawl the ConceptNet API around seed concepts into an index.
    Fetch(FetchArgs),
    /// Classify one object against a bins file.
    Classify(ClassifyArgs),
    /// Process a detection stream and write the decision log.
    Run(RunArgs),
    /// Rebuild bin contents from a decision log.
    Replay(ReplayArgs),
    /// Run an evaluation protocol and write reports.
    Eval(EvalArgs),
}

#[derive(Subcommand)]
enum IndexCommand {
    /// Compile an assertions TSV (plain or gzip) into an index file.
    Build {
        #[arg(long)]
        dump: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `all` or a comma-separated relation list.
        #[arg(long, default_value = "all")]
        relations: String,
    },
    /// Print index metadata.
    Info {
        index: PathBuf,
        /// Warn when the index was not built from this dump.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

#[derive(Args)]
struct FetchArgs {
    /// Comma-separated seed concepts.
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<String>,
    #[arg(long, default_value_t = 1)]
    radius: usize,
    #[arg(long)]
    out: PathBuf,
    /// Refetch even when cached.
    #[arg(long)]
    refresh: bool,
    /// Serve from the cache only.
    #[arg(long)]
    offline: bool,
    /// Abort on the first failed fetch.
    #[arg(long)]
    stop_on_error: bool,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    bins: PathBuf,
    /// Restrict the choice to these bin ids (comma-separated).
    #[arg(long, value_delimiter = ',')]
    focus: Vec<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    object: String,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    bins: PathBuf,
    #[arg(long)]
    stream: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Classify every detection, even repeated concepts.
    #[arg(long)]
    no_dedup: bool,
    #[arg(long)]
    min_confidence: Option<f64>,
    /// Print a one-line summary per frame.
    #[arg(long)]
    annotate: bool,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    bins: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Protocol {
    Consistency,
    Accuracy,
    Adaptability,
    Audit,
}

#[derive(Args)]
struct EvalArgs {
    protocol: Protocol,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    specs: Option<PathBuf>,
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Classifier under test.
    #[arg(long, default_value = "csk")]
    classifier: String,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn pipeline_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        None => Ok(PipelineConfig::default()),
        Some(p) => {
            let file = ConfigFile::read(p).with_context(|| format!("reading {}", p.display()))?;
            PipelineConfig::from_file(&file).with_context(|| format!("in {}", p.display()))
        }
    }
}

fn graph(path: &Path) -> Result<KnowledgeGraph> {
    load_index(path).with_context(|| format!("loading index {}", path.display()))
}

fn bins(path: &Path) -> Result<BinRegistry> {
    load_bins(path).with_context(|| format!("loading bins {}", path.display()))
}

fn print_state(out: &mut impl Write, state: &SortState) -> io::Result<()> {
    for (bin, items) in &state.bins {
        let labels: Vec<&str> = items.iter().map(|i| i.label.as_str()).collect();
        writeln!(out, "{bin} ({}): {}", items.len(), labels.join(", "))?;
    }
    let labels: Vec<&str> = state.unmatched.iter().map(|i| i.label.as_str()).collect();
    writeln!(out, "unmatched ({}): {}", state.unmatched.len(), labels.join(", "))?;
    writeln!(out, "frames processed: {}", state.frames_processed)
}

fn index_cmd(cmd: IndexCommand) -> Result<()> {
    match cmd {
        IndexCommand::Build {
            dump,
            out,
            relations,
        } => {
            let filter = parse_relations("relations", &relations)?;
            let t = Instant::now();
            let g = load_dump(&dump, &filter)
                .with_context(|| format!("loading dump {}", dump.display()))?;
            save_index(&g, &out).with_context(|| format!("writing {}", out.display()))?;
            let s = &g.metadata().stats;
            println!(
                "{} nodes, {} edges from {} rows ({} filtered, {} malformed) in {:.1?}",
                g.node_count(),
                g.edge_count(),
                s.rows,
                s.filtered(),
                s.malformed,
                t.elapsed()
            );
        }
        IndexCommand::Info { index, dump } => {
            let g = match &dump {
                Some(d) => load_index_with_source(&index, d),
                None => load_index(&index),
            }
            .with_context(|| format!("loading index {}", index.display()))?;
            let m = g.metadata();
            println!("nodes: {}", g.node_count());
            println!("edges: {}", g.edge_count());
            println!("relations: {}", g.relations().len());
            println!("source digest: {}", m.source_digest);
            println!("built at: {}", m.built_at);
            println!(
                "rows: {} accepted: {} non-english: {} non-positive: {} relation-filtered: {} malformed: {} duplicates: {}",
                m.stats.rows,
                m.stats.accepted,
                m.stats.non_english,
                m.stats.non_positive_weight,
                m.stats.relation_filtered,
                m.stats.malformed,
                m.stats.duplicates_collapsed
            );
            if let Some(w) = &m.digest_warning {
                eprintln!("warning: {w}");
            }
        }
    }
    Ok(())
}

fn fetch_cmd(a: FetchArgs) -> Result<()> {
    let mut cfg = ClientConfig::from_env();
    cfg.network = !a.offline;
    cfg.refresh = a.refresh;
    let seeds = a
        .seeds
        .iter()
        .map(|s| ConceptId::new(s))
        .collect::<Result<Vec<_>, _>>()?;
    let client = ConceptNetClient::new(cfg, Box::new(UreqTransport::default()));
    let sub = client.build_subgraph(
        &seeds,
        a.radius,
        CrawlOptions {
            continue_on_error: !a.stop_on_error,
        },
    )?;
    save_index(&sub.graph, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    println!(
        "{} nodes, {} edges from {} fetched concepts ({} non-English edges dropped)",
        sub.graph.node_count(),
        sub.graph.edge_count(),
        sub.fetched.len(),
        sub.graph.metadata().stats.non_english
    );
    for m in &sub.misses {
        eprintln!("no edges for `{m}`");
    }
    for (c, e) in &sub.errors {
        eprintln!("fetch failed for `{c}`: {e}");
    }
    Ok(())
}

fn classify_cmd(a: ClassifyArgs) -> Result<()> {
    let cfg = pipeline_config(a.config.as_deref())?;
    let g = graph(&a.graph)?;
    let bins = bins(&a.bins)?;
    let object = ConceptId::new(&a.object)?;
    let d = if a.focus.is_empty() {
        classify(&g, &object, &bins, &cfg.search)?
    } else {
        classify_focused(&g, &object, &bins, &a.focus, &cfg.search)?
    };
    println!("object: {}", d.object);
    println!("reason: {}", d.reason.as_str());
    if let (Some(bin), Some(score), Some(path)) = (&d.chosen_bin, d.score, d.explanation()) {
        println!("bin: {bin}");
        println!("score: {score}");
        println!("path: {path}");
    }
    for b in &d.per_bin_ranking {
        match (&b.path, b.score) {
            (Some(p), Some(s)) => println!("  {}\t{s}\t{}", b.bin_id, p.render()),
            _ => println!("  {}\t-\t(no path)", b.bin_id),
        }
    }
    Ok(())
}

fn run_cmd(a: RunArgs) -> Result<()> {
    let mut cfg = pipeline_config(a.config.as_deref())?;
    if a.no_dedup {
        cfg.dedup = false;
    }
    if let Some(c) = a.min_confidence {
        if !(0.0..=1.0).contains(&c) {
            bail!("--min-confidence must be in [0, 1]");
        }
        cfg.min_confidence = c;
    }
    if a.annotate {
        cfg.annotate = true;
    }
    let g = graph(&a.graph)?;
    let bins = bins(&a.bins)?;
    let out = run(open(&a.stream)?, &bins, &g, &cfg)?;

    let file = File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_log(&out.records, BufWriter::new(file))?;

    let stdout = io::stdout();
    let mut w = stdout.lock();
    for s in &out.frame_summaries {
        writeln!(w, "{s}")?;
    }
    print_state(&mut w, &out.state)?;
    writeln!(
        w,
        "decisions: {}  below confidence: {}  bad lines: {}",
        out.records.len(),
        out.below_confidence,
        out.issues.len()
    )?;
    for i in &out.issues {
        eprintln!("stream line {}: {}", i.line, i.message);
    }
    Ok(())
}

fn replay_cmd(a: ReplayArgs) -> Result<()> {
    let bins = bins(&a.bins)?;
    let state = replay(open(&a.log)?, &bins)?;
    print_state(&mut io::stdout().lock(), &state)?;
    Ok(())
}

fn specs(path: Option<&Path>) -> Result<Vec<TrialSpec>> {
    let path = path.context("--specs is required for this protocol")?;
    read_trial_specs(open(path)?).with_context(|| format!("in {}", path.display()))
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let cfg = pipeline_config(a.config.as_deref())?;
    let g = Arc::new(graph(&a.graph)?);
    let env = ClassifierEnv {
        graph: Some(g.clone()),
        search: cfg.search.clone(),
    };
    let make = || ClassifierRegistry::builtin().create(&a.classifier, &env);
    match a.protocol {
        Protocol::Consistency => {
            let r = run_consistency(&specs(a.specs.as_deref())?, make()?.as_ref())?;
            write_consistency(&a.out, &r)?;
            println!(
                "{} trials, {} fully consistent, {} failed, mean consistency {:.3}",
                r.trials.len(),
                r.fully_consistent(),
                r.failed(),
                r.mean_consistency()
            );
        }
        Protocol::Accuracy => {
            let truth_path = a.truth.as_deref().context("--truth is required for accuracy")?;
            let truth = read_ground_truth(open(truth_path)?)
                .with_context(|| format!("in {}", truth_path.display()))?;
            let r = run_accuracy(&specs(a.specs.as_deref())?, &truth, make()?.as_ref())?;
            write_accuracy(&a.out, &r)?;
            println!("accuracy {}/{} = {:.3}", r.correct, r.total, r.accuracy);
        }
        Protocol::Adaptability => {
            let mut reports = Vec::new();
            for s in specs(a.specs.as_deref())? {
                // a fresh classifier per object keeps stateful stubs independent
                let r = run_adaptability(&s.object, &s.contexts, s.repetitions, make()?.as_ref())?;
                println!(
                    "{}: preferred {} -> {}",
                    r.object,
                    r.preferred.as_deref().unwrap_or("(none)"),
                    r.verdict.as_str()
                );
                reports.push(r);
            }
            write_adaptability(&a.out, &reports)?;
        }
        Protocol::Audit => {
            let log = a.log.as_deref().context("--log is required for audit")?;
            let r = run_explainability_audit(open(log)?, &g, cfg.search.strategy.as_ref())?;
            write_audit(&a.out, &r)?;
            println!(
                "{} records, {} matched, {} passed ({:.1}%)",
                r.records,
                r.matched,
                r.passed,
                100.0 * r.pass_rate()
            );
        }
    }
    println!("reports written to {}", a.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Index(c) => index_cmd(c),
        Command::Fetch(a) => fetch_cmd(a),
        Command::Classify(a) => classify_cmd(a),
        Command::Run(a) => run_cmd(a),
        Command::Replay(a) => replay_cmd(a),
        Command::Eval(a) => eval_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
