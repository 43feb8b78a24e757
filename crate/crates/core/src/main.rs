use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use aspectsum::config::PipelineConfig;
use aspectsum::evaluation::GroupBy;
use aspectsum::gateway::BackendKind;
use aspectsum::pipeline::{default_methods, Pipeline};
use aspectsum::qagen::GENERIC_ASPECT;
use aspectsum::{Error, Result};

#[derive(Parser)]
#[command(name = "aspectsum", version, about = "Aspect-based book summarization evaluation pipeline")]
struct Cli {
    /// Pipeline config file (JSON).
    #[arg(long, global = true, default_value = "aspectsum.json")]
    config: PathBuf,

    /// Force-run stages even when artifacts with the current config digest
    /// already exist.
    #[arg(long, global = true)]
    force: bool,

    /// Use the scripted mock backend regardless of the config.
    #[arg(long, global = true)]
    mock: bool,

    /// Restrict to these book ids (comma-separated).
    #[arg(long, global = true, value_delimiter = ',')]
    books: Vec<String>,

    /// Restrict to these aspect names (comma-separated).
    #[arg(long, global = true, value_delimiter = ',')]
    aspects: Vec<String>,

    /// Override the accumulated-importance threshold for edge selection.
    #[arg(long, global = true)]
    min_importance: Option<u64>,

    /// Override the cap on selected edges.
    #[arg(long, global = true)]
    max_edges: Option<usize>,

    /// Override how many QAs each aspect retains.
    #[arg(long, global = true)]
    top_k: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read configured books and write the registry manifest.
    Ingest,
    /// Build the narrative knowledge graph per book.
    BuildGraph,
    /// Select high-importance edges, generate QA pairs, assign aspects.
    GenQa,
    /// Generate summaries.
    Summarize {
        /// hier | inc | naiverag (default: all three).
        #[arg(long)]
        method: Option<String>,
        /// Aspect name, ALL, or GENERIC.
        #[arg(long, default_value = "ALL")]
        aspect: String,
    },
    /// Answer each aspect's QAs from the summaries and score the answers.
    Evaluate {
        #[arg(long)]
        method: Option<String>,
        /// Answer aspect QAs from the GENERIC summary instead.
        #[arg(long)]
        generic: bool,
    },
    /// Aggregate persisted eval records into reports.
    Report {
        /// aspect | size | overall.
        #[arg(long, default_value = "overall")]
        group_by: String,
        /// Average per-book means instead of per-record means.
        #[arg(long)]
        weight_by_book: bool,
        /// Directory of <book_id>.txt reference summaries; also emits the
        /// generic-vs-reference comparison report.
        #[arg(long)]
        references: Option<PathBuf>,
    },
    /// Run every stage end to end.
    RunAll {
        #[arg(long)]
        method: Option<String>,
    },
}

fn methods_arg(method: &Option<String>) -> Result<Vec<String>> {
    match method {
        None => Ok(default_methods()),
        Some(m) => {
            if !default_methods().contains(m) {
                return Err(Error::InvalidInput(format!(
                    "unknown method {m:?}; expected one of hier, inc, naiverag"
                )));
            }
            Ok(vec![m.clone()])
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = PipelineConfig::load(&cli.config)?;
    if cli.mock {
        cfg.gateway.backend = BackendKind::Mock;
    }
    // Threshold overrides feed the digest, so overridden runs never mix
    // with artifacts from the file-level config.
    if let Some(v) = cli.min_importance {
        cfg.qagen.min_importance = v;
    }
    if let Some(v) = cli.max_edges {
        cfg.qagen.max_edges = v;
    }
    if let Some(v) = cli.top_k {
        cfg.qagen.top_k = v;
    }
    let mut pipeline = Pipeline::new(cfg, cli.force)?;
    if !cli.books.is_empty() {
        pipeline.books_filter = Some(cli.books.clone());
    }
    if !cli.aspects.is_empty() {
        pipeline.aspects_filter = Some(cli.aspects.clone());
    }

    match &cli.command {
        Command::Ingest => {
            pipeline.ingest()?;
        }
        Command::BuildGraph => pipeline.build_graphs()?,
        Command::GenQa => pipeline.gen_qa()?,
        Command::Summarize { method, aspect } => {
            let methods = methods_arg(method)?;
            let aspect_names: Vec<String> = match aspect.as_str() {
                "ALL" => pipeline.selected_aspects(),
                GENERIC_ASPECT => vec![GENERIC_ASPECT.to_string()],
                name => vec![name.to_string()],
            };
            pipeline.summarize(&methods, &aspect_names)?;
        }
        Command::Evaluate { method, generic } => {
            let methods = methods_arg(method)?;
            pipeline.evaluate(&methods, *generic)?;
        }
        Command::Report {
            group_by,
            weight_by_book,
            references,
        } => {
            let group = GroupBy::parse(group_by)?;
            let text = pipeline.report(group, *weight_by_book)?;
            print!("{text}");
            if let Some(dir) = references {
                let text = pipeline.report_references(dir)?;
                print!("{text}");
            }
        }
        Command::RunAll { method } => {
            let methods = methods_arg(method)?;
            pipeline.run_all(&methods)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!(
                "{}",
                json!({"error": err.kind(), "message": err.to_string()})
            );
            ExitCode::FAILURE
        }
    }
}
