use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use swan_audit::io::{
    compare_corpus, load_corpus, read_corpus, run_audit, to_jsonl, LoadError, ReportFormat,
    RunConfig,
};
use swan_audit::stochastic::{enumerate_paths, DEFAULT_PATH_CAP};
use swan_audit::{Aggregation, AuditOptions, SwanError, UndefinedPolicy};

#[derive(Parser)]
#[command(
    name = "swan",
    version,
    about = "Weighted nugget scores for auditing conversational systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every input and list all violations.
    Validate(Inputs),
    /// Compute per-criterion WAN and SWAN and write reports.
    Score(ScoreArgs),
    /// Compare systems that share seed turns.
    Compare(ScoreArgs),
    /// List the root-to-leaf paths of each conversation tree as JSON Lines.
    Paths(Inputs),
    /// Describe the input file formats.
    Formats,
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Sessions file (JSON Lines). Repeatable.
    #[arg(long)]
    sessions: Vec<PathBuf>,
    /// Conversation tree file (JSON). Repeatable.
    #[arg(long)]
    trees: Vec<PathBuf>,
    /// Score records (JSON Lines). Repeatable.
    #[arg(long)]
    scores: Vec<PathBuf>,
    #[arg(long)]
    mentions: Vec<PathBuf>,
    #[arg(long)]
    dissatisfaction: Vec<PathBuf>,
    /// Path enumeration limit per tree.
    #[arg(long, default_value_t = DEFAULT_PATH_CAP)]
    max_paths: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregationArg {
    Pooled,
    Macro,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Strict,
    SkipUndefined,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Markdown,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_enum, default_value = "pooled")]
    aggregation: AggregationArg,
    #[arg(long, value_enum, default_value = "strict")]
    policy: PolicyArg,
    /// Output directory. Without it the JSON report goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "json")]
    format: Vec<FormatArg>,
    /// Worst contributions listed per criterion.
    #[arg(long, default_value_t = 10)]
    top_n: usize,
}

impl ScoreArgs {
    fn config(&self) -> RunConfig {
        let mut cfg = self.inputs.config();
        cfg.options = AuditOptions {
            aggregation: match self.aggregation {
                AggregationArg::Pooled => Aggregation::Pooled,
                AggregationArg::Macro => Aggregation::Macro,
            },
            policy: match self.policy {
                PolicyArg::Strict => UndefinedPolicy::Strict,
                PolicyArg::SkipUndefined => UndefinedPolicy::SkipUndefined,
            },
        };
        cfg.out = self.out.clone();
        cfg.formats = self
            .format
            .iter()
            .map(|f| match f {
                FormatArg::Json => ReportFormat::Json,
                FormatArg::Csv => ReportFormat::Csv,
                FormatArg::Markdown => ReportFormat::Markdown,
            })
            .collect();
        cfg.formats.sort();
        cfg.formats.dedup();
        cfg.top_n = self.top_n;
        cfg
    }
}

impl Inputs {
    fn config(&self) -> RunConfig {
        RunConfig {
            sessions: self.sessions.clone(),
            trees: self.trees.clone(),
            schema: self.schema.clone(),
            scores: self.scores.clone(),
            mentions: self.mentions.clone(),
            dissatisfaction: self.dissatisfaction.clone(),
            max_paths: self.max_paths,
            ..RunConfig::default()
        }
    }
}

const FORMATS: &str = "\
schema (JSON): {\"criteria\": [{\"name\", \"weight\", \"level\": \"nugget\"|\"turn\", \"kinds\": [\"F\",\"O\"],
  \"include_user_nuggets\", \"weighting\": {\"scheme\", \"position_mode\", \"L\", \"base\", \"anchoring\"},
  \"turn_level_mode\": \"synthetic\"|\"paper_literal\", \"custom\", \"derived\": {\"scorer\": ...}}]}
sessions (JSON Lines): {\"session_id\", \"system_id\", \"seed_id\", \"turns\": [{\"index\", \"speaker\": \"user\"|\"system\",
  \"text\", \"nuggets\": [{\"nugget_id\", \"kind\": \"F\"|\"O\", \"text\", \"dialogue_act\", \"start\"}]}]}
trees (JSON): {\"tree_id\", \"system_id\", \"seed_id\", \"root\", \"nodes\": {id: {\"turn\", \"children\": [{\"node_id\", \"probability\"}]}}}
scores (JSON Lines): {\"criterion\", \"session_id\", \"turn_index\" | \"node_id\", \"nugget_id\", \"score\"}
mentions (JSON Lines): {\"session_id\", \"nugget_id\", \"attribute_set\", \"counts\": {group: count}}
dissatisfaction (JSON Lines): {\"session_id\", \"turn_index\" | \"node_id\", \"value\"}
";

/// Exit 1: the corpus or its scores are unusable. Exit 2: the invocation is.
fn fail(err: anyhow::Error) -> ExitCode {
    eprintln!("error: {err:#}");
    if let Some(LoadError::Invalid(report)) = err.downcast_ref::<LoadError>() {
        eprint!("{report}");
        return ExitCode::from(1);
    }
    match err.downcast_ref::<LoadError>() {
        Some(_) => ExitCode::from(2),
        None if err.downcast_ref::<SwanError>().is_some() => ExitCode::from(1),
        None => ExitCode::from(2),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Formats => print!("{FORMATS}"),
        Command::Validate(inputs) => {
            let corpus = read_corpus(&inputs.config())?;
            let report = corpus.validate();
            if !report.is_ok() {
                return Err(LoadError::Invalid(report).into());
            }
            println!(
                "ok: {} session(s), {} tree(s), {} criteria",
                corpus.sessions.len(),
                corpus.trees.len(),
                corpus.schema.criteria.len()
            );
        }
        Command::Paths(inputs) => {
            let corpus = load_corpus(&inputs.config())?;
            let mut records = Vec::new();
            for tree in &corpus.trees {
                for p in enumerate_paths(tree, inputs.max_paths)? {
                    records.push(serde_json::json!({
                        "tree_id": tree.tree_id,
                        "session_id": p.session.session_id,
                        "nodes": p.nodes,
                        "probability": p.probability,
                    }));
                }
            }
            print!("{}", to_jsonl(&records));
        }
        Command::Score(args) => {
            let cfg = args.config();
            let corpus = load_corpus(&cfg)?;
            let report = run_audit(&corpus, cfg.options, cfg.top_n, cfg.max_paths)?;
            match &cfg.out {
                Some(dir) => {
                    for path in report
                        .write(dir, &cfg.formats)
                        .with_context(|| format!("writing reports to {}", dir.display()))?
                    {
                        eprintln!("wrote {}", path.display());
                    }
                }
                None => print!("{}", report.to_json()),
            }
        }
        Command::Compare(args) => {
            let cfg = args.config();
            let corpus = load_corpus(&cfg)?;
            let table = compare_corpus(
                &corpus.sessions,
                &corpus.schema,
                &corpus.annotations,
                cfg.options,
            )?;
            match &cfg.out {
                Some(dir) => {
                    fs::create_dir_all(dir)
                        .with_context(|| format!("creating {}", dir.display()))?;
                    for f in &cfg.formats {
                        let (name, body) = match f {
                            ReportFormat::Markdown => ("comparison.md", table.to_markdown()),
                            _ => ("comparison.json", table.to_json()),
                        };
                        let path = dir.join(name);
                        fs::write(&path, body)
                            .with_context(|| format!("writing {}", path.display()))?;
                        eprintln!("wrote {}", path.display());
                    }
                }
                None => {
                    if cfg.formats.contains(&ReportFormat::Markdown) {
                        print!("{}", table.to_markdown());
                    } else {
                        print!("{}", table.to_json());
                    }
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
