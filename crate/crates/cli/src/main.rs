use std::collections::BTreeSet;
use std::panic;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use corpuslab::corpus::Strictness;
use corpuslab::featuregraph::EdgeType;
use corpuslab::fixture::{write_fixture, FixtureConfig};
use corpuslab::par::ExecMode;
use corpuslab::pathcontexts::{PathConfig, RenderOptions};
use corpuslab::taskgen::{Filter, Split, SplitFracs};
use corpuslab::tokenstats::RatioMode;
use corpuslab::workspace::{
    Predictor, ReprSettings, ReprType, Study, TaskSpec, TokenStatsConfig, Workspace, WorkspaceConfig,
};
use corpuslab::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

/// Corpus workbench: catalog source projects, extract representations and
/// properties, build call graphs, generate task datasets and run the
/// tokenizer and window studies.
#[derive(Parser, Debug)]
#[command(name = "corpuslab", version)]
struct Cli {
    /// Output workspace directory.
    #[arg(long, short = 'w', env = "CORPUSLAB_WORKSPACE", default_value = "workspace", global = true)]
    workspace: PathBuf,

    /// Corpus root (one subdirectory per project). Defaults to the root
    /// recorded by the last catalog run in the workspace.
    #[arg(long, short = 'c', global = true)]
    corpus: Option<PathBuf>,

    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,

    /// Worker threads (0 = all cores).
    #[arg(long, short = 'j', default_value_t = 0, global = true)]
    threads: usize,

    /// Abort on the first unparseable file instead of skipping it.
    #[arg(long, global = true)]
    fail_fast: bool,

    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the bundled synthetic corpus to a directory.
    Fixture {
        dir: PathBuf,
        /// Class counts of the generated projects.
        #[arg(long, value_delimiter = ',', default_values_t = [30usize, 60, 110])]
        inflate: Vec<usize>,
    },
    /// Catalogue every project under the corpus root.
    Catalog,
    /// Add one project and regenerate its artifacts.
    AddProject {
        root: PathBuf,
        #[arg(long)]
        replace: bool,
    },
    /// Extract representations.
    Repr(ReprArgs),
    /// Compute the parser-based properties.
    Metrics,
    /// Build the call graph and its connectivity properties.
    Callgraph,
    /// Import an externally computed property table (method_id,value).
    PropsImport {
        #[arg(long)]
        key: String,
        #[arg(long)]
        file: PathBuf,
    },
    /// Generate a task dataset.
    Taskgen(TaskgenArgs),
    /// Train vocabularies and compute ratios, sizes and fit tables.
    Tokenstats {
        #[arg(long, default_value_t = 1024)]
        vocab_size: usize,
        /// Pool token counts instead of averaging per-method ratios.
        #[arg(long)]
        pooled: bool,
    },
    /// Emit a study report.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct ReprArgs {
    /// Comma-separated built-in types (TEXT,TKNA,TKNB,ASTS,C2VC,C2SQ,FTGR).
    #[arg(long, value_delimiter = ',', conflicts_with = "derive", required_unless_present = "derive")]
    types: Vec<ReprType>,
    /// Name of a new representation made by filtering FTGR edges.
    #[arg(long, requires = "keep")]
    derive: Option<String>,
    /// Edge types kept by --derive.
    #[arg(long, value_delimiter = ',')]
    keep: Vec<EdgeType>,
    #[arg(long, default_value_t = PathConfig::default().max_length)]
    max_length: usize,
    #[arg(long, default_value_t = PathConfig::default().max_width)]
    max_width: usize,
    #[arg(long, default_value_t = PathConfig::default().max_contexts)]
    max_contexts: usize,
    /// Subtoken-normalize identifier terminals in C2VC.
    #[arg(long)]
    normalize_identifiers: bool,
}

#[derive(Args, Debug)]
struct TaskgenArgs {
    #[command(subcommand)]
    task: TaskCommand,
    /// Train/valid/test fractions.
    #[arg(long, default_value = "0.8/0.05/0.15", global = true)]
    fracs: SplitFracs,
    /// Dataset directory name under tasks/.
    #[arg(long, global = true)]
    name: Option<String>,
}

#[derive(Subcommand, Debug)]
enum TaskCommand {
    /// Predict a property from a representation.
    Property {
        #[arg(long)]
        key: String,
        /// Predicates such as SLOC>=5; all must hold.
        #[arg(long = "filter")]
        filters: Vec<Filter>,
        #[arg(long)]
        balance: bool,
        #[arg(long, default_value = "TKNA")]
        repr: String,
    },
    /// Method-call completion with one masked call site per method.
    CallMask {
        #[arg(long)]
        include_constructors: bool,
        /// Append callee names within this many hops (0 or 1).
        #[arg(long, default_value_t = 0)]
        context_hops: usize,
        /// Keep the masked site's own callee name in the context.
        #[arg(long)]
        keep_masked_name: bool,
    },
    /// Argument-swap detection.
    Mutation {
        #[arg(long, default_value_t = 0.5)]
        p_mutate: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StudyKind {
    Calls,
    Windows,
    Bias,
    Eval,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Baseline {
    MostFrequent,
    Unigram,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    study: StudyKind,
    /// calls: leave constructor invocations out of the distribution.
    #[arg(long)]
    exclude_constructors: bool,
    /// bias: SLOC bin width.
    #[arg(long, default_value_t = 5)]
    x_width: i64,
    /// bias: CMPX bin width.
    #[arg(long, default_value_t = 1)]
    y_width: i64,
    /// eval: task directory name.
    #[arg(long)]
    task: Option<String>,
    /// eval: built-in predictor.
    #[arg(long, conflicts_with = "predictions")]
    baseline: Option<Baseline>,
    /// eval: prediction file (sample_id,prediction).
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    split: Split,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn workspace(cli: &Cli) -> Result<Workspace, Error> {
    let corpus = match &cli.corpus {
        Some(c) => c.clone(),
        None => Workspace::recorded_corpus_root(&cli.workspace)
            .ok_or_else(|| usage("no corpus recorded in the workspace; pass --corpus"))?,
    };
    let mut cfg = WorkspaceConfig::new(corpus, &cli.workspace);
    cfg.seed = cli.seed;
    cfg.threads = cli.threads;
    cfg.strictness = if cli.fail_fast { Strictness::FailFast } else { Strictness::SkipUnparseable };
    cfg.exec = if cli.sequential { ExecMode::Sequential } else { ExecMode::Parallel };
    Workspace::new(cfg)
}

fn run(cli: &Cli) -> Result<Value, Error> {
    match &cli.command {
        Command::Fixture { dir, inflate } => {
            let cfg = FixtureConfig { inflate: inflate.clone() };
            write_fixture(dir, &cfg)?;
            Ok(json!({ "command": "fixture", "dir": dir.display().to_string(), "inflate": inflate }))
        }
        Command::Catalog => workspace(cli)?.catalog(),
        Command::AddProject { root, replace } => workspace(cli)?.add_project(root, *replace),
        Command::Repr(a) => {
            let ws = workspace(cli)?;
            match &a.derive {
                Some(name) => ws.derive_repr(name, &a.keep.iter().copied().collect::<BTreeSet<_>>()),
                None => {
                    let settings = ReprSettings {
                        paths: PathConfig {
                            max_length: a.max_length,
                            max_width: a.max_width,
                            max_contexts: a.max_contexts,
                        },
                        render: RenderOptions {
                            normalize_identifiers: a.normalize_identifiers,
                        },
                    };
                    ws.repr(&a.types, &settings)
                }
            }
        }
        Command::Metrics => workspace(cli)?.metrics(),
        Command::Callgraph => workspace(cli)?.callgraph(),
        Command::PropsImport { key, file } => workspace(cli)?.props_import(key, file),
        Command::Taskgen(a) => {
            let spec = match &a.task {
                TaskCommand::Property {
                    key,
                    filters,
                    balance,
                    repr,
                } => TaskSpec::Property {
                    key: key.clone(),
                    filters: filters.clone(),
                    balance: *balance,
                    repr: repr.clone(),
                },
                TaskCommand::CallMask {
                    include_constructors,
                    context_hops,
                    keep_masked_name,
                } => TaskSpec::CallMask {
                    include_constructors: *include_constructors,
                    context_hops: *context_hops,
                    exclude_masked: !keep_masked_name,
                },
                TaskCommand::Mutation { p_mutate } => TaskSpec::Mutation { p_mutate: *p_mutate },
            };
            workspace(cli)?.taskgen(&spec, a.fracs, a.name.as_deref())
        }
        Command::Tokenstats { vocab_size, pooled } => workspace(cli)?.tokenstats(&TokenStatsConfig {
            vocab_size: *vocab_size,
            ratio_mode: if *pooled { RatioMode::Pooled } else { RatioMode::PerMethod },
        }),
        Command::Report(a) => {
            let study = match a.study {
                StudyKind::Calls => Study::Calls {
                    include_constructors: !a.exclude_constructors,
                },
                StudyKind::Windows => Study::Windows,
                StudyKind::Bias => Study::Bias {
                    x_width: a.x_width,
                    y_width: a.y_width,
                },
                StudyKind::Eval => {
                    let task = a.task.clone().ok_or_else(|| usage("--study eval needs --task"))?;
                    let predictor = match (&a.predictions, a.baseline) {
                        (Some(p), _) => Predictor::File(p.clone()),
                        (None, Some(Baseline::Unigram)) => Predictor::Unigram,
                        (None, _) => Predictor::MostFrequent,
                    };
                    Study::Eval {
                        task,
                        predictor,
                        split: a.split,
                    }
                }
            };
            workspace(cli)?.report(&study)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_INPUT,
    }
}

fn emit_error(code: u8, message: &str) -> ExitCode {
    eprintln!("error: {message}");
    println!("{}", json!({ "status": "error", "exit_code": code, "error": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            let first = e.to_string().lines().next().unwrap_or_default().to_string();
            println!("{}", json!({ "status": "error", "exit_code": EXIT_USAGE, "error": first }));
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let outcome = panic::catch_unwind(|| run(&cli));
    match outcome {
        Ok(Ok(mut summary)) => {
            summary["status"] = json!("ok");
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Ok(Err(e)) => emit_error(exit_code(&e), &e.to_string()),
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "internal error".into());
            emit_error(EXIT_INTERNAL, &format!("internal: {msg}"))
        }
    }
}
