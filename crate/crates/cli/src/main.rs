use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};
use etma_core::document::{
    directives_from_json, directives_to_json, model_from_json, model_to_json,
    partition_from_json, probs_from_json, probs_to_json, tree_from_json, tree_to_json,
};
use etma_core::model::RESIDUAL_OBLIGATION;
use etma_core::oracle::DEFAULT_ENUMERATION_CAP;
use etma_core::render::paths_report_with_table;
use etma_core::{
    add_parallel_redundancy, apply_reduction, enumerate_paths, generate_complete,
    histogram_data, oracle_brute_force, parse_index_ranges, partition, partition_probability,
    paths_report, redundant_table, to_dot, validate_model, validate_probabilities, EventTree,
    LabelStyle, PartitionQuery, Probabilities, RenderOptions, StateLabel, SystemModel,
    ValidationReport,
};

/// Event tree modeling and analysis.
#[derive(Parser)]
#[command(name = "etma", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model and, optionally, a probability table.
    Validate {
        model: PathBuf,
        probs: Option<PathBuf>,
    },
    /// Build the complete event tree of a model.
    Generate {
        model: PathBuf,
        #[command(flatten)]
        out: TreeOutputs,
    },
    /// Apply reduction directives to a tree.
    Reduce {
        tree: PathBuf,
        directives: PathBuf,
        #[command(flatten)]
        out: TreeOutputs,
    },
    /// Split a tree's paths into a selected set and its complement.
    Partition {
        tree: PathBuf,
        #[command(flatten)]
        selection: Selection,
    },
    /// Probability of a partition of a tree's paths.
    Eval {
        tree: PathBuf,
        probs: PathBuf,
        #[command(flatten)]
        selection: Selection,
        /// Cross-check against brute-force enumeration of the complete space.
        #[arg(long)]
        oracle: bool,
        /// Write a `label,probability_percent` CSV row here.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
        /// Row label for the CSV (defaults to the partition source).
        #[arg(long)]
        label: Option<String>,
        /// Print every path with its probability first.
        #[arg(long)]
        paths: bool,
    },
    /// Duplicate a two-state component in parallel and re-evaluate.
    Whatif {
        model: PathBuf,
        directives: PathBuf,
        #[arg(long, value_name = "COMPONENT")]
        duplicate: String,
        #[arg(long, value_name = "FILE")]
        probs: Option<PathBuf>,
        /// Partition file evaluated on the new tree (repeatable).
        #[arg(long, value_name = "FILE")]
        partition: Vec<PathBuf>,
        /// Index list such as `3,5,7-10` evaluated on the new tree (repeatable).
        #[arg(long, value_name = "LIST")]
        indices: Vec<String>,
        #[arg(long, value_name = "FILE")]
        out_model: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        out_directives: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        out_probs: Option<PathBuf>,
        #[command(flatten)]
        out: TreeOutputs,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Session directory; sessions are kept in memory when unset.
        #[arg(long, env = "ETMA_DATA_DIR")]
        data_dir: Option<PathBuf>,
        /// Origin allowed to make cross-origin requests.
        #[arg(long)]
        cors_origin: Option<String>,
    },
}

#[derive(Args)]
struct TreeOutputs {
    /// Write the tree document here.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Write a Graphviz rendering here.
    #[arg(long, value_name = "FILE")]
    dot: Option<PathBuf>,
    /// Print the path listing to stdout.
    #[arg(long)]
    paths: bool,
}

#[derive(Args)]
struct Selection {
    /// Partition document.
    partition: Option<PathBuf>,
    /// Index list such as `3,5,7-10`.
    #[arg(long, value_name = "LIST", conflicts_with_all = ["partition", "contains_all", "contains_any"])]
    indices: Option<String>,
    /// Paths holding every listed event, e.g. `CB1=F,CB2=F`.
    #[arg(long, value_name = "LABELS", conflicts_with_all = ["partition", "contains_any"])]
    contains_all: Option<String>,
    /// Paths holding any listed event.
    #[arg(long, value_name = "LABELS", conflicts_with = "partition")]
    contains_any: Option<String>,
}

enum Kind {
    Validation,
    Usage,
    Internal,
}

struct Failure {
    kind: Kind,
    error: anyhow::Error,
}

type CliResult<T> = Result<T, Failure>;

trait Classify<T> {
    fn or_invalid(self) -> CliResult<T>;
    fn or_internal(self) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn or_invalid(self) -> CliResult<T> {
        self.map_err(|e| Failure {
            kind: Kind::Validation,
            error: e.into(),
        })
    }

    fn or_internal(self) -> CliResult<T> {
        self.map_err(|e| Failure {
            kind: Kind::Internal,
            error: e.into(),
        })
    }
}

fn usage(error: anyhow::Error) -> Failure {
    Failure {
        kind: Kind::Usage,
        error,
    }
}

fn invalid(error: anyhow::Error) -> Failure {
    Failure {
        kind: Kind::Validation,
        error,
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| usage(anyhow!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents)
        .map_err(|e| anyhow!("cannot write {}: {e}", path.display()))
        .or_internal()
}

fn load_tree(path: &Path) -> CliResult<EventTree> {
    tree_from_json(&read(path)?).or_invalid()
}

fn load_model(path: &Path) -> CliResult<SystemModel> {
    let model = model_from_json(&read(path)?).or_invalid()?;
    fail_on_errors("model", &validate_model(&model))?;
    Ok(model)
}

fn load_table(path: &Path, model: &SystemModel) -> CliResult<Probabilities> {
    let table = probs_from_json(&read(path)?).or_invalid()?;
    fail_on_errors("probability table", &validate_probabilities(model, &table))?;
    Ok(table)
}

fn fail_on_errors(what: &str, report: &ValidationReport) -> CliResult<()> {
    for v in &report.violations {
        eprintln!("{v}");
    }
    if report.has_errors() {
        return Err(invalid(anyhow!("{what} failed validation")));
    }
    Ok(())
}

fn parse_labels(text: &str) -> CliResult<Vec<StateLabel>> {
    text.split(',')
        .map(|t| StateLabel::parse(t.trim()))
        .collect::<Result<_, _>>()
        .or_invalid()
}

impl Selection {
    /// The query and a label describing where it came from.
    fn query(&self) -> CliResult<(PartitionQuery, String)> {
        if let Some(list) = &self.indices {
            let set = parse_index_ranges(list).or_invalid()?;
            return Ok((PartitionQuery::Indices(set), list.clone()));
        }
        match (&self.partition, &self.contains_all, &self.contains_any) {
            (Some(path), None, None) => Ok((
                partition_from_json(&read(path)?).or_invalid()?,
                source_label(path),
            )),
            (None, Some(all), None) => Ok((PartitionQuery::ContainsAll(parse_labels(all)?), all.clone())),
            (None, None, Some(any)) => Ok((PartitionQuery::ContainsAny(parse_labels(any)?), any.clone())),
            _ => Err(usage(anyhow!(
                "give a partition file, --indices, --contains-all or --contains-any"
            ))),
        }
    }
}

fn source_label(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.trim_end_matches(".json")
        .trim_end_matches(".partition")
        .to_owned()
}

fn format_set(set: &BTreeSet<usize>) -> String {
    let items: Vec<String> = set.iter().map(usize::to_string).collect();
    format!("{{{}}}", items.join(", "))
}

/// Fraction in shortest round-trip form, percent to fifteen decimals.
fn format_probability(p: f64) -> String {
    format!("{p} ({:.15}%)", p * 100.0)
}

fn emit_tree(tree: &EventTree, out: &TreeOutputs, stdout: &mut String) -> CliResult<()> {
    if let Some(path) = &out.out {
        write(path, &tree_to_json(tree))?;
    }
    if let Some(path) = &out.dot {
        write(path, &to_dot(tree, &RenderOptions::default()))?;
    }
    if out.paths {
        stdout.push_str(&paths_report(&enumerate_paths(tree), LabelStyle::Compact));
    }
    if out.out.is_none() && out.dot.is_none() && !out.paths {
        stdout.push_str(&tree_to_json(tree));
    }
    Ok(())
}

fn path_counts(tree: &EventTree) -> String {
    let complete = tree
        .model()
        .complete_path_count()
        .map_or_else(|| "more than 2^128".to_owned(), |n| n.to_string());
    format!("{} paths ({complete} complete)", tree.leaf_count())
}

fn run(command: Command) -> CliResult<String> {
    let mut out = String::new();
    match command {
        Command::Validate { model, probs } => {
            let m = model_from_json(&read(&model)?).or_invalid()?;
            let mut report = validate_model(&m);
            if let Some(path) = probs {
                let table = probs_from_json(&read(&path)?).or_invalid()?;
                report.violations.extend(validate_probabilities(&m, &table).violations);
            }
            for v in &report.violations {
                let _ = writeln!(out, "{v}");
            }
            eprintln!("note: {RESIDUAL_OBLIGATION}");
            if report.has_errors() {
                print!("{out}");
                return Err(invalid(anyhow!(
                    "{} error(s) found",
                    report.errors().count()
                )));
            }
            out.push_str("OK\n");
        }
        Command::Generate { model, out: outputs } => {
            let tree = generate_complete(&load_model(&model)?).or_invalid()?;
            eprintln!("{}", path_counts(&tree));
            emit_tree(&tree, &outputs, &mut out)?;
        }
        Command::Reduce {
            tree,
            directives,
            out: outputs,
        } => {
            let tree = load_tree(&tree)?;
            let directives = directives_from_json(&read(&directives)?).or_invalid()?;
            let reduced = apply_reduction(&tree, &directives).or_invalid()?;
            eprintln!("{}", path_counts(&reduced));
            emit_tree(&reduced, &outputs, &mut out)?;
        }
        Command::Partition { tree, selection } => {
            let tree = load_tree(&tree)?;
            let (query, _) = selection.query()?;
            query.validate(tree.model()).or_invalid()?;
            let result = partition(&enumerate_paths(&tree), &query).or_invalid()?;
            let _ = writeln!(out, "selected = {}", format_set(&result.selected));
            let _ = writeln!(out, "complement = {}", format_set(&result.complement));
        }
        Command::Eval {
            tree,
            probs,
            selection,
            oracle,
            csv,
            label,
            paths,
        } => {
            let tree = load_tree(&tree)?;
            let table = load_table(&probs, tree.model())?;
            let (query, source) = selection.query()?;
            query.validate(tree.model()).or_invalid()?;
            let all = enumerate_paths(&tree);
            if paths {
                out.push_str(&paths_report_with_table(&all, LabelStyle::Compact, &table).or_invalid()?);
            }
            let result = partition(&all, &query).or_invalid()?;
            let (sel, comp) = partition_probability(&all, &result, &table).or_invalid()?;
            let _ = writeln!(out, "selected = {}", format_set(&result.selected));
            let _ = writeln!(out, "p_selected = {}", format_probability(sel));
            let _ = writeln!(out, "p_complement = {}", format_probability(comp));
            if oracle {
                let q = PartitionQuery::Indices(result.selected.clone());
                let expected = oracle_brute_force(
                    tree.model(),
                    tree.directives(),
                    &table,
                    &q,
                    DEFAULT_ENUMERATION_CAP,
                )
                .or_internal()?;
                let diff = (expected - sel).abs();
                let _ = writeln!(out, "oracle = {} (|diff| = {diff:e})", format_probability(expected));
                if diff > 1e-12 {
                    return Err(Failure {
                        kind: Kind::Internal,
                        error: anyhow!("engine and oracle disagree by {diff:e}"),
                    });
                }
            }
            if let Some(path) = csv {
                let label = label.unwrap_or(source);
                write(&path, &histogram_data(&[(label, sel)]).or_internal()?)?;
            }
        }
        Command::Whatif {
            model,
            directives,
            duplicate,
            probs,
            partition: partition_files,
            indices,
            out_model,
            out_directives,
            out_probs,
            out: outputs,
        } => {
            let model = load_model(&model)?;
            let directives = directives_from_json(&read(&directives)?).or_invalid()?;
            if model.component(&duplicate).is_none() {
                return Err(invalid(anyhow!("no component `{duplicate}` in the model")));
            }
            let (new_model, rewritten) =
                add_parallel_redundancy(&model, &directives, &duplicate).or_invalid()?;
            let tree = apply_reduction(&generate_complete(&new_model).or_invalid()?, &rewritten)
                .or_invalid()?;
            let table = match &probs {
                Some(path) => {
                    let base = load_table(path, &model)?;
                    Some(redundant_table(&base, &duplicate).or_invalid()?)
                }
                None => None,
            };

            let ids: Vec<&str> = new_model.components.iter().map(|c| c.id.as_str()).collect();
            let _ = writeln!(out, "components = [{}]", ids.join(", "));
            let _ = writeln!(out, "tree = {}", path_counts(&tree));

            let mut queries = Vec::new();
            for path in &partition_files {
                queries.push((source_label(path), partition_from_json(&read(path)?).or_invalid()?));
            }
            for list in &indices {
                queries.push((list.clone(), PartitionQuery::Indices(parse_index_ranges(list).or_invalid()?)));
            }
            if !queries.is_empty() {
                let table = table
                    .as_ref()
                    .ok_or_else(|| usage(anyhow!("--probs is required to evaluate partitions")))?;
                let all = enumerate_paths(&tree);
                for (label, query) in &queries {
                    query.validate(&new_model).or_invalid()?;
                    let result = partition(&all, query).or_invalid()?;
                    let (sel, _) = partition_probability(&all, &result, table).or_invalid()?;
                    let _ = writeln!(out, "{label}: p = {}", format_probability(sel));
                }
            }

            if let Some(path) = out_model {
                write(&path, &model_to_json(&new_model))?;
            }
            if let Some(path) = out_directives {
                write(&path, &directives_to_json(&rewritten))?;
            }
            if let (Some(path), Some(table)) = (&out_probs, &table) {
                write(path, &probs_to_json(table))?;
            } else if out_probs.is_some() {
                return Err(usage(anyhow!("--out-probs needs --probs")));
            }
            if outputs.out.is_some() || outputs.dot.is_some() || outputs.paths {
                emit_tree(&tree, &outputs, &mut out)?;
            }
        }
        Command::Serve {
            port,
            host,
            data_dir,
            cors_origin,
        } => serve(&host, port, data_dir, cors_origin)?,
    }
    Ok(out)
}

fn serve(host: &str, port: u16, data_dir: Option<PathBuf>, cors_origin: Option<String>) -> CliResult<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let state = match &data_dir {
        Some(dir) => etma_service::AppState::open(dir)
            .map_err(|e| anyhow!("cannot open data dir {}: {e}", dir.display()))
            .or_internal()?,
        None => etma_service::AppState::in_memory(),
    };
    let runtime = tokio::runtime::Runtime::new().or_internal()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .map_err(|e| anyhow!("cannot bind {host}:{port}: {e}"))
            .or_internal()?;
        let addr = listener.local_addr().or_internal()?;
        eprintln!("listening on http://{addr}");
        etma_service::serve(listener, state, cors_origin.as_deref())
            .await
            .or_internal()
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(match f.kind {
                Kind::Validation => 1,
                Kind::Usage => 2,
                Kind::Internal => 3,
            })
        }
    }
}
