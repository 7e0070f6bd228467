use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use fedont::export::{self, load_workspace, parse_owl, save_workspace, to_docs, to_owl, to_uml};
use fedont::feature_model::{
    core_features, count_configurations_with_budget, dead_features, enumerate_configurations,
    ModelError, Severity, DEFAULT_FEATURE_BUDGET,
};
use fedont::federation::{
    build_federation, extend_federation, fm_to_ontology, remove_tool, FederationError,
    FederationOptions, FederationResult, MatchingOptions, Synonyms,
};
use fedont::fm_text;
use fedont::ontology::{Backend, ClassExpr, Ontology, Reasoner};
use fedont::FeatureModel;

const BUDGET_VAR: &str = "FEDONT_FEATURE_BUDGET";

#[derive(Parser)]
#[command(
    name = "fedont",
    version,
    about = "Feature models, ontologies and federations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a feature model and print its diagnostics
    Validate { model: PathBuf },
    /// Count, list, or find dead/core features of a feature model
    Analyze {
        model: PathBuf,
        #[arg(long)]
        count: bool,
        #[arg(long, value_name = "N")]
        list: Option<usize>,
        #[arg(long)]
        dead: bool,
        #[arg(long)]
        core: bool,
    },
    /// Translate a feature model into a tool ontology
    Fm2onto {
        model: PathBuf,
        #[arg(long)]
        prefix: String,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Query an ontology
    #[command(group(ArgGroup::new("query").required(true).args(["consistent", "sat", "subsumes", "classify"])))]
    Reason {
        ontology: PathBuf,
        #[arg(long)]
        consistent: bool,
        #[arg(long, value_name = "CLASS")]
        sat: Option<String>,
        #[arg(long, num_args = 2, value_names = ["SUB", "SUP"])]
        subsumes: Option<Vec<String>>,
        #[arg(long)]
        classify: bool,
        #[arg(long, value_enum, default_value_t = BackendArg::Search)]
        backend: BackendArg,
    },
    /// Build a federation workspace from two or more feature models
    Federate {
        #[arg(num_args = 2.., required = true)]
        models: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        ids: Vec<String>,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
        #[arg(long)]
        fuzzy: bool,
        /// Link with equivalence when all supporting tools use the same name
        #[arg(long)]
        equivalence: bool,
        #[arg(long, value_name = "FILE")]
        synonyms: Option<PathBuf>,
        #[arg(long, default_value = "")]
        purpose: String,
        #[arg(long, default_value = "")]
        scope: String,
    },
    /// Add a tool to a federation workspace
    Extend {
        workspace: PathBuf,
        model: PathBuf,
        #[arg(long)]
        id: String,
    },
    /// Remove a tool from a federation workspace
    RemoveTool {
        workspace: PathBuf,
        #[arg(long)]
        id: String,
    },
    /// Write documentation or a class diagram for a workspace
    #[command(group(ArgGroup::new("format").required(true).multiple(true).args(["docs", "uml"])))]
    Export {
        workspace: PathBuf,
        #[arg(long, value_name = "FILE")]
        docs: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        uml: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Search,
    TruthTable,
}

/// A failed command: usage problems exit 2, domain failures exit 1.
enum Failure {
    Usage(String),
    Domain(String),
    /// diagnostics were already printed
    Quiet(u8),
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("fedont: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("fedont: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Quiet(code)) => ExitCode::from(code),
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Validate { model } => validate(&model),
        Command::Analyze {
            model,
            count,
            list,
            dead,
            core,
        } => analyze(&model, count, list, dead, core),
        Command::Fm2onto {
            model,
            prefix,
            output,
        } => {
            let m = load_model(&model)?;
            let onto = fm_to_ontology(&m, &prefix).map_err(federation_failure)?;
            write(&output, &to_owl(&onto))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Reason {
            ontology,
            consistent,
            sat,
            subsumes,
            classify,
            backend,
        } => reason(&ontology, consistent, sat, subsumes, classify, backend),
        Command::Federate {
            models,
            ids,
            output,
            fuzzy,
            equivalence,
            synonyms,
            purpose,
            scope,
        } => {
            if ids.len() != models.len() {
                return Err(Failure::Usage(format!(
                    "{} models but {} ids",
                    models.len(),
                    ids.len()
                )));
            }
            let synonyms = match synonyms {
                Some(path) => Synonyms::from_json(&read(&path)?)
                    .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
                None => Synonyms::new(),
            };
            let mut loaded = Vec::new();
            for (id, path) in ids.into_iter().zip(&models) {
                loaded.push((id, load_model(path)?));
            }
            let options = FederationOptions {
                purpose,
                scope,
                matching: MatchingOptions {
                    fuzzy,
                    equivalence_on_exact: equivalence,
                    synonyms,
                },
            };
            let fed = build_federation(&loaded, &options).map_err(federation_failure)?;
            save(&fed, &output)?;
            print_warnings(&fed);
            println!(
                "{} classes, {} links, {} warnings",
                fed.federation.classes().len(),
                fed.links.len(),
                fed.warnings.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Extend {
            workspace,
            model,
            id,
        } => {
            let before = load(&workspace)?;
            let m = load_model(&model)?;
            let after = extend_federation(&before, &id, &m).map_err(federation_failure)?;
            save(&after, &workspace)?;
            println!(
                "+{} classes, +{} links",
                after.federation.classes().len() - before.federation.classes().len(),
                after.links.len() - before.links.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::RemoveTool { workspace, id } => {
            let before = load(&workspace)?;
            let after = remove_tool(&before, &id).map_err(federation_failure)?;
            save(&after, &workspace)?;
            print_warnings(&after);
            println!(
                "-{} classes, -{} links",
                before.federation.classes().len() - after.federation.classes().len(),
                before.links.len() - after.links.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Export {
            workspace,
            docs,
            uml,
        } => {
            let fed = load(&workspace)?;
            if let Some(path) = docs {
                write(&path, &to_docs(&fed))?;
            }
            if let Some(path) = uml {
                write(&path, &to_uml(&fed))?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Prints diagnostics as `file:line:column: severity: message`. Returns the
/// model when there are no errors.
fn check_model(path: &Path) -> Result<(FeatureModel, bool), Failure> {
    let text = read(path)?;
    let parsed = match fm_text::parse_unchecked(&text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{}:{}: error: {}", path.display(), e.span, e.message);
            return Err(Failure::Quiet(2));
        }
    };
    let mut ok = true;
    for (d, span) in parsed.diagnostics() {
        eprintln!("{}:{span}: {}: {}", path.display(), d.severity, d.message);
        ok &= d.severity != Severity::Error;
    }
    Ok((parsed.model, ok))
}

fn load_model(path: &Path) -> Result<FeatureModel, Failure> {
    match check_model(path)? {
        (model, true) => Ok(model),
        (_, false) => Err(Failure::Quiet(1)),
    }
}

fn validate(path: &Path) -> Outcome {
    load_model(path).map(|_| ExitCode::SUCCESS)
}

fn model_failure(e: ModelError) -> Failure {
    Failure::Domain(e.to_string())
}

fn feature_budget() -> Result<usize, Failure> {
    match std::env::var(BUDGET_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Failure::Usage(format!(
                "{BUDGET_VAR} must be a non-negative integer, got \"{v}\""
            ))
        }),
        Err(_) => Ok(DEFAULT_FEATURE_BUDGET),
    }
}

fn analyze(path: &Path, count: bool, list: Option<usize>, dead: bool, core: bool) -> Outcome {
    let budget = feature_budget()?;
    let model = load_model(path)?;
    let count = count || (list.is_none() && !dead && !core);
    let headers = [count, list.is_some(), dead, core]
        .iter()
        .filter(|b| **b)
        .count()
        > 1;
    let header = |name: &str| {
        if headers {
            println!("# {name}");
        }
    };
    if count {
        let n = count_configurations_with_budget(&model, budget).map_err(model_failure)?;
        header("count");
        println!("{n}");
    }
    if let Some(limit) = list {
        let found = enumerate_configurations(&model, limit).map_err(model_failure)?;
        header("list");
        for c in &found.configurations {
            println!("{}", c.ordered(&model).join(","));
        }
    }
    if dead {
        let names = dead_features(&model).map_err(model_failure)?;
        header("dead");
        for n in names {
            println!("{n}");
        }
    }
    if core {
        let names = core_features(&model).map_err(model_failure)?;
        header("core");
        for n in names {
            println!("{n}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn load_ontology(path: &Path) -> Result<Ontology, Failure> {
    parse_owl(&read(path)?).map_err(|e| {
        eprintln!(
            "{}:{}:{}: error: {}",
            path.display(),
            e.line,
            e.column,
            e.message
        );
        Failure::Quiet(2)
    })
}

fn class_arg(onto: &Ontology, name: &str) -> Result<ClassExpr, Failure> {
    let name = name.strip_prefix(':').unwrap_or(name);
    if !onto.is_declared(name) {
        return Err(Failure::Usage(format!("class \"{name}\" is not declared")));
    }
    Ok(ClassExpr::named(name))
}

fn verdict(answer: bool) -> Outcome {
    println!("{answer}");
    Ok(if answer {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn reason(
    path: &Path,
    consistent: bool,
    sat: Option<String>,
    subsumes: Option<Vec<String>>,
    classify: bool,
    backend: BackendArg,
) -> Outcome {
    let onto = load_ontology(path)?;
    let backend = match backend {
        BackendArg::Search => Backend::Search,
        BackendArg::TruthTable => Backend::TruthTable,
    };
    let reasoner = Reasoner::new(&onto, backend).map_err(|e| Failure::Usage(e.to_string()))?;
    let reasoning = |e: fedont::ontology::OntologyError| Failure::Usage(e.to_string());
    if consistent {
        verdict(reasoner.is_consistent())
    } else if let Some(class) = sat {
        verdict(
            reasoner
                .is_satisfiable(&class_arg(&onto, &class)?)
                .map_err(reasoning)?,
        )
    } else if let Some(pair) = subsumes {
        let sub = class_arg(&onto, &pair[0])?;
        let sup = class_arg(&onto, &pair[1])?;
        verdict(reasoner.is_subsumed(&sub, &sup).map_err(reasoning)?)
    } else {
        debug_assert!(classify);
        print!("{}", reasoner.classify().to_tree_text());
        Ok(ExitCode::SUCCESS)
    }
}

fn federation_failure(e: FederationError) -> Failure {
    match e {
        FederationError::Model(e) => model_failure(e),
        FederationError::Inconsistent(_) => Failure::Domain(e.to_string()),
        other => Failure::Usage(other.to_string()),
    }
}

fn load(dir: &Path) -> Result<FederationResult, Failure> {
    load_workspace(dir).map_err(|e| Failure::Usage(e.to_string()))
}

fn save(fed: &FederationResult, dir: &Path) -> Result<(), Failure> {
    save_workspace(fed, dir).map_err(|e| match e {
        export::WorkspaceError::Federation(e) => federation_failure(e),
        other => Failure::Usage(other.to_string()),
    })
}

fn print_warnings(fed: &FederationResult) {
    for w in &fed.warnings {
        eprintln!("warning: {}", w.message);
    }
}
