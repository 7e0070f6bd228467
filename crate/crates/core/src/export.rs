//! Serializers: OWL functional-style syntax (with a parser for the same
//! subset), class-diagram text, Markdown documentation, and workspace
//! directories.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::federation::{
    fm_to_ontology, FederationError, FederationLink, FederationResult, Manifest, MatchingOptions,
    Synonyms, Warning, FEDERATION_PREFIX, FEDERATION_ROOT,
};
use crate::fm_text;
use crate::ontology::{Axiom, ClassExpr, Ontology, OntologyError};

pub const FORMAT_VERSION: u64 = 1;

fn iri(prefix: &str) -> String {
    format!("urn:fedont:{prefix}#")
}

fn write_expr(out: &mut String, e: &ClassExpr) {
    let list = |out: &mut String, name: &str, xs: &[ClassExpr]| {
        out.push_str(name);
        out.push('(');
        for (i, x) in xs.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write_expr(out, x);
        }
        out.push(')');
    };
    match e {
        ClassExpr::Named(n) => {
            out.push(':');
            out.push_str(n);
        }
        ClassExpr::Thing => out.push_str("owl:Thing"),
        ClassExpr::Nothing => out.push_str("owl:Nothing"),
        ClassExpr::IntersectionOf(xs) => list(out, "ObjectIntersectionOf", xs),
        ClassExpr::UnionOf(xs) => list(out, "ObjectUnionOf", xs),
        ClassExpr::ComplementOf(x) => list(out, "ObjectComplementOf", std::slice::from_ref(x)),
    }
}

pub fn axiom_to_owl(a: &Axiom) -> String {
    let mut out = String::new();
    let (name, xs): (&str, Vec<&ClassExpr>) = match a {
        Axiom::SubClassOf { sub, sup } => ("SubClassOf", vec![sub, sup]),
        Axiom::EquivalentClasses(xs) => ("EquivalentClasses", xs.iter().collect()),
        Axiom::DisjointClasses(xs) => ("DisjointClasses", xs.iter().collect()),
    };
    out.push_str(name);
    out.push('(');
    for (i, x) in xs.into_iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write_expr(&mut out, x);
    }
    out.push(')');
    out
}

pub fn to_owl(onto: &Ontology) -> String {
    let mut out = format!("Prefix(:=<{}>)\nOntology(\n", iri(onto.iri_prefix()));
    for c in onto.classes() {
        writeln!(out, "Declaration(Class(:{c}))").unwrap();
    }
    for a in onto.axioms() {
        out.push_str(&axiom_to_owl(a));
        out.push('\n');
    }
    out.push_str(")\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct OwlError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Open,
    Close,
    Iri(String),
    Word(String),
    Eof,
}

struct OwlParser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

const UNSUPPORTED: &[&str] = &[
    "ObjectSomeValuesFrom",
    "ObjectAllValuesFrom",
    "ObjectHasValue",
    "ObjectHasSelf",
    "ObjectMinCardinality",
    "ObjectMaxCardinality",
    "ObjectExactCardinality",
    "ObjectOneOf",
    "DataSomeValuesFrom",
    "DataAllValuesFrom",
    "DataHasValue",
    "DataMinCardinality",
    "DataMaxCardinality",
    "DataExactCardinality",
    "DisjointUnion",
    "SubObjectPropertyOf",
    "EquivalentObjectProperties",
    "ObjectPropertyDomain",
    "ObjectPropertyRange",
    "ClassAssertion",
    "ObjectPropertyAssertion",
    "AnnotationAssertion",
    "Import",
    "ObjectProperty",
    "DataProperty",
    "NamedIndividual",
    "Datatype",
    "AnnotationProperty",
];

fn tokenize(text: &str) -> Result<Vec<(Tok, usize, usize)>, OwlError> {
    let mut toks = Vec::new();
    let (mut line, mut col) = (1, 1);
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (l, cl) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        match c {
            c if c.is_whitespace() => {
                bump(&mut chars);
            }
            '(' => {
                bump(&mut chars);
                toks.push((Tok::Open, l, cl));
            }
            ')' => {
                bump(&mut chars);
                toks.push((Tok::Close, l, cl));
            }
            '<' => {
                bump(&mut chars);
                let mut s = String::new();
                loop {
                    match chars.peek() {
                        Some('>') => {
                            bump(&mut chars);
                            break;
                        }
                        Some('\n') | None => {
                            return Err(OwlError {
                                line: l,
                                column: cl,
                                message: "unterminated IRI".into(),
                            })
                        }
                        Some(_) => s.push(bump(&mut chars)),
                    }
                }
                toks.push((Tok::Iri(s), l, cl));
            }
            c if c.is_ascii_alphanumeric() || matches!(c, ':' | '_' | '-' | '.' | '=') => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || matches!(c, ':' | '_' | '-' | '.' | '=') {
                        s.push(bump(&mut chars));
                    } else {
                        break;
                    }
                }
                toks.push((Tok::Word(s), l, cl));
            }
            other => {
                return Err(OwlError {
                    line: l,
                    column: cl,
                    message: format!("unexpected character {other:?}"),
                })
            }
        }
    }
    toks.push((Tok::Eof, line, col));
    Ok(toks)
}

impl OwlParser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, OwlError> {
        let (_, line, column) = self.toks[self.pos];
        Err(OwlError {
            line,
            column,
            message: message.into(),
        })
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Open => "'('".into(),
            Tok::Close => "')'".into(),
            Tok::Iri(s) => format!("<{s}>"),
            Tok::Word(w) => format!("\"{w}\""),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), OwlError> {
        if *self.peek() == tok {
            self.pos += 1;
            Ok(())
        } else {
            let want = match tok {
                Tok::Open => "'('".to_string(),
                Tok::Close => "')'".to_string(),
                Tok::Word(w) => format!("\"{w}\""),
                _ => "token".to_string(),
            };
            self.err(format!("expected {want}, found {}", self.describe()))
        }
    }

    fn word(&mut self) -> Result<String, OwlError> {
        match self.peek().clone() {
            Tok::Word(w) => {
                self.pos += 1;
                Ok(w)
            }
            _ => self.err(format!("expected a name, found {}", self.describe())),
        }
    }

    fn reject_unsupported<T>(&self, w: &str) -> Result<T, OwlError> {
        if UNSUPPORTED.contains(&w) {
            self.err(format!("{w} is outside the supported fragment"))
        } else {
            self.err(format!("unknown construct \"{w}\""))
        }
    }

    fn class_name(&mut self) -> Result<String, OwlError> {
        let w = self.word()?;
        match w.strip_prefix(':') {
            Some(n) if !n.is_empty() => Ok(n.to_string()),
            _ => {
                self.pos -= 1;
                self.err(format!("expected a class name like :Name, found \"{w}\""))
            }
        }
    }

    fn expr(&mut self) -> Result<ClassExpr, OwlError> {
        let start = self.pos;
        let w = self.word()?;
        match w.as_str() {
            "owl:Thing" => return Ok(ClassExpr::Thing),
            "owl:Nothing" => return Ok(ClassExpr::Nothing),
            _ => {}
        }
        if let Some(n) = w.strip_prefix(':') {
            return Ok(ClassExpr::named(n));
        }
        let build: fn(Vec<ClassExpr>) -> ClassExpr = match w.as_str() {
            "ObjectIntersectionOf" => ClassExpr::IntersectionOf,
            "ObjectUnionOf" => ClassExpr::UnionOf,
            "ObjectComplementOf" => |mut xs: Vec<ClassExpr>| ClassExpr::complement(xs.remove(0)),
            _ => {
                self.pos = start;
                return self.reject_unsupported(&w);
            }
        };
        self.expect(Tok::Open)?;
        let mut xs = Vec::new();
        while *self.peek() != Tok::Close {
            xs.push(self.expr()?);
        }
        let arity_ok = if w == "ObjectComplementOf" {
            xs.len() == 1
        } else {
            xs.len() >= 2
        };
        if !arity_ok {
            self.pos = start;
            return self.err(format!("{w} has {} operand(s)", xs.len()));
        }
        self.expect(Tok::Close)?;
        Ok(build(xs))
    }

    fn exprs(&mut self) -> Result<Vec<ClassExpr>, OwlError> {
        self.expect(Tok::Open)?;
        let mut xs = Vec::new();
        while *self.peek() != Tok::Close {
            xs.push(self.expr()?);
        }
        self.expect(Tok::Close)?;
        Ok(xs)
    }
}

/// Parses the subset written by [`to_owl`].
pub fn parse_owl(text: &str) -> Result<Ontology, OwlError> {
    let mut p = OwlParser {
        toks: tokenize(text)?,
        pos: 0,
    };
    if *p.peek() == Tok::Eof {
        return p.err("missing Ontology");
    }
    p.expect(Tok::Word("Prefix".into()))?;
    p.expect(Tok::Open)?;
    p.expect(Tok::Word(":=".into()))?;
    let prefix = match p.peek().clone() {
        Tok::Iri(s) => match s
            .strip_prefix("urn:fedont:")
            .and_then(|r| r.strip_suffix('#'))
        {
            Some(prefix) => prefix.to_string(),
            None => {
                return p.err(format!(
                    "expected an IRI of the form urn:fedont:PREFIX#, found <{s}>"
                ))
            }
        },
        _ => return p.err(format!("expected an IRI, found {}", p.describe())),
    };
    let mut onto = match Ontology::new(&prefix) {
        Ok(o) => o,
        Err(e) => return p.err(e.to_string()),
    };
    p.pos += 1;
    p.expect(Tok::Close)?;
    if *p.peek() == Tok::Eof {
        return p.err("missing Ontology");
    }
    p.expect(Tok::Word("Ontology".into()))?;
    p.expect(Tok::Open)?;

    let mut axioms = Vec::new();
    while *p.peek() != Tok::Close {
        let at = p.pos;
        let w = p.word()?;
        match w.as_str() {
            "Declaration" => {
                p.expect(Tok::Open)?;
                let kind = p.word()?;
                if kind != "Class" {
                    p.pos -= 1;
                    return p.reject_unsupported(&kind);
                }
                p.expect(Tok::Open)?;
                let name_at = p.pos;
                let name = p.class_name()?;
                if let Err(e) = onto.declare(name) {
                    p.pos = name_at;
                    return p.err(e.to_string());
                }
                p.expect(Tok::Close)?;
                p.expect(Tok::Close)?;
            }
            "SubClassOf" | "EquivalentClasses" | "DisjointClasses" => {
                let xs = p.exprs()?;
                let axiom = match (w.as_str(), xs.len()) {
                    ("SubClassOf", 2) => {
                        let mut it = xs.into_iter();
                        Axiom::subclass(it.next().unwrap(), it.next().unwrap())
                    }
                    ("EquivalentClasses", n) if n >= 2 => Axiom::EquivalentClasses(xs),
                    ("DisjointClasses", n) if n >= 2 => Axiom::DisjointClasses(xs),
                    (_, n) => {
                        p.pos = at;
                        return p.err(format!("{w} has {n} operand(s)"));
                    }
                };
                axioms.push((at, axiom));
            }
            _ => {
                p.pos = at;
                return p.reject_unsupported(&w);
            }
        }
    }
    p.expect(Tok::Close)?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected {} after the ontology", p.describe()));
    }
    for (at, axiom) in axioms {
        if let Err(e) = onto.add_axiom(axiom) {
            p.pos = at;
            return p.err(e.to_string());
        }
    }
    Ok(onto)
}

/// Class-diagram text: classes, then one generalization arrow per link.
pub fn to_uml(result: &FederationResult) -> String {
    let mut out = String::new();
    let ontologies = std::iter::once(&result.federation).chain(result.tools.values());
    for onto in ontologies {
        for c in onto.classes() {
            writeln!(out, "class {}:{c}", onto.iri_prefix()).unwrap();
        }
    }
    for l in &result.links {
        writeln!(
            out,
            "{} --|> {} <<{}>>",
            l.tool_class, l.federation_class, l.kind
        )
        .unwrap();
    }
    out
}

fn or_none(s: &str) -> &str {
    if s.is_empty() {
        "(not stated)"
    } else {
        s
    }
}

pub fn to_docs(result: &FederationResult) -> String {
    let mut out = String::from("# Federation ontology\n\n## Purpose & Scope\n\n");
    let m = &result.manifest;
    writeln!(out, "- Purpose: {}", or_none(&m.purpose)).unwrap();
    writeln!(out, "- Scope: {}", or_none(&m.scope)).unwrap();
    writeln!(out, "- Tools: {}", m.tool_ids.join(", ")).unwrap();
    let mut matching = vec!["exact"];
    if result.matching.fuzzy {
        matching.push("edit distance 1");
    }
    if result.matching.equivalence_on_exact {
        matching.push("equivalence on identical names");
    }
    writeln!(out, "- Matching: {}", matching.join(", ")).unwrap();

    out.push_str("\n## Federation Classes\n\n");
    let classes = &result.federation.classes()[1..];
    if classes.is_empty() {
        out.push_str("There are no common classes: the tools share no terms.\n");
    } else {
        out.push_str("| Class | Parent | Supporting tools |\n| --- | --- | --- |\n");
        for c in classes {
            writeln!(
                out,
                "| {FEDERATION_PREFIX}:{c} | {FEDERATION_PREFIX}:{} | {} |",
                result.parent_of(c).unwrap_or(FEDERATION_ROOT),
                result.supporters(c).join(", ")
            )
            .unwrap();
        }
    }

    out.push_str("\n## Per-Tool Ontologies\n");
    for (id, onto) in &result.tools {
        writeln!(
            out,
            "\n### {id}\n\n- Classes: {}\n- Axioms: {}\n- Class list: {}",
            onto.classes().len(),
            onto.axioms().len(),
            onto.classes().join(", ")
        )
        .unwrap();
    }

    out.push_str("\n## Links\n\n");
    if result.links.is_empty() {
        out.push_str("There are no links.\n");
    } else {
        out.push_str("| Tool class | Federation class | Kind |\n| --- | --- | --- |\n");
        for l in &result.links {
            writeln!(
                out,
                "| {} | {} | {} |",
                l.tool_class, l.federation_class, l.kind
            )
            .unwrap();
        }
    }

    out.push_str("\n## Warnings\n\n");
    if result.warnings.is_empty() {
        out.push_str("None.\n");
    }
    for w in &result.warnings {
        if w.tools.is_empty() {
            writeln!(out, "- {}", w.message).unwrap();
        } else {
            writeln!(out, "- [{}] {}", w.tools.join(", "), w.message).unwrap();
        }
    }
    out
}

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}: unsupported format_version {found} (expected {FORMAT_VERSION})", path.display())]
    Version { path: PathBuf, found: String },
    #[error("{}: {message}", path.display())]
    Mismatch { path: PathBuf, message: String },
    #[error(transparent)]
    Federation(#[from] FederationError),
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestFile {
    format_version: u64,
    purpose: String,
    scope: String,
    tool_ids: Vec<String>,
    matching: MatchingFile,
    warnings: Vec<Warning>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MatchingFile {
    fuzzy: bool,
    equivalence_on_exact: bool,
    synonyms: Synonyms,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WorkspaceError + '_ {
    move |source| WorkspaceError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// File name and contents of every workspace file, in a stable order.
pub fn workspace_files(result: &FederationResult) -> Vec<(PathBuf, String)> {
    let manifest = ManifestFile {
        format_version: FORMAT_VERSION,
        purpose: result.manifest.purpose.clone(),
        scope: result.manifest.scope.clone(),
        tool_ids: result.manifest.tool_ids.clone(),
        matching: MatchingFile {
            fuzzy: result.matching.fuzzy,
            equivalence_on_exact: result.matching.equivalence_on_exact,
            synonyms: result.matching.synonyms.clone(),
        },
        warnings: result.warnings.clone(),
    };
    let mut files = vec![
        (PathBuf::from("manifest.json"), json_pretty(&manifest)),
        (PathBuf::from("federation.ofn"), to_owl(&result.federation)),
        (PathBuf::from("links.json"), json_pretty(&result.links)),
    ];
    for (id, onto) in &result.tools {
        files.push((Path::new("tools").join(format!("{id}.ofn")), to_owl(onto)));
        files.push((
            Path::new("tools").join(format!("{id}.fml")),
            fm_text::serialize(&result.models[id]),
        ));
    }
    files
}

/// Writes the workspace into a fresh sibling directory and swaps it into
/// place, so `dir` holds either the old or the new workspace.
pub fn save_workspace(result: &FederationResult, dir: &Path) -> Result<(), WorkspaceError> {
    let parent = match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let staging = tempfile::Builder::new()
        .prefix(".fedont-new-")
        .tempdir_in(&parent)
        .map_err(io_err(&parent))?;
    fs::create_dir(staging.path().join("tools")).map_err(io_err(staging.path()))?;
    for (name, text) in workspace_files(result) {
        let path = staging.path().join(name);
        fs::write(&path, text).map_err(io_err(&path))?;
    }
    let staged = staging.keep();
    if dir.exists() {
        let old = tempfile::Builder::new()
            .prefix(".fedont-old-")
            .tempdir_in(&parent)
            .map_err(io_err(&parent))?
            .keep();
        fs::rename(dir, &old).map_err(io_err(dir))?;
        if let Err(e) = fs::rename(&staged, dir) {
            let _ = fs::rename(&old, dir);
            let _ = fs::remove_dir_all(&staged);
            return Err(io_err(dir)(e));
        }
        fs::remove_dir_all(&old).map_err(io_err(&old))?;
    } else {
        fs::rename(&staged, dir).map_err(io_err(dir))?;
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, WorkspaceError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn json_err(path: &Path, e: serde_json::Error) -> WorkspaceError {
    WorkspaceError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn owl_at(path: &Path, text: &str) -> Result<Ontology, WorkspaceError> {
    parse_owl(text).map_err(|e| WorkspaceError::Parse {
        path: path.to_path_buf(),
        line: e.line,
        column: e.column,
        message: e.message,
    })
}

pub fn load_workspace(dir: &Path) -> Result<FederationResult, WorkspaceError> {
    let manifest_path = dir.join("manifest.json");
    let text = read(&manifest_path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| json_err(&manifest_path, e))?;
    match value.get("format_version") {
        Some(v) if v.as_u64() == Some(FORMAT_VERSION) => {}
        other => {
            return Err(WorkspaceError::Version {
                path: manifest_path,
                found: other.map_or("(missing)".to_string(), |v| v.to_string()),
            })
        }
    }
    let manifest: ManifestFile =
        serde_json::from_str(&text).map_err(|e| json_err(&manifest_path, e))?;

    let fed_path = dir.join("federation.ofn");
    let federation = owl_at(&fed_path, &read(&fed_path)?)?;
    let links_path = dir.join("links.json");
    let links: Vec<FederationLink> =
        serde_json::from_str(&read(&links_path)?).map_err(|e| json_err(&links_path, e))?;

    let tools_dir = dir.join("tools");
    let mut expected: Vec<String> = manifest
        .tool_ids
        .iter()
        .flat_map(|id| [format!("{id}.fml"), format!("{id}.ofn")])
        .collect();
    expected.sort();
    let mut present = Vec::new();
    for entry in fs::read_dir(&tools_dir).map_err(io_err(&tools_dir))? {
        let entry = entry.map_err(io_err(&tools_dir))?;
        present.push(entry.file_name().to_string_lossy().into_owned());
    }
    present.sort();
    if present != expected {
        return Err(WorkspaceError::Mismatch {
            path: tools_dir,
            message: format!(
                "files [{}] do not match manifest tool ids [{}]",
                present.join(", "),
                manifest.tool_ids.join(", ")
            ),
        });
    }

    let mut tools = BTreeMap::new();
    let mut models = BTreeMap::new();
    for id in &manifest.tool_ids {
        let fml_path = tools_dir.join(format!("{id}.fml"));
        let model = fm_text::parse(&read(&fml_path)?).map_err(|errs| {
            let e = &errs[0];
            WorkspaceError::Parse {
                path: fml_path.clone(),
                line: e.span.line,
                column: e.span.column,
                message: e.message.clone(),
            }
        })?;
        let ofn_path = tools_dir.join(format!("{id}.ofn"));
        let onto = owl_at(&ofn_path, &read(&ofn_path)?)?;
        if onto.iri_prefix() != id {
            return Err(WorkspaceError::Mismatch {
                path: ofn_path,
                message: format!(
                    "ontology prefix \"{}\" does not match tool id",
                    onto.iri_prefix()
                ),
            });
        }
        if fm_to_ontology(&model, id).map_or(true, |o| o != onto) {
            return Err(WorkspaceError::Mismatch {
                path: ofn_path,
                message: format!("ontology does not match the feature model in {id}.fml"),
            });
        }
        tools.insert(id.clone(), onto);
        models.insert(id.clone(), model);
    }

    let result = FederationResult {
        federation,
        tools,
        models,
        links,
        manifest: Manifest {
            purpose: manifest.purpose,
            scope: manifest.scope,
            tool_ids: manifest.tool_ids,
        },
        matching: MatchingOptions {
            fuzzy: manifest.matching.fuzzy,
            equivalence_on_exact: manifest.matching.equivalence_on_exact,
            synonyms: manifest.matching.synonyms,
        },
        warnings: manifest.warnings,
    };
    result.check()?;
    Ok(result)
}

impl From<OntologyError> for WorkspaceError {
    fn from(e: OntologyError) -> Self {
        WorkspaceError::Federation(e.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_model::{Feature, FeatureModel};
    use crate::federation::{build_federation, FederationOptions};

    fn n(s: &str) -> ClassExpr {
        ClassExpr::named(s)
    }

    fn sample() -> Ontology {
        let mut o = Ontology::new("os").unwrap();
        for c in ["OS", "Symbian", "Android"] {
            o.declare(c).unwrap();
        }
        o.add_axiom(Axiom::DisjointClasses(vec![n("Symbian"), n("Android")]))
            .unwrap();
        o.add_axiom(Axiom::subclass(
            n("OS"),
            ClassExpr::UnionOf(vec![n("Symbian"), n("Android")]),
        ))
        .unwrap();
        o.add_axiom(Axiom::EquivalentClasses(vec![
            ClassExpr::Thing,
            ClassExpr::complement(ClassExpr::IntersectionOf(vec![n("OS"), ClassExpr::Nothing])),
        ]))
        .unwrap();
        o
    }

    #[test]
    fn owl_text() {
        assert_eq!(
            to_owl(&sample()),
            "Prefix(:=<urn:fedont:os#>)\n\
             Ontology(\n\
             Declaration(Class(:OS))\n\
             Declaration(Class(:Symbian))\n\
             Declaration(Class(:Android))\n\
             DisjointClasses(:Symbian :Android)\n\
             SubClassOf(:OS ObjectUnionOf(:Symbian :Android))\n\
             EquivalentClasses(owl:Thing ObjectComplementOf(ObjectIntersectionOf(:OS owl:Nothing)))\n\
             )\n"
        );
        assert_eq!(
            to_owl(&Ontology::new("e").unwrap()),
            "Prefix(:=<urn:fedont:e#>)\nOntology(\n)\n"
        );
    }

    #[test]
    fn owl_round_trip() {
        let o = sample();
        assert_eq!(parse_owl(&to_owl(&o)).unwrap(), o);
        let e = Ontology::new("e").unwrap();
        assert_eq!(parse_owl(&to_owl(&e)).unwrap(), e);
    }

    #[test]
    fn owl_errors() {
        assert_eq!(parse_owl("").unwrap_err().message, "missing Ontology");
        assert_eq!(parse_owl("  \n").unwrap_err().message, "missing Ontology");
        let text = "Prefix(:=<urn:fedont:x#>)\nOntology(\nDeclaration(Class(:A))\n\
                    SubClassOf(:A ObjectSomeValuesFrom(:r :A))\n)\n";
        let e = parse_owl(text).unwrap_err();
        assert_eq!((e.line, e.column), (4, 15));
        assert_eq!(
            e.message,
            "ObjectSomeValuesFrom is outside the supported fragment"
        );
        let undeclared = "Prefix(:=<urn:fedont:x#>)\nOntology(\nSubClassOf(:A :B)\n)\n";
        let e = parse_owl(undeclared).unwrap_err();
        assert_eq!((e.line, e.column), (3, 1));
        assert!(e.message.contains("not declared"));
        let prop = "Prefix(:=<urn:fedont:x#>)\nOntology(\nDeclaration(ObjectProperty(:r))\n)\n";
        assert!(parse_owl(prop)
            .unwrap_err()
            .message
            .contains("outside the supported fragment"));
        assert!(parse_owl("Prefix(:=<urn:fedont:x#>)\nOntology(\n").is_err());
    }

    fn federation() -> FederationResult {
        let conn = || {
            Feature::new("Connectivity").or(vec![Feature::new("Bluetooth"), Feature::new("USB")])
        };
        let a = FeatureModel::new("A", Feature::new("Alpha").mandatory(conn()));
        let b = FeatureModel::new("B", Feature::new("Beta").optional(conn()));
        build_federation(
            &[("b".into(), b), ("a".into(), a)],
            &FederationOptions {
                purpose: "Shared connectivity vocabulary".into(),
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn uml_text() {
        let uml = to_uml(&federation());
        let lines: Vec<&str> = uml.lines().collect();
        assert_eq!(lines[0], "class fed:Federation");
        assert_eq!(lines[4], "class a:Alpha");
        assert!(lines.contains(&"b:Connectivity --|> fed:Connectivity <<subsumes>>"));
        assert_eq!(lines.len(), 4 + 4 + 4 + 6);
    }

    #[test]
    fn docs_text() {
        let docs = to_docs(&federation());
        assert!(docs.contains("| fed:Bluetooth | fed:Connectivity | a, b |\n"));
        assert!(docs.contains("- Purpose: Shared connectivity vocabulary\n"));
        assert!(docs.contains("- Scope: (not stated)\n"));
        assert_eq!(docs, to_docs(&federation()));
    }

    #[test]
    fn workspace_round_trip() {
        let fed = federation();
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("ws");
        save_workspace(&fed, &dir).unwrap();
        assert_eq!(load_workspace(&dir).unwrap(), fed);
        save_workspace(&fed, &dir).unwrap();
        assert_eq!(load_workspace(&dir).unwrap(), fed);
        let leftovers: Vec<_> = fs::read_dir(tmp.path()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);

        fs::remove_file(dir.join("links.json")).unwrap();
        let err = load_workspace(&dir).unwrap_err();
        assert!(err.to_string().contains("links.json"));
    }

    #[test]
    fn workspace_version_check() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("ws");
        save_workspace(&federation(), &dir).unwrap();
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path)
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 2");
        fs::write(&path, text).unwrap();
        assert!(matches!(
            load_workspace(&dir),
            Err(WorkspaceError::Version { .. })
        ));
    }
}
