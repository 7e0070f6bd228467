//! Text format for feature models (`.fml`).
//!
//! ```text
//! model       := "model" STRING featuredef constraint*
//! featuredef  := "feature" NAME block?
//! block       := "{" item* "}"
//! item        := ("mandatory" | "optional") NAME block?
//!              | ("or" | "alternative") "group" "{" member+ "}"
//! member      := NAME block?
//! constraint  := "constraint" NAME ("requires" | "excludes") NAME
//! ```
//!
//! Line comments start with `#`. [`serialize`] prints the canonical form:
//! two-space indentation, children in source order, constraints last and
//! sorted, one trailing newline.

use std::fmt;

use thiserror::Error;

use crate::feature_model::{
    validate, Child, ChildKind, ConstraintKind, CrossTreeConstraint, Diagnostic, Feature,
    FeatureModel, GroupKind, Location, Severity, RESERVED_WORDS,
};

/// A 1-based position plus a length in characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: SourceSpan,
    pub message: String,
    pub expected: Option<String>,
}

/// Source positions of everything a [`Diagnostic`] can point at.
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    pub model_name: Option<SourceSpan>,
    /// feature name spans in preorder
    pub features: Vec<SourceSpan>,
    /// `group` keyword spans in textual order
    pub groups: Vec<SourceSpan>,
    /// (keyword, from, to) spans per constraint
    pub constraints: Vec<(SourceSpan, SourceSpan, SourceSpan)>,
}

impl SourceMap {
    pub fn span_of(&self, diagnostic: &Diagnostic, model: &FeatureModel) -> SourceSpan {
        let fallback = SourceSpan {
            line: 1,
            column: 1,
            length: 0,
        };
        match diagnostic.location {
            Location::Model => self.model_name.unwrap_or(fallback),
            Location::Feature(i) => self.features.get(i).copied().unwrap_or(fallback),
            Location::Group(i) => self.groups.get(i).copied().unwrap_or(fallback),
            Location::Constraint(i) => match self.constraints.get(i) {
                Some(&(keyword, from, to)) => {
                    let c = &model.constraints[i];
                    match diagnostic.name.as_deref() {
                        Some(n) if n == c.from => from,
                        Some(n) if n == c.to => to,
                        _ => keyword,
                    }
                }
                None => fallback,
            },
        }
    }
}

/// A syntactically well-formed model, not yet validated.
#[derive(Debug, Clone)]
pub struct ParsedModel {
    pub model: FeatureModel,
    pub source_map: SourceMap,
}

impl ParsedModel {
    /// Validation diagnostics paired with their source spans.
    pub fn diagnostics(&self) -> Vec<(Diagnostic, SourceSpan)> {
        validate(&self.model)
            .into_iter()
            .map(|d| {
                let span = self.source_map.span_of(&d, &self.model);
                (d, span)
            })
            .collect()
    }
}

/// Parses and validates a model. Validation errors come back as
/// [`ParseErrorKind::Semantic`] errors located in the source.
pub fn parse(text: &str) -> Result<FeatureModel, Vec<ParseError>> {
    let parsed = parse_unchecked(text).map_err(|e| vec![e])?;
    let errors: Vec<ParseError> = parsed
        .diagnostics()
        .into_iter()
        .filter(|(d, _)| d.severity == Severity::Error)
        .map(|(d, span)| ParseError {
            kind: ParseErrorKind::Semantic,
            span,
            message: d.message,
            expected: None,
        })
        .collect();
    if errors.is_empty() {
        Ok(parsed.model)
    } else {
        Err(errors)
    }
}

/// Parses without validating; only lexical and syntax errors are reported.
pub fn parse_unchecked(text: &str) -> Result<ParsedModel, ParseError> {
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        map: SourceMap::default(),
    };
    let model = parser.model()?;
    Ok(ParsedModel {
        model,
        source_map: parser.map,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Str(String),
    LBrace,
    RBrace,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) if RESERVED_WORDS.contains(&w.as_str()) => format!("keyword `{w}`"),
            Tok::Word(w) => format!("name `{w}`"),
            Tok::Str(_) => "string".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);

    let lex_error = |line, column, length, message: String| ParseError {
        kind: ParseErrorKind::Lexical,
        span: SourceSpan {
            line,
            column,
            length,
        },
        message,
        expected: None,
    };

    while let Some(&c) = chars.peek() {
        let start = (line, column);
        match c {
            '\n' => {
                chars.next();
                line += 1;
                column = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                column += 1;
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    column += 1;
                }
            }
            '{' | '}' => {
                chars.next();
                column += 1;
                tokens.push(Token {
                    tok: if c == '{' { Tok::LBrace } else { Tok::RBrace },
                    span: SourceSpan {
                        line: start.0,
                        column: start.1,
                        length: 1,
                    },
                });
            }
            '"' => {
                chars.next();
                column += 1;
                let mut value = String::new();
                loop {
                    match chars.next() {
                        None | Some('\n') => {
                            return Err(lex_error(
                                start.0,
                                start.1,
                                column - start.1,
                                "unterminated string".into(),
                            ))
                        }
                        Some('"') => {
                            column += 1;
                            break;
                        }
                        Some('\\') => {
                            column += 1;
                            match chars.next() {
                                Some(e @ ('"' | '\\')) => {
                                    column += 1;
                                    value.push(e);
                                }
                                other => {
                                    return Err(lex_error(
                                        line,
                                        column - 1,
                                        2,
                                        format!(
                                            "invalid escape `\\{}` in string",
                                            other.map(String::from).unwrap_or_default()
                                        ),
                                    ))
                                }
                            }
                        }
                        Some(c) => {
                            column += 1;
                            value.push(c);
                        }
                    }
                }
                tokens.push(Token {
                    tok: Tok::Str(value),
                    span: SourceSpan {
                        line: start.0,
                        column: start.1,
                        length: column - start.1,
                    },
                });
            }
            c if c.is_ascii_alphabetic() => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        word.push(c);
                        chars.next();
                        column += 1;
                    } else {
                        break;
                    }
                }
                tokens.push(Token {
                    span: SourceSpan {
                        line: start.0,
                        column: start.1,
                        length: word.len(),
                    },
                    tok: Tok::Word(word),
                });
            }
            other => {
                return Err(lex_error(
                    line,
                    column,
                    1,
                    format!("unexpected character `{other}`"),
                ))
            }
        }
    }
    tokens.push(Token {
        tok: Tok::Eof,
        span: SourceSpan {
            line,
            column,
            length: 0,
        },
    });
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    map: SourceMap,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        let t = self.peek();
        ParseError {
            kind: ParseErrorKind::Syntax,
            span: t.span,
            message: format!("expected {expected}, found {}", t.tok.describe()),
            expected: Some(expected.to_string()),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Word(w) if w == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<SourceSpan, ParseError> {
        if self.at_keyword(kw) {
            Ok(self.bump().span)
        } else {
            Err(self.error(&format!("`{kw}`")))
        }
    }

    fn name(&mut self) -> Result<(String, SourceSpan), ParseError> {
        match &self.peek().tok {
            Tok::Word(w) if !RESERVED_WORDS.contains(&w.as_str()) => {
                let t = self.bump();
                match t.tok {
                    Tok::Word(w) => Ok((w, t.span)),
                    _ => unreachable!(),
                }
            }
            _ => Err(self.error("a feature name")),
        }
    }

    fn model(&mut self) -> Result<FeatureModel, ParseError> {
        self.keyword("model")?;
        let name = match &self.peek().tok {
            Tok::Str(s) => {
                let s = s.clone();
                self.map.model_name = Some(self.bump().span);
                s
            }
            _ => return Err(self.error("a quoted model name")),
        };
        self.keyword("feature")?;
        let root = self.feature()?;
        let mut constraints = Vec::new();
        while self.at_keyword("constraint") {
            let kw = self.bump().span;
            let (from, from_span) = self.name()?;
            let kind = if self.at_keyword("requires") {
                ConstraintKind::Requires
            } else if self.at_keyword("excludes") {
                ConstraintKind::Excludes
            } else {
                return Err(self.error("`requires` or `excludes`"));
            };
            self.bump();
            let (to, to_span) = self.name()?;
            self.map.constraints.push((kw, from_span, to_span));
            constraints.push(CrossTreeConstraint { kind, from, to });
        }
        if self.peek().tok != Tok::Eof {
            return Err(self.error("`constraint` or end of input"));
        }
        Ok(FeatureModel {
            name,
            root,
            constraints,
        })
    }

    /// NAME block?
    fn feature(&mut self) -> Result<Feature, ParseError> {
        let (name, span) = self.name()?;
        self.map.features.push(span);
        let mut feature = Feature::new(name);
        if self.peek().tok == Tok::LBrace {
            self.bump();
            while self.peek().tok != Tok::RBrace {
                feature.children.push(self.item()?);
            }
            self.bump();
        }
        Ok(feature)
    }

    fn item(&mut self) -> Result<Child, ParseError> {
        let Tok::Word(word) = &self.peek().tok else {
            return Err(self.error("a child declaration or `}`"));
        };
        match word.as_str() {
            "mandatory" | "optional" => {
                let kind = if word == "mandatory" {
                    ChildKind::Mandatory
                } else {
                    ChildKind::Optional
                };
                self.bump();
                Ok(Child::Solitary {
                    kind,
                    feature: self.feature()?,
                })
            }
            "or" | "alternative" => {
                let kind = if word == "or" {
                    GroupKind::Or
                } else {
                    GroupKind::Alternative
                };
                self.bump();
                let span = self.keyword("group")?;
                self.map.groups.push(span);
                if self.peek().tok != Tok::LBrace {
                    return Err(self.error("`{`"));
                }
                self.bump();
                let mut members = Vec::new();
                loop {
                    match &self.peek().tok {
                        Tok::RBrace if !members.is_empty() => break,
                        Tok::RBrace => return Err(self.error("a group member")),
                        _ => members.push(self.feature()?),
                    }
                }
                self.bump();
                Ok(Child::Group { kind, members })
            }
            _ => Err(self.error("`mandatory`, `optional`, `or`, `alternative` or `}`")),
        }
    }
}

/// Canonical text for `model`.
pub fn serialize(model: &FeatureModel) -> String {
    let mut out = String::new();
    out.push_str("model \"");
    for c in model.name.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push_str("\"\n");
    out.push_str("feature ");
    write_feature(&mut out, &model.root, 0);
    for c in model.sorted_constraints() {
        out.push_str(&format!("constraint {} {} {}\n", c.from, c.kind, c.to));
    }
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

/// Writes `NAME` or `NAME {...}` starting at the current position.
fn write_feature(out: &mut String, feature: &Feature, depth: usize) {
    out.push_str(&feature.name);
    if feature.children.is_empty() {
        out.push('\n');
        return;
    }
    out.push_str(" {\n");
    for child in &feature.children {
        indent(out, depth + 1);
        match child {
            Child::Solitary { kind, feature } => {
                out.push_str(match kind {
                    ChildKind::Mandatory => "mandatory ",
                    ChildKind::Optional => "optional ",
                });
                write_feature(out, feature, depth + 1);
            }
            Child::Group { kind, members } => {
                out.push_str(match kind {
                    GroupKind::Alternative => "alternative group {\n",
                    GroupKind::Or => "or group {\n",
                });
                for m in members {
                    indent(out, depth + 2);
                    write_feature(out, m, depth + 2);
                }
                indent(out, depth + 1);
                out.push_str("}\n");
            }
        }
    }
    indent(out, depth);
    out.push_str("}\n");
}
