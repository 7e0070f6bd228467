//! Federation ontologies built from the vocabulary several feature models share.
//!
//! Each feature model becomes a tool ontology ([`fm_to_ontology`]). Terms are
//! extracted from every model, normalized and matched; terms supported by at
//! least two tools become classes of the federation ontology, arranged by the
//! affinity rule (a term sits under its nearest ancestor that is itself a
//! shared term, when all supporting tools agree on that ancestor). Links tie
//! each federation class to the tool classes it was derived from.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feature_model::{
    normalize_name, validate, Child, ChildKind, ConstraintKind, Feature, FeatureModel, GroupKind,
    ModelError, Severity,
};
use crate::ontology::{self, is_valid_prefix, Axiom, ClassExpr, Ontology, OntologyError};

pub const FEDERATION_PREFIX: &str = "fed";
pub const FEDERATION_ROOT: &str = "Federation";
/// Heading of the affinity group for terms without an agreed common ancestor.
pub const SHARED_GROUP: &str = "shared";

#[derive(Debug, Error)]
pub enum FederationError {
    #[error("a federation needs at least 2 models, got {0}")]
    TooFewModels(usize),
    #[error("duplicate tool id \"{0}\"")]
    DuplicateToolId(String),
    #[error("unknown tool id \"{0}\"")]
    UnknownToolId(String),
    #[error("\"{0}\" cannot be used as a tool id")]
    InvalidToolId(String),
    #[error("invalid synonym table: {0}")]
    Synonyms(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error("inconsistent federation: {0}")]
    Inconsistent(String),
}

/// Maps one normalized term to another, e.g. `wirelessfidelity` to `wifi`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Synonyms(BTreeMap<String, String>);

impl Synonyms {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entry; both sides are normalized.
    pub fn insert(&mut self, from: &str, to: &str) -> Result<(), FederationError> {
        let from = normalize_name(from);
        let to = normalize_name(to);
        let mut chars = to.chars();
        let valid = matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
            && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit());
        if from.is_empty() || !valid {
            return Err(FederationError::Synonyms(format!(
                "cannot map \"{from}\" to \"{to}\""
            )));
        }
        self.0.insert(from, to);
        Ok(())
    }

    /// Reads a `.syn.json` object of normalized string to normalized string.
    pub fn from_json(text: &str) -> Result<Self, FederationError> {
        let raw: BTreeMap<String, String> = serde_json::from_str(text).map_err(|e| {
            FederationError::Synonyms(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        let mut out = Synonyms::new();
        for (k, v) in &raw {
            out.insert(k, v)?;
        }
        Ok(out)
    }

    pub fn get(&self, normalized: &str) -> Option<&str> {
        self.0.get(normalized).map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Normalizes a raw feature name and applies the synonym table.
pub fn normalize_term(raw: &str, synonyms: &Synonyms) -> String {
    let n = normalize_name(raw);
    match synonyms.get(&n) {
        Some(target) => target.to_string(),
        None => n,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermEntry {
    pub raw: String,
    pub normalized: String,
    /// raw names of the ancestors, root first
    pub path: Vec<String>,
}

/// One entry per feature, in canonical feature order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TermTable {
    pub entries: Vec<TermEntry>,
}

impl TermTable {
    /// First entry with the given normalized form.
    pub fn get(&self, normalized: &str) -> Option<&TermEntry> {
        self.entries.iter().find(|e| e.normalized == normalized)
    }

    pub fn by_raw(&self, raw: &str) -> Option<&TermEntry> {
        self.entries.iter().find(|e| e.raw == raw)
    }

    fn normalized_set(&self) -> BTreeSet<&str> {
        self.entries.iter().map(|e| e.normalized.as_str()).collect()
    }
}

pub fn extract_terms(model: &FeatureModel, synonyms: &Synonyms) -> TermTable {
    fn walk(f: &Feature, path: &mut Vec<String>, synonyms: &Synonyms, out: &mut Vec<TermEntry>) {
        out.push(TermEntry {
            raw: f.name.clone(),
            normalized: normalize_term(&f.name, synonyms),
            path: path.clone(),
        });
        path.push(f.name.clone());
        for sub in f.sub_features() {
            walk(sub, path, synonyms, out);
        }
        path.pop();
    }
    let mut entries = Vec::new();
    walk(&model.root, &mut Vec::new(), synonyms, &mut entries);
    TermTable { entries }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermMatch {
    pub normalized: String,
    pub raw_a: String,
    pub raw_b: String,
}

/// Terms of `a` and `b` with equal normalized forms. With `fuzzy`, terms left
/// without an exact partner are also paired at edit distance 1, each term at
/// most once; candidate pairs are taken in lexicographic order of
/// (smaller, larger) normalized form, which is also the reported form.
pub fn common_terms(a: &TermTable, b: &TermTable, fuzzy: bool) -> Vec<TermMatch> {
    let mut out = Vec::new();
    let a_set = a.normalized_set();
    let b_set = b.normalized_set();
    for n in a_set.intersection(&b_set) {
        out.push(TermMatch {
            normalized: n.to_string(),
            raw_a: a.get(n).unwrap().raw.clone(),
            raw_b: b.get(n).unwrap().raw.clone(),
        });
    }
    if fuzzy {
        let a_open: Vec<&str> = a_set.difference(&b_set).copied().collect();
        let b_open: Vec<&str> = b_set.difference(&a_set).copied().collect();
        let mut candidates: Vec<(&str, &str, &str, &str)> = Vec::new();
        for &x in &a_open {
            for &y in &b_open {
                if strsim::levenshtein(x, y) == 1 {
                    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
                    candidates.push((lo, hi, x, y));
                }
            }
        }
        candidates.sort();
        let mut used_a = BTreeSet::new();
        let mut used_b = BTreeSet::new();
        for (lo, _, x, y) in candidates {
            if used_a.contains(x) || used_b.contains(y) {
                continue;
            }
            used_a.insert(x);
            used_b.insert(y);
            out.push(TermMatch {
                normalized: lo.to_string(),
                raw_a: a.get(x).unwrap().raw.clone(),
                raw_b: b.get(y).unwrap().raw.clone(),
            });
        }
    }
    out.sort_by(|m, n| m.normalized.cmp(&n.normalized));
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffinityGroup {
    pub key: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Affinity {
    pub groups: Vec<AffinityGroup>,
    pub warnings: Vec<String>,
}

/// Groups matched terms under their nearest common ancestor.
pub fn build_affinity(matches: &[TermMatch], a: &TermTable, b: &TermTable) -> Affinity {
    let mut keys_a = HashMap::new();
    let mut keys_b = HashMap::new();
    for m in matches {
        keys_a.insert(
            a.by_raw(&m.raw_a)
                .map_or(m.normalized.clone(), |e| e.normalized.clone()),
            m.normalized.clone(),
        );
        keys_b.insert(
            b.by_raw(&m.raw_b)
                .map_or(m.normalized.clone(), |e| e.normalized.clone()),
            m.normalized.clone(),
        );
    }
    let tools = [
        ToolTerms::new("a", a, &keys_a),
        ToolTerms::new("b", b, &keys_b),
    ];
    let common: BTreeSet<String> = matches.iter().map(|m| m.normalized.clone()).collect();
    let placement = place_terms(&common, &common, &tools.iter().collect::<Vec<_>>());
    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (term, parent) in &placement.parents {
        groups
            .entry(parent.clone().unwrap_or_else(|| SHARED_GROUP.to_string()))
            .or_default()
            .push(term.clone());
    }
    Affinity {
        groups: groups
            .into_iter()
            .map(|(key, mut members)| {
                members.sort();
                AffinityGroup { key, members }
            })
            .collect(),
        warnings: placement.warnings.into_iter().map(|w| w.message).collect(),
    }
}

/// A tool's terms keyed by matching key, with the keys of their ancestors
/// listed nearest first.
struct ToolTerms {
    id: String,
    terms: BTreeMap<String, (String, Vec<String>)>,
}

impl ToolTerms {
    fn new(id: &str, table: &TermTable, keys: &HashMap<String, String>) -> Self {
        let key = |n: &str| keys.get(n).cloned().unwrap_or_else(|| n.to_string());
        let by_raw: HashMap<&str, &str> = table
            .entries
            .iter()
            .map(|e| (e.raw.as_str(), e.normalized.as_str()))
            .collect();
        let mut terms = BTreeMap::new();
        for e in &table.entries {
            let ancestors: Vec<String> = e
                .path
                .iter()
                .rev()
                .map(|r| key(by_raw[r.as_str()]))
                .collect();
            terms
                .entry(key(&e.normalized))
                .or_insert_with(|| (e.raw.clone(), ancestors));
        }
        ToolTerms {
            id: id.to_string(),
            terms,
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.terms.get(key).map(|(raw, _)| raw.as_str())
    }
}

struct Placement {
    /// term -> parent term (None: directly under the root / shared group)
    parents: BTreeMap<String, Option<String>>,
    warnings: Vec<Warning>,
}

/// Applies the affinity rule to every term in `terms`, looking for ancestors
/// among `shared`.
fn place_terms(
    terms: &BTreeSet<String>,
    shared: &BTreeSet<String>,
    tools: &[&ToolTerms],
) -> Placement {
    let mut parents = BTreeMap::new();
    let mut warnings = Vec::new();
    for t in terms {
        let votes: Vec<(&str, Option<&String>)> = tools
            .iter()
            .filter_map(|tool| {
                let (_, ancestors) = tool.terms.get(t)?;
                let nearest = ancestors.iter().find(|k| *k != t && shared.contains(*k));
                Some((tool.id.as_str(), nearest))
            })
            .collect();
        let first = votes.first().and_then(|v| v.1);
        let agreed = votes.iter().all(|v| v.1 == first);
        if agreed {
            parents.insert(t.clone(), first.cloned());
        } else {
            parents.insert(t.clone(), None);
            let detail: Vec<String> = votes
                .iter()
                .map(|(id, p)| format!("{id}: {}", p.map_or("none", |s| s.as_str())))
                .collect();
            warnings.push(Warning {
                kind: WarningKind::AffinityConflict,
                tools: votes.iter().map(|v| v.0.to_string()).collect(),
                message: format!(
                    "term \"{t}\" has conflicting groupings ({}); placed in the {SHARED_GROUP} group",
                    detail.join(", ")
                ),
            });
        }
    }
    Placement { parents, warnings }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Subsumes,
    Equivalent,
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkKind::Subsumes => write!(f, "subsumes"),
            LinkKind::Equivalent => write!(f, "equivalent"),
        }
    }
}

/// Binds a federation class to a tool class. Class names are qualified as
/// `prefix:Name`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FederationLink {
    pub federation_class: String,
    pub tool_id: String,
    pub tool_class: String,
    pub kind: LinkKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub purpose: String,
    pub scope: String,
    /// sorted
    pub tool_ids: Vec<String>,
}

/// How terms are matched; kept with the federation so later extensions
/// match the same way.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MatchingOptions {
    pub fuzzy: bool,
    pub equivalence_on_exact: bool,
    pub synonyms: Synonyms,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FederationOptions {
    pub purpose: String,
    pub scope: String,
    pub matching: MatchingOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WarningKind {
    AffinityConflict,
    FewTools,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub kind: WarningKind,
    pub tools: Vec<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FederationResult {
    pub federation: Ontology,
    pub tools: BTreeMap<String, Ontology>,
    pub models: BTreeMap<String, FeatureModel>,
    pub links: Vec<FederationLink>,
    pub manifest: Manifest,
    pub matching: MatchingOptions,
    pub warnings: Vec<Warning>,
}

pub fn qualify(prefix: &str, name: &str) -> String {
    format!("{prefix}:{name}")
}

/// Splits `prefix:Name`.
pub fn split_qualified(name: &str) -> Option<(&str, &str)> {
    name.split_once(':')
}

/// Class name for a matching key: the key with its first letter capitalized.
pub fn class_name_for(key: &str) -> String {
    let mut chars = key.chars();
    let camel: String = match chars.next() {
        Some(c) => c.to_ascii_uppercase().to_string() + chars.as_str(),
        None => String::new(),
    };
    if camel == FEDERATION_ROOT {
        format!("{camel}Term")
    } else {
        camel
    }
}

/// Tool ontology for `model`: one class per feature, read as "products that
/// contain this feature".
pub fn fm_to_ontology(model: &FeatureModel, prefix: &str) -> Result<Ontology, FederationError> {
    let errors: Vec<_> = validate(model)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    if !errors.is_empty() {
        return Err(ModelError::Invalid(errors).into());
    }
    let mut onto = Ontology::new(prefix)?;
    let features = model.features();
    for f in &features {
        onto.declare(f.name.clone())?;
    }
    let named = |f: &Feature| ClassExpr::named(&f.name);
    for parent in &features {
        let p = named(parent);
        for child in &parent.children {
            match child {
                Child::Solitary { kind, feature } => {
                    onto.add_axiom(Axiom::subclass(named(feature), p.clone()))?;
                    if *kind == ChildKind::Mandatory {
                        onto.add_axiom(Axiom::subclass(p.clone(), named(feature)))?;
                    }
                }
                Child::Group { kind, members } => {
                    for m in members {
                        onto.add_axiom(Axiom::subclass(named(m), p.clone()))?;
                    }
                    let ms: Vec<ClassExpr> = members.iter().map(named).collect();
                    if *kind == GroupKind::Alternative {
                        onto.add_axiom(Axiom::DisjointClasses(ms.clone()))?;
                    }
                    onto.add_axiom(Axiom::subclass(p.clone(), ClassExpr::UnionOf(ms)))?;
                }
            }
        }
    }
    for c in model.sorted_constraints() {
        let from = ClassExpr::named(&c.from);
        let to = ClassExpr::named(&c.to);
        onto.add_axiom(match c.kind {
            ConstraintKind::Requires => Axiom::subclass(from, to),
            ConstraintKind::Excludes => Axiom::DisjointClasses(vec![from, to]),
        })?;
    }
    Ok(onto)
}

fn check_tool_id(id: &str) -> Result<(), FederationError> {
    if !is_valid_prefix(id) || id == FEDERATION_PREFIX {
        return Err(FederationError::InvalidToolId(id.to_string()));
    }
    Ok(())
}

/// Union-find over normalized terms, merging fuzzy partners across tools.
/// Returns normalized term -> matching key (the smallest term of its cluster).
fn matching_keys(tables: &[(&str, &TermTable)], fuzzy: bool) -> HashMap<String, String> {
    let mut parent: HashMap<String, String> = HashMap::new();
    fn find(parent: &mut HashMap<String, String>, x: &str) -> String {
        let p = parent.get(x).cloned().unwrap_or_else(|| x.to_string());
        if p == x {
            return p;
        }
        let root = find(parent, &p);
        parent.insert(x.to_string(), root.clone());
        root
    }
    for (_, t) in tables {
        for e in &t.entries {
            parent
                .entry(e.normalized.clone())
                .or_insert_with(|| e.normalized.clone());
        }
    }
    if fuzzy {
        for i in 0..tables.len() {
            for j in i + 1..tables.len() {
                for m in common_terms(tables[i].1, tables[j].1, true) {
                    let x = tables[i].1.by_raw(&m.raw_a).unwrap().normalized.clone();
                    let y = tables[j].1.by_raw(&m.raw_b).unwrap().normalized.clone();
                    let (rx, ry) = (find(&mut parent, &x), find(&mut parent, &y));
                    if rx != ry {
                        let (lo, hi) = if rx < ry { (rx, ry) } else { (ry, rx) };
                        parent.insert(hi, lo);
                    }
                }
            }
        }
    }
    let terms: Vec<String> = parent.keys().cloned().collect();
    terms
        .into_iter()
        .map(|t| {
            let root = find(&mut parent, &t);
            (t, root)
        })
        .collect()
}

fn tool_terms(
    models: &BTreeMap<String, FeatureModel>,
    matching: &MatchingOptions,
) -> Vec<ToolTerms> {
    let tables: Vec<(String, TermTable)> = models
        .iter()
        .map(|(id, m)| (id.clone(), extract_terms(m, &matching.synonyms)))
        .collect();
    let refs: Vec<(&str, &TermTable)> = tables.iter().map(|(id, t)| (id.as_str(), t)).collect();
    let keys = matching_keys(&refs, matching.fuzzy);
    tables
        .iter()
        .map(|(id, t)| ToolTerms::new(id, t, &keys))
        .collect()
}

fn link_kind(matching: &MatchingOptions, raws: &[&str]) -> LinkKind {
    if matching.equivalence_on_exact && raws.windows(2).all(|w| w[0] == w[1]) {
        LinkKind::Equivalent
    } else {
        LinkKind::Subsumes
    }
}

/// Builds tool ontologies and the federation ontology for `models`.
pub fn build_federation(
    models: &[(String, FeatureModel)],
    options: &FederationOptions,
) -> Result<FederationResult, FederationError> {
    if models.len() < 2 {
        return Err(FederationError::TooFewModels(models.len()));
    }
    let mut by_id = BTreeMap::new();
    let mut tools = BTreeMap::new();
    for (id, model) in models {
        check_tool_id(id)?;
        if by_id.contains_key(id) {
            return Err(FederationError::DuplicateToolId(id.clone()));
        }
        tools.insert(id.clone(), fm_to_ontology(model, id)?);
        by_id.insert(id.clone(), model.clone());
    }

    let terms = tool_terms(&by_id, &options.matching);
    let mut support: BTreeMap<&str, Vec<&ToolTerms>> = BTreeMap::new();
    for tool in &terms {
        for key in tool.terms.keys() {
            support.entry(key).or_default().push(tool);
        }
    }
    let shared: BTreeSet<String> = support
        .iter()
        .filter(|(_, tools)| tools.len() >= 2)
        .map(|(k, _)| k.to_string())
        .collect();
    let tool_refs: Vec<&ToolTerms> = terms.iter().collect();
    let placement = place_terms(&shared, &shared, &tool_refs);

    let mut federation = Ontology::new(FEDERATION_PREFIX)?;
    federation.declare(FEDERATION_ROOT)?;
    let mut class_of: BTreeMap<String, String> = BTreeMap::new();
    for key in hierarchy_order(&placement.parents, None) {
        let name = class_name_for(&key);
        federation.declare(name.clone())?;
        let parent = match &placement.parents[&key] {
            Some(p) => class_of[p].clone(),
            None => FEDERATION_ROOT.to_string(),
        };
        federation.add_axiom(Axiom::subclass(
            ClassExpr::named(&name),
            ClassExpr::named(parent),
        ))?;
        class_of.insert(key, name);
    }

    let mut links = Vec::new();
    for class in federation.classes().iter().skip(1) {
        let key = class_of.iter().find(|(_, c)| *c == class).unwrap().0;
        let supporters = &support[key.as_str()];
        let raws: Vec<&str> = supporters.iter().map(|t| t.raw(key).unwrap()).collect();
        let kind = link_kind(&options.matching, &raws);
        for (tool, raw) in supporters.iter().zip(&raws) {
            links.push(FederationLink {
                federation_class: qualify(FEDERATION_PREFIX, class),
                tool_id: tool.id.clone(),
                tool_class: qualify(&tool.id, raw),
                kind,
            });
        }
    }

    Ok(FederationResult {
        federation,
        tools,
        manifest: Manifest {
            purpose: options.purpose.clone(),
            scope: options.scope.clone(),
            tool_ids: by_id.keys().cloned().collect(),
        },
        models: by_id,
        links,
        matching: options.matching.clone(),
        warnings: placement.warnings,
    })
}

/// Keys in preorder of the placement forest, siblings sorted.
fn hierarchy_order(
    parents: &BTreeMap<String, Option<String>>,
    root: Option<&String>,
) -> Vec<String> {
    let mut out = Vec::new();
    for (key, parent) in parents {
        if parent.as_ref() == root {
            out.push(key.clone());
            out.extend(hierarchy_order(parents, Some(key)));
        }
    }
    out
}

impl FederationResult {
    /// Tool ids supporting each federation class, in link order.
    pub fn supporters(&self, federation_class: &str) -> Vec<&str> {
        let q = qualify(FEDERATION_PREFIX, federation_class);
        self.links
            .iter()
            .filter(|l| l.federation_class == q)
            .map(|l| l.tool_id.as_str())
            .collect()
    }

    /// Direct parent of a federation class, from its subclass axiom.
    pub fn parent_of(&self, federation_class: &str) -> Option<&str> {
        self.federation.axioms().iter().find_map(|a| match a {
            Axiom::SubClassOf {
                sub: ClassExpr::Named(s),
                sup: ClassExpr::Named(p),
            } if s == federation_class => Some(p.as_str()),
            _ => None,
        })
    }

    /// Every ontology qualified by its prefix and merged, plus one axiom per
    /// link (tool class below, or equivalent to, its federation class).
    pub fn merged_ontology(&self) -> Result<Ontology, FederationError> {
        let mut merged = self.federation.qualified();
        for onto in self.tools.values() {
            merged = ontology::merge(&merged, &onto.qualified())?;
        }
        let dotted = |q: &str| q.replacen(':', ".", 1);
        for link in &self.links {
            let tool = ClassExpr::named(dotted(&link.tool_class));
            let fed = ClassExpr::named(dotted(&link.federation_class));
            merged.add_axiom(match link.kind {
                LinkKind::Subsumes => Axiom::subclass(tool, fed),
                LinkKind::Equivalent => Axiom::EquivalentClasses(vec![fed, tool]),
            })?;
        }
        Ok(merged)
    }

    /// Checks that links resolve, manifest ids match the tool maps, and every
    /// federation class has at least two supporting links.
    pub fn check(&self) -> Result<(), FederationError> {
        let fail = |m: String| Err(FederationError::Inconsistent(m));
        let ids: Vec<&String> = self.tools.keys().collect();
        if self.manifest.tool_ids.iter().collect::<Vec<_>>() != ids
            || self.models.keys().collect::<Vec<_>>() != ids
        {
            return fail("manifest tool ids do not match the tool ontologies".into());
        }
        if self.federation.iri_prefix() != FEDERATION_PREFIX
            || !self.federation.is_declared(FEDERATION_ROOT)
        {
            return fail(format!("federation ontology must use prefix \"{FEDERATION_PREFIX}\" and declare {FEDERATION_ROOT}"));
        }
        for link in &self.links {
            let fed_ok = split_qualified(&link.federation_class)
                .is_some_and(|(p, n)| p == FEDERATION_PREFIX && self.federation.is_declared(n));
            let tool_ok = split_qualified(&link.tool_class).is_some_and(|(p, n)| {
                p == link.tool_id && self.tools.get(p).is_some_and(|o| o.is_declared(n))
            });
            if !fed_ok || !tool_ok {
                return fail(format!(
                    "link {} -> {} does not resolve",
                    link.tool_class, link.federation_class
                ));
            }
        }
        for class in self.federation.classes().iter().skip(1) {
            let n = self.supporters(class).len();
            if n < 2 {
                return fail(format!(
                    "federation class {class} has {n} supporting link(s)"
                ));
            }
        }
        Ok(())
    }
}

/// Adds a tool to an existing federation without rebuilding it: existing
/// classes and links are kept as they are, the new tool links to matching
/// classes, and terms it newly shares with earlier tools become classes.
pub fn extend_federation(
    fed: &FederationResult,
    tool_id: &str,
    model: &FeatureModel,
) -> Result<FederationResult, FederationError> {
    check_tool_id(tool_id)?;
    if fed.tools.contains_key(tool_id) {
        return Err(FederationError::DuplicateToolId(tool_id.to_string()));
    }
    let mut out = fed.clone();
    out.tools
        .insert(tool_id.to_string(), fm_to_ontology(model, tool_id)?);
    out.models.insert(tool_id.to_string(), model.clone());
    out.manifest.tool_ids = out.tools.keys().cloned().collect();
    out.warnings.retain(|w| w.kind != WarningKind::FewTools);

    let terms = tool_terms(&out.models, &out.matching);
    let tool = |id: &str| terms.iter().find(|t| t.id == id).unwrap();
    let new_tool = tool(tool_id);

    // matching key of each existing federation class, via the terms it links to
    let mut class_of: BTreeMap<String, String> = BTreeMap::new();
    for link in &fed.links {
        let (_, raw) = split_qualified(&link.tool_class).unwrap();
        let (_, class) = split_qualified(&link.federation_class).unwrap();
        if let Some((key, _)) = tool(&link.tool_id)
            .terms
            .iter()
            .find(|(_, (r, _))| r == raw)
        {
            class_of
                .entry(key.clone())
                .or_insert_with(|| class.to_string());
        }
    }

    let mut new_keys: BTreeSet<String> = BTreeSet::new();
    for (key, (raw, _)) in &new_tool.terms {
        if let Some(class) = class_of.get(key) {
            let existing: Vec<&FederationLink> = fed
                .links
                .iter()
                .filter(|l| l.federation_class == qualify(FEDERATION_PREFIX, class))
                .collect();
            let kind = if existing.iter().all(|l| {
                l.kind == LinkKind::Equivalent
                    && split_qualified(&l.tool_class).map(|(_, r)| r) == Some(raw.as_str())
            }) && out.matching.equivalence_on_exact
            {
                LinkKind::Equivalent
            } else {
                LinkKind::Subsumes
            };
            out.links.push(FederationLink {
                federation_class: qualify(FEDERATION_PREFIX, class),
                tool_id: tool_id.to_string(),
                tool_class: qualify(tool_id, raw),
                kind,
            });
        } else if terms
            .iter()
            .any(|t| t.id != tool_id && t.terms.contains_key(key))
        {
            new_keys.insert(key.clone());
        }
    }

    let shared: BTreeSet<String> = class_of
        .keys()
        .cloned()
        .chain(new_keys.iter().cloned())
        .collect();
    let tool_refs: Vec<&ToolTerms> = terms.iter().collect();
    let placement = place_terms(&new_keys, &shared, &tool_refs);
    for w in placement.warnings {
        if !out.warnings.contains(&w) {
            out.warnings.push(w);
        }
    }

    // new keys whose parent is an existing class (or the root) start a subtree
    let mut order = Vec::new();
    let starts: Vec<&String> = new_keys
        .iter()
        .filter(|k| {
            placement.parents[*k]
                .as_ref()
                .is_none_or(|p| !new_keys.contains(p))
        })
        .collect();
    for start in starts {
        order.push(start.clone());
        order.extend(hierarchy_order(&placement.parents, Some(start)));
    }
    for key in order {
        let mut name = class_name_for(&key);
        let base = name.clone();
        let mut n = 2;
        while out.federation.is_declared(&name) {
            name = format!("{base}{n}");
            n += 1;
        }
        let parent = match &placement.parents[&key] {
            Some(p) => class_of[p].clone(),
            None => FEDERATION_ROOT.to_string(),
        };
        out.federation.declare(name.clone())?;
        out.federation.add_axiom(Axiom::subclass(
            ClassExpr::named(&name),
            ClassExpr::named(parent),
        ))?;
        let supporters: Vec<&ToolTerms> = terms
            .iter()
            .filter(|t| t.terms.contains_key(&key))
            .collect();
        let raws: Vec<&str> = supporters.iter().map(|t| t.raw(&key).unwrap()).collect();
        let kind = link_kind(&out.matching, &raws);
        for (t, raw) in supporters.iter().zip(&raws) {
            out.links.push(FederationLink {
                federation_class: qualify(FEDERATION_PREFIX, &name),
                tool_id: t.id.clone(),
                tool_class: qualify(&t.id, raw),
                kind,
            });
        }
        class_of.insert(key, name);
    }

    sort_links(&mut out);
    Ok(out)
}

/// Orders links by federation class declaration, then tool id.
fn sort_links(fed: &mut FederationResult) {
    let position: HashMap<String, usize> = fed
        .federation
        .classes()
        .iter()
        .enumerate()
        .map(|(i, c)| (qualify(FEDERATION_PREFIX, c), i))
        .collect();
    fed.links.sort_by(|a, b| {
        position[&a.federation_class]
            .cmp(&position[&b.federation_class])
            .then_with(|| a.tool_id.cmp(&b.tool_id))
    });
}

/// Removes a tool, its links, and every federation class left with fewer than
/// two supporting links. Children of removed classes move to the root.
pub fn remove_tool(
    fed: &FederationResult,
    tool_id: &str,
) -> Result<FederationResult, FederationError> {
    if !fed.tools.contains_key(tool_id) {
        return Err(FederationError::UnknownToolId(tool_id.to_string()));
    }
    let mut out = fed.clone();
    out.tools.remove(tool_id);
    out.models.remove(tool_id);
    out.manifest.tool_ids.retain(|id| id != tool_id);
    out.links.retain(|l| l.tool_id != tool_id);
    out.warnings
        .retain(|w| !w.tools.iter().any(|t| t == tool_id) && w.kind != WarningKind::FewTools);

    let doomed: BTreeSet<String> = out
        .federation
        .classes()
        .iter()
        .skip(1)
        .filter(|c| out.supporters(c).len() < 2)
        .cloned()
        .collect();
    out.links
        .retain(|l| split_qualified(&l.federation_class).is_some_and(|(_, c)| !doomed.contains(c)));
    out.federation.retain_axioms(|a| match a {
        Axiom::SubClassOf {
            sub: ClassExpr::Named(s),
            ..
        } => !doomed.contains(s),
        _ => true,
    });
    out.federation.map_axioms(|a| match a {
        Axiom::SubClassOf {
            sub,
            sup: ClassExpr::Named(p),
        } if doomed.contains(p) => Axiom::subclass(sub.clone(), ClassExpr::named(FEDERATION_ROOT)),
        other => other.clone(),
    })?;
    for c in &doomed {
        out.federation.undeclare(c)?;
    }

    if out.tools.len() < 2 {
        out.warnings.push(Warning {
            kind: WarningKind::FewTools,
            tools: Vec::new(),
            message: format!(
                "federation now has {} tool(s); commonalities need at least 2",
                out.tools.len()
            ),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_model::{dead_features, CrossTreeConstraint};

    fn phone() -> FeatureModel {
        FeatureModel::new(
            "Phone",
            Feature::new("Phone").mandatory(Feature::new("Connectivity").or(vec![
                Feature::new("Bluetooth"),
                Feature::new("USB"),
                Feature::new("WiFi"),
            ])),
        )
    }

    fn n(s: &str) -> ClassExpr {
        ClassExpr::named(s)
    }

    fn table(names: &[&str]) -> TermTable {
        let root = names
            .iter()
            .skip(1)
            .fold(Feature::new(names[0]), |f, c| f.optional(Feature::new(*c)));
        extract_terms(&FeatureModel::new("T", root), &Synonyms::new())
    }

    #[test]
    fn or_group_mapping() {
        let o = fm_to_ontology(&phone(), "ph").unwrap();
        assert_eq!(
            o.classes(),
            ["Phone", "Connectivity", "Bluetooth", "USB", "WiFi"]
        );
        let axioms = o.axioms();
        assert!(axioms.contains(&Axiom::subclass(n("Connectivity"), n("Phone"))));
        assert!(axioms.contains(&Axiom::subclass(n("Phone"), n("Connectivity"))));
        assert!(axioms.contains(&Axiom::subclass(
            n("Connectivity"),
            ClassExpr::UnionOf(vec![n("Bluetooth"), n("USB"), n("WiFi")])
        )));
        assert_eq!(axioms.len(), 6);
    }

    #[test]
    fn alternative_mapping_adds_disjointness() {
        let os = FeatureModel::new(
            "OS",
            Feature::new("OS").alternative(vec![Feature::new("Symbian"), Feature::new("Android")]),
        );
        let o = fm_to_ontology(&os, "os").unwrap();
        assert!(o
            .axioms()
            .contains(&Axiom::DisjointClasses(vec![n("Symbian"), n("Android")])));
    }

    #[test]
    fn root_only_mapping() {
        let o = fm_to_ontology(&FeatureModel::new("R", Feature::new("Root")), "r").unwrap();
        assert_eq!(o.classes().len(), 1);
        assert!(o.axioms().is_empty());
    }

    #[test]
    fn dead_feature_is_unsatisfiable_class() {
        let m = FeatureModel::new(
            "A",
            Feature::new("Root")
                .mandatory(Feature::new("A"))
                .optional(Feature::new("B")),
        )
        .with_constraint(CrossTreeConstraint::excludes("A", "B"));
        let o = fm_to_ontology(&m, "x").unwrap();
        let h = ontology::classify(&o);
        let dead: Vec<String> = dead_features(&m).unwrap().into_iter().collect();
        assert_eq!(h.unsatisfiable, dead);
    }

    #[test]
    fn normalization_and_synonyms() {
        let mut syn = Synonyms::new();
        syn.insert("wirelessfidelity", "wifi").unwrap();
        assert_eq!(
            normalize_term("Application_Framework", &syn),
            "applicationframework"
        );
        assert_eq!(normalize_term("WiFi", &syn), normalize_term("Wi_Fi", &syn));
        assert_eq!(normalize_term("Wireless_Fidelity", &syn), "wifi");
        assert!(syn.insert("x", "9lives").is_err());
        let parsed = Synonyms::from_json(r#"{"wirelessfidelity": "wifi"}"#).unwrap();
        assert_eq!(parsed, syn);
        assert!(Synonyms::from_json("[1, 2]").is_err());
    }

    #[test]
    fn term_paths() {
        let t = extract_terms(&phone(), &Synonyms::new());
        assert_eq!(t.entries.len(), 5);
        assert_eq!(t.entries[3].raw, "USB");
        assert_eq!(t.entries[3].normalized, "usb");
        assert_eq!(t.entries[3].path, vec!["Phone", "Connectivity"]);
    }

    #[test]
    fn exact_and_fuzzy_matching() {
        let a = table(&["Alpha", "Bluetooth", "Telephone"]);
        let b = table(&["Omega", "Bluetooth", "Telephones"]);
        let exact = common_terms(&a, &b, false);
        assert_eq!(
            exact,
            vec![TermMatch {
                normalized: "bluetooth".into(),
                raw_a: "Bluetooth".into(),
                raw_b: "Bluetooth".into()
            }]
        );
        let fuzzy = common_terms(&a, &b, true);
        assert_eq!(fuzzy.len(), 2);
        assert_eq!(fuzzy[1].raw_a, "Telephone");
        assert_eq!(fuzzy[1].raw_b, "Telephones");
        assert_eq!(fuzzy[1].normalized, "telephone");
        assert!(
            common_terms(&table(&["Xeno", "Alpha"]), &table(&["Yak", "Beta"]), true).is_empty()
        );
    }

    #[test]
    fn fuzzy_uses_each_term_once() {
        // "cat" is within distance 1 of both "bat" and "car"; the smaller pair wins
        let a = table(&["Left", "cat"]);
        let b = table(&["Right", "bat", "car"]);
        let m = common_terms(&a, &b, true);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].raw_b, "bat");
    }

    #[test]
    fn affinity_groups_under_common_parent() {
        let a = extract_terms(&phone(), &Synonyms::new());
        let other = FeatureModel::new(
            "Tab",
            Feature::new("Tablet").mandatory(Feature::new("Connectivity").or(vec![
                Feature::new("WiFi"),
                Feature::new("USB"),
                Feature::new("Bluetooth"),
            ])),
        );
        let b = extract_terms(&other, &Synonyms::new());
        let aff = build_affinity(&common_terms(&a, &b, false), &a, &b);
        assert_eq!(
            aff.groups,
            vec![
                AffinityGroup {
                    key: "connectivity".into(),
                    members: vec!["bluetooth".into(), "usb".into(), "wifi".into()]
                },
                AffinityGroup {
                    key: SHARED_GROUP.into(),
                    members: vec!["connectivity".into()]
                },
            ]
        );
        assert!(aff.warnings.is_empty());
    }

    #[test]
    fn affinity_conflict_goes_to_shared_with_warning() {
        let a = FeatureModel::new(
            "A",
            Feature::new("RootA")
                .optional(Feature::new("Media").optional(Feature::new("Camera")))
                .optional(Feature::new("Sensors")),
        );
        let b = FeatureModel::new(
            "B",
            Feature::new("RootB")
                .optional(Feature::new("Sensors").optional(Feature::new("Camera")))
                .optional(Feature::new("Media")),
        );
        let (ta, tb) = (
            extract_terms(&a, &Synonyms::new()),
            extract_terms(&b, &Synonyms::new()),
        );
        let aff = build_affinity(&common_terms(&ta, &tb, false), &ta, &tb);
        assert_eq!(aff.groups.len(), 1);
        assert_eq!(aff.groups[0].key, SHARED_GROUP);
        assert_eq!(aff.groups[0].members, vec!["camera", "media", "sensors"]);
        assert_eq!(aff.warnings.len(), 1);
        assert!(aff.warnings[0].contains("\"camera\""));

        let lone_a = table(&["P", "Bluetooth"]);
        let lone_b = table(&["Q", "Bluetooth"]);
        let aff = build_affinity(&common_terms(&lone_a, &lone_b, false), &lone_a, &lone_b);
        assert_eq!(aff.groups[0].key, SHARED_GROUP);
        assert!(aff.warnings.is_empty());
    }

    fn tablet() -> FeatureModel {
        FeatureModel::new(
            "Tab",
            Feature::new("Tablet")
                .mandatory(Feature::new("Connectivity").or(vec![
                    Feature::new("WiFi"),
                    Feature::new("USB"),
                    Feature::new("Bluetooth"),
                ]))
                .optional(Feature::new("Camera")),
        )
    }

    #[test]
    fn build_two_tools() {
        let fed = build_federation(
            &[("ph".into(), phone()), ("tab".into(), tablet())],
            &FederationOptions::default(),
        )
        .unwrap();
        assert_eq!(
            fed.federation.classes(),
            ["Federation", "Connectivity", "Bluetooth", "Usb", "Wifi"]
        );
        assert_eq!(fed.parent_of("Bluetooth"), Some("Connectivity"));
        assert_eq!(fed.parent_of("Connectivity"), Some("Federation"));
        assert_eq!(fed.links.len(), 8);
        assert_eq!(fed.links[0].tool_class, "ph:Connectivity");
        assert!(fed.links.iter().all(|l| l.kind == LinkKind::Subsumes));
        fed.check().unwrap();

        let merged = fed.merged_ontology().unwrap();
        assert!(ontology::is_subsumed(&merged, &n("tab.WiFi"), &n("fed.Connectivity")).unwrap());
    }

    #[test]
    fn build_errors() {
        let one = [("a".to_string(), phone())];
        assert!(matches!(
            build_federation(&one, &FederationOptions::default()),
            Err(FederationError::TooFewModels(1))
        ));
        let dup = [("a".to_string(), phone()), ("a".to_string(), tablet())];
        assert!(matches!(
            build_federation(&dup, &FederationOptions::default()),
            Err(FederationError::DuplicateToolId(_))
        ));
        let reserved = [("fed".to_string(), phone()), ("a".to_string(), tablet())];
        assert!(matches!(
            build_federation(&reserved, &FederationOptions::default()),
            Err(FederationError::InvalidToolId(_))
        ));
    }

    #[test]
    fn equivalence_on_exact_names() {
        let mut options = FederationOptions::default();
        options.matching.equivalence_on_exact = true;
        let other = FeatureModel::new(
            "Other",
            Feature::new("Other")
                .optional(Feature::new("Wi_Fi"))
                .optional(Feature::new("USB")),
        );
        let fed =
            build_federation(&[("a".into(), phone()), ("b".into(), other)], &options).unwrap();
        let kind = |class: &str| {
            fed.links
                .iter()
                .find(|l| l.federation_class == class)
                .unwrap()
                .kind
        };
        assert_eq!(kind("fed:Usb"), LinkKind::Equivalent);
        assert_eq!(kind("fed:Wifi"), LinkKind::Subsumes);
    }

    #[test]
    fn extend_and_remove() {
        let base = build_federation(
            &[("ph".into(), phone()), ("tab".into(), tablet())],
            &FederationOptions::default(),
        )
        .unwrap();
        let cam = FeatureModel::new(
            "Cam",
            Feature::new("Camphone").optional(Feature::new("Camera")),
        );
        let ext = extend_federation(&base, "cam", &cam).unwrap();
        assert_eq!(ext.federation.classes().last().unwrap(), "Camera");
        assert_eq!(ext.supporters("Camera"), vec!["cam", "tab"]);
        assert_eq!(ext.links.len(), 10);
        ext.check().unwrap();

        let back = remove_tool(&ext, "cam").unwrap();
        assert_eq!(back, base);

        let single = remove_tool(&base, "tab").unwrap();
        assert_eq!(single.federation.classes(), ["Federation"]);
        assert!(single.links.is_empty());
        assert_eq!(single.warnings.len(), 1);
        assert!(matches!(
            remove_tool(&base, "zzz"),
            Err(FederationError::UnknownToolId(_))
        ));
        assert!(matches!(
            extend_federation(&base, "ph", &cam),
            Err(FederationError::DuplicateToolId(_))
        ));
    }

    #[test]
    fn removal_reparents_orphans() {
        // Connectivity is shared by a and b only; its children by a, b and c
        let flat = FeatureModel::new(
            "Flat",
            Feature::new("Flat")
                .optional(Feature::new("Bluetooth"))
                .optional(Feature::new("USB"))
                .optional(Feature::new("WiFi")),
        );
        let fed = build_federation(
            &[
                ("a".into(), phone()),
                ("b".into(), tablet()),
                ("c".into(), flat),
            ],
            &FederationOptions::default(),
        )
        .unwrap();
        // c places the connection terms directly under its root, so the
        // tools disagree and they land in the shared group
        assert_eq!(fed.parent_of("Bluetooth"), Some("Federation"));
        assert_eq!(fed.warnings.len(), 3);
        let without_b = remove_tool(&fed, "b").unwrap();
        assert!(!without_b.federation.is_declared("Connectivity"));
        assert_eq!(without_b.supporters("Bluetooth"), vec!["a", "c"]);
        without_b.check().unwrap();
    }
}
