//! Feature models and their configuration semantics.
//!
//! A [`FeatureModel`] is a rooted tree of features. Each feature owns an
//! ordered list of children, each of which is either a solitary child
//! (mandatory or optional) or a group (alternative or or). Cross-tree
//! `requires`/`excludes` constraints may relate any two features.
//!
//! Configuration semantics are given twice, independently:
//!
//! * [`to_formula`] encodes the model as a propositional formula whose models
//!   are exactly the valid configurations;
//! * [`is_valid_configuration`] checks the relation rules directly on the tree.
//!
//! Enumeration, counting and anomaly analysis build on top of those.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::logic::PropFormula;
use crate::sat::{Encoder, Lit};

/// Feature-count ceiling for exact counting unless overridden.
pub const DEFAULT_FEATURE_BUDGET: usize = 30;

/// Words of the model language that cannot be used as feature names.
pub const RESERVED_WORDS: &[&str] = &[
    "model",
    "feature",
    "mandatory",
    "optional",
    "or",
    "alternative",
    "group",
    "constraint",
    "requires",
    "excludes",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChildKind {
    Mandatory,
    Optional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupKind {
    Alternative,
    Or,
}

/// One entry in a feature's ordered child list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Child {
    Solitary {
        kind: ChildKind,
        feature: Feature,
    },
    Group {
        kind: GroupKind,
        members: Vec<Feature>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Feature {
    pub name: String,
    pub children: Vec<Child>,
}

impl Feature {
    pub fn new(name: impl Into<String>) -> Self {
        Feature {
            name: name.into(),
            children: Vec::new(),
        }
    }

    pub fn mandatory(mut self, child: Feature) -> Self {
        self.children.push(Child::Solitary {
            kind: ChildKind::Mandatory,
            feature: child,
        });
        self
    }

    pub fn optional(mut self, child: Feature) -> Self {
        self.children.push(Child::Solitary {
            kind: ChildKind::Optional,
            feature: child,
        });
        self
    }

    pub fn alternative(mut self, members: Vec<Feature>) -> Self {
        self.children.push(Child::Group {
            kind: GroupKind::Alternative,
            members,
        });
        self
    }

    pub fn or(mut self, members: Vec<Feature>) -> Self {
        self.children.push(Child::Group {
            kind: GroupKind::Or,
            members,
        });
        self
    }

    /// Direct sub-features in source order.
    pub fn sub_features(&self) -> impl Iterator<Item = &Feature> {
        self.children.iter().flat_map(|child| match child {
            Child::Solitary { feature, .. } => std::slice::from_ref(feature).iter(),
            Child::Group { members, .. } => members.iter(),
        })
    }

    fn preorder<'a>(&'a self, out: &mut Vec<&'a Feature>) {
        out.push(self);
        for sub in self.sub_features() {
            sub.preorder(out);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintKind {
    Requires,
    Excludes,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintKind::Requires => write!(f, "requires"),
            ConstraintKind::Excludes => write!(f, "excludes"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CrossTreeConstraint {
    pub kind: ConstraintKind,
    pub from: String,
    pub to: String,
}

impl CrossTreeConstraint {
    pub fn requires(from: impl Into<String>, to: impl Into<String>) -> Self {
        CrossTreeConstraint {
            kind: ConstraintKind::Requires,
            from: from.into(),
            to: to.into(),
        }
    }

    pub fn excludes(from: impl Into<String>, to: impl Into<String>) -> Self {
        CrossTreeConstraint {
            kind: ConstraintKind::Excludes,
            from: from.into(),
            to: to.into(),
        }
    }
}

/// A feature model. Equality treats the constraint list as a multiset, since
/// constraint order carries no meaning.
#[derive(Debug, Clone)]
pub struct FeatureModel {
    pub name: String,
    pub root: Feature,
    pub constraints: Vec<CrossTreeConstraint>,
}

impl PartialEq for FeatureModel {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.root == other.root
            && self.sorted_constraints() == other.sorted_constraints()
    }
}

impl Eq for FeatureModel {}

impl FeatureModel {
    pub fn new(name: impl Into<String>, root: Feature) -> Self {
        FeatureModel {
            name: name.into(),
            root,
            constraints: Vec::new(),
        }
    }

    pub fn with_constraint(mut self, constraint: CrossTreeConstraint) -> Self {
        self.constraints.push(constraint);
        self
    }

    /// All features in canonical order: preorder, siblings in source order.
    pub fn features(&self) -> Vec<&Feature> {
        let mut out = Vec::new();
        self.root.preorder(&mut out);
        out
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.features()
            .into_iter()
            .map(|f| f.name.as_str())
            .collect()
    }

    pub fn feature_count(&self) -> usize {
        self.features().len()
    }

    pub fn find(&self, name: &str) -> Option<&Feature> {
        self.features().into_iter().find(|f| f.name == name)
    }

    /// Constraints sorted by kind, then endpoints.
    pub fn sorted_constraints(&self) -> Vec<&CrossTreeConstraint> {
        let mut cs: Vec<_> = self.constraints.iter().collect();
        cs.sort();
        cs
    }
}

/// A product: the set of selected feature names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Configuration {
    pub selected: BTreeSet<String>,
}

impl Configuration {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Configuration {
            selected: names.into_iter().map(Into::into).collect(),
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.selected.contains(name)
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// Selected names listed in the model's canonical feature order.
    pub fn ordered<'a>(&self, model: &'a FeatureModel) -> Vec<&'a str> {
        model
            .feature_names()
            .into_iter()
            .filter(|n| self.selected.contains(*n))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => write!(f, "error"),
            Severity::Warning => write!(f, "warning"),
        }
    }
}

/// What a diagnostic points at. Feature and group positions count occurrences
/// in preorder, so a text front end can map them back to source spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Model,
    Feature(usize),
    Group(usize),
    Constraint(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub name: Option<String>,
    pub location: Location,
}

impl Diagnostic {
    fn error(message: String, name: Option<&str>, location: Location) -> Self {
        Diagnostic {
            severity: Severity::Error,
            message,
            name: name.map(str::to_string),
            location,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.severity, self.message)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("model is invalid: {}", .0.iter().map(|d| d.message.as_str()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("unknown feature \"{0}\"")]
    UnknownFeature(String),
    #[error("model has {features} features, above the counting budget of {budget}")]
    OverBudget { features: usize, budget: usize },
    #[error("no valid configurations")]
    NoValidConfigurations,
}

/// Normalized form used for uniqueness checks and term matching: lowercase,
/// with `_`, `-` and spaces removed.
pub fn normalize_name(raw: &str) -> String {
    raw.chars()
        .filter(|c| !matches!(c, '_' | '-' | ' '))
        .flat_map(char::to_lowercase)
        .collect()
}

pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Checks every structural invariant of `model`. The result is empty iff the
/// model is well formed.
pub fn validate(model: &FeatureModel) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    if model.name.is_empty() {
        diags.push(Diagnostic::error(
            "model name is empty".into(),
            None,
            Location::Model,
        ));
    } else if model.name.chars().any(char::is_control) {
        diags.push(Diagnostic::error(
            "model name contains control characters".into(),
            None,
            Location::Model,
        ));
    }

    let mut exact: HashSet<&str> = HashSet::new();
    let mut normalized: HashMap<String, &str> = HashMap::new();
    for (i, feature) in model.features().into_iter().enumerate() {
        let name = feature.name.as_str();
        if !is_identifier(name) {
            diags.push(Diagnostic::error(
                format!("\"{name}\" is not a valid feature name"),
                Some(name),
                Location::Feature(i),
            ));
        } else if RESERVED_WORDS.contains(&name) {
            diags.push(Diagnostic::error(
                format!("\"{name}\" is a reserved word"),
                Some(name),
                Location::Feature(i),
            ));
        }
        if !exact.insert(name) {
            diags.push(Diagnostic::error(
                format!("duplicate feature name \"{name}\""),
                Some(name),
                Location::Feature(i),
            ));
            continue;
        }
        let norm = normalize_name(name);
        if let Some(prev) = normalized.get(&norm) {
            diags.push(Diagnostic::error(
                format!("feature name \"{name}\" clashes with \"{prev}\" after normalization"),
                Some(name),
                Location::Feature(i),
            ));
        } else {
            normalized.insert(norm, name);
        }
    }

    // groups are numbered in textual order: a group is counted before the
    // groups nested inside its members
    fn check_groups(feature: &Feature, next: &mut usize, diags: &mut Vec<Diagnostic>) {
        for child in &feature.children {
            match child {
                Child::Solitary { feature: sub, .. } => check_groups(sub, next, diags),
                Child::Group { kind, members } => {
                    let index = *next;
                    *next += 1;
                    if members.len() < 2 {
                        let kind = match kind {
                            GroupKind::Alternative => "alternative",
                            GroupKind::Or => "or",
                        };
                        diags.push(Diagnostic::error(
                            format!(
                                "group arity < 2: {kind} group under \"{}\" has {} member(s)",
                                feature.name,
                                members.len()
                            ),
                            Some(&feature.name),
                            Location::Group(index),
                        ));
                    }
                    for m in members {
                        check_groups(m, next, diags);
                    }
                }
            }
        }
    }
    check_groups(&model.root, &mut 0, &mut diags);

    let mut seen = HashSet::new();
    for (i, c) in model.constraints.iter().enumerate() {
        for end in [&c.from, &c.to] {
            if !exact.contains(end.as_str()) {
                diags.push(Diagnostic::error(
                    format!("constraint references unknown feature \"{end}\""),
                    Some(end),
                    Location::Constraint(i),
                ));
            }
        }
        if c.from == c.to {
            diags.push(Diagnostic::error(
                format!("constraint relates \"{}\" to itself", c.from),
                Some(&c.from),
                Location::Constraint(i),
            ));
        }
        if !seen.insert(c) {
            diags.push(Diagnostic {
                severity: Severity::Warning,
                message: format!("duplicate constraint {} {} {}", c.from, c.kind, c.to),
                name: Some(c.from.clone()),
                location: Location::Constraint(i),
            });
        }
    }
    diags
}

fn ensure_valid(model: &FeatureModel) -> Result<(), ModelError> {
    let errors: Vec<_> = validate(model)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(ModelError::Invalid(errors))
    }
}

/// Propositional encoding of the model; its models are exactly the valid
/// configurations.
pub fn to_formula(model: &FeatureModel) -> Result<PropFormula, ModelError> {
    ensure_valid(model)?;
    let var = |f: &Feature| PropFormula::var(&f.name);
    let mut parts = vec![var(&model.root)];
    for parent in model.features() {
        let p = var(parent);
        for child in &parent.children {
            match child {
                Child::Solitary { kind, feature } => {
                    let c = var(feature);
                    parts.push(match kind {
                        ChildKind::Mandatory => PropFormula::iff(p.clone(), c),
                        ChildKind::Optional => PropFormula::implies(c, p.clone()),
                    });
                }
                Child::Group { kind, members } => {
                    let ms: Vec<PropFormula> = members.iter().map(var).collect();
                    parts.push(PropFormula::implies(
                        p.clone(),
                        match kind {
                            GroupKind::Alternative => PropFormula::exactly_one(ms.clone()),
                            GroupKind::Or => PropFormula::or(ms.clone()),
                        },
                    ));
                    for m in ms {
                        parts.push(PropFormula::implies(m, p.clone()));
                    }
                }
            }
        }
    }
    for c in &model.constraints {
        let from = PropFormula::var(&c.from);
        let to = PropFormula::var(&c.to);
        parts.push(match c.kind {
            ConstraintKind::Requires => PropFormula::implies(from, to),
            ConstraintKind::Excludes => PropFormula::not(PropFormula::And(vec![from, to])),
        });
    }
    Ok(PropFormula::and(parts))
}

/// Checks `config` against the relation rules, walking the tree directly.
pub fn is_valid_configuration(
    model: &FeatureModel,
    config: &Configuration,
) -> Result<bool, ModelError> {
    ensure_valid(model)?;
    let names: HashSet<&str> = model.feature_names().into_iter().collect();
    if let Some(unknown) = config.selected.iter().find(|n| !names.contains(n.as_str())) {
        return Err(ModelError::UnknownFeature(unknown.clone()));
    }

    fn tree_ok(f: &Feature, selected: bool, config: &Configuration) -> bool {
        f.children.iter().all(|child| match child {
            Child::Solitary { kind, feature } => {
                let on = config.contains(&feature.name);
                let relation_ok = !matches!(
                    (selected, kind, on),
                    (false, _, true) | (true, ChildKind::Mandatory, false)
                );
                relation_ok && tree_ok(feature, on, config)
            }
            Child::Group { kind, members } => {
                let on = members.iter().filter(|m| config.contains(&m.name)).count();
                let relation_ok = match (selected, kind) {
                    (false, _) => on == 0,
                    (true, GroupKind::Alternative) => on == 1,
                    (true, GroupKind::Or) => on >= 1,
                };
                relation_ok
                    && members
                        .iter()
                        .all(|m| tree_ok(m, config.contains(&m.name), config))
            }
        })
    }

    let root_on = config.contains(&model.root.name);
    if !root_on || !tree_ok(&model.root, root_on, config) {
        return Ok(false);
    }
    Ok(model.constraints.iter().all(|c| {
        let from = config.contains(&c.from);
        let to = config.contains(&c.to);
        match c.kind {
            ConstraintKind::Requires => !from || to,
            ConstraintKind::Excludes => !(from && to),
        }
    }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enumeration {
    pub configurations: Vec<Configuration>,
    /// Set when more valid configurations exist than were returned.
    pub truncated: bool,
    /// Total number of valid configurations visited.
    pub total: u64,
}

/// Lists the first `limit` valid configurations, ordered by size and then
/// lexicographically over canonical feature positions.
pub fn enumerate_configurations(
    model: &FeatureModel,
    limit: usize,
) -> Result<Enumeration, ModelError> {
    ensure_valid(model)?;
    let index = Index::build(model);

    // max-heap holding the `limit` smallest keys seen so far
    let mut heap: BinaryHeap<ConfigKey> = BinaryHeap::new();
    let mut total = 0u64;
    index.search(|selection| {
        total += 1;
        if limit == 0 {
            return;
        }
        let key = ConfigKey(
            selection
                .iter()
                .enumerate()
                .filter_map(|(i, &on)| on.then_some(i))
                .collect(),
        );
        if heap.len() < limit {
            heap.push(key);
        } else if key < *heap.peek().unwrap() {
            heap.pop();
            heap.push(key);
        }
    });

    let names = model.feature_names();
    let configurations = heap
        .into_sorted_vec()
        .into_iter()
        .map(|key| Configuration::new(key.0.iter().map(|&i| names[i])))
        .collect();
    Ok(Enumeration {
        configurations,
        truncated: total > limit as u64,
        total,
    })
}

#[derive(Debug, PartialEq, Eq)]
struct ConfigKey(Vec<usize>);

impl Ord for ConfigKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for ConfigKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact number of valid configurations, with the default feature budget.
pub fn count_configurations(model: &FeatureModel) -> Result<u64, ModelError> {
    count_configurations_with_budget(model, DEFAULT_FEATURE_BUDGET)
}

/// Exact number of valid configurations. Models with more than `budget`
/// features are refused.
pub fn count_configurations_with_budget(
    model: &FeatureModel,
    budget: usize,
) -> Result<u64, ModelError> {
    ensure_valid(model)?;
    let features = model.feature_count();
    if features > budget {
        return Err(ModelError::OverBudget { features, budget });
    }
    let index = Index::build(model);
    if index.constraints.len() > INCLUSION_EXCLUSION_MAX {
        let mut total = 0u64;
        index.search(|_| total += 1);
        return Ok(total);
    }
    Ok(index.count_inclusion_exclusion())
}

const INCLUSION_EXCLUSION_MAX: usize = 16;

/// Features that appear in no valid configuration.
pub fn dead_features(model: &FeatureModel) -> Result<BTreeSet<String>, ModelError> {
    let (encoder, names) = encode(model)?;
    Ok(names
        .into_iter()
        .filter(|n| {
            let v = encoder.lookup(n).expect("every feature is encoded");
            !encoder.cnf().is_satisfiable(&[Lit::pos(v)])
        })
        .map(str::to_string)
        .collect())
}

/// Features present in every valid configuration.
pub fn core_features(model: &FeatureModel) -> Result<BTreeSet<String>, ModelError> {
    let (encoder, names) = encode(model)?;
    if !encoder.cnf().is_satisfiable(&[]) {
        return Err(ModelError::NoValidConfigurations);
    }
    Ok(names
        .into_iter()
        .filter(|n| {
            let v = encoder.lookup(n).expect("every feature is encoded");
            !encoder.cnf().is_satisfiable(&[Lit::neg(v)])
        })
        .map(str::to_string)
        .collect())
}

fn encode(model: &FeatureModel) -> Result<(Encoder, Vec<&str>), ModelError> {
    let formula = to_formula(model)?;
    let mut encoder = Encoder::new();
    let names = model.feature_names();
    for n in &names {
        encoder.var_for(n);
    }
    encoder.assert(&formula);
    Ok((encoder, names))
}

#[derive(Debug, Clone, Copy)]
enum Relation {
    Root,
    Mandatory,
    Optional,
    Member { group: usize, last: bool },
}

#[derive(Debug, Clone)]
enum Item {
    Solitary(ChildKind, usize),
    Group(GroupKind, Vec<usize>),
}

/// Index-based view of a validated model, features numbered in canonical order.
struct Index {
    parent: Vec<Option<usize>>,
    relation: Vec<Relation>,
    items: Vec<Vec<Item>>,
    group_kinds: Vec<GroupKind>,
    constraints: Vec<(ConstraintKind, usize, usize)>,
    /// constraints to check once feature `i` is decided
    checks_at: Vec<Vec<usize>>,
}

impl Index {
    fn build(model: &FeatureModel) -> Self {
        let features = model.features();
        let position: BTreeMap<&str, usize> = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.name.as_str(), i))
            .collect();
        let n = features.len();
        let mut parent = vec![None; n];
        let mut relation = vec![Relation::Root; n];
        let mut items = vec![Vec::new(); n];
        let mut group_kinds = Vec::new();
        for (p, f) in features.iter().enumerate() {
            for child in &f.children {
                match child {
                    Child::Solitary { kind, feature } => {
                        let c = position[feature.name.as_str()];
                        parent[c] = Some(p);
                        relation[c] = match kind {
                            ChildKind::Mandatory => Relation::Mandatory,
                            ChildKind::Optional => Relation::Optional,
                        };
                        items[p].push(Item::Solitary(*kind, c));
                    }
                    Child::Group { kind, members } => {
                        let group = group_kinds.len();
                        group_kinds.push(*kind);
                        let ids: Vec<usize> =
                            members.iter().map(|m| position[m.name.as_str()]).collect();
                        for (k, &c) in ids.iter().enumerate() {
                            parent[c] = Some(p);
                            relation[c] = Relation::Member {
                                group,
                                last: k + 1 == ids.len(),
                            };
                        }
                        items[p].push(Item::Group(*kind, ids));
                    }
                }
            }
        }
        let constraints: Vec<_> = model
            .constraints
            .iter()
            .map(|c| (c.kind, position[c.from.as_str()], position[c.to.as_str()]))
            .collect();
        let mut checks_at = vec![Vec::new(); n];
        for (k, &(_, a, b)) in constraints.iter().enumerate() {
            checks_at[a.max(b)].push(k);
        }
        Index {
            parent,
            relation,
            items,
            group_kinds,
            constraints,
            checks_at,
        }
    }

    /// Depth-first search over canonical order, visiting every valid selection.
    /// Tree rules prune as soon as a parent or group decides a feature, and
    /// cross-tree constraints are checked once both endpoints are assigned.
    fn search(&self, mut visit: impl FnMut(&[bool])) {
        let n = self.parent.len();
        let mut selection = vec![false; n];
        let mut group_on = vec![0usize; self.group_kinds.len()];
        self.descend(0, &mut selection, &mut group_on, &mut visit);
    }

    fn descend(
        &self,
        i: usize,
        selection: &mut Vec<bool>,
        group_on: &mut Vec<usize>,
        visit: &mut impl FnMut(&[bool]),
    ) {
        if i == selection.len() {
            visit(selection);
            return;
        }
        let parent_on = self.parent[i].is_none_or(|p| selection[p]);
        let (allow_off, allow_on) = if !parent_on {
            (true, false)
        } else {
            match self.relation[i] {
                Relation::Root | Relation::Mandatory => (false, true),
                Relation::Optional => (true, true),
                Relation::Member { group, last } => match self.group_kinds[group] {
                    GroupKind::Alternative if group_on[group] > 0 => (true, false),
                    _ if last && group_on[group] == 0 => (false, true),
                    _ => (true, true),
                },
            }
        };
        for on in [false, true] {
            if (on && !allow_on) || (!on && !allow_off) {
                continue;
            }
            selection[i] = on;
            if !self.constraints_hold(i, selection) {
                continue;
            }
            let group = match self.relation[i] {
                Relation::Member { group, .. } if on => Some(group),
                _ => None,
            };
            if let Some(g) = group {
                group_on[g] += 1;
            }
            self.descend(i + 1, selection, group_on, visit);
            if let Some(g) = group {
                group_on[g] -= 1;
            }
        }
        selection[i] = false;
    }

    fn constraints_hold(&self, i: usize, selection: &[bool]) -> bool {
        self.checks_at[i].iter().all(|&k| {
            let (kind, a, b) = self.constraints[k];
            match kind {
                ConstraintKind::Requires => !selection[a] || selection[b],
                ConstraintKind::Excludes => !(selection[a] && selection[b]),
            }
        })
    }

    /// Counts by inclusion-exclusion over constraint violations. Each term
    /// forces some features on or off and is counted by a product over the tree.
    fn count_inclusion_exclusion(&self) -> u64 {
        let n = self.parent.len();
        let k = self.constraints.len();
        let mut total: i128 = 0;
        for subset in 0u32..(1 << k) {
            let mut forced: Vec<Option<bool>> = vec![None; n];
            let mut conflict = false;
            for (bit, &(kind, a, b)) in self.constraints.iter().enumerate() {
                if subset & (1 << bit) == 0 {
                    continue;
                }
                let violation = match kind {
                    ConstraintKind::Requires => [(a, true), (b, false)],
                    ConstraintKind::Excludes => [(a, true), (b, true)],
                };
                for (f, value) in violation {
                    match forced[f] {
                        Some(v) if v != value => conflict = true,
                        _ => forced[f] = Some(value),
                    }
                }
            }
            if conflict {
                continue;
            }
            let (count, _) = self.count_subtree(0, &forced);
            let term = count as i128;
            if subset.count_ones() % 2 == 0 {
                total += term;
            } else {
                total -= term;
            }
        }
        total as u64
    }

    /// Returns (tree-valid completions of the subtree with `f` selected,
    /// whether the subtree may be entirely deselected).
    fn count_subtree(&self, f: usize, forced: &[Option<bool>]) -> (u128, bool) {
        let mut can_be_off = forced[f] != Some(true);
        let mut count: u128 = if forced[f] == Some(false) { 0 } else { 1 };
        for item in &self.items[f] {
            match item {
                Item::Solitary(kind, c) => {
                    let (on, off_ok) = self.count_subtree(*c, forced);
                    can_be_off &= off_ok;
                    count *= match kind {
                        ChildKind::Mandatory => on,
                        ChildKind::Optional => on + u128::from(off_ok),
                    };
                }
                Item::Group(kind, members) => {
                    let stats: Vec<(u128, bool)> = members
                        .iter()
                        .map(|&m| self.count_subtree(m, forced))
                        .collect();
                    can_be_off &= stats.iter().all(|s| s.1);
                    count *= match kind {
                        GroupKind::Alternative => (0..stats.len())
                            .map(|chosen| {
                                let others_off =
                                    stats.iter().enumerate().all(|(j, s)| j == chosen || s.1);
                                if others_off {
                                    stats[chosen].0
                                } else {
                                    0
                                }
                            })
                            .sum(),
                        GroupKind::Or => {
                            let any: u128 = stats.iter().map(|s| s.0 + u128::from(s.1)).product();
                            let none = u128::from(stats.iter().all(|s| s.1));
                            any - none
                        }
                    };
                }
            }
        }
        (count, can_be_off)
    }
}
