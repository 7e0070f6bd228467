//! Class-expression ontologies over the propositionally closed fragment:
//! named classes, `Thing`, `Nothing`, intersection, union and complement,
//! related by subclass, equivalence and disjointness axioms.
//!
//! Without roles or individuals every question about such an ontology is a
//! propositional satisfiability question over one variable per class, which is
//! what [`reasoner`] answers.

pub mod reasoner;

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::logic::PropFormula;

pub use reasoner::{
    classify, is_consistent, is_satisfiable, is_subsumed, Backend, Hierarchy, Reasoner,
    TRUTH_TABLE_MAX_CLASSES,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ClassExpr {
    Named(String),
    Thing,
    Nothing,
    IntersectionOf(Vec<ClassExpr>),
    UnionOf(Vec<ClassExpr>),
    ComplementOf(Box<ClassExpr>),
}

impl ClassExpr {
    pub fn named(name: impl Into<String>) -> Self {
        ClassExpr::Named(name.into())
    }

    pub fn complement(expr: ClassExpr) -> Self {
        ClassExpr::ComplementOf(Box::new(expr))
    }

    pub fn to_formula(&self) -> PropFormula {
        match self {
            ClassExpr::Named(n) => PropFormula::var(n),
            ClassExpr::Thing => PropFormula::True,
            ClassExpr::Nothing => PropFormula::False,
            ClassExpr::IntersectionOf(xs) => {
                PropFormula::And(xs.iter().map(ClassExpr::to_formula).collect())
            }
            ClassExpr::UnionOf(xs) => {
                PropFormula::Or(xs.iter().map(ClassExpr::to_formula).collect())
            }
            ClassExpr::ComplementOf(x) => PropFormula::not(x.to_formula()),
        }
    }

    fn check(&self, declared: &HashSet<String>) -> Result<(), OntologyError> {
        match self {
            ClassExpr::Named(n) if !declared.contains(n) => {
                Err(OntologyError::UndeclaredClass(n.clone()))
            }
            ClassExpr::Named(_) | ClassExpr::Thing | ClassExpr::Nothing => Ok(()),
            ClassExpr::IntersectionOf(xs) | ClassExpr::UnionOf(xs) => {
                if xs.len() < 2 {
                    return Err(OntologyError::Arity {
                        construct: if matches!(self, ClassExpr::UnionOf(_)) {
                            "ObjectUnionOf"
                        } else {
                            "ObjectIntersectionOf"
                        },
                        found: xs.len(),
                    });
                }
                xs.iter().try_for_each(|x| x.check(declared))
            }
            ClassExpr::ComplementOf(x) => x.check(declared),
        }
    }

    pub fn mentions(&self, name: &str) -> bool {
        match self {
            ClassExpr::Named(n) => n == name,
            ClassExpr::Thing | ClassExpr::Nothing => false,
            ClassExpr::IntersectionOf(xs) | ClassExpr::UnionOf(xs) => {
                xs.iter().any(|x| x.mentions(name))
            }
            ClassExpr::ComplementOf(x) => x.mentions(name),
        }
    }

    fn rename(&self, f: &impl Fn(&str) -> String) -> ClassExpr {
        match self {
            ClassExpr::Named(n) => ClassExpr::Named(f(n)),
            ClassExpr::Thing => ClassExpr::Thing,
            ClassExpr::Nothing => ClassExpr::Nothing,
            ClassExpr::IntersectionOf(xs) => {
                ClassExpr::IntersectionOf(xs.iter().map(|x| x.rename(f)).collect())
            }
            ClassExpr::UnionOf(xs) => ClassExpr::UnionOf(xs.iter().map(|x| x.rename(f)).collect()),
            ClassExpr::ComplementOf(x) => ClassExpr::complement(x.rename(f)),
        }
    }
}

impl fmt::Display for ClassExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, xs: &[ClassExpr], op: &str| {
            write!(f, "(")?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, ")")
        };
        match self {
            ClassExpr::Named(n) => write!(f, "{n}"),
            ClassExpr::Thing => write!(f, "Thing"),
            ClassExpr::Nothing => write!(f, "Nothing"),
            ClassExpr::IntersectionOf(xs) => join(f, xs, "and"),
            ClassExpr::UnionOf(xs) => join(f, xs, "or"),
            ClassExpr::ComplementOf(x) => write!(f, "not {x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Axiom {
    SubClassOf { sub: ClassExpr, sup: ClassExpr },
    EquivalentClasses(Vec<ClassExpr>),
    DisjointClasses(Vec<ClassExpr>),
}

impl Axiom {
    pub fn subclass(sub: ClassExpr, sup: ClassExpr) -> Self {
        Axiom::SubClassOf { sub, sup }
    }

    /// Propositional reading; n-ary axioms expand pairwise.
    pub fn to_formula(&self) -> PropFormula {
        match self {
            Axiom::SubClassOf { sub, sup } => {
                PropFormula::implies(sub.to_formula(), sup.to_formula())
            }
            Axiom::EquivalentClasses(xs) => PropFormula::and(pairs(xs, |a, b| {
                PropFormula::iff(a.to_formula(), b.to_formula())
            })),
            Axiom::DisjointClasses(xs) => PropFormula::and(pairs(xs, |a, b| {
                PropFormula::not(PropFormula::And(vec![a.to_formula(), b.to_formula()]))
            })),
        }
    }

    fn check(&self, declared: &HashSet<String>) -> Result<(), OntologyError> {
        match self {
            Axiom::SubClassOf { sub, sup } => {
                sub.check(declared)?;
                sup.check(declared)
            }
            Axiom::EquivalentClasses(xs) | Axiom::DisjointClasses(xs) => {
                if xs.len() < 2 {
                    return Err(OntologyError::Arity {
                        construct: if matches!(self, Axiom::EquivalentClasses(_)) {
                            "EquivalentClasses"
                        } else {
                            "DisjointClasses"
                        },
                        found: xs.len(),
                    });
                }
                xs.iter().try_for_each(|x| x.check(declared))
            }
        }
    }

    pub fn mentions(&self, name: &str) -> bool {
        match self {
            Axiom::SubClassOf { sub, sup } => sub.mentions(name) || sup.mentions(name),
            Axiom::EquivalentClasses(xs) | Axiom::DisjointClasses(xs) => {
                xs.iter().any(|x| x.mentions(name))
            }
        }
    }

    fn rename(&self, f: &impl Fn(&str) -> String) -> Axiom {
        match self {
            Axiom::SubClassOf { sub, sup } => Axiom::subclass(sub.rename(f), sup.rename(f)),
            Axiom::EquivalentClasses(xs) => {
                Axiom::EquivalentClasses(xs.iter().map(|x| x.rename(f)).collect())
            }
            Axiom::DisjointClasses(xs) => {
                Axiom::DisjointClasses(xs.iter().map(|x| x.rename(f)).collect())
            }
        }
    }
}

fn pairs<T>(xs: &[ClassExpr], f: impl Fn(&ClassExpr, &ClassExpr) -> T) -> Vec<T> {
    let mut out = Vec::new();
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            out.push(f(&xs[i], &xs[j]));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OntologyError {
    #[error("class \"{0}\" is not declared")]
    UndeclaredClass(String),
    #[error("class \"{0}\" is still referenced by an axiom")]
    StillReferenced(String),
    #[error("\"{0}\" is not a valid class name")]
    InvalidName(String),
    #[error("\"{0}\" is not a valid namespace prefix")]
    InvalidPrefix(String),
    #[error("{construct} needs at least 2 operands, found {found}")]
    Arity {
        construct: &'static str,
        found: usize,
    },
    #[error("class \"{name}\" is declared under both \"{base}\" and \"{other}\"; qualify the ontologies before merging")]
    NameCollision {
        name: String,
        base: String,
        other: String,
    },
    #[error("truth-table reasoning supports at most {max} classes, ontology has {found}")]
    TooManyClasses { max: usize, found: usize },
}

/// Namespace prefixes: an ASCII letter followed by letters, digits, `_` or `-`.
pub fn is_valid_prefix(prefix: &str) -> bool {
    let mut chars = prefix.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Class local names: a letter or `_`, then letters, digits, `_`, `-` or `.`.
pub fn is_valid_class_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ontology {
    iri_prefix: String,
    classes: Vec<String>,
    declared: HashSet<String>,
    axioms: Vec<Axiom>,
}

impl Ontology {
    pub fn new(iri_prefix: impl Into<String>) -> Result<Self, OntologyError> {
        let iri_prefix = iri_prefix.into();
        if !is_valid_prefix(&iri_prefix) {
            return Err(OntologyError::InvalidPrefix(iri_prefix));
        }
        Ok(Ontology {
            iri_prefix,
            classes: Vec::new(),
            declared: HashSet::new(),
            axioms: Vec::new(),
        })
    }

    pub fn iri_prefix(&self) -> &str {
        &self.iri_prefix
    }

    /// Declared classes in declaration order.
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn axioms(&self) -> &[Axiom] {
        &self.axioms
    }

    pub fn is_declared(&self, name: &str) -> bool {
        self.declared.contains(name)
    }

    /// Declares `name`; declaring twice is a no-op.
    pub fn declare(&mut self, name: impl Into<String>) -> Result<(), OntologyError> {
        let name = name.into();
        if !is_valid_class_name(&name) {
            return Err(OntologyError::InvalidName(name));
        }
        if self.declared.insert(name.clone()) {
            self.classes.push(name);
        }
        Ok(())
    }

    /// Appends `axiom` after checking arities and that every name is declared.
    pub fn add_axiom(&mut self, axiom: Axiom) -> Result<(), OntologyError> {
        axiom.check(&self.declared)?;
        self.axioms.push(axiom);
        Ok(())
    }

    /// Removes every axiom for which `keep` is false.
    pub fn retain_axioms(&mut self, keep: impl FnMut(&Axiom) -> bool) {
        self.axioms.retain(keep);
    }

    /// Replaces axioms in place; the replacement must stay well formed.
    pub fn map_axioms(&mut self, mut f: impl FnMut(&Axiom) -> Axiom) -> Result<(), OntologyError> {
        let mapped: Vec<Axiom> = self.axioms.iter().map(&mut f).collect();
        for a in &mapped {
            a.check(&self.declared)?;
        }
        self.axioms = mapped;
        Ok(())
    }

    /// Removes a class declaration. Axioms mentioning it must be removed first.
    pub fn undeclare(&mut self, name: &str) -> Result<(), OntologyError> {
        if self.axioms.iter().any(|a| a.mentions(name)) {
            return Err(OntologyError::StillReferenced(name.to_string()));
        }
        self.declared.remove(name);
        self.classes.retain(|c| c != name);
        Ok(())
    }

    /// Conjunction of every axiom.
    pub fn to_formula(&self) -> PropFormula {
        PropFormula::and(self.axioms.iter().map(Axiom::to_formula).collect())
    }

    /// Copy with every class renamed to `<prefix>.<name>`, so ontologies with
    /// different prefixes can be merged without collisions.
    pub fn qualified(&self) -> Ontology {
        let prefix = self.iri_prefix.clone();
        let rename = |n: &str| format!("{prefix}.{n}");
        let classes: Vec<String> = self.classes.iter().map(|c| rename(c)).collect();
        Ontology {
            iri_prefix: self.iri_prefix.clone(),
            declared: classes.iter().cloned().collect(),
            classes,
            axioms: self.axioms.iter().map(|a| a.rename(&rename)).collect(),
        }
    }
}

/// Union of declarations and axioms, `base` first, dropping structurally
/// duplicate axioms. When the prefixes differ, a class name declared in both
/// is refused, since the two classes would silently become one.
pub fn merge(base: &Ontology, other: &Ontology) -> Result<Ontology, OntologyError> {
    if base.iri_prefix != other.iri_prefix {
        if let Some(name) = other.classes.iter().find(|c| base.declared.contains(*c)) {
            return Err(OntologyError::NameCollision {
                name: name.clone(),
                base: base.iri_prefix.clone(),
                other: other.iri_prefix.clone(),
            });
        }
    }
    let mut merged = base.clone();
    for c in &other.classes {
        merged.declare(c.clone())?;
    }
    let mut seen: HashSet<Axiom> = merged.axioms.iter().cloned().collect();
    for a in &other.axioms {
        if seen.insert(a.clone()) {
            merged.axioms.push(a.clone());
        }
    }
    Ok(merged)
}
