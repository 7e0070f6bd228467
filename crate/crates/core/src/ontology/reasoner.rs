//! Satisfiability, subsumption, consistency and classification.
//!
//! Two interchangeable backends decide the same propositional questions:
//! [`Backend::TruthTable`] enumerates every assignment over the declared
//! classes, [`Backend::Search`] hands a Tseitin encoding to the DPLL solver.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{ClassExpr, Ontology, OntologyError};
use crate::sat::Encoder;

/// Truth tables are limited to this many declared classes.
pub const TRUTH_TABLE_MAX_CLASSES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    TruthTable,
    #[default]
    Search,
}

/// The inferred class hierarchy.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Hierarchy {
    /// Equivalence classes of satisfiable named classes; members sorted, nodes
    /// sorted by their member lists.
    pub nodes: Vec<Vec<String>>,
    /// Direct (child, parent) node pairs, sorted.
    pub edges: Vec<(usize, usize)>,
    /// Unsatisfiable named classes, sorted.
    pub unsatisfiable: Vec<String>,
}

impl Hierarchy {
    pub fn parents(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .filter(move |(c, _)| *c == node)
            .map(|&(_, p)| p)
    }

    pub fn children(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .filter(move |(_, p)| *p == node)
            .map(|&(c, _)| c)
    }

    pub fn node_of(&self, class: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.iter().any(|m| m == class))
    }

    /// Indented tree, most general classes first. Equivalent classes share a
    /// line joined by `≡`; a class with several parents appears under each.
    /// The last line lists unsatisfiable classes.
    pub fn to_tree_text(&self) -> String {
        fn walk(h: &Hierarchy, node: usize, depth: usize, out: &mut String) {
            let _ = writeln!(out, "{}{}", "  ".repeat(depth), h.nodes[node].join(" ≡ "));
            for child in h.children(node) {
                walk(h, child, depth + 1, out);
            }
        }
        let mut out = String::new();
        for root in (0..self.nodes.len()).filter(|&n| self.parents(n).next().is_none()) {
            walk(self, root, 0, &mut out);
        }
        out.push_str("unsatisfiable:");
        for name in &self.unsatisfiable {
            out.push(' ');
            out.push_str(name);
        }
        out.push('\n');
        out
    }
}

/// Reasoning session over one ontology; backend state is prepared once.
pub struct Reasoner<'a> {
    onto: &'a Ontology,
    engine: Engine,
}

enum Engine {
    TruthTable {
        index: HashMap<String, usize>,
        /// satisfying assignments of the axioms, as bitmasks over `index`
        models: Vec<u32>,
    },
    Search {
        encoder: Encoder,
    },
}

/// Index-based expression for fast truth-table evaluation.
enum Compiled {
    Var(usize),
    Const(bool),
    And(Vec<Compiled>),
    Or(Vec<Compiled>),
    Not(Box<Compiled>),
}

impl Compiled {
    fn from_expr(expr: &ClassExpr, index: &HashMap<String, usize>) -> Compiled {
        match expr {
            ClassExpr::Named(n) => Compiled::Var(index[n]),
            ClassExpr::Thing => Compiled::Const(true),
            ClassExpr::Nothing => Compiled::Const(false),
            ClassExpr::IntersectionOf(xs) => {
                Compiled::And(xs.iter().map(|x| Compiled::from_expr(x, index)).collect())
            }
            ClassExpr::UnionOf(xs) => {
                Compiled::Or(xs.iter().map(|x| Compiled::from_expr(x, index)).collect())
            }
            ClassExpr::ComplementOf(x) => Compiled::Not(Box::new(Compiled::from_expr(x, index))),
        }
    }

    fn eval(&self, mask: u32) -> bool {
        match self {
            Compiled::Var(i) => mask & (1 << i) != 0,
            Compiled::Const(b) => *b,
            Compiled::And(xs) => xs.iter().all(|x| x.eval(mask)),
            Compiled::Or(xs) => xs.iter().any(|x| x.eval(mask)),
            Compiled::Not(x) => !x.eval(mask),
        }
    }
}

impl<'a> Reasoner<'a> {
    pub fn new(onto: &'a Ontology, backend: Backend) -> Result<Self, OntologyError> {
        let engine = match backend {
            Backend::TruthTable => {
                let n = onto.classes().len();
                if n > TRUTH_TABLE_MAX_CLASSES {
                    return Err(OntologyError::TooManyClasses {
                        max: TRUTH_TABLE_MAX_CLASSES,
                        found: n,
                    });
                }
                let index: HashMap<String, usize> = onto
                    .classes()
                    .iter()
                    .enumerate()
                    .map(|(i, c)| (c.clone(), i))
                    .collect();
                let axioms: Vec<(Compiled, Compiled, AxiomShape)> = onto
                    .axioms()
                    .iter()
                    .flat_map(|a| compile_axiom(a, &index))
                    .collect();
                let models = (0u32..1 << n)
                    .filter(|&mask| {
                        axioms.iter().all(|(a, b, shape)| match shape {
                            AxiomShape::Implies => !a.eval(mask) || b.eval(mask),
                            AxiomShape::Iff => a.eval(mask) == b.eval(mask),
                            AxiomShape::NotBoth => !(a.eval(mask) && b.eval(mask)),
                        })
                    })
                    .collect();
                Engine::TruthTable { index, models }
            }
            Backend::Search => {
                let mut encoder = Encoder::new();
                for c in onto.classes() {
                    encoder.var_for(c);
                }
                encoder.assert(&onto.to_formula());
                Engine::Search { encoder }
            }
        };
        Ok(Reasoner { onto, engine })
    }

    pub fn ontology(&self) -> &Ontology {
        self.onto
    }

    fn check_declared(&self, expr: &ClassExpr) -> Result<(), OntologyError> {
        let mut declared = std::collections::HashSet::new();
        declared.extend(self.onto.classes().iter().cloned());
        expr.check(&declared)
    }

    /// Whether some interpretation satisfying the axioms gives `expr` an instance.
    pub fn is_satisfiable(&self, expr: &ClassExpr) -> Result<bool, OntologyError> {
        self.check_declared(expr)?;
        Ok(match &self.engine {
            Engine::TruthTable { index, models } => {
                let compiled = Compiled::from_expr(expr, index);
                models.iter().any(|&m| compiled.eval(m))
            }
            Engine::Search { encoder } => {
                let mut query = encoder.clone();
                let lit = query.encode(&expr.to_formula());
                query.cnf().is_satisfiable(&[lit])
            }
        })
    }

    /// `sub ⊑ sup`, decided as unsatisfiability of `sub ⊓ ¬sup`.
    pub fn is_subsumed(&self, sub: &ClassExpr, sup: &ClassExpr) -> Result<bool, OntologyError> {
        let probe =
            ClassExpr::IntersectionOf(vec![sub.clone(), ClassExpr::complement(sup.clone())]);
        Ok(!self.is_satisfiable(&probe)?)
    }

    pub fn is_consistent(&self) -> bool {
        self.is_satisfiable(&ClassExpr::Thing)
            .expect("Thing needs no declarations")
    }

    /// Computes the inferred hierarchy from pairwise subsumption tests.
    pub fn classify(&self) -> Hierarchy {
        let names = self.onto.classes();
        let named = |i: usize| ClassExpr::Named(names[i].clone());
        let sat: Vec<bool> = (0..names.len())
            .map(|i| self.is_satisfiable(&named(i)).expect("declared"))
            .collect();
        let live: Vec<usize> = (0..names.len()).filter(|&i| sat[i]).collect();
        let mut below = vec![vec![false; names.len()]; names.len()];
        for &i in &live {
            for &j in &live {
                below[i][j] = i == j || self.is_subsumed(&named(i), &named(j)).expect("declared");
            }
        }

        // group mutually subsuming classes
        let mut nodes: Vec<Vec<String>> = Vec::new();
        let mut assigned = vec![false; names.len()];
        for &i in &live {
            if assigned[i] {
                continue;
            }
            let mut members: Vec<String> = live
                .iter()
                .filter(|&&j| below[i][j] && below[j][i])
                .map(|&j| {
                    assigned[j] = true;
                    names[j].clone()
                })
                .collect();
            members.sort();
            nodes.push(members);
        }
        nodes.sort();
        let rep: Vec<usize> = nodes
            .iter()
            .map(|n| names.iter().position(|c| *c == n[0]).unwrap())
            .collect();

        let strictly_below = |a: usize, b: usize| a != b && below[rep[a]][rep[b]];
        let mut edges = Vec::new();
        for a in 0..nodes.len() {
            for b in 0..nodes.len() {
                if strictly_below(a, b)
                    && !(0..nodes.len()).any(|c| strictly_below(a, c) && strictly_below(c, b))
                {
                    edges.push((a, b));
                }
            }
        }

        let mut unsatisfiable: Vec<String> = (0..names.len())
            .filter(|&i| !sat[i])
            .map(|i| names[i].clone())
            .collect();
        unsatisfiable.sort();
        Hierarchy {
            nodes,
            edges,
            unsatisfiable,
        }
    }
}

enum AxiomShape {
    Implies,
    Iff,
    NotBoth,
}

fn compile_axiom(
    axiom: &super::Axiom,
    index: &HashMap<String, usize>,
) -> Vec<(Compiled, Compiled, AxiomShape)> {
    use super::Axiom;
    let c = |x: &ClassExpr| Compiled::from_expr(x, index);
    let pairwise = |xs: &[ClassExpr], shape: fn() -> AxiomShape| {
        let mut out = Vec::new();
        for i in 0..xs.len() {
            for j in i + 1..xs.len() {
                out.push((c(&xs[i]), c(&xs[j]), shape()));
            }
        }
        out
    };
    match axiom {
        Axiom::SubClassOf { sub, sup } => vec![(c(sub), c(sup), AxiomShape::Implies)],
        Axiom::EquivalentClasses(xs) => pairwise(xs, || AxiomShape::Iff),
        Axiom::DisjointClasses(xs) => pairwise(xs, || AxiomShape::NotBoth),
    }
}

pub fn is_satisfiable(onto: &Ontology, expr: &ClassExpr) -> Result<bool, OntologyError> {
    Reasoner::new(onto, Backend::Search)?.is_satisfiable(expr)
}

pub fn is_subsumed(
    onto: &Ontology,
    sub: &ClassExpr,
    sup: &ClassExpr,
) -> Result<bool, OntologyError> {
    Reasoner::new(onto, Backend::Search)?.is_subsumed(sub, sup)
}

pub fn is_consistent(onto: &Ontology) -> bool {
    Reasoner::new(onto, Backend::Search)
        .expect("search backend has no size limit")
        .is_consistent()
}

pub fn classify(onto: &Ontology) -> Hierarchy {
    Reasoner::new(onto, Backend::Search)
        .expect("search backend has no size limit")
        .classify()
}
