//! Propositional formulas over named variables.

use std::collections::BTreeSet;
use std::fmt;

/// A propositional formula whose variables are feature or class names.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PropFormula {
    True,
    False,
    Var(String),
    Not(Box<PropFormula>),
    And(Vec<PropFormula>),
    Or(Vec<PropFormula>),
    Implies(Box<PropFormula>, Box<PropFormula>),
    Iff(Box<PropFormula>, Box<PropFormula>),
}

impl PropFormula {
    pub fn var(name: impl Into<String>) -> Self {
        PropFormula::Var(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: PropFormula) -> Self {
        PropFormula::Not(Box::new(f))
    }

    pub fn implies(a: PropFormula, b: PropFormula) -> Self {
        PropFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: PropFormula, b: PropFormula) -> Self {
        PropFormula::Iff(Box::new(a), Box::new(b))
    }

    /// Conjunction, collapsing the empty and singleton cases.
    pub fn and(mut parts: Vec<PropFormula>) -> Self {
        match parts.len() {
            0 => PropFormula::True,
            1 => parts.pop().unwrap(),
            _ => PropFormula::And(parts),
        }
    }

    /// Disjunction, collapsing the empty and singleton cases.
    pub fn or(mut parts: Vec<PropFormula>) -> Self {
        match parts.len() {
            0 => PropFormula::False,
            1 => parts.pop().unwrap(),
            _ => PropFormula::Or(parts),
        }
    }

    /// Exactly one of `parts` holds: at least one, and no two together.
    pub fn exactly_one(parts: Vec<PropFormula>) -> Self {
        let mut clauses = vec![PropFormula::or(parts.clone())];
        for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                clauses.push(PropFormula::not(PropFormula::And(vec![
                    parts[i].clone(),
                    parts[j].clone(),
                ])));
            }
        }
        PropFormula::and(clauses)
    }

    /// Evaluates the formula under `assignment`.
    pub fn eval<F>(&self, assignment: &F) -> bool
    where
        F: Fn(&str) -> bool + ?Sized,
    {
        match self {
            PropFormula::True => true,
            PropFormula::False => false,
            PropFormula::Var(v) => assignment(v),
            PropFormula::Not(f) => !f.eval(assignment),
            PropFormula::And(fs) => fs.iter().all(|f| f.eval(assignment)),
            PropFormula::Or(fs) => fs.iter().any(|f| f.eval(assignment)),
            PropFormula::Implies(a, b) => !a.eval(assignment) || b.eval(assignment),
            PropFormula::Iff(a, b) => a.eval(assignment) == b.eval(assignment),
        }
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut BTreeSet<String>) {
        match self {
            PropFormula::True | PropFormula::False => {}
            PropFormula::Var(v) => {
                out.insert(v.clone());
            }
            PropFormula::Not(f) => f.collect_variables(out),
            PropFormula::And(fs) | PropFormula::Or(fs) => {
                fs.iter().for_each(|f| f.collect_variables(out))
            }
            PropFormula::Implies(a, b) | PropFormula::Iff(a, b) => {
                a.collect_variables(out);
                b.collect_variables(out);
            }
        }
    }
}

impl fmt::Display for PropFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join(f: &mut fmt::Formatter<'_>, parts: &[PropFormula], op: &str) -> fmt::Result {
            write!(f, "(")?;
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{p}")?;
            }
            write!(f, ")")
        }
        match self {
            PropFormula::True => write!(f, "true"),
            PropFormula::False => write!(f, "false"),
            PropFormula::Var(v) => write!(f, "{v}"),
            PropFormula::Not(inner) => write!(f, "!{inner}"),
            PropFormula::And(fs) => join(f, fs, "&"),
            PropFormula::Or(fs) => join(f, fs, "|"),
            PropFormula::Implies(a, b) => write!(f, "({a} -> {b})"),
            PropFormula::Iff(a, b) => write!(f, "({a} <-> {b})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_one_truth_table() {
        let f = PropFormula::exactly_one(vec![
            PropFormula::var("a"),
            PropFormula::var("b"),
            PropFormula::var("c"),
        ]);
        for mask in 0u32..8 {
            let get = |v: &str| {
                let bit = match v {
                    "a" => 0,
                    "b" => 1,
                    _ => 2,
                };
                mask & (1 << bit) != 0
            };
            assert_eq!(f.eval(&get), mask.count_ones() == 1, "mask {mask:03b}");
        }
    }

    #[test]
    fn degenerate_connectives() {
        assert_eq!(PropFormula::and(vec![]), PropFormula::True);
        assert_eq!(PropFormula::or(vec![]), PropFormula::False);
        assert_eq!(
            PropFormula::and(vec![PropFormula::var("x")]),
            PropFormula::var("x")
        );
    }

    #[test]
    fn display_is_readable() {
        let f = PropFormula::implies(
            PropFormula::var("a"),
            PropFormula::not(PropFormula::var("b")),
        );
        assert_eq!(f.to_string(), "(a -> !b)");
    }
}
