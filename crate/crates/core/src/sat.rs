//! A small DPLL solver over CNF, plus a Tseitin encoder for [`PropFormula`].
//!
//! Instances produced by this crate stay at desk scale (tens to a few hundred
//! variables), so the solver favours simplicity: chronological backtracking
//! and clause-scanning unit propagation.

use std::collections::HashMap;

use crate::logic::PropFormula;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A literal: a variable with a polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn pos(v: Var) -> Lit {
        Lit(v.0 << 1)
    }

    pub fn neg(v: Var) -> Lit {
        Lit((v.0 << 1) | 1)
    }

    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_neg(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn negate(self) -> Lit {
        Lit(self.0 ^ 1)
    }

    fn value_under(self, assign: &[Option<bool>]) -> Option<bool> {
        assign[self.var().index()].map(|b| b != self.is_neg())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Cnf {
    num_vars: u32,
    clauses: Vec<Vec<Lit>>,
}

impl Cnf {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn new_var(&mut self) -> Var {
        let v = Var(self.num_vars);
        self.num_vars += 1;
        v
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars as usize
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn add_clause(&mut self, clause: impl IntoIterator<Item = Lit>) {
        let mut clause: Vec<Lit> = clause.into_iter().collect();
        clause.sort();
        clause.dedup();
        // tautologies carry no information
        if clause.windows(2).any(|w| w[0].var() == w[1].var()) {
            return;
        }
        self.clauses.push(clause);
    }

    pub fn is_satisfiable(&self, assumptions: &[Lit]) -> bool {
        self.solve(assumptions).is_some()
    }

    /// Finds a satisfying assignment under `assumptions`, if one exists.
    pub fn solve(&self, assumptions: &[Lit]) -> Option<Vec<bool>> {
        Dpll::new(self).run(assumptions)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Reason {
    Decision,
    Flipped,
    Implied,
}

struct Dpll<'a> {
    cnf: &'a Cnf,
    assign: Vec<Option<bool>>,
    trail: Vec<(Lit, Reason)>,
}

enum Propagation {
    Ok,
    Conflict,
}

impl<'a> Dpll<'a> {
    fn new(cnf: &'a Cnf) -> Self {
        Dpll {
            cnf,
            assign: vec![None; cnf.num_vars()],
            trail: Vec::new(),
        }
    }

    fn set(&mut self, lit: Lit, reason: Reason) {
        self.assign[lit.var().index()] = Some(!lit.is_neg());
        self.trail.push((lit, reason));
    }

    fn run(mut self, assumptions: &[Lit]) -> Option<Vec<bool>> {
        for &lit in assumptions {
            match lit.value_under(&self.assign) {
                Some(true) => {}
                Some(false) => return None,
                None => self.set(lit, Reason::Implied),
            }
        }
        loop {
            match self.propagate() {
                Propagation::Conflict => {
                    if !self.backtrack() {
                        return None;
                    }
                }
                Propagation::Ok => match self.pick_branch() {
                    Some(lit) => self.set(lit, Reason::Decision),
                    None => {
                        return Some(self.assign.iter().map(|v| v.unwrap_or(false)).collect());
                    }
                },
            }
        }
    }

    fn propagate(&mut self) -> Propagation {
        loop {
            let mut changed = false;
            for clause in &self.cnf.clauses {
                let mut unassigned = None;
                let mut open = 0;
                let mut satisfied = false;
                for &lit in clause {
                    match lit.value_under(&self.assign) {
                        Some(true) => {
                            satisfied = true;
                            break;
                        }
                        Some(false) => {}
                        None => {
                            open += 1;
                            unassigned = Some(lit);
                        }
                    }
                }
                if satisfied {
                    continue;
                }
                match open {
                    0 => return Propagation::Conflict,
                    1 => {
                        let lit = unassigned.unwrap();
                        self.assign[lit.var().index()] = Some(!lit.is_neg());
                        self.trail.push((lit, Reason::Implied));
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return Propagation::Ok;
            }
        }
    }

    /// Undoes assignments up to the most recent unflipped decision and flips it.
    fn backtrack(&mut self) -> bool {
        while let Some((lit, reason)) = self.trail.pop() {
            self.assign[lit.var().index()] = None;
            if reason == Reason::Decision {
                self.set(lit.negate(), Reason::Flipped);
                return true;
            }
        }
        false
    }

    fn pick_branch(&self) -> Option<Lit> {
        self.cnf.clauses.iter().find_map(|clause| {
            if clause
                .iter()
                .any(|l| l.value_under(&self.assign) == Some(true))
            {
                return None;
            }
            clause
                .iter()
                .copied()
                .find(|l| l.value_under(&self.assign).is_none())
        })
    }
}

/// Tseitin encoding of named-variable formulas into a [`Cnf`].
#[derive(Debug, Clone, Default)]
pub struct Encoder {
    cnf: Cnf,
    names: HashMap<String, Var>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cnf(&self) -> &Cnf {
        &self.cnf
    }

    /// Variable for `name`, allocating one on first use.
    pub fn var_for(&mut self, name: &str) -> Var {
        if let Some(&v) = self.names.get(name) {
            return v;
        }
        let v = self.cnf.new_var();
        self.names.insert(name.to_string(), v);
        v
    }

    pub fn lookup(&self, name: &str) -> Option<Var> {
        self.names.get(name).copied()
    }

    /// Adds `formula` as a hard constraint.
    pub fn assert(&mut self, formula: &PropFormula) {
        match formula {
            PropFormula::True => {}
            PropFormula::And(parts) => parts.iter().for_each(|p| self.assert(p)),
            _ => {
                let lit = self.encode(formula);
                self.cnf.add_clause([lit]);
            }
        }
    }

    /// Returns a literal equisatisfiably equivalent to `formula`.
    pub fn encode(&mut self, formula: &PropFormula) -> Lit {
        match formula {
            PropFormula::Var(name) => Lit::pos(self.var_for(name)),
            PropFormula::Not(inner) => self.encode(inner).negate(),
            PropFormula::True => {
                let v = self.cnf.new_var();
                self.cnf.add_clause([Lit::pos(v)]);
                Lit::pos(v)
            }
            PropFormula::False => {
                let v = self.cnf.new_var();
                self.cnf.add_clause([Lit::neg(v)]);
                Lit::pos(v)
            }
            PropFormula::And(parts) => {
                let lits: Vec<Lit> = parts.iter().map(|p| self.encode(p)).collect();
                let out = Lit::pos(self.cnf.new_var());
                for &l in &lits {
                    self.cnf.add_clause([out.negate(), l]);
                }
                self.cnf
                    .add_clause(lits.iter().map(|l| l.negate()).chain([out]));
                out
            }
            PropFormula::Or(parts) => {
                let lits: Vec<Lit> = parts.iter().map(|p| self.encode(p)).collect();
                let out = Lit::pos(self.cnf.new_var());
                for &l in &lits {
                    self.cnf.add_clause([l.negate(), out]);
                }
                self.cnf
                    .add_clause(lits.iter().copied().chain([out.negate()]));
                out
            }
            PropFormula::Implies(a, b) => {
                let a = self.encode(a);
                let b = self.encode(b);
                let out = Lit::pos(self.cnf.new_var());
                self.cnf.add_clause([out.negate(), a.negate(), b]);
                self.cnf.add_clause([a, out]);
                self.cnf.add_clause([b.negate(), out]);
                out
            }
            PropFormula::Iff(a, b) => {
                let a = self.encode(a);
                let b = self.encode(b);
                let out = Lit::pos(self.cnf.new_var());
                self.cnf.add_clause([out.negate(), a.negate(), b]);
                self.cnf.add_clause([out.negate(), a, b.negate()]);
                self.cnf.add_clause([out, a, b]);
                self.cnf.add_clause([out, a.negate(), b.negate()]);
                out
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lits(cnf: &mut Cnf, n: usize) -> Vec<Var> {
        (0..n).map(|_| cnf.new_var()).collect()
    }

    fn satisfies(cnf: &Cnf, model: &[bool]) -> bool {
        cnf.clauses()
            .iter()
            .all(|c| c.iter().any(|l| model[l.var().index()] != l.is_neg()))
    }

    fn brute_force(cnf: &Cnf) -> bool {
        let n = cnf.num_vars();
        (0u64..1 << n).any(|mask| {
            let model: Vec<bool> = (0..n).map(|i| mask & (1 << i) != 0).collect();
            satisfies(cnf, &model)
        })
    }

    #[test]
    fn empty_cnf_is_sat() {
        assert!(Cnf::new().is_satisfiable(&[]));
    }

    #[test]
    fn contradictory_units() {
        let mut cnf = Cnf::new();
        let v = lits(&mut cnf, 1);
        cnf.add_clause([Lit::pos(v[0])]);
        cnf.add_clause([Lit::neg(v[0])]);
        assert!(!cnf.is_satisfiable(&[]));
    }

    #[test]
    fn assumptions_restrict_models() {
        let mut cnf = Cnf::new();
        let v = lits(&mut cnf, 2);
        cnf.add_clause([Lit::neg(v[0]), Lit::pos(v[1])]);
        assert!(cnf.is_satisfiable(&[Lit::pos(v[0])]));
        assert!(!cnf.is_satisfiable(&[Lit::pos(v[0]), Lit::neg(v[1])]));
        assert!(!cnf.is_satisfiable(&[Lit::pos(v[0]), Lit::neg(v[0])]));
    }

    #[test]
    fn pigeonhole_three_into_two_is_unsat() {
        let mut cnf = Cnf::new();
        // p[i][h]: pigeon i sits in hole h
        let p: Vec<Vec<Var>> = (0..3).map(|_| lits(&mut cnf, 2)).collect();
        for row in &p {
            cnf.add_clause(row.iter().map(|&v| Lit::pos(v)));
        }
        for h in 0..2 {
            for (i, a) in p.iter().enumerate() {
                for b in &p[i + 1..] {
                    cnf.add_clause([Lit::neg(a[h]), Lit::neg(b[h])]);
                }
            }
        }
        assert!(!cnf.is_satisfiable(&[]));
    }

    #[test]
    fn returned_models_satisfy_every_clause() {
        let mut cnf = Cnf::new();
        let v = lits(&mut cnf, 4);
        cnf.add_clause([Lit::pos(v[0]), Lit::pos(v[1])]);
        cnf.add_clause([Lit::neg(v[0]), Lit::pos(v[2])]);
        cnf.add_clause([Lit::neg(v[2]), Lit::neg(v[3])]);
        cnf.add_clause([Lit::pos(v[3]), Lit::neg(v[1])]);
        let model = cnf.solve(&[]).expect("satisfiable");
        assert!(satisfies(&cnf, &model));
    }

    #[test]
    fn tseitin_preserves_satisfiability() {
        let a = PropFormula::var("a");
        let b = PropFormula::var("b");
        let cases = vec![
            (
                PropFormula::iff(a.clone(), PropFormula::not(a.clone())),
                false,
            ),
            (PropFormula::implies(a.clone(), b.clone()), true),
            (
                PropFormula::and(vec![
                    PropFormula::or(vec![a.clone(), b.clone()]),
                    PropFormula::not(a.clone()),
                    PropFormula::not(b.clone()),
                ]),
                false,
            ),
            (PropFormula::False, false),
            (PropFormula::not(PropFormula::False), true),
        ];
        for (f, expected) in cases {
            let mut enc = Encoder::new();
            enc.assert(&f);
            assert_eq!(enc.cnf().is_satisfiable(&[]), expected, "{f}");
            assert_eq!(brute_force(enc.cnf()), expected, "{f}");
        }
    }

    proptest::proptest! {
        #[test]
        fn dpll_agrees_with_brute_force(
            clauses in proptest::collection::vec(
                proptest::collection::vec((0u32..6, proptest::bool::ANY), 1..4),
                0..14,
            )
        ) {
            let mut cnf = Cnf::new();
            let vars = lits(&mut cnf, 6);
            for c in clauses {
                cnf.add_clause(c.into_iter().map(|(v, neg)| {
                    if neg { Lit::neg(vars[v as usize]) } else { Lit::pos(vars[v as usize]) }
                }));
            }
            let solved = cnf.solve(&[]);
            proptest::prop_assert_eq!(solved.is_some(), brute_force(&cnf));
            if let Some(model) = solved {
                proptest::prop_assert!(satisfies(&cnf, &model));
            }
        }
    }
}
