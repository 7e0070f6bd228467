//! Seeded generators and brute-force oracles shared by the integration tests.
//! The oracles only use the public data types; none of the library's
//! analysis or reasoning code.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use fedont::feature_model::{
    Child, ChildKind, ConstraintKind, CrossTreeConstraint, Feature, FeatureModel, GroupKind,
};
use fedont::{Axiom, ClassExpr, Ontology};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(rel: &str) -> String {
    std::fs::read_to_string(fixtures().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn model_fixture(name: &str) -> FeatureModel {
    fedont::fm_text::parse(&fixture(&format!("models/{name}.fml"))).expect("fixture parses")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const LETTERS: [&str; 12] = ["A", "B", "C", "D", "E", "F", "G", "H", "I", "J", "K", "L"];

enum Slot {
    Solitary(ChildKind, usize),
    Group(GroupKind, Vec<usize>),
}

/// A random valid model over `names` (the first becomes the root), with at
/// most `max_features` features and `max_constraints` constraints.
pub fn random_model(
    rng: &mut ChaCha8Rng,
    names: &[&str],
    max_features: usize,
    max_constraints: usize,
) -> FeatureModel {
    let n = rng.gen_range(1..=max_features.min(names.len()));
    let mut pool: Vec<&str> = names.to_vec();
    pool[1..].shuffle(rng);
    let chosen = &pool[..n];

    let mut slots: Vec<Vec<Slot>> = (0..n).map(|_| Vec::new()).collect();
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        match rng.gen_range(0..4) {
            0 => slots[parent].push(Slot::Solitary(ChildKind::Mandatory, i)),
            1 => slots[parent].push(Slot::Solitary(ChildKind::Optional, i)),
            k => {
                let kind = if k == 2 {
                    GroupKind::Or
                } else {
                    GroupKind::Alternative
                };
                let existing = slots[parent]
                    .iter_mut()
                    .filter_map(|s| match s {
                        Slot::Group(gk, members) if *gk == kind => Some(members),
                        _ => None,
                    })
                    .last();
                match existing {
                    Some(members) if rng.gen_bool(0.7) => members.push(i),
                    _ => slots[parent].push(Slot::Group(kind, vec![i])),
                }
            }
        }
    }

    fn build(i: usize, names: &[&str], slots: &mut Vec<Vec<Slot>>) -> Feature {
        let mut f = Feature::new(names[i]);
        for slot in std::mem::take(&mut slots[i]) {
            match slot {
                Slot::Solitary(kind, c) => {
                    let child = build(c, names, slots);
                    f = match kind {
                        ChildKind::Mandatory => f.mandatory(child),
                        ChildKind::Optional => f.optional(child),
                    };
                }
                Slot::Group(_, members) if members.len() == 1 => {
                    f = f.optional(build(members[0], names, slots));
                }
                Slot::Group(kind, members) => {
                    let ms = members.iter().map(|&m| build(m, names, slots)).collect();
                    f = match kind {
                        GroupKind::Or => f.or(ms),
                        GroupKind::Alternative => f.alternative(ms),
                    };
                }
            }
        }
        f
    }

    let root = build(0, chosen, &mut slots);
    let mut model = FeatureModel::new("Random", root);
    if n >= 2 {
        let mut seen = BTreeSet::new();
        for _ in 0..rng.gen_range(0..=max_constraints) {
            let a = chosen[rng.gen_range(0..n)];
            let b = chosen[rng.gen_range(0..n)];
            let kind = if rng.gen_bool(0.5) {
                ConstraintKind::Requires
            } else {
                ConstraintKind::Excludes
            };
            if a != b && seen.insert((kind, a, b)) {
                model = model.with_constraint(CrossTreeConstraint {
                    kind,
                    from: a.to_string(),
                    to: b.to_string(),
                });
            }
        }
    }
    model
}

/// Direct reading of the tree semantics over a selected set.
pub fn oracle_valid(model: &FeatureModel, selected: &BTreeSet<String>) -> bool {
    fn walk(f: &Feature, on: bool, sel: &BTreeSet<String>) -> bool {
        for child in &f.children {
            match child {
                Child::Solitary { kind, feature } => {
                    let c = sel.contains(&feature.name);
                    if c && !on {
                        return false;
                    }
                    if on && *kind == ChildKind::Mandatory && !c {
                        return false;
                    }
                    if !walk(feature, c, sel) {
                        return false;
                    }
                }
                Child::Group { kind, members } => {
                    let picked = members.iter().filter(|m| sel.contains(&m.name)).count();
                    if !on && picked > 0 {
                        return false;
                    }
                    if on {
                        let ok = match kind {
                            GroupKind::Or => picked >= 1,
                            GroupKind::Alternative => picked == 1,
                        };
                        if !ok {
                            return false;
                        }
                    }
                    for m in members {
                        if !walk(m, sel.contains(&m.name), sel) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
    if !selected.contains(&model.root.name) || !walk(&model.root, true, selected) {
        return false;
    }
    model.constraints.iter().all(|c| {
        let (a, b) = (selected.contains(&c.from), selected.contains(&c.to));
        match c.kind {
            ConstraintKind::Requires => !a || b,
            ConstraintKind::Excludes => !(a && b),
        }
    })
}

pub fn all_names(model: &FeatureModel) -> Vec<String> {
    fn walk(f: &Feature, out: &mut Vec<String>) {
        out.push(f.name.clone());
        for child in &f.children {
            match child {
                Child::Solitary { feature, .. } => walk(feature, out),
                Child::Group { members, .. } => members.iter().for_each(|m| walk(m, out)),
            }
        }
    }
    let mut out = Vec::new();
    walk(&model.root, &mut out);
    out
}

/// Every valid configuration found by trying all 2^n subsets.
pub fn brute_force_configurations(model: &FeatureModel) -> BTreeSet<BTreeSet<String>> {
    let names = all_names(model);
    (0u32..1 << names.len())
        .map(|mask| {
            names
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, n)| n.clone())
                .collect::<BTreeSet<String>>()
        })
        .filter(|s| oracle_valid(model, s))
        .collect()
}

pub const CLASS_NAMES: [&str; 12] = [
    "C0", "C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8", "C9", "C10", "C11",
];

pub fn random_expr(rng: &mut ChaCha8Rng, names: &[&str], depth: u32) -> ClassExpr {
    let roll = if depth == 0 { 0 } else { rng.gen_range(0..10) };
    match roll {
        0..=4 => ClassExpr::named(*names.choose(rng).unwrap()),
        5 => {
            if rng.gen_bool(0.5) {
                ClassExpr::Thing
            } else {
                ClassExpr::Nothing
            }
        }
        6 => ClassExpr::complement(random_expr(rng, names, depth - 1)),
        k => {
            let xs = (0..rng.gen_range(2..=3))
                .map(|_| random_expr(rng, names, depth - 1))
                .collect();
            if k == 7 {
                ClassExpr::IntersectionOf(xs)
            } else {
                ClassExpr::UnionOf(xs)
            }
        }
    }
}

pub fn random_ontology(
    rng: &mut ChaCha8Rng,
    max_names: usize,
    max_axioms: usize,
) -> (Ontology, Vec<&'static str>) {
    let k = rng.gen_range(1..=max_names);
    let names: Vec<&'static str> = CLASS_NAMES[..k].to_vec();
    let mut onto = Ontology::new("r").unwrap();
    for n in &names {
        onto.declare(*n).unwrap();
    }
    for _ in 0..rng.gen_range(0..=max_axioms) {
        let axiom = match rng.gen_range(0..6) {
            0..=3 => {
                // mostly simple hierarchies, like the ones fm_to_ontology makes
                let depth = if rng.gen_bool(0.6) { 0 } else { 2 };
                Axiom::subclass(
                    random_expr(rng, &names, depth),
                    random_expr(rng, &names, depth),
                )
            }
            4 => Axiom::EquivalentClasses(
                (0..rng.gen_range(2..=3))
                    .map(|_| random_expr(rng, &names, 1))
                    .collect(),
            ),
            _ => Axiom::DisjointClasses(
                (0..rng.gen_range(2..=3))
                    .map(|_| random_expr(rng, &names, 1))
                    .collect(),
            ),
        };
        onto.add_axiom(axiom).unwrap();
    }
    (onto, names)
}

/// Truth-table semantics of an ontology: every assignment to its named
/// classes that satisfies all axioms, as bit masks over `classes()`.
pub struct TruthTable {
    index: HashMap<String, usize>,
    pub models: Vec<u32>,
}

pub fn eval(e: &ClassExpr, index: &HashMap<String, usize>, mask: u32) -> bool {
    match e {
        ClassExpr::Named(n) => mask >> index[n] & 1 == 1,
        ClassExpr::Thing => true,
        ClassExpr::Nothing => false,
        ClassExpr::IntersectionOf(xs) => xs.iter().all(|x| eval(x, index, mask)),
        ClassExpr::UnionOf(xs) => xs.iter().any(|x| eval(x, index, mask)),
        ClassExpr::ComplementOf(x) => !eval(x, index, mask),
    }
}

impl TruthTable {
    pub fn new(onto: &Ontology) -> Self {
        let index: HashMap<String, usize> = onto
            .classes()
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        let holds = |a: &Axiom, m: u32| match a {
            Axiom::SubClassOf { sub, sup } => !eval(sub, &index, m) || eval(sup, &index, m),
            Axiom::EquivalentClasses(xs) => {
                let v = eval(&xs[0], &index, m);
                xs.iter().all(|x| eval(x, &index, m) == v)
            }
            Axiom::DisjointClasses(xs) => xs.iter().filter(|x| eval(x, &index, m)).count() <= 1,
        };
        let models = (0u32..1 << onto.classes().len())
            .filter(|&m| onto.axioms().iter().all(|a| holds(a, m)))
            .collect();
        TruthTable { index, models }
    }

    pub fn satisfiable(&self, e: &ClassExpr) -> bool {
        self.models.iter().any(|&m| eval(e, &self.index, m))
    }

    pub fn subsumed(&self, sub: &ClassExpr, sup: &ClassExpr) -> bool {
        self.models
            .iter()
            .all(|&m| !eval(sub, &self.index, m) || eval(sup, &self.index, m))
    }

    pub fn consistent(&self) -> bool {
        !self.models.is_empty()
    }
}

/// Checks a classification against pairwise oracle subsumption: node
/// members are exactly the mutually subsuming satisfiable classes, the
/// closure of the edges is the strict order between nodes, and no edge is
/// implied by two others. Returns a description of the first problem.
pub fn check_classification(
    onto: &Ontology,
    h: &fedont::ontology::Hierarchy,
    oracle: &TruthTable,
) -> Result<(), String> {
    let named = |c: &str| ClassExpr::named(c);
    let sat: Vec<&String> = onto
        .classes()
        .iter()
        .filter(|c| oracle.satisfiable(&named(c)))
        .collect();
    let unsat: BTreeSet<&String> = onto
        .classes()
        .iter()
        .filter(|c| !oracle.satisfiable(&named(c)))
        .collect();
    if h.unsatisfiable.iter().collect::<BTreeSet<_>>() != unsat {
        return Err(format!(
            "unsatisfiable {:?} != {:?}",
            h.unsatisfiable, unsat
        ));
    }
    let mut groups: Vec<Vec<String>> = Vec::new();
    for c in &sat {
        match groups.iter_mut().find(|g| {
            oracle.subsumed(&named(&g[0]), &named(c)) && oracle.subsumed(&named(c), &named(&g[0]))
        }) {
            Some(g) => g.push(c.to_string()),
            None => groups.push(vec![c.to_string()]),
        }
    }
    for g in &mut groups {
        g.sort();
    }
    groups.sort();
    if groups != h.nodes {
        return Err(format!("nodes {:?} != {:?}", h.nodes, groups));
    }
    let k = groups.len();
    let below = |i: usize, j: usize| {
        i != j && oracle.subsumed(&named(&groups[i][0]), &named(&groups[j][0]))
    };
    let mut reach = vec![vec![false; k]; k];
    for &(c, p) in &h.edges {
        reach[c][p] = true;
    }
    for m in 0..k {
        for i in 0..k {
            for j in 0..k {
                if reach[i][m] && reach[m][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    for i in 0..k {
        for j in 0..k {
            if reach[i][j] != below(i, j) {
                return Err(format!(
                    "closure disagrees on {:?} <= {:?}",
                    groups[i], groups[j]
                ));
            }
        }
    }
    for &(c, p) in &h.edges {
        if (0..k).any(|m| m != c && m != p && below(c, m) && below(m, p)) {
            return Err(format!(
                "edge {:?} -> {:?} is not in the reduction",
                groups[c], groups[p]
            ));
        }
    }
    Ok(())
}
