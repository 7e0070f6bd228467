//! Feature-model analysis, propositional ontology reasoning and federation
//! ontology construction.
//!
//! The pipeline runs from feature models (parsed from `.fml` text by
//! [`fm_text`]) through their configuration semantics ([`feature_model`]), to
//! class-hierarchy ontologies with a reasoner ([`ontology`]), to a federation
//! ontology built from the terms several models share ([`federation`]), and
//! finally to OWL, class-diagram, Markdown and workspace outputs ([`export`]).

pub mod export;
pub mod feature_model;
pub mod federation;
pub mod fm_text;
pub mod logic;
pub mod ontology;
pub mod sat;

pub use feature_model::{Configuration, FeatureModel};
pub use logic::PropFormula;
pub use ontology::{Axiom, ClassExpr, Ontology};
