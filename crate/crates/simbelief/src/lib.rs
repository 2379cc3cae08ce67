//! Model checking for knowledge and belief on polychromatic simplicial models.
//!
//! A polychromatic simplicial model is a colored simplicial complex in which
//! several vertices of one face may carry the same agent color, together with
//! a designated set of worlds and a valuation. The number of vertices an agent
//! owns in a world (its multiplicity) induces a plausibility preorder: fewer
//! vertices means more plausible. On top of the classical distributed
//! knowledge modality `K{G}` this yields safe belief `Sb[a]`, its dual
//! `<Sb>[a]`, and most-plausible belief `B[a]`.
//!
//! The crate provides:
//!
//! * [`model`] — complexes, models, structural validation (including the
//!   triangle condition that restores transitivity of indistinguishability),
//! * [`syntax`] — the formula language, parser, printer, and the
//!   positive-fragment classifier,
//! * [`semantics`] — relation tables and the evaluator,
//! * [`morphism`] — vertex maps between models, the morphism conditions,
//!   positive-formula preservation, and belief-gain search,
//! * [`testlab`] — bundled fixtures, random model/formula generators, an
//!   independent relational evaluator, and the axiom-scheme checker,
//! * [`dot`] — deterministic Graphviz export of the 1-skeleton,
//! * [`cli`] — the `simbelief` command-line front end.

pub mod cli;
pub mod dot;
pub mod model;
pub mod morphism;
pub mod semantics;
pub mod syntax;
pub mod testlab;

pub use model::{Face, Model, ValidationReport};
pub use semantics::RelationTable;
pub use syntax::{parse, Formula};
