//! Global choreographies: parsing, event-structure semantics, typing and
//! checked refinement.
//!
//! The crate is organised as a pipeline over a small protocol language:
//!
//! * [`syntax`] — the textual grammar and the abstract syntax of
//!   (refinable) g-choreographies;
//! * [`es`] — finite labelled prime event structures and the operations
//!   used by the semantics (projection, tensor, sum, sequential
//!   composition, configurations, well-branchedness);
//! * [`semantics`] — the denotation of ground terms as event structures,
//!   with structured diagnostics where the denotation is undefined;
//! * [`typing`] — the syntactic typing discipline that guarantees
//!   well-formedness without building event structures;
//! * [`refine`] — the refinement relation, hole substitution and the
//!   refine-and-recheck workflow;
//! * [`harness`] — enumeration and random generation of terms for
//!   metatheory sweeps;
//! * [`cli`] — the `chorc` command-line front end and DOT rendering.

pub mod cli;
pub mod es;
pub mod harness;
pub mod refine;
pub mod semantics;
pub mod syntax;
pub mod typing;
