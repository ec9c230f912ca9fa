//! First-order logic interpreted in presheaf topoi over finite base categories.
//!
//! The crate builds subobject semantics and Kripke-Joyal forcing for
//! Σ-structures valued in presheaves, constructs filtered products over finite
//! index sets, and checks the Łoś equivalence between the two sides.

pub mod error;
pub mod fincat;
pub mod subobj;
pub mod sigma;
pub mod syntax;
pub mod semantics;
pub mod ultra;
pub mod io;
pub mod dsl;
pub mod cli;

pub use error::{Error, Report, Result, Violation};
