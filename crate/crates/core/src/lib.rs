//! Numerical workbench for strict higher gauge theory.
//!
//! Two backends share one gauge engine: truncated Taylor jets (exact local
//! identities) and cochains on a cubical grid over `[0,1]^m` (global
//! analysis: Hodge decomposition, canonical gauges).

pub mod canonical;
pub mod cg;
pub mod error;
pub mod gauge;
pub mod generators;
pub mod grid;
pub mod hodge;
pub mod identities;
pub mod jet;
pub mod lie;
pub mod linalg;
pub mod xmod;

pub use error::{Error, Result};
pub use lie::{Bilinear, InnerProduct, LieAction, LieAlgebra, LinearLieMap};
pub use xmod::{CrossedModule, GroupElement, Kind, Rep, ValidationReport};
