//! Contact Hamiltonian and Lagrangian mechanics driven by coordinate expressions.

pub mod calculus;
pub mod cli;
pub mod contact;
pub mod error;
pub mod expr;
pub mod hamjac;
pub mod herglotz;
pub mod linalg;
pub mod nonholo;
pub mod probe;
pub mod symmetry;
pub mod scalar;
pub mod singular;

pub use error::{Error, Result, Span};
pub use expr::{Bindings, Expr};
pub use scalar::{Dual, Scalar};
