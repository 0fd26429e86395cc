//! Symbolic tools for the inverse problem of the calculus of variations on
//! path structures: the Douglas fundamental system, exact rank obstructions
//! and verification of candidate Lagrangians.

pub mod catalog;
pub mod douglas;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod lagrange;
pub mod linalg;
pub mod parser;

pub use error::{CatalogError, DouglasError, ExprError, GeometryError, LagrangeError, ParseError};
pub use expr::{Expr, Var, VariableSpace};
