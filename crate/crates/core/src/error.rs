//! Error types shared across modules.

use thiserror::Error;

use crate::expr::{EvalError, SampleError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("unknown variable `{0}` for this variable space")]
    UnknownVariable(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unknown identifier `{name}`")]
    UnknownIdentifier { line: usize, col: usize, name: String },
    #[error("{line}:{col}: `{func}` takes exactly one argument, got {got}")]
    Arity { line: usize, col: usize, func: String, got: usize },
    #[error("missing component `{0}`")]
    MissingComponent(String),
    #[error("{line}: unexpected key `{key}`")]
    UnexpectedKey { line: usize, key: String },
    #[error("{line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("bad header: {0}")]
    Header(String),
    #[error("christoffel entry {key} is not symmetric: {a} vs {b}")]
    Asymmetric { key: String, a: String, b: String },
    #[error(
        "`{component}` is not positively {degree}-homogeneous in velocities: \
         scaling velocities by {scale} at {point} gives {scaled}, expected {expected}"
    )]
    Homogeneity {
        component: String,
        degree: i64,
        scale: String,
        point: String,
        scaled: f64,
        expected: f64,
    },
    #[error("invalid {kind}: {msg}")]
    Invalid { kind: String, msg: String },
    #[error(transparent)]
    Sample(#[from] SampleError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("expression uses `{0}` outside the structure's variable space")]
    OutOfSpace(String),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DouglasError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coefficient `{0}` does not evaluate to an exact rational at the sample point")]
    Inexact(String),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LagrangeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("expression uses `{0}` outside the Lagrangian's variable space")]
    OutOfSpace(String),
    #[error("no admissible evaluation point: {0}")]
    Singular(String),
    #[error("second-order Lagrangian is not affine in accelerations (a{s}, a{r})")]
    NotAffine { s: usize, r: usize },
    #[error("closedness fails for (s, i) = ({s}, {i}): d(lambda_{s})/d(u{i}) != d(lambda_{i})/d(u{s})")]
    NotClosed { s: usize, i: usize },
    #[error("lambda_{0} is not polynomial in velocities; potential integral unsupported")]
    NonPolynomialLambda(usize),
    #[error("reduction certificate did not vanish: {0}")]
    Certificate(String),
    #[error("homogeneity violation: scaling velocities by {scale} at {point} gives {scaled}, expected {expected}")]
    Homogeneity { scale: String, point: String, scaled: f64, expected: f64 },
    #[error("trajectory reached a singular point at t = {t}: {guard}")]
    SingularTrajectory { t: f64, guard: String },
    #[error("integration step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("unknown catalog id `{id}`; available: {}", available.join(", "))]
    UnknownId { id: String, available: Vec<String> },
    #[error("catalog entry `{id}` is only defined for n >= {min}")]
    Dimension { id: String, min: usize },
    #[error("catalog entry `{id}` exists only for n = {n}")]
    FixedDimension { id: String, n: usize },
    #[error("catalog entry `{0}` has no lagrangian")]
    NoLagrangian(String),
    #[error("fixture `{id}` failed to parse: {err}")]
    Fixture { id: String, err: ParseError },
}
