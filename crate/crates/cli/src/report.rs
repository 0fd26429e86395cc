//! Report assembly, JSON encoding of exact values, and exit codes.

use std::io::Write;

use pathvar::expr::{Point, SampleError, Value, ZeroVerdict};
use pathvar::{CatalogError, DouglasError, GeometryError, LagrangeError, ParseError};
use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::Format;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Sampling(_) => 3,
        }
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        match e {
            ParseError::Sample(s) => CliError::Sampling(s.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<CatalogError> for CliError {
    fn from(e: CatalogError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SampleError> for CliError {
    fn from(e: SampleError) -> Self {
        CliError::Sampling(e.to_string())
    }
}

impl From<DouglasError> for CliError {
    fn from(e: DouglasError) -> Self {
        match e {
            DouglasError::Sample(_) | DouglasError::Eval(_) => CliError::Sampling(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::Sample(_) | GeometryError::Eval(_) => CliError::Sampling(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<LagrangeError> for CliError {
    fn from(e: LagrangeError) -> Self {
        match e {
            LagrangeError::Sample(_)
            | LagrangeError::Eval(_)
            | LagrangeError::Singular(_)
            | LagrangeError::SingularTrajectory { .. }
            | LagrangeError::StepUnderflow(_) => CliError::Sampling(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

pub struct Report {
    pub json: Json,
    pub text: String,
    pub exit: u8,
}

impl Report {
    pub fn print(&self, format: Format) {
        let out = match format {
            Format::Json => serde_json::to_string_pretty(&self.json).expect("json values serialize") + "\n",
            Format::Text => self.text.clone(),
        };
        let _ = std::io::stdout().lock().write_all(out.as_bytes());
    }
}

pub fn rational(num: String, den: String) -> Json {
    json!({ "num": num, "den": den })
}

pub fn value(v: &Value) -> Json {
    match v {
        Value::Exact(q) => rational(q.numer().to_string(), q.denom().to_string()),
        Value::Float(x) => json!({ "float": x }),
    }
}

pub fn point(p: &Point) -> Json {
    let mut m = Map::new();
    for (v, x) in p.iter() {
        m.insert(v.name(), value(x));
    }
    Json::Object(m)
}

pub fn zero_verdict(z: &ZeroVerdict) -> Json {
    match z {
        ZeroVerdict::SymbolicZero => json!({ "verdict": z.label() }),
        ZeroVerdict::NumericZero { trials, max_abs } => {
            json!({ "verdict": z.label(), "trials": trials, "max_abs": max_abs })
        }
        ZeroVerdict::Nonzero { witness, value } => {
            json!({ "verdict": z.label(), "witness": point(witness), "value": value })
        }
    }
}

pub fn zero_text(z: &ZeroVerdict) -> String {
    match z {
        ZeroVerdict::SymbolicZero => "SymbolicZero".into(),
        ZeroVerdict::NumericZero { trials, max_abs } => format!("NumericZero ({trials} trials, max |r| = {max_abs:.3e})"),
        ZeroVerdict::Nonzero { witness, value } => format!("Nonzero: {value:.6e} at {witness}"),
    }
}
