//! Resolving `catalog:<id>` and file sources.

use std::collections::BTreeSet;
use std::path::Path;

use pathvar::catalog::{self, CatalogEntry};
use pathvar::expr::{Guard, Interval, Node, RationalSampler};
use pathvar::geometry::PathStructure;
use pathvar::lagrange::{dehomogenize, Lagrangian};
use pathvar::parser::{parse_structure, Structure};
use pathvar::CatalogError;

use crate::report::CliError;
use crate::Common;

pub struct Loaded {
    pub structure: Structure,
    pub entry: Option<CatalogEntry>,
}

impl Loaded {
    pub fn n(&self) -> usize {
        self.structure.n()
    }

    pub fn path_structure(&self) -> Result<PathStructure, CliError> {
        let p = match &self.entry {
            Some(e) => e.path_structure(),
            None => match &self.structure {
                Structure::Ode(p) => Some(p.clone()),
                Structure::Homogeneous(h) => Some(pathvar::geometry::homog_to_inhomog(h)),
                Structure::Christoffel(g) => {
                    Some(pathvar::geometry::homog_to_inhomog(&pathvar::geometry::christoffel_to_homog(g)))
                }
                _ => None,
            },
        };
        p.ok_or_else(|| {
            CliError::Input(format!("a `{}` file does not define a path structure", self.structure.kind()))
        })
    }

    /// The source as a first-order Lagrangian, or the Lagrangian paired
    /// with a catalog structure.
    pub fn lagrangian(&self) -> Option<Lagrangian> {
        match (&self.structure, &self.entry) {
            (Structure::Lagrangian(l), _) => Some(l.clone()),
            (_, Some(e)) => e.first_order_lagrangian(),
            _ => None,
        }
    }
}

fn read_file(path: &str) -> Result<Structure, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read `{path}`: {e}")))?;
    parse_structure(&text).map_err(|e| match e {
        pathvar::ParseError::Sample(s) => CliError::Sampling(s.to_string()),
        other => CliError::Input(format!("{path}:{other}")),
    })
}

pub fn load(common: &Common) -> Result<Loaded, CliError> {
    if let Some(id) = common.source.strip_prefix("catalog:") {
        let e = catalog::get_n(id, common.n)?;
        return Ok(Loaded { structure: e.structure.clone(), entry: Some(e) });
    }
    let structure = read_file(&common.source)?;
    if let Some(n) = common.n {
        if n != structure.n() {
            return Err(CliError::Input(format!("--n {n} disagrees with n = {} in {}", structure.n(), common.source)));
        }
    }
    Ok(Loaded { structure, entry: None })
}

/// Lagrangian named by `--lagrangian`: `catalog`, `catalog:<id>`, a bare
/// catalog id, or a file.
pub fn resolve_lagrangian(name: &str, source: &Loaded, seed: u64) -> Result<Lagrangian, CliError> {
    let n = source.n();
    let from_entry = |e: &CatalogEntry| {
        e.first_order_lagrangian().ok_or_else(|| CliError::from(CatalogError::NoLagrangian(e.id.clone())))
    };
    if name == "catalog" {
        return match &source.entry {
            Some(e) => from_entry(e),
            None => Err(CliError::Input("`--lagrangian catalog` needs a catalog source".into())),
        };
    }
    let id = name.strip_prefix("catalog:").or_else(|| {
        (!Path::new(name).exists() && catalog::ids().contains(&name)).then_some(name)
    });
    if let Some(id) = id {
        return from_entry(&catalog::get_n(id, Some(n))?);
    }
    match read_file(name)? {
        Structure::Lagrangian(l) => Ok(l),
        Structure::HomLagrangian(lh) => {
            let mut s = RationalSampler::new(seed);
            Ok(dehomogenize(&lh, &mut s, 20)?)
        }
        other => Err(CliError::Input(format!("`{name}` has kind `{}`, expected a lagrangian", other.kind()))),
    }
}

/// Sampler for Lagrangian-side checks: every variable in `[-2, 2]`, and
/// variables that must be positive in `(1/10, 2)`.
pub fn lagrangian_sampler(seed: u64, guards: &BTreeSet<Guard>) -> RationalSampler {
    let mut s = RationalSampler::new(seed).with_default(Interval::closed(-2.0, 2.0));
    for g in guards {
        if let Guard::Positive(e) = g {
            if let Node::Var(v) = e.node() {
                s.set_interval(*v, Interval::open(0.1, 2.0));
            }
        }
    }
    s
}
