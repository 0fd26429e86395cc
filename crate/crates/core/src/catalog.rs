//! Named fixtures: structures, Lagrangians and recorded expectations.
//!
//! Each entry ships as `catalog/<id>/structure.txt`, an optional
//! `lagrangian.txt` and `expect.txt`. Parametric entries are regenerated
//! for other `n`.

use std::collections::BTreeMap;

use num_rational::BigRational;

use crate::error::{CatalogError, ParseError};
use crate::expr::{Expr, Point, Value, VariableSpace};
use crate::geometry::{christoffel_to_homog, homog_to_inhomog, PathStructure};
use crate::lagrange::Lagrangian;
use crate::parser::{parse_expr, parse_structure, Structure};

struct Fixture {
    id: &'static str,
    n: usize,
    structure: &'static str,
    lagrangian: Option<&'static str>,
    expect: &'static str,
    generator: Option<Generator>,
}

struct Generator {
    min: usize,
    structure: fn(usize) -> String,
    lagrangian: Option<fn(usize) -> String>,
    expect: fn(usize) -> String,
}

macro_rules! fixture {
    ($id:literal, $n:expr, lagrangian, $gen:expr) => {
        Fixture {
            id: $id,
            n: $n,
            structure: include_str!(concat!("../catalog/", $id, "/structure.txt")),
            lagrangian: Some(include_str!(concat!("../catalog/", $id, "/lagrangian.txt"))),
            expect: include_str!(concat!("../catalog/", $id, "/expect.txt")),
            generator: $gen,
        }
    };
    ($id:literal, $n:expr, $gen:expr) => {
        Fixture {
            id: $id,
            n: $n,
            structure: include_str!(concat!("../catalog/", $id, "/structure.txt")),
            lagrangian: None,
            expect: include_str!(concat!("../catalog/", $id, "/expect.txt")),
            generator: $gen,
        }
    };
}

fn header(kind: &str, n: usize) -> String {
    format!("[header]\nkind = {kind}\nn = {n}\n[body]\n")
}

fn ode(f: &[String]) -> String {
    let mut s = header("ode", f.len());
    for (i, e) in f.iter().enumerate() {
        s.push_str(&format!("f{} = {e}\n", i + 1));
    }
    s
}

fn squares(prefix: &str, range: std::ops::RangeInclusive<usize>) -> Vec<String> {
    range.map(|i| format!("{prefix}{i}^2")).collect()
}

fn binom2(n: usize) -> usize {
    n * (n + 1) / 2
}

fn gen_fpar(n: usize) -> String {
    let mut f = vec![squares("y", 1..=n).join(" + ")];
    f.extend((2..n).map(|i| format!("y{}^2", i - 1)));
    f.push(format!("y{}", n - 1));
    ode(&f)
}

fn expect_fpar(n: usize) -> String {
    let levels = crate::douglas::default_levels(n);
    let mut point = vec!["x=0".to_string()];
    point.extend((1..=n).map(|i| format!("y{i}={}", u8::from(i == n))));
    point.extend((1..=n).map(|i| format!("dy{i}=1")));
    format!(
        "description = maximal rank of the algebraic subsystem at a distinguished point\n\
         verdict = NotVariational/FullRank\nlevels = {levels}\npoint = {}\nrank = {}\n",
        point.join(", "),
        binom2(n)
    )
}

fn gen_fpa2(n: usize) -> String {
    let mut f = vec![squares("y", 1..=n).join(" + ")];
    f.extend((2..=n).map(|_| "0".to_string()));
    ode(&f)
}

fn expect_fpa2(n: usize) -> String {
    let rows: Vec<String> = (1..n).map(|r| r.to_string()).chain([(binom2(n) - 1).to_string()]).collect();
    let cols: Vec<String> = (1..=n).map(|c| c.to_string()).collect();
    format!(
        "description = kernel forced into phi_1i = 0, so every solution is degenerate\n\
         verdict = NotVariational/ForcedDegenerate\nlevels = {}\nminor_rows = {}\nminor_cols = {}\n\
         minor_det = (-2)^{n}*y1^{}*(y1*dy{n} - y{n}*dy1)\n",
        crate::douglas::default_levels(n),
        rows.join(", "),
        cols.join(", "),
        n - 2
    )
}

fn gen_egorov(n: usize) -> String {
    ode(&(1..=n).map(|j| format!("2*y1*dy1*dy2*dy{j}")).collect::<Vec<_>>())
}

fn expect_egorov(_: usize) -> String {
    "description = Egorov projective structure\nverdict = Inconclusive\n".into()
}

fn gen_egorov_lin(n: usize) -> String {
    let mut f = vec!["y2".to_string()];
    f.extend((2..=n).map(|_| "0".to_string()));
    ode(&f)
}

fn lag_egorov_lin(n: usize) -> String {
    let mut terms = vec!["(dy1 - x*y2)*dy2".to_string()];
    terms.extend(squares("dy", 3..=n));
    format!("{}L = {}\n", header("lagrangian", n), terms.join(" + "))
}

fn expect_egorov_lin(n: usize) -> String {
    format!(
        "description = linearized Egorov structure with a Kropina-type Lagrangian\n\
         verdict = Inconclusive\nphi_det = -2^{}\nequivalence = symbolic\n",
        n - 2
    )
}

fn gen_submax(n: usize) -> String {
    let mut f = vec!["dy2^3".to_string()];
    f.extend((2..=n).map(|_| "0".to_string()));
    ode(&f)
}

fn lag_submax(n: usize) -> String {
    let mut terms =
        vec!["(sqrt(pi)*dy1*erf(dy1/dy2^(3/2)) + dy2^(3/2)*exp(-dy1^2/dy2^3) + dy1)*exp(2*y1)".to_string()];
    terms.extend(squares("dy", 3..=n));
    format!("{}L = {}\n", header("lagrangian", n), terms.join(" + "))
}

fn expect_submax(_: usize) -> String {
    "description = submaximally symmetric path structure with a non-algebraic Lagrangian\n\
     verdict = Inconclusive\nequivalence = numeric\n"
        .into()
}

fn gen_flat(n: usize) -> String {
    ode(&vec!["0".to_string(); n])
}

fn expect_flat(n: usize) -> String {
    format!("description = flat structure, straight lines\nverdict = Inconclusive\nkernel_dim = {}\n", binom2(n))
}

fn gen_egorov_christoffel(n: usize) -> String {
    format!("{}G[1][2][3] = x2\n", header("christoffel", n))
}

fn expect_egorov_christoffel(_: usize) -> String {
    "description = Egorov connection coefficients\n".into()
}

fn gen_free_quadratic(n: usize) -> String {
    format!("{}L = {}\n", header("lagrangian", n), squares("dy", 1..=n).join(" + "))
}

fn expect_free_quadratic(_: usize) -> String {
    "description = free particle Lagrangian, a control case\n".into()
}

fn gen_kropina(n: usize) -> String {
    let mut l = "(u1/u0 - x0*x2)*u2".to_string();
    if n >= 3 {
        l.push_str(&format!(" + ({})/u0", squares("u", 3..=n).join(" + ")));
    }
    format!("{}L = {l}\n", header("homlagrangian", n))
}

fn expect_kropina(_: usize) -> String {
    "description = Kropina pseudo-Finsler metric\nconvexity = indefinite\n".into()
}

fn gen_psi_family(n: usize) -> String {
    let mut s = header("psi-family", n);
    s.push_str(include_str!("../catalog/egorov-psi-family/structure.txt").split("[body]\n").nth(1).unwrap_or(""));
    s
}

fn expect_psi_family(_: usize) -> String {
    include_str!("../catalog/egorov-psi-family/expect.txt").into()
}

fn fixtures() -> Vec<Fixture> {
    vec![
        fixture!("fpar", 3, Some(Generator { min: 2, structure: gen_fpar, lagrangian: None, expect: expect_fpar })),
        fixture!("fpa2", 3, Some(Generator { min: 3, structure: gen_fpa2, lagrangian: None, expect: expect_fpa2 })),
        fixture!(
            "egorov",
            3,
            Some(Generator { min: 2, structure: gen_egorov, lagrangian: None, expect: expect_egorov })
        ),
        fixture!(
            "egorov-lin",
            3,
            lagrangian,
            Some(Generator {
                min: 2,
                structure: gen_egorov_lin,
                lagrangian: Some(lag_egorov_lin),
                expect: expect_egorov_lin
            })
        ),
        fixture!(
            "submax",
            2,
            lagrangian,
            Some(Generator { min: 2, structure: gen_submax, lagrangian: Some(lag_submax), expect: expect_submax })
        ),
        fixture!("distinguished", 2, lagrangian, None),
        fixture!(
            "egorov-psi-family",
            3,
            Some(Generator { min: 3, structure: gen_psi_family, lagrangian: None, expect: expect_psi_family })
        ),
        fixture!("flat", 3, Some(Generator { min: 1, structure: gen_flat, lagrangian: None, expect: expect_flat })),
        fixture!(
            "egorov-christoffel",
            3,
            Some(Generator {
                min: 3,
                structure: gen_egorov_christoffel,
                lagrangian: None,
                expect: expect_egorov_christoffel
            })
        ),
        fixture!(
            "free-quadratic",
            3,
            Some(Generator {
                min: 1,
                structure: gen_free_quadratic,
                lagrangian: None,
                expect: expect_free_quadratic
            })
        ),
        fixture!(
            "kropina",
            3,
            Some(Generator { min: 2, structure: gen_kropina, lagrangian: None, expect: expect_kropina })
        ),
        fixture!("reduce2", 2, None),
    ]
}

/// Recorded expectations of an entry; absent keys are not asserted.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Expect {
    pub description: String,
    /// Verdict label as printed by the douglas module.
    pub verdict: Option<String>,
    pub levels: Option<usize>,
    pub point: Option<Point>,
    pub rank: Option<usize>,
    pub kernel_dim: Option<usize>,
    /// `det` of the Hessian of the paired Lagrangian.
    pub phi_det: Option<Expr>,
    pub minor_rows: Option<Vec<usize>>,
    pub minor_cols: Option<Vec<usize>>,
    pub minor_det: Option<Expr>,
    /// `symbolic` or `numeric`.
    pub equivalence: Option<String>,
    pub convexity: Option<String>,
    pub potential: Option<Expr>,
    pub reduced: Option<Expr>,
}

fn parse_point(text: &str, space: &VariableSpace) -> Result<Point, ParseError> {
    let mut p = Point::new();
    for part in text.split(',') {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| ParseError::Invalid { kind: "point".into(), msg: format!("`{part}` is not `var=value`") })?;
        let v = space.lookup(name.trim()).ok_or_else(|| ParseError::UnknownIdentifier {
            line: 1,
            col: 1,
            name: name.trim().into(),
        })?;
        let q: BigRational = parse_expr(value, space)?
            .as_num()
            .cloned()
            .ok_or_else(|| ParseError::Invalid { kind: "point".into(), msg: format!("`{value}` is not rational") })?;
        p.set(v, Value::Exact(q));
    }
    Ok(p)
}

fn parse_list(text: &str) -> Result<Vec<usize>, ParseError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| ParseError::Invalid { kind: "index list".into(), msg: format!("`{}`", s.trim()) })
        })
        .collect()
}

fn parse_expect(text: &str, n: usize) -> Result<Expect, ParseError> {
    let inh = VariableSpace::Inhomogeneous { n };
    let hom = VariableSpace::Homogeneous { n };
    let mut e = Expect::default();
    let mut seen = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ParseError::Syntax { line, col: 1, msg: "expected `key = value`".into() })?;
        let (key, value) = (key.trim(), value.trim());
        if seen.insert(key.to_string(), line).is_some() {
            return Err(ParseError::DuplicateKey { line, key: key.into() });
        }
        match key {
            "description" => e.description = value.into(),
            "verdict" => e.verdict = Some(value.into()),
            "levels" | "rank" | "kernel_dim" => {
                let v: usize = value
                    .parse()
                    .map_err(|_| ParseError::Invalid { kind: key.into(), msg: format!("`{value}`") })?;
                match key {
                    "levels" => e.levels = Some(v),
                    "rank" => e.rank = Some(v),
                    _ => e.kernel_dim = Some(v),
                }
            }
            "point" => e.point = Some(parse_point(value, &inh)?),
            "phi_det" => e.phi_det = Some(parse_expr(value, &inh)?),
            "minor_rows" => e.minor_rows = Some(parse_list(value)?),
            "minor_cols" => e.minor_cols = Some(parse_list(value)?),
            "minor_det" => e.minor_det = Some(parse_expr(value, &inh)?),
            "equivalence" => e.equivalence = Some(value.into()),
            "convexity" => e.convexity = Some(value.into()),
            "potential" => e.potential = Some(parse_expr(value, &hom)?),
            "reduced" => e.reduced = Some(parse_expr(value, &hom)?),
            _ => return Err(ParseError::UnexpectedKey { line, key: key.into() }),
        }
    }
    Ok(e)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CatalogEntry {
    pub id: String,
    pub n: usize,
    pub structure: Structure,
    pub lagrangian: Option<Lagrangian>,
    pub expect: Expect,
    /// Text the structure was parsed from.
    pub source: String,
}

impl CatalogEntry {
    /// The entry as a path structure, converting homogeneous and
    /// Christoffel presentations.
    pub fn path_structure(&self) -> Option<PathStructure> {
        match &self.structure {
            Structure::Ode(p) => Some(p.clone()),
            Structure::Homogeneous(h) => Some(homog_to_inhomog(h)),
            Structure::Christoffel(g) => Some(homog_to_inhomog(&christoffel_to_homog(g))),
            _ => None,
        }
    }

    /// The paired Lagrangian, or the entry itself if it is one.
    pub fn first_order_lagrangian(&self) -> Option<Lagrangian> {
        match (&self.lagrangian, &self.structure) {
            (Some(l), _) => Some(l.clone()),
            (None, Structure::Lagrangian(l)) => Some(l.clone()),
            _ => None,
        }
    }
}

/// Known ids in catalog order.
pub fn ids() -> Vec<&'static str> {
    fixtures().iter().map(|f| f.id).collect()
}

fn build(id: &str, n: usize, structure: &str, lagrangian: Option<&str>, expect: &str) -> Result<CatalogEntry, CatalogError> {
    let wrap = |err| CatalogError::Fixture { id: id.to_string(), err };
    let s = parse_structure(structure).map_err(wrap)?;
    let lagrangian = match lagrangian {
        None => None,
        Some(text) => match parse_structure(text).map_err(wrap)? {
            Structure::Lagrangian(l) => Some(l),
            other => {
                return Err(wrap(ParseError::Invalid {
                    kind: other.kind().name().into(),
                    msg: "lagrangian.txt must have kind lagrangian".into(),
                }))
            }
        },
    };
    let expect = parse_expect(expect, n).map_err(wrap)?;
    Ok(CatalogEntry { id: id.to_string(), n, structure: s, lagrangian, expect, source: structure.to_string() })
}

/// The checked-in fixture for `id`.
pub fn get(id: &str) -> Result<CatalogEntry, CatalogError> {
    get_n(id, None)
}

/// The entry for `id` at dimension `n`; the checked-in fixture when `n` is
/// `None` or equals its dimension, a generated one otherwise.
pub fn get_n(id: &str, n: Option<usize>) -> Result<CatalogEntry, CatalogError> {
    let all = fixtures();
    let Some(f) = all.iter().find(|f| f.id == id) else {
        return Err(CatalogError::UnknownId { id: id.into(), available: ids().iter().map(|s| s.to_string()).collect() });
    };
    match n {
        None => build(f.id, f.n, f.structure, f.lagrangian, f.expect),
        Some(n) if n == f.n => build(f.id, f.n, f.structure, f.lagrangian, f.expect),
        Some(n) => {
            let Some(g) = &f.generator else {
                return Err(CatalogError::FixedDimension { id: id.into(), n: f.n });
            };
            if n < g.min {
                return Err(CatalogError::Dimension { id: id.into(), min: g.min });
            }
            let lag = g.lagrangian.map(|l| l(n));
            build(f.id, n, &(g.structure)(n), lag.as_deref(), &(g.expect)(n))
        }
    }
}

/// Generated entry, bypassing the checked-in fixture; used to keep
/// fixtures and generators in agreement.
pub fn generate(id: &str, n: usize) -> Result<CatalogEntry, CatalogError> {
    let all = fixtures();
    let f = all.iter().find(|f| f.id == id).ok_or_else(|| CatalogError::UnknownId {
        id: id.into(),
        available: ids().iter().map(|s| s.to_string()).collect(),
    })?;
    let g = f.generator.as_ref().ok_or_else(|| CatalogError::FixedDimension { id: id.into(), n: f.n })?;
    if n < g.min {
        return Err(CatalogError::Dimension { id: id.into(), min: g.min });
    }
    let lag = g.lagrangian.map(|l| l(n));
    build(f.id, n, &(g.structure)(n), lag.as_deref(), &(g.expect)(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_loads() {
        for id in ids() {
            let e = get(id).unwrap_or_else(|err| panic!("{err}"));
            assert!(!e.expect.description.is_empty(), "{id}");
        }
    }

    #[test]
    fn generators_match_fixtures() {
        for f in fixtures() {
            if f.generator.is_some() {
                let fixed = get(f.id).unwrap();
                let generated = generate(f.id, f.n).unwrap();
                assert_eq!(fixed.structure, generated.structure, "{}", f.id);
                assert_eq!(fixed.lagrangian, generated.lagrangian, "{}", f.id);
                assert_eq!(fixed.expect, generated.expect, "{}", f.id);
            }
        }
    }

    #[test]
    fn unknown_id_lists_available() {
        match get("nope") {
            Err(CatalogError::UnknownId { available, .. }) => assert!(available.contains(&"fpar".to_string())),
            other => panic!("{other:?}"),
        }
        assert!(matches!(get_n("fpa2", Some(2)), Err(CatalogError::Dimension { min: 3, .. })));
        assert!(matches!(get_n("distinguished", Some(3)), Err(CatalogError::FixedDimension { .. })));
    }

    #[test]
    fn fpar_generator_shape() {
        let e = get_n("fpar", Some(5)).unwrap();
        let p = e.path_structure().unwrap();
        assert_eq!(p.component(4).to_string(), "y3^2");
        assert_eq!(p.component(5).to_string(), "y4");
        assert_eq!(e.expect.rank, Some(15));
    }
}
