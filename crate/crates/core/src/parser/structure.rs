//! Structure files.
//!
//! ```text
//! # comment
//! [header]
//! kind = ode
//! n = 2
//! [body]
//! f1 = y2
//! f2 = 0
//! ```
//!
//! Body keys by kind: `ode` takes `f1..fn` over `x, y*, dy*`; `homogeneous`
//! takes `h0..hn` over `x*, u*`, each 2-homogeneous in `u`; `christoffel`
//! takes `G[i][j][k]` (indices `0..n`) over `x*`, an entry listed once
//! standing for both orders of the lower indices; `lagrangian` takes `L`
//! over `x, y*, dy*`; `homlagrangian` takes a 1-homogeneous `L` over
//! `x*, u*`; `lagrangian2` takes `L` over `x*, u*, a*`; `psi-family` takes
//! pairs `psi0[k]`, `psi1[k]`, `k = 1..m`, written in `u2..un`, which stand
//! for the velocity ratios `u^j/u^0`.

use std::collections::BTreeMap;
use std::fmt::{self, Write};
use std::str::FromStr;

use super::parse_expr_at;
use crate::error::ParseError;
use crate::expr::{is_zero_guarded, Expr, Point, RationalSampler, Var, VariableSpace, ZeroVerdict};
use crate::geometry::{euler_residual, ChristoffelTable, HomogeneousStructure, PathStructure};
use crate::lagrange::{HomLagrangian, Lagrangian, SecondOrderLagrangian};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Ode,
    Homogeneous,
    Christoffel,
    Lagrangian,
    HomLagrangian,
    Lagrangian2,
    PsiFamily,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::Ode => "ode",
            Kind::Homogeneous => "homogeneous",
            Kind::Christoffel => "christoffel",
            Kind::Lagrangian => "lagrangian",
            Kind::HomLagrangian => "homlagrangian",
            Kind::Lagrangian2 => "lagrangian2",
            Kind::PsiFamily => "psi-family",
        }
    }

    fn space(&self, n: usize) -> VariableSpace {
        match self {
            Kind::Ode | Kind::Lagrangian => VariableSpace::Inhomogeneous { n },
            _ => VariableSpace::Homogeneous { n },
        }
    }

    fn allows(&self, v: Var) -> bool {
        match self {
            Kind::Ode | Kind::Lagrangian => !matches!(v, Var::Ddy(_)),
            Kind::Homogeneous | Kind::HomLagrangian => !matches!(v, Var::Acc(_)),
            Kind::Christoffel => matches!(v, Var::Xh(_)),
            Kind::Lagrangian2 => true,
            Kind::PsiFamily => matches!(v, Var::U(j) if j >= 2),
        }
    }
}

impl FromStr for Kind {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Kind, ParseError> {
        Ok(match s {
            "ode" => Kind::Ode,
            "homogeneous" => Kind::Homogeneous,
            "christoffel" => Kind::Christoffel,
            "lagrangian" => Kind::Lagrangian,
            "homlagrangian" => Kind::HomLagrangian,
            "lagrangian2" => Kind::Lagrangian2,
            "psi-family" => Kind::PsiFamily,
            other => return Err(ParseError::Header(format!("unknown kind `{other}`"))),
        })
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Homogeneous Lagrangians `psi0(w) u^0 + psi1(w) u^1`, `w^j = u^j/u^0`.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiFamily {
    n: usize,
    /// `(psi0, psi1)` written in `u2..un` standing for `w2..wn`.
    pairs: Vec<(Expr, Expr)>,
}

impl PsiFamily {
    pub fn new(n: usize, pairs: Vec<(Expr, Expr)>) -> PsiFamily {
        PsiFamily { n, pairs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pairs(&self) -> &[(Expr, Expr)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The `k`-th member, 0-based.
    pub fn lagrangian(&self, k: usize) -> HomLagrangian {
        let u0 = Expr::var(Var::U(0));
        let ratio: BTreeMap<Var, Expr> = (2..=self.n as u16)
            .map(|j| (Var::U(j), Expr::var(Var::U(j)) * u0.clone().recip()))
            .collect();
        let (p0, p1) = &self.pairs[k];
        let l = p0.substitute(&ratio) * &u0 + p1.substitute(&ratio) * Expr::var(Var::U(1));
        HomLagrangian::new(self.n, l).expect("psi expressions live in the homogeneous space")
    }
}

/// A parsed structure file.
#[derive(Clone, Debug, PartialEq)]
pub enum Structure {
    Ode(PathStructure),
    Homogeneous(HomogeneousStructure),
    Christoffel(ChristoffelTable),
    Lagrangian(Lagrangian),
    HomLagrangian(HomLagrangian),
    Lagrangian2(SecondOrderLagrangian),
    PsiFamily(PsiFamily),
}

impl Structure {
    pub fn kind(&self) -> Kind {
        match self {
            Structure::Ode(_) => Kind::Ode,
            Structure::Homogeneous(_) => Kind::Homogeneous,
            Structure::Christoffel(_) => Kind::Christoffel,
            Structure::Lagrangian(_) => Kind::Lagrangian,
            Structure::HomLagrangian(_) => Kind::HomLagrangian,
            Structure::Lagrangian2(_) => Kind::Lagrangian2,
            Structure::PsiFamily(_) => Kind::PsiFamily,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Structure::Ode(p) => p.n(),
            Structure::Homogeneous(h) => h.n(),
            Structure::Christoffel(g) => g.n(),
            Structure::Lagrangian(l) => l.n(),
            Structure::HomLagrangian(l) => l.n(),
            Structure::Lagrangian2(l) => l.n(),
            Structure::PsiFamily(p) => p.n(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Indexed(char, usize),
    L,
    G(usize, usize, usize),
    Psi(usize, usize),
}

fn parse_indices(s: &str) -> Option<Vec<usize>> {
    let mut out = Vec::new();
    let mut rest = s;
    while !rest.is_empty() {
        let inner = rest.strip_prefix('[')?;
        let close = inner.find(']')?;
        out.push(inner[..close].trim().parse().ok()?);
        rest = &inner[close + 1..];
    }
    Some(out)
}

fn parse_key(kind: Kind, n: usize, key: &str) -> Option<Key> {
    let index = |prefix: &str| -> Option<usize> {
        let d = key.strip_prefix(prefix)?;
        if d.is_empty() || !d.bytes().all(|b| b.is_ascii_digit()) || (d.len() > 1 && d.starts_with('0')) {
            return None;
        }
        d.parse().ok()
    };
    match kind {
        Kind::Ode => index("f").filter(|i| (1..=n).contains(i)).map(|i| Key::Indexed('f', i)),
        Kind::Homogeneous => index("h").filter(|i| *i <= n).map(|i| Key::Indexed('h', i)),
        Kind::Lagrangian | Kind::HomLagrangian | Kind::Lagrangian2 => (key == "L").then_some(Key::L),
        Kind::Christoffel => match parse_indices(key.strip_prefix('G')?)?.as_slice() {
            &[i, j, k] if i <= n && j <= n && k <= n => Some(Key::G(i, j, k)),
            _ => None,
        },
        Kind::PsiFamily => {
            let (which, rest) = if let Some(r) = key.strip_prefix("psi0") {
                (0, r)
            } else {
                (1, key.strip_prefix("psi1")?)
            };
            match parse_indices(rest)?.as_slice() {
                &[k] if k >= 1 => Some(Key::Psi(k, which)),
                _ => None,
            }
        }
    }
}

/// Scale velocities by 2 at a witness of a failed Euler identity.
fn homogeneity_error(component: &str, e: &Expr, n: usize, degree: i64, witness: &Point) -> ParseError {
    let scale: BTreeMap<Var, Expr> =
        (0..=n as u16).map(|i| (Var::U(i), Expr::int(2) * Expr::var(Var::U(i)))).collect();
    let scaled = e.substitute(&scale).eval_f64(witness).unwrap_or(f64::NAN);
    let expected = 2f64.powi(degree as i32) * e.eval_f64(witness).unwrap_or(f64::NAN);
    ParseError::Homogeneity {
        component: component.to_string(),
        degree,
        scale: "2".into(),
        point: witness.to_string(),
        scaled,
        expected,
    }
}

fn check_homogeneous(component: &str, e: &Expr, n: usize, degree: i64) -> Result<(), ParseError> {
    let res = euler_residual(e, n, degree);
    if res.is_zero() {
        return Ok(());
    }
    let mut sampler = RationalSampler::new(0);
    match is_zero_guarded(&res, &e.guards(), &mut sampler, 20, 1e-9)? {
        ZeroVerdict::Nonzero { witness, .. } => Err(homogeneity_error(component, e, n, degree, &witness)),
        _ => Ok(()),
    }
}

fn invalid(kind: Kind, e: impl fmt::Display) -> ParseError {
    ParseError::Invalid { kind: kind.name().into(), msg: e.to_string() }
}

enum Section {
    None,
    Header,
    Body,
}

/// Parse the contents of a structure file.
pub fn parse_structure(text: &str) -> Result<Structure, ParseError> {
    let mut section = Section::None;
    let mut kind: Option<Kind> = None;
    let mut n: Option<usize> = None;
    let mut header_seen: BTreeMap<&str, usize> = BTreeMap::new();
    let mut raw_body: Vec<(usize, &str, &str, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        match trimmed {
            "[header]" => {
                section = Section::Header;
                continue;
            }
            "[body]" => {
                if kind.is_none() || n.is_none() {
                    return Err(ParseError::Header("`[body]` before a complete `[header]`".into()));
                }
                section = Section::Body;
                continue;
            }
            _ => {}
        }
        let Some(eq) = content.find('=') else {
            let col = content.len() - content.trim_start().len() + 1;
            return Err(ParseError::Syntax { line, col, msg: "expected `key = value`".into() });
        };
        let key = content[..eq].trim();
        let value = &content[eq + 1..];
        let value_col = eq + 2;
        match section {
            Section::None => return Err(ParseError::Header(format!("line {line}: assignment before `[header]`"))),
            Section::Header => {
                if header_seen.insert(key, line).is_some() {
                    return Err(ParseError::DuplicateKey { line, key: key.into() });
                }
                match key {
                    "kind" => kind = Some(value.trim().parse()?),
                    "n" => {
                        let v: usize = value
                            .trim()
                            .parse()
                            .map_err(|_| ParseError::Header(format!("n must be a positive integer, got `{}`", value.trim())))?;
                        if v == 0 {
                            return Err(ParseError::Header("n must be at least 1".into()));
                        }
                        n = Some(v);
                    }
                    _ => return Err(ParseError::UnexpectedKey { line, key: key.into() }),
                }
            }
            Section::Body => raw_body.push((line, key, value, value_col)),
        }
    }
    let kind = kind.ok_or_else(|| ParseError::Header("missing `kind`".into()))?;
    let n = n.ok_or_else(|| ParseError::Header("missing `n`".into()))?;
    if kind == Kind::PsiFamily && n < 2 {
        return Err(ParseError::Header("psi-family needs n >= 2".into()));
    }

    let space = kind.space(n);
    let allow = |v: Var| kind.allows(v);
    let mut body: BTreeMap<Key, (usize, String, Expr)> = BTreeMap::new();
    for (line, key, value, col) in raw_body {
        let k = parse_key(kind, n, key).ok_or_else(|| ParseError::UnexpectedKey { line, key: key.into() })?;
        let e = parse_expr_at(value, &space, &allow, line, col)?;
        if body.insert(k, (line, key.to_string(), e)).is_some() {
            return Err(ParseError::DuplicateKey { line, key: key.into() });
        }
    }
    let take = |k: Key, name: String| -> Result<Expr, ParseError> {
        body.get(&k).map(|(_, _, e)| e.clone()).ok_or(ParseError::MissingComponent(name))
    };

    Ok(match kind {
        Kind::Ode => {
            let f = (1..=n).map(|i| take(Key::Indexed('f', i), format!("f{i}"))).collect::<Result<_, _>>()?;
            Structure::Ode(PathStructure::new(f).map_err(|e| invalid(kind, e))?)
        }
        Kind::Homogeneous => {
            let h: Vec<Expr> =
                (0..=n).map(|i| take(Key::Indexed('h', i), format!("h{i}"))).collect::<Result<_, _>>()?;
            for (i, e) in h.iter().enumerate() {
                check_homogeneous(&format!("h{i}"), e, n, 2)?;
            }
            Structure::Homogeneous(HomogeneousStructure::new(h).map_err(|e| invalid(kind, e))?)
        }
        Kind::Christoffel => {
            let mut raw = BTreeMap::new();
            for (k, (_, _, e)) in &body {
                let Key::G(i, j, l) = *k else { unreachable!() };
                match body.get(&Key::G(i, l, j)) {
                    Some((_, _, other)) if j != l && other != e => {
                        return Err(ParseError::Asymmetric {
                            key: format!("G[{i}][{j}][{l}]"),
                            a: e.to_string(),
                            b: other.to_string(),
                        })
                    }
                    _ => {}
                }
                raw.insert((i, j, l), e.clone());
                raw.entry((i, l, j)).or_insert_with(|| e.clone());
            }
            Structure::Christoffel(ChristoffelTable::new(n, raw).map_err(|e| invalid(kind, e))?)
        }
        Kind::Lagrangian => Structure::Lagrangian(
            Lagrangian::new(n, take(Key::L, "L".into())?).map_err(|e| invalid(kind, e))?,
        ),
        Kind::HomLagrangian => {
            let l = take(Key::L, "L".into())?;
            check_homogeneous("L", &l, n, 1)?;
            Structure::HomLagrangian(HomLagrangian::new(n, l).map_err(|e| invalid(kind, e))?)
        }
        Kind::Lagrangian2 => Structure::Lagrangian2(
            SecondOrderLagrangian::new(n, take(Key::L, "L".into())?).map_err(|e| invalid(kind, e))?,
        ),
        Kind::PsiFamily => {
            let m = body.keys().filter_map(|k| if let Key::Psi(k, _) = k { Some(*k) } else { None }).max();
            let Some(m) = m else {
                return Err(ParseError::MissingComponent("psi0[1]".into()));
            };
            let pairs = (1..=m)
                .map(|k| {
                    Ok((take(Key::Psi(k, 0), format!("psi0[{k}]"))?, take(Key::Psi(k, 1), format!("psi1[{k}]"))?))
                })
                .collect::<Result<_, ParseError>>()?;
            Structure::PsiFamily(PsiFamily::new(n, pairs))
        }
    })
}

/// Print `s` in the structure file format; `parse_structure` inverts it.
pub fn print_structure(s: &Structure) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[header]\nkind = {}\nn = {}\n[body]", s.kind(), s.n());
    match s {
        Structure::Ode(p) => {
            for (i, f) in p.f().iter().enumerate() {
                let _ = writeln!(out, "f{} = {f}", i + 1);
            }
        }
        Structure::Homogeneous(h) => {
            for (i, e) in h.h().iter().enumerate() {
                let _ = writeln!(out, "h{i} = {e}");
            }
        }
        Structure::Christoffel(g) => {
            for (&(i, j, k), e) in g.entries() {
                let _ = writeln!(out, "G[{i}][{j}][{k}] = {e}");
            }
        }
        Structure::Lagrangian(l) => {
            let _ = writeln!(out, "L = {}", l.expr());
        }
        Structure::HomLagrangian(l) => {
            let _ = writeln!(out, "L = {}", l.expr());
        }
        Structure::Lagrangian2(l) => {
            let _ = writeln!(out, "L = {}", l.expr());
        }
        Structure::PsiFamily(p) => {
            for (k, (a, b)) in p.pairs().iter().enumerate() {
                let _ = writeln!(out, "psi0[{}] = {a}\npsi1[{}] = {b}", k + 1, k + 1);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::christoffel_to_homog;

    const FPAR: &str = "\
# three-dimensional example
[header]
kind = ode
n = 3
[body]
f1 = y1^2 + y2^2 + y3^2
f2 = y1^2
f3 = y2
";

    #[test]
    fn fpar_parses() {
        let Structure::Ode(p) = parse_structure(FPAR).unwrap() else { panic!() };
        assert_eq!(p.n(), 3);
        assert_eq!(p.component(3), &Expr::var(Var::Y(2)));
    }

    #[test]
    fn missing_component() {
        let text = "[header]\nkind = ode\nn = 2\n[body]\nf1 = y1\n";
        assert_eq!(parse_structure(text), Err(ParseError::MissingComponent("f2".into())));
    }

    #[test]
    fn body_errors_carry_file_positions() {
        let text = "[header]\nkind = ode\nn = 1\n[body]\nf1 = y1 + ddy1\n";
        assert_eq!(
            parse_structure(text),
            Err(ParseError::UnknownIdentifier { line: 5, col: 11, name: "ddy1".into() })
        );
        let text = "[header]\nkind = ode\nn = 1\n[body]\nf2 = y1\n";
        assert_eq!(parse_structure(text), Err(ParseError::UnexpectedKey { line: 5, key: "f2".into() }));
        let text = "[header]\nkind = ode\nn = 1\n[body]\nf1 = y1\nf1 = 0\n";
        assert_eq!(parse_structure(text), Err(ParseError::DuplicateKey { line: 6, key: "f1".into() }));
        let text = "[header]\nkind = odd\nn = 1\n";
        assert!(matches!(parse_structure(text), Err(ParseError::Header(_))));
    }

    #[test]
    fn christoffel_single_entry_is_mirrored() {
        let text = "[header]\nkind = christoffel\nn = 3\n[body]\nG[1][2][3] = x2\n";
        let Structure::Christoffel(g) = parse_structure(text).unwrap() else { panic!() };
        let h = christoffel_to_homog(&g);
        let u = |i| Expr::var(Var::U(i));
        assert_eq!(h.h()[1], Expr::int(2) * Expr::var(Var::Xh(2)) * u(2) * u(3));
        assert!(h.h()[0].is_zero() && h.h()[2].is_zero() && h.h()[3].is_zero());
    }

    #[test]
    fn christoffel_asymmetry_is_rejected() {
        let text = "[header]\nkind = christoffel\nn = 3\n[body]\nG[1][2][3] = x2\nG[1][3][2] = x1\n";
        assert!(matches!(parse_structure(text), Err(ParseError::Asymmetric { .. })));
    }

    #[test]
    fn homogeneity_violation_has_witness() {
        let text = "[header]\nkind = homogeneous\nn = 1\n[body]\nh0 = 0\nh1 = u1^3\n";
        match parse_structure(text) {
            Err(ParseError::Homogeneity { component, degree: 2, scaled, expected, .. }) => {
                assert_eq!(component, "h1");
                assert!((scaled - 2.0 * expected).abs() < 1e-9 * scaled.abs().max(1.0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn print_round_trip() {
        let texts = [
            FPAR,
            "[header]\nkind = lagrangian\nn = 2\n[body]\nL = dy1/(dy2 - y1)\n",
            "[header]\nkind = lagrangian2\nn = 1\n[body]\nL = a1*u0 - 3/4*x1^(1/2)*u1^2/u0\n",
            "[header]\nkind = psi-family\nn = 2\n[body]\npsi0[1] = 1 + u2^2\npsi1[1] = exp(-u2)\n",
        ];
        for t in texts {
            let s = parse_structure(t).unwrap();
            assert_eq!(parse_structure(&print_structure(&s)).unwrap(), s, "{t}");
        }
    }
}
