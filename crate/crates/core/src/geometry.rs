//! Path structures, their homogeneous and Christoffel presentations, and
//! the J and A operator fields.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::GeometryError;
use crate::expr::{is_zero, Expr, Guard, Point, SampleError, Sampler, Var, VariableSpace, ZeroVerdict};

/// System `y''^i = f^i(x, y, y')`, `1 <= i <= n`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathStructure {
    f: Vec<Expr>,
}

fn check_in(e: &Expr, space: VariableSpace, forbid: impl Fn(Var) -> bool) -> Result<(), GeometryError> {
    if let Err(v) = e.check_space(space) {
        return Err(GeometryError::OutOfSpace(v.name()));
    }
    match e.vars().into_iter().find(|v| forbid(*v)) {
        Some(v) => Err(GeometryError::OutOfSpace(v.name())),
        None => Ok(()),
    }
}

impl PathStructure {
    pub fn new(f: Vec<Expr>) -> Result<PathStructure, GeometryError> {
        if f.is_empty() {
            return Err(GeometryError::DimensionMismatch { expected: 1, got: 0 });
        }
        let space = VariableSpace::Inhomogeneous { n: f.len() };
        for e in &f {
            check_in(e, space, |v| matches!(v, Var::Ddy(_)))?;
        }
        Ok(PathStructure { f })
    }

    pub fn flat(n: usize) -> PathStructure {
        PathStructure { f: vec![Expr::zero(); n] }
    }

    pub fn n(&self) -> usize {
        self.f.len()
    }

    pub fn f(&self) -> &[Expr] {
        &self.f
    }

    /// Right-hand side `f^i`, 1-based.
    pub fn component(&self, i: usize) -> &Expr {
        &self.f[i - 1]
    }

    pub fn space(&self) -> VariableSpace {
        VariableSpace::Inhomogeneous { n: self.n() }
    }

    /// Coordinates of the first jet: `x, y1..yn, dy1..dyn`.
    pub fn jet_vars(&self) -> Vec<Var> {
        jet_vars(self.n())
    }

    pub fn guards(&self) -> BTreeSet<Guard> {
        self.f.iter().flat_map(Expr::guards).collect()
    }

    /// Substitution `ddy^i -> f^i`.
    pub fn acceleration_map(&self) -> BTreeMap<Var, Expr> {
        (1..=self.n()).map(|i| (Var::Ddy(i as u16), self.component(i).clone())).collect()
    }

    /// Same structure with every right-hand side transformed.
    pub fn map(&self, g: impl Fn(usize, &Expr) -> Expr) -> PathStructure {
        PathStructure { f: self.f.iter().enumerate().map(|(i, e)| g(i + 1, e)).collect() }
    }
}

pub fn jet_vars(n: usize) -> Vec<Var> {
    let mut v = vec![Var::X];
    v.extend((1..=n).map(|i| Var::Y(i as u16)));
    v.extend((1..=n).map(|i| Var::Dy(i as u16)));
    v
}

/// System with right-hand sides `h^0..h^n` in `x^i` and velocities `u^i`,
/// positively 2-homogeneous in the velocities.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousStructure {
    h: Vec<Expr>,
}

impl HomogeneousStructure {
    /// `h` has `n + 1` components.
    pub fn new(h: Vec<Expr>) -> Result<HomogeneousStructure, GeometryError> {
        if h.len() < 2 {
            return Err(GeometryError::DimensionMismatch { expected: 2, got: h.len() });
        }
        let space = VariableSpace::Homogeneous { n: h.len() - 1 };
        for e in &h {
            check_in(e, space, |v| matches!(v, Var::Acc(_)))?;
        }
        Ok(HomogeneousStructure { h })
    }

    /// Fiber dimension `n`; the manifold has dimension `n + 1`.
    pub fn n(&self) -> usize {
        self.h.len() - 1
    }

    pub fn h(&self) -> &[Expr] {
        &self.h
    }

    pub fn space(&self) -> VariableSpace {
        VariableSpace::Homogeneous { n: self.n() }
    }

    /// `sum_i u^i dh^j/du^i - 2 h^j` for each `j`.
    pub fn euler_residuals(&self) -> Vec<Expr> {
        self.h.iter().map(|h| euler_residual(h, self.n(), 2)).collect()
    }
}

/// `sum_i u^i de/du^i - k e`.
pub fn euler_residual(e: &Expr, n: usize, degree: i64) -> Expr {
    let mut terms: Vec<Expr> = (0..=n)
        .map(|i| {
            let u = Var::U(i as u16);
            Expr::var(u) * e.diff(u)
        })
        .collect();
    terms.push(Expr::int(-degree) * e);
    Expr::add(terms)
}

/// Connection coefficients `G[i][j][k]`, `0 <= i, j, k <= n`, over the
/// positions `x0..xn`. Stored symmetrized in the lower indices.
#[derive(Clone, Debug, PartialEq)]
pub struct ChristoffelTable {
    n: usize,
    entries: BTreeMap<(usize, usize, usize), Expr>,
}

impl ChristoffelTable {
    pub fn new(n: usize, raw: BTreeMap<(usize, usize, usize), Expr>) -> Result<ChristoffelTable, GeometryError> {
        let space = VariableSpace::Homogeneous { n };
        let mut entries = BTreeMap::new();
        let half = Expr::rational(1, 2);
        let get = |i, j, k| raw.get(&(i, j, k)).cloned().unwrap_or_else(Expr::zero);
        for (&(i, j, k), e) in &raw {
            if i > n || j > n || k > n {
                return Err(GeometryError::DimensionMismatch { expected: n, got: i.max(j).max(k) });
            }
            check_in(e, space, |v| matches!(v, Var::U(_) | Var::Acc(_)))?;
            let (a, b) = (j.min(k), j.max(k));
            let sym = &half * (get(i, a, b) + get(i, b, a));
            if !sym.is_zero() {
                entries.insert((i, a, b), sym);
            }
        }
        Ok(ChristoffelTable { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Expr {
        self.entries.get(&(i, j.min(k), j.max(k))).cloned().unwrap_or_else(Expr::zero)
    }

    /// Nonzero entries with `j <= k`.
    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize, usize), &Expr)> {
        self.entries.iter()
    }
}

/// An `n x n` matrix of expressions addressed as a (1,1)-tensor
/// `T_i^j`, lower index first, both 1-based.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorField {
    n: usize,
    m: Vec<Expr>,
}

impl OperatorField {
    pub fn from_fn(n: usize, g: impl Fn(usize, usize) -> Expr) -> OperatorField {
        let mut m = Vec::with_capacity(n * n);
        for i in 1..=n {
            for j in 1..=n {
                m.push(g(i, j));
            }
        }
        OperatorField { n, m }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, lower: usize, upper: usize) -> &Expr {
        &self.m[(lower - 1) * self.n + (upper - 1)]
    }

    pub fn is_zero(&self) -> bool {
        self.m.iter().all(Expr::is_zero)
    }

    pub fn eval_f64(&self, p: &Point) -> Result<Vec<Vec<f64>>, GeometryError> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for i in 1..=self.n {
            for j in 1..=self.n {
                out[i - 1][j - 1] = self.entry(i, j).eval_f64(p)?;
            }
        }
        Ok(out)
    }
}

impl fmt::Display for OperatorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 1..=self.n {
            for j in 1..=self.n {
                let e = self.entry(i, j);
                if !e.is_zero() {
                    writeln!(f, "[{i}][{j}] = {e}")?;
                }
            }
        }
        Ok(())
    }
}

/// `d/dx = d_x + dy^j d_{y^j} + f^j d_{dy^j}`.
pub fn total_derivative(e: &Expr, p: &PathStructure) -> Expr {
    let mut terms = vec![e.diff(Var::X)];
    for j in 1..=p.n() {
        let j16 = j as u16;
        let dy = e.diff(Var::Y(j16));
        if !dy.is_zero() {
            terms.push(Expr::var(Var::Dy(j16)) * dy);
        }
        let ddy = e.diff(Var::Dy(j16));
        if !ddy.is_zero() {
            terms.push(p.component(j) * ddy);
        }
    }
    Expr::add(terms)
}

/// `J_j^k = df^k/d(dy^j)`, addressed `entry(j, k)`.
pub fn jacobian_j(p: &PathStructure) -> OperatorField {
    OperatorField::from_fn(p.n(), |j, k| p.component(k).diff(Var::Dy(j as u16)))
}

/// `A_i^j = d/dx J_i^j - 2 df^j/dy^i - 1/2 J_i^k J_k^j`.
pub fn tensor_a(p: &PathStructure) -> OperatorField {
    let n = p.n();
    let jm = jacobian_j(p);
    let half = Expr::rational(-1, 2);
    OperatorField::from_fn(n, |i, j| {
        let mut terms = vec![
            total_derivative(jm.entry(i, j), p),
            Expr::int(-2) * p.component(j).diff(Var::Y(i as u16)),
        ];
        for k in 1..=n {
            let (a, b) = (jm.entry(i, k), jm.entry(k, j));
            if !a.is_zero() && !b.is_zero() {
                terms.push(&half * a * b);
            }
        }
        Expr::add(terms)
    })
}

/// Parameterize by `x^0 = x`: `f^i = -h^i(x, 1, dy) + dy^i h^0(x, 1, dy)`.
pub fn homog_to_inhomog(h: &HomogeneousStructure) -> PathStructure {
    let n = h.n();
    let mut map = BTreeMap::from([(Var::Xh(0), Expr::var(Var::X)), (Var::U(0), Expr::one())]);
    for i in 1..=n {
        map.insert(Var::Xh(i as u16), Expr::var(Var::Y(i as u16)));
        map.insert(Var::U(i as u16), Expr::var(Var::Dy(i as u16)));
    }
    let h0 = h.h()[0].substitute(&map);
    let f = (1..=n)
        .map(|i| -h.h()[i].substitute(&map) + Expr::var(Var::Dy(i as u16)) * &h0)
        .collect();
    PathStructure { f }
}

/// `h^i = sum_{j,k} G^i_{jk} u^j u^k`.
pub fn christoffel_to_homog(g: &ChristoffelTable) -> HomogeneousStructure {
    let n = g.n();
    let mut h = vec![Vec::new(); n + 1];
    for (&(i, j, k), c) in g.entries() {
        let uu = Expr::var(Var::U(j as u16)) * Expr::var(Var::U(k as u16));
        let mult = if j == k { Expr::one() } else { Expr::int(2) };
        h[i].push(mult * c * uu);
    }
    HomogeneousStructure { h: h.into_iter().map(Expr::add).collect() }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Reversibility {
    Reversible { verdict: ZeroVerdict },
    /// The minor `d^i u^j - d^j u^i` with `d = h(x,-u) - h(x,u)` is nonzero
    /// at `witness`.
    Irreversible { i: usize, j: usize, witness: Point, value: f64 },
}

/// Whether `h(x,-u) - h(x,u)` is proportional to `u`.
pub fn reversibility_check(
    h: &HomogeneousStructure,
    sampler: &mut dyn Sampler,
    trials: usize,
) -> Result<Reversibility, SampleError> {
    let n = h.n();
    let flip: BTreeMap<Var, Expr> =
        (0..=n).map(|i| (Var::U(i as u16), -Expr::var(Var::U(i as u16)))).collect();
    let d: Vec<Expr> = h.h().iter().map(|e| e.substitute(&flip) - e).collect();
    let mut numeric: Option<ZeroVerdict> = None;
    for i in 0..=n {
        for j in i + 1..=n {
            let minor = &d[i] * Expr::var(Var::U(j as u16)) - &d[j] * Expr::var(Var::U(i as u16));
            match is_zero(&minor, sampler, trials, 1e-9)? {
                ZeroVerdict::Nonzero { witness, value } => {
                    return Ok(Reversibility::Irreversible { i, j, witness, value });
                }
                v @ ZeroVerdict::NumericZero { .. } => numeric = Some(v),
                ZeroVerdict::SymbolicZero => {}
            }
        }
    }
    Ok(Reversibility::Reversible { verdict: numeric.unwrap_or(ZeroVerdict::SymbolicZero) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::RationalSampler;

    fn y(i: u16) -> Expr {
        Expr::var(Var::Y(i))
    }
    fn dy(i: u16) -> Expr {
        Expr::var(Var::Dy(i))
    }
    fn u(i: u16) -> Expr {
        Expr::var(Var::U(i))
    }

    #[test]
    fn total_derivative_of_position() {
        let p = PathStructure::new(vec![y(2), Expr::zero()]).unwrap();
        assert_eq!(total_derivative(&y(1), &p), dy(1));
        assert_eq!(total_derivative(&dy(1), &p), y(2));
    }

    #[test]
    fn a_reduces_for_velocity_free_rhs() {
        let p = PathStructure::new(vec![y(1) * y(2), Expr::powi(y(1), 3)]).unwrap();
        let a = tensor_a(&p);
        for i in 1..=2 {
            for j in 1..=2 {
                let expected = Expr::int(-2) * p.component(j).diff(Var::Y(i as u16));
                assert_eq!(a.entry(i, j), &expected);
            }
        }
    }

    #[test]
    fn out_of_space_rejected() {
        assert!(PathStructure::new(vec![Expr::var(Var::Ddy(1))]).is_err());
        assert!(PathStructure::new(vec![y(2)]).is_err());
    }

    #[test]
    fn christoffel_symmetrizes() {
        let raw = BTreeMap::from([((1, 2, 3), Expr::var(Var::Xh(2)))]);
        let g = ChristoffelTable::new(3, raw).unwrap();
        assert_eq!(g.get(1, 3, 2), Expr::rational(1, 2) * Expr::var(Var::Xh(2)));
        let h = christoffel_to_homog(&g);
        assert_eq!(h.h()[1], Expr::var(Var::Xh(2)) * u(2) * u(3));
    }

    #[test]
    fn odd_velocity_term_is_irreversible() {
        let norm = Expr::sqrt(Expr::powi(u(0), 2) + Expr::powi(u(1), 2));
        let h = HomogeneousStructure::new(vec![Expr::zero(), u(0) * norm]).unwrap();
        let mut s = RationalSampler::new(5);
        assert!(matches!(reversibility_check(&h, &mut s, 20).unwrap(), Reversibility::Irreversible { .. }));
    }
}
