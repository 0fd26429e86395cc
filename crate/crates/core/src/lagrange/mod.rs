//! Candidate Lagrangians: Euler-Lagrange residuals modulo the ODE, the
//! velocity Hessian, homogenization, convexity probes and order reduction.

mod ode;
mod reduce;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::LagrangeError;
use crate::expr::{is_zero_guarded, Expr, Guard, Point, Sampler, Value, Var, VariableSpace, ZeroVerdict};
use crate::geometry::{euler_residual, total_derivative, PathStructure};
use crate::linalg;

pub use ode::{dormand_prince, numeric_extremal_check, ExtremalReport, Jet, OdeOptions, OdeStats};
pub use reduce::{reduce_second_order, Reduction};

fn check_space(e: &Expr, space: VariableSpace, forbid: impl Fn(Var) -> bool) -> Result<(), LagrangeError> {
    if let Err(v) = e.check_space(space) {
        return Err(LagrangeError::OutOfSpace(v.name()));
    }
    match e.vars().into_iter().find(|v| forbid(*v)) {
        Some(v) => Err(LagrangeError::OutOfSpace(v.name())),
        None => Ok(()),
    }
}

/// First-order nonautonomous `L(x, y, dy)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lagrangian {
    n: usize,
    l: Expr,
}

impl Lagrangian {
    pub fn new(n: usize, l: Expr) -> Result<Lagrangian, LagrangeError> {
        check_space(&l, VariableSpace::Inhomogeneous { n }, |v| matches!(v, Var::Ddy(_)))?;
        Ok(Lagrangian { n, l })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn expr(&self) -> &Expr {
        &self.l
    }

    pub fn guards(&self) -> BTreeSet<Guard> {
        self.l.guards()
    }
}

/// Autonomous `L^(x, u)`, declared 1-homogeneous in the velocities `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct HomLagrangian {
    n: usize,
    l: Expr,
}

impl HomLagrangian {
    /// `n` is the fiber dimension: positions `x0..xn`, velocities `u0..un`.
    pub fn new(n: usize, l: Expr) -> Result<HomLagrangian, LagrangeError> {
        check_space(&l, VariableSpace::Homogeneous { n }, |v| matches!(v, Var::Acc(_)))?;
        Ok(HomLagrangian { n, l })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn expr(&self) -> &Expr {
        &self.l
    }

    /// Expression guards plus the chart condition `u0 > 0`.
    pub fn guards(&self) -> BTreeSet<Guard> {
        let mut g = self.l.guards();
        g.insert(Guard::Positive(Expr::var(Var::U(0))));
        g
    }

    pub fn euler_residual(&self) -> Expr {
        euler_residual(&self.l, self.n, 1)
    }
}

/// `L2(x, u, a) = F(x, u) + sum_s a^s lambda_s(x, u)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondOrderLagrangian {
    n: usize,
    l: Expr,
}

impl SecondOrderLagrangian {
    pub fn new(n: usize, l: Expr) -> Result<SecondOrderLagrangian, LagrangeError> {
        check_space(&l, VariableSpace::Homogeneous { n }, |_| false)?;
        Ok(SecondOrderLagrangian { n, l })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn expr(&self) -> &Expr {
        &self.l
    }
}

pub fn hom_vars(n: usize) -> Vec<Var> {
    let mut v: Vec<Var> = (0..=n).map(|i| Var::Xh(i as u16)).collect();
    v.extend((0..=n).map(|i| Var::U(i as u16)));
    v
}

fn velocities(n: usize) -> Vec<Var> {
    (1..=n).map(|i| Var::Dy(i as u16)).collect()
}

fn hom_velocities(n: usize) -> Vec<Var> {
    (0..=n).map(|i| Var::U(i as u16)).collect()
}

pub fn hessian(e: &Expr, vars: &[Var]) -> Vec<Vec<Expr>> {
    let grad: Vec<Expr> = vars.iter().map(|v| e.diff(*v)).collect();
    let k = vars.len();
    let mut h = vec![vec![Expr::zero(); k]; k];
    for i in 0..k {
        for j in i..k {
            let d = grad[i].diff(vars[j]);
            h[j][i] = d.clone();
            h[i][j] = d;
        }
    }
    h
}

/// Determinant by cofactor expansion with memoized minors.
pub fn det_symbolic(m: &[Vec<Expr>]) -> Expr {
    fn go(m: &[Vec<Expr>], row: usize, cols: u64, memo: &mut HashMap<u64, Expr>) -> Expr {
        let n = m.len();
        if row == n {
            return Expr::one();
        }
        if let Some(e) = memo.get(&cols) {
            return e.clone();
        }
        let mut terms = Vec::new();
        let mut sign = 1;
        for c in 0..n {
            if cols & (1 << c) != 0 {
                continue;
            }
            let a = &m[row][c];
            if !a.is_zero() {
                let minor = go(m, row + 1, cols | (1 << c), memo);
                if !minor.is_zero() {
                    terms.push(Expr::int(sign) * a * minor);
                }
            }
            sign = -sign;
        }
        let out = Expr::add(terms);
        memo.insert(cols, out.clone());
        out
    }
    go(m, 0, 0, &mut HashMap::new())
}

/// `phi_ij = d^2 L / d dy^i d dy^j` and its determinant.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianField {
    pub phi: Vec<Vec<Expr>>,
    pub det: Expr,
}

pub fn hessian_phi(l: &Lagrangian) -> HessianField {
    let phi = hessian(l.expr(), &velocities(l.n()));
    let det = det_symbolic(&phi);
    HessianField { phi, det }
}

/// `dL/dy^j - d/dx dL/d(dy^j)` with accelerations replaced by `f`.
pub fn euler_lagrange_residual(l: &Lagrangian, p: &PathStructure) -> Vec<Expr> {
    (1..=p.n())
        .map(|j| {
            let j = j as u16;
            l.expr().diff(Var::Y(j)) - total_derivative(&l.expr().diff(Var::Dy(j)), p)
        })
        .collect()
}

/// Euler-Lagrange expressions with the accelerations left symbolic.
pub fn euler_lagrange_full(l: &Lagrangian) -> Vec<Expr> {
    let n = l.n();
    (1..=n)
        .map(|j| {
            let p = l.expr().diff(Var::Dy(j as u16));
            let mut terms = vec![l.expr().diff(Var::Y(j as u16)), -p.diff(Var::X)];
            for k in 1..=n {
                let k = k as u16;
                terms.push(-(Expr::var(Var::Dy(k)) * p.diff(Var::Y(k))));
                terms.push(-(Expr::var(Var::Ddy(k)) * p.diff(Var::Dy(k))));
            }
            Expr::add(terms)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub residuals: Vec<Expr>,
    pub residual_verdicts: Vec<ZeroVerdict>,
    pub det: Expr,
    pub det_verdict: ZeroVerdict,
}

impl EquivalenceReport {
    pub fn residuals_vanish(&self) -> bool {
        self.residual_verdicts.iter().all(ZeroVerdict::is_zero)
    }

    pub fn nondegenerate(&self) -> bool {
        !self.det_verdict.is_zero()
    }

    pub fn pass(&self) -> bool {
        self.residuals_vanish() && self.nondegenerate()
    }
}

/// The Euler-Lagrange system of `l` vanishes modulo `p` and the velocity
/// Hessian is nondegenerate.
pub fn verify_equivalence(
    l: &Lagrangian,
    p: &PathStructure,
    sampler: &mut dyn Sampler,
    trials: usize,
    tol: f64,
) -> Result<EquivalenceReport, LagrangeError> {
    if l.n() != p.n() {
        return Err(LagrangeError::DimensionMismatch { expected: p.n(), got: l.n() });
    }
    let mut guards = l.guards();
    guards.extend(p.guards());
    let residuals = euler_lagrange_residual(l, p);
    let residual_verdicts = residuals
        .iter()
        .map(|r| is_zero_guarded(r, &guards, sampler, trials, tol))
        .collect::<Result<Vec<_>, _>>()?;
    let h = hessian_phi(l);
    let det_verdict = is_zero_guarded(&h.det, &guards, sampler, trials, tol)?;
    Ok(EquivalenceReport { residuals, residual_verdicts, det: h.det, det_verdict })
}

fn homogenize_map(n: usize) -> BTreeMap<Var, Expr> {
    let u0 = Expr::var(Var::U(0));
    let mut map = BTreeMap::from([(Var::X, Expr::var(Var::Xh(0)))]);
    for j in 1..=n {
        let j = j as u16;
        map.insert(Var::Y(j), Expr::var(Var::Xh(j)));
        map.insert(Var::Dy(j), Expr::var(Var::U(j)) / &u0);
    }
    map
}

/// The chart `x^0 = x`, `u^0 = 1`.
pub fn dehomogenize_map(n: usize) -> BTreeMap<Var, Expr> {
    let mut map = BTreeMap::from([(Var::Xh(0), Expr::var(Var::X)), (Var::U(0), Expr::one())]);
    for j in 1..=n {
        let j = j as u16;
        map.insert(Var::Xh(j), Expr::var(Var::Y(j)));
        map.insert(Var::U(j), Expr::var(Var::Dy(j)));
    }
    map
}

/// Point `(x, y, dy)` lifted to `(x^0 = x, x^j = y^j, u^0 = 1, u^j = dy^j)`.
pub fn lift_point(n: usize, p: &Point) -> Point {
    let one = Value::Exact(BigRational::from_integer(1.into()));
    let mut q = Point::new().with(Var::U(0), one);
    if let Some(x) = p.get(Var::X) {
        q.set(Var::Xh(0), x.clone());
    }
    for j in 1..=n {
        let j16 = j as u16;
        if let Some(v) = p.get(Var::Y(j16)) {
            q.set(Var::Xh(j16), v.clone());
        }
        if let Some(v) = p.get(Var::Dy(j16)) {
            q.set(Var::U(j16), v.clone());
        }
    }
    q
}

/// `L^(x, u) = L(x^0, x^j, u^j/u^0) u^0` on the chart `u^0 > 0`.
pub fn homogenize(l: &Lagrangian) -> HomLagrangian {
    let e = l.expr().substitute(&homogenize_map(l.n())) * Expr::var(Var::U(0));
    HomLagrangian { n: l.n(), l: e }
}

/// `L(x, y, dy) = L^(x, y, 1, dy)` after checking 1-homogeneity.
pub fn dehomogenize(
    lh: &HomLagrangian,
    sampler: &mut dyn Sampler,
    trials: usize,
) -> Result<Lagrangian, LagrangeError> {
    let res = lh.euler_residual();
    if let ZeroVerdict::Nonzero { witness, .. } = is_zero_guarded(&res, &lh.guards(), sampler, trials, 1e-9)? {
        let n = lh.n();
        let scale: BTreeMap<Var, Expr> =
            hom_velocities(n).into_iter().map(|u| (u, Expr::int(2) * Expr::var(u))).collect();
        let scaled = lh.expr().substitute(&scale).eval_f64(&witness)?;
        let expected = 2.0 * lh.expr().eval_f64(&witness)?;
        return Err(LagrangeError::Homogeneity { scale: "2".into(), point: witness.to_string(), scaled, expected });
    }
    Ok(Lagrangian { n: lh.n(), l: lh.expr().substitute(&dehomogenize_map(lh.n())) })
}

/// Value of a matrix of expressions at `p`: exact when every entry is.
enum MatValue {
    Exact(Vec<Vec<BigRational>>),
    Float(Vec<Vec<f64>>),
}

fn eval_matrix(m: &[Vec<Expr>], p: &Point) -> Result<MatValue, LagrangeError> {
    let vals: Vec<Vec<Value>> = m
        .iter()
        .map(|r| r.iter().map(|e| e.eval(p)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    if vals.iter().flatten().all(|v| v.as_exact().is_some()) {
        Ok(MatValue::Exact(
            vals.into_iter().map(|r| r.into_iter().map(|v| v.as_exact().unwrap().clone()).collect()).collect(),
        ))
    } else {
        Ok(MatValue::Float(vals.into_iter().map(|r| r.iter().map(Value::to_f64).collect()).collect()))
    }
}

fn float_det(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    if n == 0 {
        return 1.0;
    }
    DMatrix::from_fn(n, n, |i, j| m[i][j]).determinant()
}

fn mat_det(m: &MatValue) -> Value {
    match m {
        MatValue::Exact(a) => Value::Exact(if a.is_empty() { BigRational::from_integer(1.into()) } else { linalg::det(a) }),
        MatValue::Float(a) => Value::Float(float_det(a)),
    }
}

fn mat_f64(m: &MatValue) -> Vec<Vec<f64>> {
    match m {
        MatValue::Exact(a) => linalg::to_f64(a),
        MatValue::Float(a) => a.clone(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityPoint {
    pub point: Point,
    /// `det Hess_u (L^2)` in the `n + 1` velocities.
    pub lhs: Value,
    /// `2^(n+1) L^(n+2) det Hess_dy L`.
    pub rhs: Value,
    pub rel_error: f64,
    /// Both sides exact rationals and equal.
    pub exact_equal: bool,
    /// `L = 0` at the point; the identity degenerates.
    pub skipped: bool,
}

/// Evaluate both sides of `det Hess(L^2) = 2^(n+1) L^(n+2) det Hess(L)`.
pub fn hessian_det_identity_check(l: &Lagrangian, points: &[Point]) -> Result<Vec<IdentityPoint>, LagrangeError> {
    let n = l.n();
    let lh = homogenize(l);
    let sq = Expr::powi(lh.expr().clone(), 2);
    let h_sq = hessian(&sq, &hom_velocities(n));
    let h_l = hessian(l.expr(), &velocities(n));
    let factor = Expr::powi(Expr::int(2), n as i64 + 1) * Expr::powi(l.expr().clone(), n as i64 + 2);
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let lval = l.expr().eval(p)?;
        let lhs = mat_det(&eval_matrix(&h_sq, &lift_point(n, p))?);
        let rhs_det = mat_det(&eval_matrix(&h_l, p)?);
        let fval = factor.eval(p)?;
        let rhs = match (&fval, &rhs_det) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a * b),
            _ => Value::Float(fval.to_f64() * rhs_det.to_f64()),
        };
        let skipped = lval.is_exact_zero() || lval.to_f64() == 0.0;
        let exact_equal = matches!((&lhs, &rhs), (Value::Exact(a), Value::Exact(b)) if a == b);
        let (a, b) = (lhs.to_f64(), rhs.to_f64());
        let rel_error = if exact_equal || a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
        out.push(IdentityPoint { point: p.clone(), lhs, rhs, rel_error, exact_equal, skipped });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DegeneracyPoint {
    pub point: Point,
    pub det: f64,
    /// `max_i |sum_j Hess_ij u^j|`.
    pub hess_u: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DegeneracyReport {
    pub points: Vec<DegeneracyPoint>,
    pub tol: f64,
}

impl DegeneracyReport {
    pub fn max_det(&self) -> f64 {
        self.points.iter().map(|p| p.det.abs()).fold(0.0, f64::max)
    }

    pub fn max_hess_u(&self) -> f64 {
        self.points.iter().map(|p| p.hess_u).fold(0.0, f64::max)
    }

    pub fn pass(&self) -> bool {
        self.max_det() < self.tol && self.max_hess_u() < self.tol
    }
}

pub const DEGENERACY_TOL: f64 = 1e-8;

/// The velocity Hessian of a 1-homogeneous function is singular with the
/// velocity in its kernel.
pub fn euler_degeneracy_check(lh: &HomLagrangian, points: &[Point]) -> Result<DegeneracyReport, LagrangeError> {
    let us = hom_velocities(lh.n());
    let h = hessian(lh.expr(), &us);
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let m = eval_matrix(&h, p)?;
        let det = mat_det(&m).to_f64();
        let u: Vec<f64> = us.iter().map(|v| Expr::var(*v).eval_f64(p)).collect::<Result<_, _>>()?;
        let hess_u = match &m {
            MatValue::Exact(a) => {
                let uq: Vec<BigRational> = us
                    .iter()
                    .map(|v| Expr::var(*v).eval(p).map(|x| x.as_exact().cloned()))
                    .collect::<Result<Option<Vec<_>>, _>>()?
                    .unwrap_or_default();
                if uq.len() == us.len() {
                    let v = linalg::abs_max(&linalg::mat_vec(a, &uq));
                    num_traits::ToPrimitive::to_f64(&v).unwrap_or(f64::NAN)
                } else {
                    float_mat_vec_max(&linalg::to_f64(a), &u)
                }
            }
            MatValue::Float(a) => float_mat_vec_max(a, &u),
        };
        out.push(DegeneracyPoint { point: p.clone(), det, hess_u });
    }
    Ok(DegeneracyReport { points: out, tol: DEGENERACY_TOL })
}

fn float_mat_vec_max(a: &[Vec<f64>], u: &[f64]) -> f64 {
    a.iter()
        .map(|r| r.iter().zip(u).map(|(x, y)| x * y).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
    pub eigenvalues: Vec<f64>,
}

impl Signature {
    fn of(m: &[Vec<f64>]) -> Signature {
        let (positive, negative, zero, eigenvalues) = linalg::signature(m, 1e-10);
        Signature { positive, negative, zero, eigenvalues }
    }

    pub fn is_indefinite(&self) -> bool {
        self.positive > 0 && self.negative > 0
    }

    pub fn is_positive_definite(&self) -> bool {
        self.negative == 0 && self.zero == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexityPoint {
    pub point: Point,
    /// Velocity Hessian of `L^2`: positive definite for a Finsler metric.
    pub squared: Signature,
    /// Velocity Hessian of `L^` itself.
    pub plain: Signature,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConvexitySummary {
    PositiveDefinite,
    Indefinite { witness: usize },
    Degenerate { witness: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexityReport {
    pub points: Vec<ConvexityPoint>,
    pub summary: ConvexitySummary,
}

/// Eigenvalue signs of the velocity Hessians of `L^2` and `L^` at each point.
pub fn convexity_probe(lh: &HomLagrangian, points: &[Point]) -> Result<ConvexityReport, LagrangeError> {
    let us = hom_velocities(lh.n());
    let h_sq = hessian(&Expr::powi(lh.expr().clone(), 2), &us);
    let h = hessian(lh.expr(), &us);
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let squared = Signature::of(&mat_f64(&eval_matrix(&h_sq, p)?));
        let plain = Signature::of(&mat_f64(&eval_matrix(&h, p)?));
        out.push(ConvexityPoint { point: p.clone(), squared, plain });
    }
    let summary = if let Some(i) = out.iter().position(|c| c.squared.is_indefinite()) {
        ConvexitySummary::Indefinite { witness: i }
    } else if let Some(i) = out.iter().position(|c| !c.squared.is_positive_definite()) {
        ConvexitySummary::Degenerate { witness: i }
    } else {
        ConvexitySummary::PositiveDefinite
    };
    Ok(ConvexityReport { points: out, summary })
}

pub const SAMPLE_ATTEMPTS: usize = 10_000;

/// Admissible points `(x, y, dy)` for `l` (and optionally `p`).
pub fn sample_points(
    l: &Lagrangian,
    p: Option<&PathStructure>,
    sampler: &mut dyn Sampler,
    count: usize,
) -> Result<Vec<Point>, LagrangeError> {
    let mut guards = l.guards();
    if let Some(p) = p {
        guards.extend(p.guards());
    }
    let vars = crate::geometry::jet_vars(l.n());
    (0..count)
        .map(|_| sampler.sample_admissible(&vars, &guards, SAMPLE_ATTEMPTS).map_err(LagrangeError::from))
        .collect()
}

/// Admissible points `(x, u)` with `u0 > 0` for `lh`, with extra guards.
pub fn sample_hom_points(
    lh: &HomLagrangian,
    extra: &BTreeSet<Guard>,
    sampler: &mut dyn Sampler,
    count: usize,
) -> Result<Vec<Point>, LagrangeError> {
    let mut guards = lh.guards();
    guards.extend(extra.iter().cloned());
    let vars = hom_vars(lh.n());
    (0..count)
        .map(|_| sampler.sample_admissible(&vars, &guards, SAMPLE_ATTEMPTS).map_err(LagrangeError::from))
        .collect()
}

/// Exact value of `e` at `p`, if any.
pub fn exact_value(e: &Expr, p: &Point) -> Option<BigRational> {
    e.eval(p).ok().and_then(|v| v.as_exact().cloned())
}

pub fn is_negligible(v: &Value, tol: f64) -> bool {
    match v {
        Value::Exact(q) => q.is_zero() || num_traits::ToPrimitive::to_f64(&q.abs()).unwrap_or(f64::INFINITY) < tol,
        Value::Float(x) => x.abs() < tol,
    }
}
