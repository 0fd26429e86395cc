//! The linear system on the unknown Hessian `phi_ij` of a would-be
//! Lagrangian, its prolongations, exact ranks and non-variationality
//! verdicts.

use std::collections::BTreeSet;
use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::DouglasError;
use crate::expr::{is_zero_guarded, Expr, Guard, Point, Sampler, Value, Var, ZeroVerdict};
use crate::geometry::{jacobian_j, jet_vars, tensor_a, total_derivative, OperatorField, PathStructure};
use crate::linalg::{self, RatMatrix};

/// Columns `phi_ab`, `a <= b`, ordered `phi_11, phi_12, .., phi_1n, phi_22, ..`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhiIndexMap {
    n: usize,
}

impl PhiIndexMap {
    pub fn new(n: usize) -> PhiIndexMap {
        PhiIndexMap { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// 0-based column of `phi_ij` (1-based, any order).
    pub fn col(&self, i: usize, j: usize) -> usize {
        let (a, b) = (i.min(j), i.max(j));
        (a - 1) * (2 * self.n + 2 - a) / 2 + (b - a)
    }

    /// Inverse of `col`.
    pub fn pair(&self, c: usize) -> (usize, usize) {
        let mut c = c;
        for a in 1..=self.n {
            let width = self.n - a + 1;
            if c < width {
                return (a, a + c);
            }
            c -= width;
        }
        panic!("column out of range")
    }

    pub fn label(&self, c: usize) -> String {
        let (a, b) = self.pair(c);
        format!("phi{a}{b}")
    }

    /// Column vector to symmetric `n x n` matrix.
    pub fn to_matrix<T: Clone>(&self, v: &[T]) -> Vec<Vec<T>> {
        (1..=self.n).map(|i| (1..=self.n).map(|j| v[self.col(i, j)].clone()).collect()).collect()
    }
}

/// One linear condition `sum_c coeffs[c] * phi_c = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    /// Generating index pair `i < j`.
    pub pair: (usize, usize),
    /// 0 for the algebraic condition, `m` for its `m`-th prolongation.
    pub level: usize,
    pub coeffs: Vec<Expr>,
}

impl Row {
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Expr::is_zero)
    }
}

#[derive(Clone, Debug)]
pub struct PhiSystem {
    pub index: PhiIndexMap,
    pub rows: Vec<Row>,
    guards: BTreeSet<Guard>,
}

impl PhiSystem {
    pub fn n(&self) -> usize {
        self.index.n()
    }

    pub fn cols(&self) -> usize {
        self.index.len()
    }

    pub fn levels(&self) -> usize {
        self.rows.iter().map(|r| r.level).max().unwrap_or(0)
    }

    /// Rows up to and including `level`.
    pub fn truncated(&self, level: usize) -> PhiSystem {
        PhiSystem {
            index: self.index,
            rows: self.rows.iter().filter(|r| r.level <= level).cloned().collect(),
            guards: self.guards.clone(),
        }
    }

    pub fn guards(&self) -> &BTreeSet<Guard> {
        &self.guards
    }

    /// Exact coefficient matrix at `p`.
    pub fn matrix_at(&self, p: &Point) -> Result<RatMatrix, DouglasError> {
        self.rows
            .iter()
            .map(|r| {
                r.coeffs
                    .iter()
                    .map(|e| match e.eval(p)? {
                        Value::Exact(q) => Ok(q),
                        Value::Float(_) => Err(DouglasError::Inexact(e.to_string())),
                    })
                    .collect()
            })
            .collect()
    }

    /// Symbolic submatrix; `rows` and `cols` are 1-based.
    pub fn minor(&self, rows: &[usize], cols: &[usize]) -> Vec<Vec<Expr>> {
        rows.iter().map(|&r| cols.iter().map(|&c| self.rows[r - 1].coeffs[c - 1].clone()).collect()).collect()
    }

    pub fn matrix_f64(&self, p: &Point) -> Result<Vec<Vec<f64>>, DouglasError> {
        self.rows
            .iter()
            .map(|r| r.coeffs.iter().map(|e| e.eval_f64(p).map_err(DouglasError::from)).collect())
            .collect()
    }
}

/// `sum_k A_i^k phi_kj`, as coefficients over the columns.
fn contraction(a: &OperatorField, idx: PhiIndexMap, i: usize, j: usize) -> Vec<Vec<Expr>> {
    let mut acc = vec![Vec::new(); idx.len()];
    for k in 1..=idx.n() {
        let e = a.entry(i, k);
        if !e.is_zero() {
            acc[idx.col(k, j)].push(e.clone());
        }
    }
    acc
}

/// Level 0: antisymmetric part of `A_i^k phi_kj` for `i < j`. Level
/// `m + 1`: total derivative of each level-`m` row with
/// `d phi_ab/dx = -1/2 J_a^k phi_kb - 1/2 J_b^k phi_ka` substituted.
pub fn build_system(p: &PathStructure, levels: usize) -> PhiSystem {
    let n = p.n();
    let idx = PhiIndexMap::new(n);
    let a = tensor_a(p);
    let jm = jacobian_j(p);
    let half = Expr::rational(1, 2);
    let neg_half = Expr::rational(-1, 2);

    let mut rows = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            let mut acc = contraction(&a, idx, i, j);
            for (c, ts) in contraction(&a, idx, j, i).into_iter().enumerate() {
                acc[c].extend(ts.into_iter().map(|t| -t));
            }
            let coeffs = acc.into_iter().map(|ts| &half * Expr::add(ts)).collect();
            rows.push(Row { pair: (i, j), level: 0, coeffs });
        }
    }

    // d phi_c/dx as a linear form in the columns
    let dphi: Vec<Vec<Expr>> = (0..idx.len())
        .map(|c| {
            let (a_, b_) = idx.pair(c);
            let mut acc = vec![Vec::new(); idx.len()];
            for k in 1..=n {
                let ja = jm.entry(a_, k);
                if !ja.is_zero() {
                    acc[idx.col(k, b_)].push(&neg_half * ja);
                }
                let jb = jm.entry(b_, k);
                if !jb.is_zero() {
                    acc[idx.col(k, a_)].push(&neg_half * jb);
                }
            }
            acc.into_iter().map(Expr::add).collect()
        })
        .collect();

    let mut last: Vec<Row> = rows.clone();
    for level in 1..=levels {
        let next: Vec<Row> = last
            .iter()
            .map(|r| {
                let mut acc: Vec<Vec<Expr>> = r.coeffs.iter().map(|e| vec![total_derivative(e, p)]).collect();
                for (c, e) in r.coeffs.iter().enumerate() {
                    if e.is_zero() {
                        continue;
                    }
                    for (c2, d) in dphi[c].iter().enumerate() {
                        if !d.is_zero() {
                            acc[c2].push(e * d);
                        }
                    }
                }
                Row { pair: r.pair, level, coeffs: acc.into_iter().map(Expr::add).collect() }
            })
            .collect();
        rows.extend(next.iter().cloned());
        last = next;
    }

    let mut guards = p.guards();
    for r in &rows {
        for e in &r.coeffs {
            guards.extend(e.guards());
        }
    }
    PhiSystem { index: idx, rows, guards }
}

/// Default number of prolongations for fiber dimension `n`.
pub fn default_levels(n: usize) -> usize {
    if n <= 2 {
        2
    } else {
        1
    }
}

pub type SymMatrix = Vec<Vec<BigRational>>;

#[derive(Clone, Debug, PartialEq)]
pub struct RankReport {
    pub point: Point,
    pub rank: usize,
    pub max_possible: usize,
    pub kernel_basis: Vec<SymMatrix>,
    pub levels: usize,
    pub rows: usize,
    /// Rank from singular values of the row-normalized float matrix.
    pub float_rank: usize,
}

impl RankReport {
    pub fn is_full(&self) -> bool {
        self.rank == self.max_possible
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_basis.len()
    }
}

pub const FLOAT_RANK_THRESHOLD: f64 = 1e-8;

pub fn rank_at(s: &PhiSystem, p: &Point) -> Result<RankReport, DouglasError> {
    let m = s.matrix_at(p)?;
    let cols = s.cols();
    let rank = if m.is_empty() { 0 } else { linalg::rank(&m) };
    let kernel = if m.is_empty() {
        (0..cols)
            .map(|c| {
                let mut v = vec![BigRational::zero(); cols];
                v[c] = num_traits::One::one();
                v
            })
            .collect()
    } else {
        linalg::kernel(&m, cols)
    };
    debug_assert_eq!(rank + kernel.len(), cols);
    let float_rank = linalg::float_rank(&linalg::to_f64(&m), FLOAT_RANK_THRESHOLD);
    Ok(RankReport {
        point: p.clone(),
        rank,
        max_possible: cols,
        kernel_basis: kernel.iter().map(|v| s.index.to_matrix(v)).collect(),
        levels: s.levels(),
        rows: s.rows.len(),
        float_rank,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenericRank {
    pub max_rank: usize,
    pub witness: RankReport,
    pub samples: usize,
    /// Number of samples attaining `max_rank`.
    pub at_max: usize,
    pub ranks: Vec<usize>,
}

pub const SAMPLE_ATTEMPTS: usize = 10_000;

fn sample_reports(
    s: &PhiSystem,
    sampler: &mut dyn Sampler,
    trials: usize,
    stop_at_full: bool,
) -> Result<Vec<RankReport>, DouglasError> {
    let vars = jet_vars(s.n());
    let mut out = Vec::with_capacity(trials);
    for _ in 0..trials {
        let p = sampler.sample_admissible(&vars, s.guards(), SAMPLE_ATTEMPTS)?;
        let r = rank_at(s, &p)?;
        let full = r.is_full();
        out.push(r);
        if full && stop_at_full {
            break;
        }
    }
    Ok(out)
}

/// Maximum exact rank over `trials` admissible rational sample points.
pub fn generic_rank(s: &PhiSystem, sampler: &mut dyn Sampler, trials: usize) -> Result<GenericRank, DouglasError> {
    assert!(trials >= 1, "at least one trial is required");
    let reports = sample_reports(s, sampler, trials, false)?;
    let ranks: Vec<usize> = reports.iter().map(|r| r.rank).collect();
    let max_rank = *ranks.iter().max().unwrap();
    let at_max = ranks.iter().filter(|r| **r == max_rank).count();
    let witness = reports.into_iter().find(|r| r.rank == max_rank).unwrap();
    Ok(GenericRank { max_rank, witness, samples: trials, at_max, ranks })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Mechanism {
    /// Only `phi = 0` solves the system at the witness jet.
    FullRank { witness: RankReport },
    /// Every solution is degenerate: random kernel combinations have
    /// identically vanishing determinant at every base point.
    ForcedDegenerate {
        kernel_dim: usize,
        /// Entries `phi_ij` vanishing on the kernel at every base point.
        vanishing: Vec<(usize, usize)>,
        base_points: Vec<Point>,
        draws_per_point: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    NotVariational(Mechanism),
    Inconclusive { kernel_dim: usize, max_rank: usize, kernel_sample: RankReport },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::NotVariational(Mechanism::FullRank { .. }) => "NotVariational/FullRank",
            Verdict::NotVariational(Mechanism::ForcedDegenerate { .. }) => "NotVariational/ForcedDegenerate",
            Verdict::Inconclusive { .. } => "Inconclusive",
        }
    }

    pub fn is_full_rank(&self) -> bool {
        matches!(self, Verdict::NotVariational(Mechanism::FullRank { .. }))
    }

    pub fn is_forced_degenerate(&self) -> bool {
        matches!(self, Verdict::NotVariational(Mechanism::ForcedDegenerate { .. }))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::NotVariational(Mechanism::FullRank { witness }) => write!(
                f,
                "{} (microlocal near witness jet): rank {}/{} at {}",
                self.label(),
                witness.rank,
                witness.max_possible,
                witness.point
            ),
            Verdict::NotVariational(Mechanism::ForcedDegenerate { kernel_dim, vanishing, base_points, .. }) => {
                let v: Vec<String> = vanishing.iter().map(|(i, j)| format!("phi{i}{j}")).collect();
                write!(
                    f,
                    "{} (microlocal near witness jet): kernel dim {kernel_dim}, {} = 0 on the kernel, det = 0 at {} base points",
                    self.label(),
                    v.join(" = "),
                    base_points.len()
                )
            }
            Verdict::Inconclusive { kernel_dim, max_rank, kernel_sample } => write!(
                f,
                "Inconclusive: max rank {max_rank}/{}, kernel dim {kernel_dim}",
                kernel_sample.max_possible
            ),
        }
    }
}

pub const MIN_BASE_POINTS: usize = 5;
pub const MIN_DRAWS: usize = 30;

/// Determinant of `sum_i c_i K_i` for random rational `c`.
fn random_kernel_det(basis: &[SymMatrix], sampler: &mut dyn Sampler) -> BigRational {
    let n = basis[0].len();
    let mut m = vec![vec![BigRational::zero(); n]; n];
    for k in basis {
        let c = sampler.coefficient();
        for i in 0..n {
            for j in 0..n {
                m[i][j] += &c * &k[i][j];
            }
        }
    }
    linalg::det(&m)
}

/// Sample ranks; full rank anywhere certifies non-variationality. Otherwise
/// test whether every solution at maximal rank is degenerate.
pub fn verdict(
    p: &PathStructure,
    levels: usize,
    sampler: &mut dyn Sampler,
    trials: usize,
) -> Result<Verdict, DouglasError> {
    let s = build_system(p, levels);
    verdict_for_system(&s, sampler, trials)
}

pub fn verdict_for_system(s: &PhiSystem, sampler: &mut dyn Sampler, trials: usize) -> Result<Verdict, DouglasError> {
    let trials = trials.max(1);
    let mut reports = sample_reports(s, sampler, trials, true)?;
    if let Some(w) = reports.iter().find(|r| r.is_full()) {
        return Ok(Verdict::NotVariational(Mechanism::FullRank { witness: w.clone() }));
    }
    let max_rank = reports.iter().map(|r| r.rank).max().unwrap();
    let vars = jet_vars(s.n());
    // top up base points of maximal rank
    let mut extra = 0;
    while reports.iter().filter(|r| r.rank == max_rank).count() < MIN_BASE_POINTS && extra < 20 * MIN_BASE_POINTS {
        let pt = sampler.sample_admissible(&vars, s.guards(), SAMPLE_ATTEMPTS)?;
        reports.push(rank_at(s, &pt)?);
        extra += 1;
    }
    let base: Vec<&RankReport> = reports.iter().filter(|r| r.rank == max_rank).collect();
    let draws = trials.max(MIN_DRAWS);
    let mut degenerate = base.len() >= MIN_BASE_POINTS;
    if degenerate {
        'points: for r in &base {
            for _ in 0..draws {
                if !random_kernel_det(&r.kernel_basis, sampler).is_zero() {
                    degenerate = false;
                    break 'points;
                }
            }
        }
    }
    let witness = base[0].clone();
    if degenerate {
        let n = s.n();
        let mut vanishing = Vec::new();
        for i in 1..=n {
            for j in i..=n {
                if base.iter().all(|r| r.kernel_basis.iter().all(|k| k[i - 1][j - 1].is_zero())) {
                    vanishing.push((i, j));
                }
            }
        }
        return Ok(Verdict::NotVariational(Mechanism::ForcedDegenerate {
            kernel_dim: witness.kernel_dim(),
            vanishing,
            base_points: base.iter().map(|r| r.point.clone()).collect(),
            draws_per_point: draws,
        }));
    }
    Ok(Verdict::Inconclusive { kernel_dim: witness.kernel_dim(), max_rank, kernel_sample: witness })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualCheck {
    pub label: String,
    pub residual: Expr,
    pub verdict: ZeroVerdict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateReport {
    pub tg0: Vec<ResidualCheck>,
    pub tg1: Vec<ResidualCheck>,
    pub tg2: Vec<ResidualCheck>,
}

impl CandidateReport {
    pub fn families(&self) -> [(&'static str, &[ResidualCheck]); 3] {
        [("tg0", &self.tg0), ("tg1", &self.tg1), ("tg2", &self.tg2)]
    }

    pub fn passes(&self) -> bool {
        self.families().iter().all(|(_, f)| f.iter().all(|c| c.verdict.is_zero()))
    }

    pub fn all_symbolic(&self) -> bool {
        self.families().iter().all(|(_, f)| f.iter().all(|c| c.verdict.is_symbolic_zero()))
    }
}

/// Residuals of the fundamental system for a given symmetric `phi`.
pub fn check_candidate_phi(
    p: &PathStructure,
    phi: &[Vec<Expr>],
    sampler: &mut dyn Sampler,
    trials: usize,
    tol: f64,
) -> Result<CandidateReport, DouglasError> {
    let n = p.n();
    if phi.len() != n || phi.iter().any(|r| r.len() != n) {
        return Err(DouglasError::DimensionMismatch { expected: n, got: phi.len() });
    }
    let mut guards = p.guards();
    for row in phi {
        for e in row {
            guards.extend(e.guards());
        }
    }
    let a = tensor_a(p);
    let jm = jacobian_j(p);
    let ph = |i: usize, j: usize| &phi[i - 1][j - 1];
    let mut check = |label: String, residual: Expr| -> Result<ResidualCheck, DouglasError> {
        let verdict = is_zero_guarded(&residual, &guards, sampler, trials, tol)?;
        Ok(ResidualCheck { label, residual, verdict })
    };

    let mut tg0 = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            for k in 1..=n {
                let r = ph(i, k).diff(Var::Dy(j as u16)) - ph(j, k).diff(Var::Dy(i as u16));
                tg0.push(check(format!("({i},{j},{k})"), r)?);
            }
        }
    }
    let mut tg1 = Vec::new();
    let half = Expr::rational(1, 2);
    for i in 1..=n {
        for j in i..=n {
            let mut terms = vec![total_derivative(ph(i, j), p)];
            for k in 1..=n {
                terms.push(&half * jm.entry(i, k) * ph(k, j));
                terms.push(&half * jm.entry(j, k) * ph(k, i));
            }
            tg1.push(check(format!("({i},{j})"), Expr::add(terms))?);
        }
    }
    let mut tg2 = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            let mut terms = Vec::new();
            for k in 1..=n {
                terms.push(a.entry(i, k) * ph(k, j));
                terms.push(-(a.entry(j, k) * ph(k, i)));
            }
            tg2.push(check(format!("({i},{j})"), &half * Expr::add(terms))?);
        }
    }
    Ok(CandidateReport { tg0, tg1, tg2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::RationalSampler;

    #[test]
    fn index_map_round_trip() {
        let m = PhiIndexMap::new(4);
        assert_eq!(m.len(), 10);
        assert_eq!(m.col(1, 1), 0);
        assert_eq!(m.col(1, 4), 3);
        assert_eq!(m.col(2, 2), 4);
        assert_eq!(m.col(4, 4), 9);
        for c in 0..m.len() {
            let (a, b) = m.pair(c);
            assert_eq!(m.col(a, b), c);
            assert_eq!(m.col(b, a), c);
        }
    }

    #[test]
    fn flat_rows_vanish() {
        let s = build_system(&PathStructure::flat(3), 2);
        assert_eq!(s.rows.len(), 9);
        assert!(s.rows.iter().all(Row::is_zero));
        let p = RationalSampler::new(1).sample(&jet_vars(3));
        let r = rank_at(&s, &p).unwrap();
        assert_eq!((r.rank, r.kernel_dim()), (0, 6));
    }

    #[test]
    fn zero_phi_is_a_solution() {
        let y = |i| Expr::var(Var::Y(i));
        let p = PathStructure::new(vec![y(2), Expr::zero()]).unwrap();
        let zero = vec![vec![Expr::zero(); 2]; 2];
        let mut s = RationalSampler::new(0);
        assert!(check_candidate_phi(&p, &zero, &mut s, 5, 1e-9).unwrap().all_symbolic());
    }
}
