use std::collections::BTreeSet;

use super::ratfunc::RatFunc;
use super::{Expr, Guard, Point, SampleError, Sampler, Var};
use crate::expr::sample::DEFAULT_ATTEMPTS;

/// Outcome of a zero test. `SymbolicZero` and `Nonzero` are certain;
/// `NumericZero` is probabilistic.
#[derive(Clone, Debug, PartialEq)]
pub enum ZeroVerdict {
    SymbolicZero,
    NumericZero { trials: usize, max_abs: f64 },
    Nonzero { witness: Point, value: f64 },
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        !matches!(self, ZeroVerdict::Nonzero { .. })
    }

    pub fn is_symbolic_zero(&self) -> bool {
        matches!(self, ZeroVerdict::SymbolicZero)
    }

    pub fn label(&self) -> &'static str {
        match self {
            ZeroVerdict::SymbolicZero => "SymbolicZero",
            ZeroVerdict::NumericZero { .. } => "NumericZero",
            ZeroVerdict::Nonzero { .. } => "Nonzero",
        }
    }
}

pub fn is_zero(
    e: &Expr,
    sampler: &mut dyn Sampler,
    trials: usize,
    tol: f64,
) -> Result<ZeroVerdict, SampleError> {
    is_zero_guarded(e, &BTreeSet::new(), sampler, trials, tol)
}

/// Zero test honoring extra singular guards (e.g. those of the Lagrangian a
/// residual was derived from).
///
/// Rational expressions are decided exactly by clearing denominators;
/// anything involving transcendental functions or fractional powers is
/// tested at `trials` random admissible points.
pub fn is_zero_guarded(
    e: &Expr,
    extra_guards: &BTreeSet<Guard>,
    sampler: &mut dyn Sampler,
    trials: usize,
    tol: f64,
) -> Result<ZeroVerdict, SampleError> {
    assert!(trials >= 1, "at least one trial is required");
    if e.is_zero() {
        return Ok(ZeroVerdict::SymbolicZero);
    }
    let mut guards = e.guards();
    guards.extend(extra_guards.iter().cloned());
    let mut vars: BTreeSet<Var> = e.vars();
    for g in &guards {
        vars.extend(g.expr().vars());
    }
    let vars: Vec<Var> = vars.into_iter().collect();

    if e.is_rational_function() {
        if let Some(r) = RatFunc::from_expr(e) {
            if r.is_zero() {
                return Ok(ZeroVerdict::SymbolicZero);
            }
            // provably nonzero: find a witness of large enough magnitude
            let mut best: Option<(Point, f64)> = None;
            for _ in 0..trials.max(1) * 10 {
                let p = sampler.sample_admissible(&vars, &guards, DEFAULT_ATTEMPTS)?;
                let Ok(v) = e.eval(&p) else { continue };
                let v = v.to_f64();
                if v.abs() >= tol {
                    return Ok(ZeroVerdict::Nonzero { witness: p, value: v });
                }
                if best.as_ref().is_none_or(|(_, b)| v.abs() > b.abs()) {
                    best = Some((p, v));
                }
            }
            if let Some((witness, value)) = best {
                return Ok(ZeroVerdict::Nonzero { witness, value });
            }
        }
    }

    let mut max_abs: f64 = 0.0;
    for _ in 0..trials {
        let p = sampler.sample_admissible(&vars, &guards, DEFAULT_ATTEMPTS)?;
        let v = match e.eval_f64(&p) {
            Ok(v) => v,
            Err(_) => continue,
        };
        if v.abs() >= tol || !v.is_finite() {
            return Ok(ZeroVerdict::Nonzero { witness: p, value: v });
        }
        max_abs = max_abs.max(v.abs());
    }
    Ok(ZeroVerdict::NumericZero { trials, max_abs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{RationalSampler, Value};

    #[test]
    fn symbolic_zero() {
        let x = Expr::var(Var::X);
        let mut s = RationalSampler::new(0);
        assert_eq!(is_zero(&(&x - &x), &mut s, 5, 1e-9).unwrap(), ZeroVerdict::SymbolicZero);
    }

    #[test]
    fn nonzero_has_a_witness() {
        let e = Expr::var(Var::Y(1)) * Expr::var(Var::Dy(3)) - Expr::var(Var::Y(3)) * Expr::var(Var::Dy(1));
        let mut s = RationalSampler::new(0);
        match is_zero(&e, &mut s, 5, 1e-9).unwrap() {
            ZeroVerdict::Nonzero { witness, value } => {
                assert!(value.abs() >= 1e-9);
                assert!((e.eval(&witness).unwrap().to_f64() - value).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        // the witness by inspection
        let p = Point::new()
            .with_rat(Var::Y(1), 1, 1)
            .with_rat(Var::Dy(3), 1, 1)
            .with_rat(Var::Y(3), 0, 1)
            .with_rat(Var::Dy(1), 0, 1);
        assert_eq!(e.eval(&p).unwrap(), Value::Exact(num_traits::One::one()));
    }

    #[test]
    fn transcendental_identity_is_numeric() {
        // sin^2 + cos^2 - 1 has no symbolic normal form here
        let x = Expr::var(Var::X);
        let e = Expr::powi(Expr::sin(x.clone()), 2) + Expr::powi(Expr::cos(x), 2) - Expr::one();
        let mut s = RationalSampler::new(11);
        assert!(matches!(is_zero(&e, &mut s, 50, 1e-12).unwrap(), ZeroVerdict::NumericZero { trials: 50, .. }));
    }
}
