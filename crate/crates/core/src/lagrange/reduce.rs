//! Reduction of a second-order Lagrangian affine in accelerations to a
//! first-order one by discarding a total derivative.

use std::collections::BTreeMap;

use num_traits::One;

use super::SecondOrderLagrangian;
use crate::error::LagrangeError;
use crate::expr::ratfunc::RatFunc;
use crate::expr::{is_zero, Expr, Node, RationalSampler, Var, ZeroVerdict};

#[derive(Clone, Debug, PartialEq)]
pub struct Reduction {
    /// `lambda_s = dL2/da^s`, `s = 0..n`.
    pub lambda: Vec<Expr>,
    /// `L2` at zero acceleration.
    pub f: Expr,
    /// Potential with `dLambda/du^s = lambda_s`.
    pub potential: Expr,
    /// `F - sum_s u^s dLambda/dx^s`.
    pub reduced: Expr,
    /// `L2 - reduced - dLambda/dt`.
    pub certificate: Expr,
    pub certificate_verdict: ZeroVerdict,
}

fn vanishes(e: &Expr) -> Result<ZeroVerdict, LagrangeError> {
    if e.is_zero() {
        return Ok(ZeroVerdict::SymbolicZero);
    }
    if let Some(r) = RatFunc::from_expr(e) {
        if r.is_zero() {
            return Ok(ZeroVerdict::SymbolicZero);
        }
    }
    let mut s = RationalSampler::new(0);
    Ok(is_zero(e, &mut s, 20, 1e-9)?)
}

fn is_velocity(v: &Var) -> bool {
    matches!(v, Var::U(_))
}

/// Split `e` into terms `c(x) * u-monomial`, returning each term with its
/// total velocity degree; `None` if `e` is not polynomial in velocities.
fn velocity_terms(e: &Expr) -> Option<Vec<(Expr, u32)>> {
    let mut out = Vec::new();
    for t in e.terms() {
        let factors = match t.node() {
            Node::Mul(fs) => fs.clone(),
            _ => vec![t.clone()],
        };
        let mut deg = 0u32;
        for f in &factors {
            if !f.vars().iter().any(is_velocity) {
                continue;
            }
            match f.node() {
                Node::Var(Var::U(_)) => deg += 1,
                Node::Pow(b, k) if matches!(b.node(), Node::Var(Var::U(_))) => {
                    if !k.denom().is_one() || k.numer().sign() != num_bigint::Sign::Plus {
                        return None;
                    }
                    deg += u32::try_from(k.numer()).ok()?;
                }
                _ => return None,
            }
        }
        out.push((t, deg));
    }
    Some(out)
}

/// Checks affinity in accelerations and closedness of `lambda`, integrates
/// the potential along rays in velocity space and subtracts its total
/// derivative.
pub fn reduce_second_order(l2: &SecondOrderLagrangian) -> Result<Reduction, LagrangeError> {
    let n = l2.n();
    let e = l2.expr();
    let acc: Vec<Var> = (0..=n).map(|s| Var::Acc(s as u16)).collect();
    let vel: Vec<Var> = (0..=n).map(|s| Var::U(s as u16)).collect();
    let pos: Vec<Var> = (0..=n).map(|s| Var::Xh(s as u16)).collect();

    let lambda: Vec<Expr> = acc.iter().map(|a| e.diff(*a)).collect();
    for s in 0..=n {
        for r in s..=n {
            if !vanishes(&lambda[s].diff(acc[r]))?.is_zero() {
                return Err(LagrangeError::NotAffine { s, r });
            }
        }
    }
    let zero_acc: BTreeMap<Var, Expr> = acc.iter().map(|a| (*a, Expr::zero())).collect();
    let f = e.substitute(&zero_acc);

    for s in 0..=n {
        for i in s + 1..=n {
            let d = lambda[s].diff(vel[i]) - lambda[i].diff(vel[s]);
            if !vanishes(&d)?.is_zero() {
                return Err(LagrangeError::NotClosed { s, i });
            }
        }
    }

    // Lambda = int_0^1 sum_s lambda_s(x, t u) u^s dt, monomial by monomial
    let mut pot_terms = Vec::new();
    for (s, lam) in lambda.iter().enumerate() {
        let terms = velocity_terms(lam).ok_or(LagrangeError::NonPolynomialLambda(s))?;
        for (t, deg) in terms {
            pot_terms.push(Expr::rational(1, deg as i64 + 1) * t * Expr::var(vel[s]));
        }
    }
    let potential = Expr::add(pot_terms);

    let transport = Expr::add(pos.iter().zip(&vel).map(|(x, u)| Expr::var(*u) * potential.diff(*x)));
    let reduced = &f - &transport;
    let along = Expr::add(vel.iter().zip(&acc).map(|(u, a)| Expr::var(*a) * potential.diff(*u)));
    let certificate = e - &reduced - (transport + along);
    let certificate_verdict = vanishes(&certificate)?;
    if !certificate_verdict.is_zero() {
        return Err(LagrangeError::Certificate(certificate.to_string()));
    }
    Ok(Reduction { lambda, f, potential, reduced, certificate, certificate_verdict })
}
