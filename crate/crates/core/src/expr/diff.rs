use num_rational::BigRational;
use num_traits::One;

use super::{Expr, Func, Node, Var, VariableSpace};
use crate::error::ExprError;

impl Expr {
    /// Partial derivative with respect to `v`, in canonical form.
    pub fn diff(&self, v: Var) -> Expr {
        if !self.may_contain(v) {
            return Expr::zero();
        }
        match self.node() {
            Node::Num(_) | Node::Pi => Expr::zero(),
            Node::Var(w) => {
                if *w == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(ts) => Expr::add(ts.iter().map(|t| t.diff(v))),
            Node::Mul(fs) => {
                let mut terms = Vec::new();
                for (i, f) in fs.iter().enumerate() {
                    let df = f.diff(v);
                    if df.is_zero() {
                        continue;
                    }
                    let mut factors = Vec::with_capacity(fs.len());
                    factors.extend(fs[..i].iter().cloned());
                    factors.push(df);
                    factors.extend(fs[i + 1..].iter().cloned());
                    terms.push(Expr::mul(factors));
                }
                Expr::add(terms)
            }
            Node::Pow(b, e) => {
                let db = b.diff(v);
                if db.is_zero() {
                    return Expr::zero();
                }
                Expr::mul([
                    Expr::num(e.clone()),
                    Expr::pow(b.clone(), e - BigRational::one()),
                    db,
                ])
            }
            Node::Func(f, a) => {
                let da = a.diff(v);
                if da.is_zero() {
                    return Expr::zero();
                }
                let outer = match f {
                    Func::Exp => self.clone(),
                    Func::Ln => a.clone().recip(),
                    // erf'(z) = 2/sqrt(pi) * exp(-z^2)
                    Func::Erf => Expr::mul([
                        Expr::int(2),
                        Expr::pow(Expr::pi(), BigRational::new((-1).into(), 2.into())),
                        Expr::exp(-Expr::powi(a.clone(), 2)),
                    ]),
                    Func::Sin => Expr::cos(a.clone()),
                    Func::Cos => -Expr::sin(a.clone()),
                };
                Expr::mul([outer, da])
            }
        }
    }

    /// `diff` with a membership check against the declared space.
    pub fn partial(&self, v: Var, space: VariableSpace) -> Result<Expr, ExprError> {
        if !space.contains(v) {
            return Err(ExprError::UnknownVariable(v.name()));
        }
        Ok(self.diff(v))
    }
}
