use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use super::{Expr, Func, Node, Var};

/// A value produced by evaluation: exact whenever the computation stayed
/// inside the rationals.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(BigRational),
    Float(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => rat_to_f64(r),
            Value::Float(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Value::Exact(r) => Some(r),
            Value::Float(_) => None,
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self, Value::Exact(r) if r.is_zero())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(r) => write!(f, "{r}"),
            Value::Float(x) => write!(f, "{x:e}"),
        }
    }
}

pub(crate) fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("variable {0} is not assigned")]
    Unassigned(Var),
    #[error("singular point: {reason} in `{subexpr}`")]
    Singular { subexpr: String, reason: &'static str },
}

fn singular(e: &Expr, reason: &'static str) -> EvalError {
    EvalError::Singular { subexpr: e.to_string(), reason }
}

/// Source of variable values during evaluation.
pub trait VarLookup {
    fn value(&self, v: Var) -> Option<Value>;

    fn value_f64(&self, v: Var) -> Option<f64> {
        self.value(v).map(|x| x.to_f64())
    }
}

/// An assignment of values to variables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Point {
    values: BTreeMap<Var, Value>,
}

impl Point {
    pub fn new() -> Point {
        Point::default()
    }

    pub fn set(&mut self, v: Var, value: Value) -> &mut Self {
        self.values.insert(v, value);
        self
    }

    pub fn with(mut self, v: Var, value: Value) -> Self {
        self.values.insert(v, value);
        self
    }

    pub fn with_rat(self, v: Var, n: i64, d: i64) -> Self {
        self.with(v, Value::Exact(BigRational::new(BigInt::from(n), BigInt::from(d))))
    }

    pub fn with_f64(self, v: Var, x: f64) -> Self {
        self.with(v, Value::Float(x))
    }

    pub fn get(&self, v: Var) -> Option<&Value> {
        self.values.get(&v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Value)> {
        self.values.iter()
    }

    pub fn is_exact(&self) -> bool {
        self.values.values().all(|v| matches!(v, Value::Exact(_)))
    }

    pub fn extend(&mut self, other: &Point) {
        for (k, v) in &other.values {
            self.values.insert(*k, v.clone());
        }
    }
}

impl VarLookup for Point {
    fn value(&self, v: Var) -> Option<Value> {
        self.values.get(&v).cloned()
    }

    fn value_f64(&self, v: Var) -> Option<f64> {
        self.values.get(&v).map(Value::to_f64)
    }
}

impl<F: Fn(Var) -> Option<f64>> VarLookup for F {
    fn value(&self, v: Var) -> Option<Value> {
        self(v).map(Value::Float)
    }

    fn value_f64(&self, v: Var) -> Option<f64> {
        self(v)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str("}")
    }
}

fn exact_root(c: &BigRational, e: &BigRational) -> Option<BigRational> {
    if c.is_negative() {
        return None;
    }
    let q = e.denom().to_u32()?;
    let p = e.numer().to_i32()?;
    let n = c.numer().nth_root(q);
    let d = c.denom().nth_root(q);
    if n.pow(q) == *c.numer() && d.pow(q) == *c.denom() {
        let r = BigRational::new(n, d);
        if r.is_zero() && p < 0 {
            return None;
        }
        Some(r.pow(p))
    } else {
        None
    }
}

fn float_pow(b: f64, e: &BigRational) -> Option<f64> {
    let ef = rat_to_f64(e);
    if e.denom().is_one() {
        let k = e.numer().to_i32()?;
        return Some(b.powi(k));
    }
    if b >= 0.0 {
        Some(b.powf(ef))
    } else if e.denom().is_odd() {
        // real odd root of a negative number
        let mag = (-b).powf(ef);
        Some(if e.numer().is_odd() { -mag } else { mag })
    } else {
        None
    }
}

impl Expr {
    /// Evaluate, staying exact while possible.
    pub fn eval<L: VarLookup + ?Sized>(&self, p: &L) -> Result<Value, EvalError> {
        match self.node() {
            Node::Num(r) => Ok(Value::Exact(r.clone())),
            Node::Pi => Ok(Value::Float(std::f64::consts::PI)),
            Node::Var(v) => p.value(*v).ok_or(EvalError::Unassigned(*v)),
            Node::Add(ts) => {
                let mut exact = BigRational::zero();
                let mut float = 0.0;
                let mut is_exact = true;
                for t in ts {
                    match t.eval(p)? {
                        Value::Exact(r) => exact += r,
                        Value::Float(x) => {
                            is_exact = false;
                            float += x
                        }
                    }
                }
                Ok(if is_exact {
                    Value::Exact(exact)
                } else {
                    Value::Float(float + rat_to_f64(&exact))
                })
            }
            Node::Mul(fs) => {
                let mut exact = BigRational::one();
                let mut float = 1.0;
                let mut is_exact = true;
                for f in fs {
                    match f.eval(p)? {
                        Value::Exact(r) => exact *= r,
                        Value::Float(x) => {
                            is_exact = false;
                            float *= x
                        }
                    }
                }
                Ok(if is_exact {
                    Value::Exact(exact)
                } else {
                    Value::Float(float * rat_to_f64(&exact))
                })
            }
            Node::Pow(b, e) => {
                let vb = b.eval(p)?;
                let neg_exp = e.is_negative();
                match vb {
                    Value::Exact(c) => {
                        if c.is_zero() && neg_exp {
                            return Err(singular(self, "division by zero"));
                        }
                        if e.denom().is_one() {
                            let k = e.numer().to_i32().ok_or_else(|| singular(self, "exponent overflow"))?;
                            return Ok(Value::Exact(c.pow(k)));
                        }
                        if c.is_negative() && e.denom().is_even() {
                            return Err(singular(self, "even root of a negative number"));
                        }
                        if let Some(r) = exact_root(&c, e) {
                            return Ok(Value::Exact(r));
                        }
                        float_pow(rat_to_f64(&c), e)
                            .map(Value::Float)
                            .ok_or_else(|| singular(self, "invalid power"))
                    }
                    Value::Float(x) => {
                        if x == 0.0 && neg_exp {
                            return Err(singular(self, "division by zero"));
                        }
                        if x < 0.0 && e.denom().is_even() {
                            return Err(singular(self, "even root of a negative number"));
                        }
                        float_pow(x, e).map(Value::Float).ok_or_else(|| singular(self, "invalid power"))
                    }
                }
            }
            Node::Func(f, a) => {
                let va = a.eval(p)?;
                if let Value::Exact(c) = &va {
                    if c.is_zero() {
                        match f {
                            Func::Exp | Func::Cos => return Ok(Value::Exact(BigRational::one())),
                            Func::Erf | Func::Sin => return Ok(Value::Exact(BigRational::zero())),
                            Func::Ln => {}
                        }
                    }
                    if *f == Func::Ln && c.is_one() {
                        return Ok(Value::Exact(BigRational::zero()));
                    }
                }
                apply_func(self, *f, va.to_f64()).map(Value::Float)
            }
        }
    }

    /// Floating-point evaluation.
    pub fn eval_f64<L: VarLookup + ?Sized>(&self, p: &L) -> Result<f64, EvalError> {
        let out = match self.node() {
            Node::Num(r) => rat_to_f64(r),
            Node::Pi => std::f64::consts::PI,
            Node::Var(v) => p.value_f64(*v).ok_or(EvalError::Unassigned(*v))?,
            Node::Add(ts) => {
                let mut s = 0.0;
                for t in ts {
                    s += t.eval_f64(p)?;
                }
                s
            }
            Node::Mul(fs) => {
                let mut s = 1.0;
                for f in fs {
                    s *= f.eval_f64(p)?;
                }
                s
            }
            Node::Pow(b, e) => {
                let x = b.eval_f64(p)?;
                if x == 0.0 && e.is_negative() {
                    return Err(singular(self, "division by zero"));
                }
                if x < 0.0 && e.denom().is_even() {
                    return Err(singular(self, "even root of a negative number"));
                }
                float_pow(x, e).ok_or_else(|| singular(self, "invalid power"))?
            }
            Node::Func(f, a) => apply_func(self, *f, a.eval_f64(p)?)?,
        };
        if out.is_nan() {
            return Err(singular(self, "not a number"));
        }
        Ok(out)
    }
}

fn apply_func(e: &Expr, f: Func, x: f64) -> Result<f64, EvalError> {
    Ok(match f {
        Func::Exp => x.exp(),
        Func::Ln => {
            if x <= 0.0 {
                return Err(singular(e, "logarithm of a non-positive number"));
            }
            x.ln()
        }
        Func::Erf => libm::erf(x),
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_zero_folds_exactly() {
        let x = Expr::var(Var::X);
        let e = Expr::erf(Expr::zero()) * &x + Expr::int(3);
        let p = Point::new().with_rat(Var::X, 5, 1);
        assert_eq!(e.eval(&p).unwrap(), Value::Exact(BigRational::from_integer(3.into())));
    }

    #[test]
    fn rational_sum_of_squares() {
        let e = Expr::powi(Expr::var(Var::Y(1)), 2) + Expr::powi(Expr::var(Var::Y(2)), 2);
        let p = Point::new().with_rat(Var::Y(1), 1, 2).with_rat(Var::Y(2), 1, 3);
        assert_eq!(
            e.eval(&p).unwrap(),
            Value::Exact(BigRational::new(13.into(), 36.into()))
        );
    }

    #[test]
    fn zero_denominator_is_singular() {
        let e = Expr::var(Var::Dy(1)) / (Expr::var(Var::Dy(2)) - Expr::var(Var::Y(1)));
        let p = Point::new()
            .with_rat(Var::Dy(1), 1, 1)
            .with_rat(Var::Dy(2), 1, 1)
            .with_rat(Var::Y(1), 1, 1);
        match e.eval(&p) {
            Err(EvalError::Singular { subexpr, .. }) => assert!(subexpr.contains("dy2")),
            other => panic!("expected singular point, got {other:?}"),
        }
        assert!(e.eval_f64(&p).is_err());
    }

    #[test]
    fn perfect_roots_stay_exact() {
        let e = Expr::pow(Expr::var(Var::Dy(2)), BigRational::new(3.into(), 2.into()));
        let p = Point::new().with_rat(Var::Dy(2), 4, 9);
        assert_eq!(e.eval(&p).unwrap(), Value::Exact(BigRational::new(8.into(), 27.into())));
        let p = Point::new().with_rat(Var::Dy(2), 2, 1);
        assert!(matches!(e.eval(&p).unwrap(), Value::Float(_)));
        let p = Point::new().with_rat(Var::Dy(2), -1, 1);
        assert!(e.eval(&p).is_err());
    }

    #[test]
    fn erf_matches_reference_values() {
        // reference values of erf to 16 digits
        let cases = [(0.5, 0.5204998778130465), (1.0, 0.8427007929497149), (2.0, 0.9953222650189527)];
        let x = Expr::var(Var::X);
        let e = Expr::erf(x);
        for (arg, expected) in cases {
            let v = e.eval_f64(&Point::new().with_f64(Var::X, arg)).unwrap();
            assert!((v - expected).abs() < 1e-15, "erf({arg}) = {v}");
        }
    }
}
