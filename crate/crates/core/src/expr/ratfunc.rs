//! Multivariate polynomials and rational functions with exact rational
//! coefficients. Used to decide identities between rational expressions by
//! clearing denominators.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Expr, Node, Var};

/// Sorted list of `(variable, exponent)` pairs with positive exponents.
pub type Monomial = Vec<(Var, u32)>;

fn mono_mul(a: &Monomial, b: &Monomial) -> Monomial {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Poly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(c: BigRational) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Vec::new(), c);
        }
        p
    }

    pub fn one() -> Poly {
        Poly::constant(BigRational::one())
    }

    pub fn var(v: Var) -> Poly {
        let mut p = Poly::zero();
        p.terms.insert(vec![(v, 1)], BigRational::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            let e = out.terms.entry(m.clone()).or_insert_with(BigRational::zero);
            *e += c;
            if e.is_zero() {
                out.terms.remove(m);
            }
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect() }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out: BTreeMap<Monomial, BigRational> = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let e = out.entry(mono_mul(m1, m2)).or_insert_with(BigRational::zero);
                *e += c1 * c2;
            }
        }
        out.retain(|_, c| !c.is_zero());
        Poly { terms: out }
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// `(content, primitive)` with integer coprime coefficients and a
    /// positive leading coefficient in the primitive part.
    pub fn primitive(&self) -> (BigRational, Poly) {
        if self.is_zero() {
            return (BigRational::one(), Poly::zero());
        }
        let mut g = BigInt::zero();
        let mut l = BigInt::one();
        for c in self.terms.values() {
            g = g.gcd(c.numer());
            l = l.lcm(c.denom());
        }
        let mut content = BigRational::new(g, l);
        if self.terms.values().next().unwrap().is_negative() {
            content = -content;
        }
        let inv = content.recip();
        (content, self.scale(&inv))
    }

    pub fn to_expr(&self) -> Expr {
        Expr::add(self.terms.iter().map(|(m, c)| {
            let mut fs = vec![Expr::num(c.clone())];
            fs.extend(m.iter().map(|(v, k)| Expr::powi(Expr::var(*v), *k as i64)));
            Expr::mul(fs)
        }))
    }

    /// Convert a canonical polynomial expression.
    pub fn from_expr(e: &Expr) -> Option<Poly> {
        let r = RatFunc::from_expr(e)?;
        r.den.is_empty().then_some(r.num)
    }
}

/// `num / prod(den_i ^ m_i)` with primitive, pairwise distinct denominator
/// factors. Factors are never cancelled against the numerator, so the value
/// vanishes identically iff `num` is the zero polynomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatFunc {
    pub num: Poly,
    pub den: BTreeMap<Poly, u32>,
}

impl RatFunc {
    pub fn poly(p: Poly) -> RatFunc {
        RatFunc { num: p, den: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn den_product(den: &BTreeMap<Poly, u32>) -> Poly {
        den.iter().fold(Poly::one(), |acc, (p, m)| acc.mul(&p.pow(*m)))
    }

    pub fn add(&self, other: &RatFunc) -> RatFunc {
        if self.den == other.den {
            return RatFunc { num: self.num.add(&other.num), den: self.den.clone() };
        }
        let mut lcm = self.den.clone();
        for (p, m) in &other.den {
            let e = lcm.entry(p.clone()).or_insert(0);
            *e = (*e).max(*m);
        }
        let lift = |r: &RatFunc| {
            let mut missing = BTreeMap::new();
            for (p, m) in &lcm {
                let have = r.den.get(p).copied().unwrap_or(0);
                if *m > have {
                    missing.insert(p.clone(), m - have);
                }
            }
            r.num.mul(&Self::den_product(&missing))
        };
        let num = lift(self).add(&lift(other));
        RatFunc { num, den: lcm }
    }

    pub fn mul(&self, other: &RatFunc) -> RatFunc {
        let mut den = self.den.clone();
        for (p, m) in &other.den {
            *den.entry(p.clone()).or_insert(0) += m;
        }
        RatFunc { num: self.num.mul(&other.num), den }
    }

    /// Multiplicative inverse; `None` for the zero function.
    pub fn inv(&self) -> Option<RatFunc> {
        if self.num.is_zero() {
            return None;
        }
        let (c, prim) = self.num.primitive();
        let num = Self::den_product(&self.den).scale(&c.recip());
        let mut den = BTreeMap::new();
        if prim.as_constant().is_none() {
            den.insert(prim, 1);
        }
        Some(RatFunc { num, den })
    }

    pub fn powi(&self, k: i64) -> Option<RatFunc> {
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let k = k.unsigned_abs() as u32;
        let num = base.num.pow(k);
        let den = base.den.into_iter().map(|(p, m)| (p, m * k)).collect();
        Some(RatFunc { num, den })
    }

    /// Convert a rational expression; `None` if it contains anything else
    /// or divides by the zero polynomial.
    pub fn from_expr(e: &Expr) -> Option<RatFunc> {
        match e.node() {
            Node::Num(c) => Some(RatFunc::poly(Poly::constant(c.clone()))),
            Node::Var(v) => Some(RatFunc::poly(Poly::var(*v))),
            Node::Pi | Node::Func(..) => None,
            Node::Pow(b, k) => {
                if !k.denom().is_one() {
                    return None;
                }
                let k = k.numer().to_i64()?;
                let rb = RatFunc::from_expr(b)?;
                if k < 0 && rb.num.as_constant().is_none() && rb.den.is_empty() {
                    // keep a sum base as a single denominator factor
                    let (c, prim) = rb.num.primitive();
                    let m = k.unsigned_abs() as u32;
                    let num = Poly::constant(c.pow(k as i32));
                    return Some(RatFunc { num, den: BTreeMap::from([(prim, m)]) });
                }
                rb.powi(k)
            }
            Node::Mul(fs) => {
                let mut acc = RatFunc::poly(Poly::one());
                for f in fs {
                    acc = acc.mul(&RatFunc::from_expr(f)?);
                }
                Some(acc)
            }
            Node::Add(ts) => {
                let mut acc = RatFunc::poly(Poly::zero());
                for t in ts {
                    acc = acc.add(&RatFunc::from_expr(t)?);
                }
                Some(acc)
            }
        }
    }

    pub fn to_expr(&self) -> Expr {
        let mut fs = vec![self.num.to_expr()];
        for (p, m) in &self.den {
            fs.push(Expr::powi(p.to_expr(), -(*m as i64)));
        }
        Expr::mul(fs)
    }
}

/// Decide `a == b` for rational expressions by clearing denominators.
/// Returns `None` if either side is not a rational function.
pub fn rational_eq(a: &Expr, b: &Expr) -> Option<bool> {
    let d = a - b;
    if d.is_zero() {
        return Some(true);
    }
    RatFunc::from_expr(&d).map(|r| r.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: Var) -> Expr {
        Expr::var(x)
    }

    #[test]
    fn fraction_identity_is_detected() {
        // 1/(a-b) - 1/(a+b) = 2b / (a^2 - b^2)
        let a = v(Var::Y(1));
        let b = v(Var::Y(2));
        let lhs = (&a - &b).recip() - (&a + &b).recip();
        let rhs = Expr::int(2) * &b / (Expr::powi(a.clone(), 2) - Expr::powi(b.clone(), 2));
        assert!(!(&lhs - &rhs).is_zero(), "canonical forms differ");
        assert_eq!(rational_eq(&lhs, &rhs), Some(true));
        assert_eq!(rational_eq(&lhs, &(&rhs + Expr::one())), Some(false));
    }

    #[test]
    fn transcendental_is_not_rational() {
        assert_eq!(rational_eq(&Expr::exp(v(Var::X)), &Expr::zero()), None);
    }

    #[test]
    fn poly_round_trip() {
        let e = Expr::powi(v(Var::Y(1)) + Expr::rational(1, 2) * v(Var::Dy(2)), 3);
        let p = Poly::from_expr(&e).unwrap();
        assert_eq!(p.to_expr(), e);
        assert_eq!(p.len(), 4);
    }
}
