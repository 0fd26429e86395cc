//! Immutable symbolic expressions over a fixed set of jet variables.
//!
//! Every constructor returns a canonical form: sums and products are
//! flattened, numeric constants are folded, like terms and like factors are
//! collected, products are distributed over sums raised to positive integer
//! powers, and children are kept in a fixed total order. Two canonical
//! expressions are equal iff they are structurally equal.

mod diff;
mod eval;
mod print;
pub mod ratfunc;
pub mod sample;
mod zero;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use eval::{EvalError, Point, Value, VarLookup};
pub use sample::{Interval, RationalSampler, SampleError, Sampler};
pub use zero::{is_zero, is_zero_guarded, ZeroVerdict};

/// A jet variable.
///
/// Indices follow the usual conventions: `Y`, `Dy`, `Ddy` are 1-based fiber
/// coordinates of the inhomogeneous space, `Xh`, `U`, `Acc` are 0-based
/// coordinates of the homogeneous space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    /// Independent variable `x`.
    X,
    /// `y^i`
    Y(u16),
    /// `ẏ^i`
    Dy(u16),
    /// `ÿ^i`
    Ddy(u16),
    /// `x^i`
    Xh(u16),
    /// Velocity `x_t^i`.
    U(u16),
    /// Acceleration `x_tt^i`.
    Acc(u16),
}

impl Var {
    pub fn name(&self) -> String {
        match self {
            Var::X => "x".to_string(),
            Var::Y(i) => format!("y{i}"),
            Var::Dy(i) => format!("dy{i}"),
            Var::Ddy(i) => format!("ddy{i}"),
            Var::Xh(i) => format!("x{i}"),
            Var::U(i) => format!("u{i}"),
            Var::Acc(i) => format!("a{i}"),
        }
    }

    fn mask_bit(&self) -> u128 {
        let (kind, idx) = match *self {
            Var::X => (0, 0),
            Var::Y(i) => (1, i),
            Var::Dy(i) => (2, i),
            Var::Ddy(i) => (3, i),
            Var::Xh(i) => (4, i),
            Var::U(i) => (5, i),
            Var::Acc(i) => (6, i),
        };
        1u128 << (kind * 18 + (idx as u32).min(17))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// The two coordinate systems the toolkit works in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VariableSpace {
    /// `x, y^1..y^n, ẏ^1..ẏ^n, ÿ^1..ÿ^n`
    Inhomogeneous { n: usize },
    /// `x^0..x^n, x_t^0..x_t^n, x_tt^0..x_tt^n`
    Homogeneous { n: usize },
}

impl VariableSpace {
    pub fn n(&self) -> usize {
        match *self {
            VariableSpace::Inhomogeneous { n } | VariableSpace::Homogeneous { n } => n,
        }
    }

    pub fn contains(&self, v: Var) -> bool {
        match (*self, v) {
            (VariableSpace::Inhomogeneous { .. }, Var::X) => true,
            (VariableSpace::Inhomogeneous { n }, Var::Y(i) | Var::Dy(i) | Var::Ddy(i)) => {
                i >= 1 && (i as usize) <= n
            }
            (VariableSpace::Homogeneous { n }, Var::Xh(i) | Var::U(i) | Var::Acc(i)) => {
                (i as usize) <= n
            }
            _ => false,
        }
    }

    /// Every variable of the space, in canonical order.
    pub fn vars(&self) -> Vec<Var> {
        match *self {
            VariableSpace::Inhomogeneous { n } => {
                let n = n as u16;
                let mut out = vec![Var::X];
                out.extend((1..=n).map(Var::Y));
                out.extend((1..=n).map(Var::Dy));
                out.extend((1..=n).map(Var::Ddy));
                out
            }
            VariableSpace::Homogeneous { n } => {
                let n = n as u16;
                let mut out: Vec<Var> = (0..=n).map(Var::Xh).collect();
                out.extend((0..=n).map(Var::U));
                out.extend((0..=n).map(Var::Acc));
                out
            }
        }
    }

    /// Look up an identifier such as `dy2` or `u0`.
    pub fn lookup(&self, ident: &str) -> Option<Var> {
        let var = parse_var_name(ident)?;
        self.contains(var).then_some(var)
    }
}

fn parse_var_name(ident: &str) -> Option<Var> {
    if ident == "x" {
        return Some(Var::X);
    }
    let split = ident.find(|c: char| c.is_ascii_digit())?;
    let (prefix, digits) = ident.split_at(split);
    if digits.len() > 1 && digits.starts_with('0') {
        return None;
    }
    let idx: u16 = digits.parse().ok()?;
    Some(match prefix {
        "y" => Var::Y(idx),
        "dy" => Var::Dy(idx),
        "ddy" => Var::Ddy(idx),
        "x" => Var::Xh(idx),
        "u" => Var::U(idx),
        "a" => Var::Acc(idx),
        _ => return None,
    })
}

/// Elementary functions admitted in expressions. `sqrt` is represented as a
/// power with exponent 1/2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Exp,
    Ln,
    Erf,
    Sin,
    Cos,
}

impl Func {
    pub fn name(&self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Erf => "erf",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }
}

/// Expression node. Variant order is part of the canonical ordering.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Num(BigRational),
    Pi,
    Var(Var),
    Pow(Expr, BigRational),
    Func(Func, Expr),
    Mul(Vec<Expr>),
    Add(Vec<Expr>),
}

#[derive(Debug)]
struct Inner {
    node: Node,
    mask: u128,
}

/// A canonical symbolic expression. Cheap to clone; safe to share between
/// threads.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.node == other.0.node
    }
}

impl Eq for Expr {}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            Ordering::Equal
        } else {
            self.0.node.cmp(&other.0.node)
        }
    }
}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.node.hash(state)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn is_integer(r: &BigRational) -> bool {
    r.denom().is_one()
}

impl Expr {
    fn raw(node: Node) -> Expr {
        let mask = match &node {
            Node::Num(_) | Node::Pi => 0,
            Node::Var(v) => v.mask_bit(),
            Node::Pow(b, _) | Node::Func(_, b) => b.0.mask,
            Node::Mul(xs) | Node::Add(xs) => xs.iter().fold(0, |m, e| m | e.0.mask),
        };
        Expr(Arc::new(Inner { node, mask }))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub fn num(r: BigRational) -> Expr {
        Expr::raw(Node::Num(r))
    }

    pub fn int(i: i64) -> Expr {
        Expr::num(rat(i))
    }

    pub fn rational(n: i64, d: i64) -> Expr {
        Expr::num(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn pi() -> Expr {
        Expr::raw(Node::Pi)
    }

    pub fn var(v: Var) -> Expr {
        Expr::raw(Node::Var(v))
    }

    pub fn as_num(&self) -> Option<&BigRational> {
        match self.node() {
            Node::Num(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num().is_some_and(|r| r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_num().is_some_and(|r| r.is_one())
    }

    /// True if `v` may occur in the expression (exact for indices below 18).
    pub fn may_contain(&self, v: Var) -> bool {
        self.0.mask & v.mask_bit() != 0
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.may_contain(v) && self.vars().contains(&v)
    }

    /// Free variables in canonical order.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self.node() {
            Node::Num(_) | Node::Pi => {}
            Node::Var(v) => {
                out.insert(*v);
            }
            Node::Pow(b, _) | Node::Func(_, b) => b.collect_vars(out),
            Node::Mul(xs) | Node::Add(xs) => xs.iter().for_each(|x| x.collect_vars(out)),
        }
    }

    /// Check that every variable lives in `space`.
    pub fn check_space(&self, space: VariableSpace) -> Result<(), Var> {
        match self.vars().into_iter().find(|v| !space.contains(*v)) {
            Some(v) => Err(v),
            None => Ok(()),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Num(_) | Node::Pi | Node::Var(_) => 1,
            Node::Pow(b, _) | Node::Func(_, b) => 1 + b.size(),
            Node::Mul(xs) | Node::Add(xs) => 1 + xs.iter().map(Expr::size).sum::<usize>(),
        }
    }

    /// True when the expression is built from rationals, variables, sums,
    /// products and integer powers only.
    pub fn is_rational_function(&self) -> bool {
        match self.node() {
            Node::Num(_) | Node::Var(_) => true,
            Node::Pi | Node::Func(..) => false,
            Node::Pow(b, e) => is_integer(e) && b.is_rational_function(),
            Node::Mul(xs) | Node::Add(xs) => xs.iter().all(Expr::is_rational_function),
        }
    }

    /// True for polynomials with rational coefficients.
    pub fn is_polynomial(&self) -> bool {
        match self.node() {
            Node::Num(_) | Node::Var(_) => true,
            Node::Pi | Node::Func(..) => false,
            Node::Pow(b, e) => is_integer(e) && e.is_positive() && b.is_polynomial(),
            Node::Mul(xs) | Node::Add(xs) => xs.iter().all(Expr::is_polynomial),
        }
    }

    /// Canonical sum.
    pub fn add<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut constant = BigRational::zero();
        let mut collected: BTreeMap<Expr, BigRational> = BTreeMap::new();
        for t in terms {
            absorb_term(&t, &mut constant, &mut collected);
        }
        let mut out = Vec::with_capacity(collected.len() + 1);
        if !constant.is_zero() {
            out.push(Expr::num(constant));
        }
        for (key, c) in collected {
            if !c.is_zero() {
                out.push(scale_key(key, c));
            }
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::raw(Node::Add(out)),
        }
    }

    /// Canonical product.
    pub fn mul<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        let mut acc = MulAcc::default();
        for f in factors {
            if !acc.absorb(&f) {
                return Expr::zero();
            }
        }
        acc.finish()
    }

    /// Canonical power with a rational exponent.
    pub fn pow(base: Expr, e: BigRational) -> Expr {
        if e.is_zero() {
            return Expr::one();
        }
        if e.is_one() {
            return base;
        }
        match base.node() {
            Node::Num(c) => num_pow(c, &e).unwrap_or_else(|| Expr::raw(Node::Pow(base.clone(), e))),
            Node::Pow(b2, e2) => {
                if is_integer(&e) || !is_integer(e2) {
                    Expr::pow(b2.clone(), e2 * &e)
                } else {
                    Expr::raw(Node::Pow(base.clone(), e))
                }
            }
            Node::Mul(fs) if is_integer(&e) => {
                Expr::mul(fs.iter().map(|f| Expr::pow(f.clone(), e.clone())))
            }
            Node::Add(_) if is_integer(&e) => {
                let (c, prim) = primitive_sum(&base);
                let ck = num_pow(&c, &e).expect("integer power of nonzero rational");
                if e.is_positive() {
                    let k = e.to_integer().to_usize().expect("exponent fits in usize");
                    Expr::mul([ck, expand_power(&prim, k)])
                } else {
                    Expr::mul([ck, Expr::raw(Node::Pow(prim, e))])
                }
            }
            Node::Func(Func::Exp, a) => Expr::exp(Expr::mul([Expr::num(e), a.clone()])),
            _ => Expr::raw(Node::Pow(base.clone(), e)),
        }
    }

    pub fn powi(base: Expr, k: i64) -> Expr {
        Expr::pow(base, rat(k))
    }

    pub fn recip(self) -> Expr {
        Expr::powi(self, -1)
    }

    pub fn sqrt(a: Expr) -> Expr {
        Expr::pow(a, BigRational::new(1.into(), 2.into()))
    }

    pub fn func(f: Func, a: Expr) -> Expr {
        if let Some(c) = a.as_num() {
            if c.is_zero() {
                match f {
                    Func::Exp | Func::Cos => return Expr::one(),
                    Func::Erf | Func::Sin => return Expr::zero(),
                    Func::Ln => {}
                }
            } else if c.is_one() && f == Func::Ln {
                return Expr::zero();
            }
        }
        Expr::raw(Node::Func(f, a))
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::func(Func::Exp, a)
    }

    pub fn ln(a: Expr) -> Expr {
        Expr::func(Func::Ln, a)
    }

    pub fn erf(a: Expr) -> Expr {
        Expr::func(Func::Erf, a)
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::func(Func::Sin, a)
    }

    pub fn cos(a: Expr) -> Expr {
        Expr::func(Func::Cos, a)
    }

    /// Rebuild bottom-up through the canonical constructors. On canonical
    /// input this is the identity.
    pub fn simplify(&self) -> Expr {
        self.map_children(Expr::simplify)
    }

    pub(crate) fn map_children(&self, f: impl Fn(&Expr) -> Expr) -> Expr {
        match self.node() {
            Node::Num(_) | Node::Pi | Node::Var(_) => self.clone(),
            Node::Pow(b, e) => Expr::pow(f(b), e.clone()),
            Node::Func(g, a) => Expr::func(*g, f(a)),
            Node::Mul(xs) => Expr::mul(xs.iter().map(&f)),
            Node::Add(xs) => Expr::add(xs.iter().map(&f)),
        }
    }

    /// Simultaneous substitution of variables.
    pub fn substitute(&self, map: &BTreeMap<Var, Expr>) -> Expr {
        let mask = map.keys().fold(0u128, |m, v| m | v.mask_bit());
        self.subst_inner(map, mask)
    }

    fn subst_inner(&self, map: &BTreeMap<Var, Expr>, mask: u128) -> Expr {
        if self.0.mask & mask == 0 {
            return self.clone();
        }
        match self.node() {
            Node::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            _ => self.map_children(|c| c.subst_inner(map, mask)),
        }
    }

    pub fn subs(&self, v: Var, by: Expr) -> Expr {
        self.substitute(&BTreeMap::from([(v, by)]))
    }

    /// Split into numeric coefficient and the remaining monomial key.
    pub fn split_coeff(&self) -> (BigRational, Option<Expr>) {
        match self.node() {
            Node::Num(c) => (c.clone(), None),
            Node::Mul(fs) => match fs[0].node() {
                Node::Num(c) => {
                    let rest = if fs.len() == 2 {
                        fs[1].clone()
                    } else {
                        Expr::raw(Node::Mul(fs[1..].to_vec()))
                    };
                    (c.clone(), Some(rest))
                }
                _ => (BigRational::one(), Some(self.clone())),
            },
            _ => (BigRational::one(), Some(self.clone())),
        }
    }

    /// Summands of a canonical sum (the expression itself otherwise).
    pub fn terms(&self) -> Vec<Expr> {
        match self.node() {
            Node::Add(ts) => ts.clone(),
            _ if self.is_zero() => Vec::new(),
            _ => vec![self.clone()],
        }
    }

    /// Singular-locus guards: denominators must not vanish, radicands and
    /// logarithm arguments must be positive.
    pub fn guards(&self) -> BTreeSet<Guard> {
        let mut out = BTreeSet::new();
        self.collect_guards(&mut out);
        out
    }

    fn collect_guards(&self, out: &mut BTreeSet<Guard>) {
        match self.node() {
            Node::Num(_) | Node::Pi | Node::Var(_) => {}
            Node::Pow(b, e) => {
                b.collect_guards(out);
                if b.as_num().is_some() {
                    return;
                }
                if e.denom().is_even() {
                    out.insert(Guard::Positive(b.clone()));
                } else if e.is_negative() {
                    out.insert(Guard::NonZero(b.clone()));
                }
            }
            Node::Func(f, a) => {
                a.collect_guards(out);
                if *f == Func::Ln {
                    out.insert(Guard::Positive(a.clone()));
                }
            }
            Node::Mul(xs) | Node::Add(xs) => xs.iter().for_each(|x| x.collect_guards(out)),
        }
    }
}

/// A condition a sample point must satisfy for an expression to be defined.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Guard {
    NonZero(Expr),
    Positive(Expr),
}

impl Guard {
    pub fn expr(&self) -> &Expr {
        match self {
            Guard::NonZero(e) | Guard::Positive(e) => e,
        }
    }

    /// Whether the guard holds at `p`; `margin` keeps float values away
    /// from the boundary.
    pub fn holds<L: VarLookup + ?Sized>(&self, p: &L, margin: f64) -> bool {
        match self.expr().eval_f64(p) {
            Ok(v) if v.is_finite() => match self {
                Guard::NonZero(_) => v.abs() > margin,
                Guard::Positive(_) => v > margin,
            },
            _ => false,
        }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::NonZero(e) => write!(f, "{e} != 0"),
            Guard::Positive(e) => write!(f, "{e} > 0"),
        }
    }
}

fn absorb_term(t: &Expr, constant: &mut BigRational, collected: &mut BTreeMap<Expr, BigRational>) {
    match t.node() {
        Node::Add(ts) => ts.iter().for_each(|x| absorb_term(x, constant, collected)),
        Node::Num(c) => *constant += c,
        _ => {
            let (c, key) = t.split_coeff();
            let key = key.expect("non-numeric term has a key");
            *collected.entry(key).or_insert_with(BigRational::zero) += c;
        }
    }
}

/// `c * key` where `key` is a canonical coefficient-free monomial.
fn scale_key(key: Expr, c: BigRational) -> Expr {
    if c.is_one() {
        return key;
    }
    let mut fs = vec![Expr::num(c)];
    match key.node() {
        Node::Mul(ks) => fs.extend(ks.iter().cloned()),
        _ => fs.push(key),
    }
    Expr::raw(Node::Mul(fs))
}

/// Split a canonical sum into `content * primitive`, where the primitive
/// part has coprime integer coefficients and a positive leading term.
fn primitive_sum(sum: &Expr) -> (BigRational, Expr) {
    let terms = sum.terms();
    let coeffs: Vec<BigRational> = terms.iter().map(|t| t.split_coeff().0).collect();
    let mut g_num = BigInt::zero();
    let mut l_den = BigInt::one();
    for c in &coeffs {
        g_num = g_num.gcd(c.numer());
        l_den = l_den.lcm(c.denom());
    }
    let mut content = BigRational::new(g_num, l_den);
    if coeffs[0].is_negative() {
        content = -content;
    }
    if content.is_one() {
        return (content, sum.clone());
    }
    let scaled: Vec<Expr> = terms
        .iter()
        .map(|t| {
            let (c, key) = t.split_coeff();
            let c = c / &content;
            match key {
                None => Expr::num(c),
                Some(k) => scale_key(k, c),
            }
        })
        .collect();
    (content, Expr::raw(Node::Add(scaled)))
}

/// Exact power of a rational constant when representable.
fn num_pow(c: &BigRational, e: &BigRational) -> Option<Expr> {
    if is_integer(e) {
        let k = e.to_integer().to_i32()?;
        if c.is_zero() {
            return (k > 0).then(Expr::zero);
        }
        return Some(Expr::num(c.pow(k)));
    }
    if c.is_zero() {
        return e.is_positive().then(Expr::zero);
    }
    if c.is_negative() {
        return None;
    }
    let q = e.denom().to_u32()?;
    let p = e.numer().to_i32()?;
    let n = c.numer().nth_root(q);
    let d = c.denom().nth_root(q);
    if n.pow(q) == *c.numer() && d.pow(q) == *c.denom() {
        Some(Expr::num(BigRational::new(n, d).pow(p)))
    } else {
        None
    }
}

fn product_of_sums(a: &[Expr], b: &[Expr]) -> Expr {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(Expr::mul([x.clone(), y.clone()]));
        }
    }
    Expr::add(out)
}

fn expand_power(sum: &Expr, k: usize) -> Expr {
    let terms = sum.terms();
    let mut acc = sum.clone();
    for _ in 1..k {
        acc = product_of_sums(&acc.terms(), &terms);
    }
    acc
}

#[derive(Default)]
struct MulAcc {
    coeff: Option<BigRational>,
    bases: BTreeMap<Expr, BigRational>,
    exp_args: Vec<Expr>,
}

impl MulAcc {
    /// Returns false when the product is known to vanish.
    fn absorb(&mut self, f: &Expr) -> bool {
        match f.node() {
            Node::Num(c) => {
                if c.is_zero() {
                    return false;
                }
                self.scale(c.clone());
            }
            Node::Mul(fs) => {
                for x in fs {
                    if !self.absorb(x) {
                        return false;
                    }
                }
            }
            Node::Pow(b, e) => self.add_base(b.clone(), e.clone()),
            Node::Add(_) => {
                let (c, prim) = primitive_sum(f);
                self.scale(c);
                self.add_base(prim, BigRational::one());
            }
            Node::Func(Func::Exp, a) => self.exp_args.push(a.clone()),
            _ => self.add_base(f.clone(), BigRational::one()),
        }
        true
    }

    fn scale(&mut self, c: BigRational) {
        self.coeff = Some(match self.coeff.take() {
            Some(x) => x * c,
            None => c,
        });
    }

    fn add_base(&mut self, b: Expr, e: BigRational) {
        *self.bases.entry(b).or_insert_with(BigRational::zero) += e;
    }

    fn finish(self) -> Expr {
        let coeff = self.coeff.unwrap_or_else(BigRational::one);
        let mut simple: Vec<Expr> = Vec::new();
        let mut composite: Vec<Expr> = Vec::new();
        let mut sums: Vec<(Expr, usize)> = Vec::new();
        for (b, e) in self.bases {
            if e.is_zero() {
                continue;
            }
            if let Node::Add(_) = b.node() {
                if is_integer(&e) && e.is_positive() {
                    sums.push((b, e.to_integer().to_usize().expect("small exponent")));
                } else {
                    simple.push(Expr::raw(Node::Pow(b, e)));
                }
                continue;
            }
            let p = Expr::pow(b.clone(), e.clone());
            let is_simple = match p.node() {
                Node::Pow(pb, _) => *pb == b,
                Node::Num(_) => false,
                _ => p == b,
            };
            if is_simple {
                simple.push(p);
            } else {
                composite.push(p);
            }
        }
        if !self.exp_args.is_empty() {
            let e = Expr::exp(Expr::add(self.exp_args));
            if e.as_num().is_some() {
                composite.push(e);
            } else {
                simple.push(e);
            }
        }
        if !composite.is_empty() || !sums.is_empty() {
            composite.push(Expr::num(coeff));
            let mut acc = if composite.len() == 1 && simple.is_empty() {
                composite.pop().unwrap()
            } else {
                simple.extend(composite);
                // the composites are products, numbers or powers whose
                // factors are all canonical, so this recursion terminates
                Expr::mul(simple)
            };
            for (s, k) in sums {
                let expanded = expand_power(&s, k);
                acc = product_of_sums(&acc.terms(), &expanded.terms());
            }
            return acc;
        }
        if coeff.is_zero() {
            return Expr::zero();
        }
        simple.sort_by(|a, b| base_of(a).cmp(base_of(b)));
        let mut fs = Vec::with_capacity(simple.len() + 1);
        if !coeff.is_one() {
            fs.push(Expr::num(coeff.clone()));
        }
        fs.extend(simple);
        match fs.len() {
            0 => Expr::num(coeff),
            1 => fs.pop().unwrap(),
            _ => Expr::raw(Node::Mul(fs)),
        }
    }
}

fn base_of(e: &Expr) -> &Expr {
    match e.node() {
        Node::Pow(b, _) => b,
        _ => e,
    }
}

impl From<Var> for Expr {
    fn from(v: Var) -> Expr {
        Expr::var(v)
    }
}

impl From<i64> for Expr {
    fn from(i: i64) -> Expr {
        Expr::int(i)
    }
}

impl From<BigRational> for Expr {
    fn from(r: BigRational) -> Expr {
        Expr::num(r)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $body(self, rhs)
            }
        }
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $body(self.clone(), rhs.clone())
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $body(self, rhs.clone())
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $body(self.clone(), rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::add([a, b]));
binop!(Sub, sub, |a, b: Expr| Expr::add([a, -b]));
binop!(Mul, mul, |a, b| Expr::mul([a, b]));
binop!(Div, div, |a, b: Expr| Expr::mul([a, b.recip()]));

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::mul([Expr::int(-1), self])
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -self.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn y(i: u16) -> Expr {
        Expr::var(Var::Y(i))
    }
    fn dy(i: u16) -> Expr {
        Expr::var(Var::Dy(i))
    }

    #[test]
    fn like_terms_collect() {
        let e = y(1) + y(1) - Expr::int(2) * y(1);
        assert!(e.is_zero());
        let x = Expr::var(Var::X);
        assert!((&x - &x).is_zero());
    }

    #[test]
    fn products_distribute_over_sums() {
        let a = (y(1) + y(2)) * (y(1) - y(2));
        let b = Expr::powi(y(1), 2) - Expr::powi(y(2), 2);
        assert_eq!(a, b);
        let sq = Expr::powi(y(1) + Expr::one(), 2);
        assert_eq!(sq, Expr::powi(y(1), 2) + Expr::int(2) * y(1) + Expr::one());
    }

    #[test]
    fn sum_bases_are_primitive() {
        // 1/(2a - 2b) and -1/(2b - 2a) must agree
        let a = (Expr::int(2) * y(1) - Expr::int(2) * dy(2)).recip();
        let b = -(Expr::int(2) * dy(2) - Expr::int(2) * y(1)).recip();
        assert_eq!(a, b);
        let s = dy(2) - y(1);
        assert!((&s * Expr::powi(s.clone(), -1) - Expr::one()).is_zero());
    }

    #[test]
    fn pi_half_powers_cancel() {
        let e = Expr::sqrt(Expr::pi()) * Expr::int(2) / Expr::sqrt(Expr::pi());
        assert_eq!(e, Expr::int(2));
    }

    #[test]
    fn exact_roots_fold() {
        assert_eq!(Expr::sqrt(Expr::rational(9, 4)), Expr::rational(3, 2));
        assert!(matches!(Expr::sqrt(Expr::int(2)).node(), Node::Pow(..)));
        let v = dy(2);
        let p = Expr::pow(v.clone(), BigRational::new(3.into(), 2.into()));
        assert_eq!(Expr::powi(p, 2), Expr::powi(v, 3));
    }

    #[test]
    fn exponentials_merge() {
        let e = Expr::exp(y(1)) * Expr::exp(y(1));
        assert_eq!(e, Expr::exp(Expr::int(2) * y(1)));
        assert!((Expr::exp(y(1)) * Expr::exp(-y(1)) - Expr::one()).is_zero());
    }

    #[test]
    fn folding_of_special_values() {
        assert!(Expr::erf(Expr::zero()).is_zero());
        assert!(Expr::exp(Expr::zero()).is_one());
        assert!(Expr::ln(Expr::one()).is_zero());
    }

    #[test]
    fn substitution_is_simultaneous() {
        let e = y(1) - y(2);
        let map = BTreeMap::from([(Var::Y(1), y(2)), (Var::Y(2), y(1))]);
        assert_eq!(e.substitute(&map), y(2) - y(1));
        let e = Expr::var(Var::Ddy(1)) - y(2);
        assert!(e.subs(Var::Ddy(1), y(2)).is_zero());
    }

    #[test]
    fn guards_are_recorded() {
        let e = dy(1) / (dy(2) - y(1));
        let g = e.guards();
        assert_eq!(g.len(), 1);
        assert!(matches!(g.iter().next().unwrap(), Guard::NonZero(_)));
        let h = Expr::erf(dy(1) / Expr::pow(dy(2), BigRational::new(3.into(), 2.into())));
        assert!(h.guards().contains(&Guard::Positive(dy(2))));
    }

    #[test]
    fn space_membership() {
        let s = VariableSpace::Inhomogeneous { n: 2 };
        assert_eq!(s.lookup("dy2"), Some(Var::Dy(2)));
        assert_eq!(s.lookup("dy3"), None);
        assert_eq!(s.lookup("u0"), None);
        let h = VariableSpace::Homogeneous { n: 2 };
        assert_eq!(h.lookup("x0"), Some(Var::Xh(0)));
        assert_eq!(h.lookup("a2"), Some(Var::Acc(2)));
        assert_eq!(h.lookup("x"), None);
        assert!((y(1) * dy(2)).check_space(s).is_ok());
        assert_eq!((y(3)).check_space(s), Err(Var::Y(3)));
    }
}
