use std::fmt::{self, Write};

use num_rational::BigRational;
use num_traits::{One, Signed};

use super::{Expr, Node};

fn write_num(f: &mut impl Write, r: &BigRational) -> fmt::Result {
    if r.denom().is_one() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

fn write_exponent(f: &mut impl Write, e: &BigRational) -> fmt::Result {
    if e.denom().is_one() && e.is_positive() {
        write!(f, "^{}", e.numer())
    } else {
        f.write_str("^(")?;
        write_num(f, e)?;
        f.write_str(")")
    }
}

/// Print as a factor of a product or the base of a power.
fn write_atom(f: &mut impl Write, e: &Expr) -> fmt::Result {
    match e.node() {
        Node::Num(r) if r.denom().is_one() && !r.is_negative() => write_num(f, r),
        Node::Var(_) | Node::Pi | Node::Func(..) => write_expr(f, e),
        _ => {
            f.write_str("(")?;
            write_expr(f, e)?;
            f.write_str(")")
        }
    }
}

fn write_factor(f: &mut impl Write, e: &Expr) -> fmt::Result {
    match e.node() {
        Node::Pow(..) => write_expr(f, e),
        _ => write_atom(f, e),
    }
}

fn write_expr(f: &mut impl Write, e: &Expr) -> fmt::Result {
    match e.node() {
        Node::Num(r) => write_num(f, r),
        Node::Pi => f.write_str("pi"),
        Node::Var(v) => f.write_str(&v.name()),
        Node::Pow(b, ex) => {
            write_atom(f, b)?;
            write_exponent(f, ex)
        }
        Node::Func(g, a) => {
            write!(f, "{}(", g.name())?;
            write_expr(f, a)?;
            f.write_str(")")
        }
        Node::Mul(fs) => {
            let mut rest = &fs[..];
            if let Node::Num(c) = fs[0].node() {
                rest = &fs[1..];
                if (-c).is_one() {
                    f.write_str("-")?;
                } else {
                    write_num(f, c)?;
                    f.write_str("*")?;
                }
            }
            for (i, x) in rest.iter().enumerate() {
                if i > 0 {
                    f.write_str("*")?;
                }
                write_factor(f, x)?;
            }
            Ok(())
        }
        Node::Add(ts) => {
            for (i, t) in ts.iter().enumerate() {
                let negative = t.split_coeff().0.is_negative();
                if i == 0 {
                    write_expr(f, t)?;
                } else if negative {
                    f.write_str(" - ")?;
                    write_expr(f, &(-t))?;
                } else {
                    f.write_str(" + ")?;
                    write_expr(f, t)?;
                }
            }
            Ok(())
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}
