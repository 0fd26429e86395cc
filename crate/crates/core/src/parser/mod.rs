//! Text front end: an expression grammar and the line-based structure file
//! format used by the catalog.
//!
//! Expressions use `+ - * / ^`, parentheses, rational and decimal literals,
//! the constant `pi` and the functions `exp ln sqrt erf sin cos`. Binding
//! from tightest: `^` (right-associative, rational constant exponent), unary
//! minus, `* /`, `+ -`. So `-x^2` is `-(x^2)` and `2^3^2` is `2^9`.

mod structure;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Pow, Zero};

pub use crate::error::ParseError;
use crate::expr::{Expr, Func, Var, VariableSpace};
pub use structure::{parse_structure, print_structure, Kind, PsiFamily, Structure};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str, line0: usize, col0: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (line0, col0);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let int_part: String = chars[start..i].iter().collect();
            let mut frac = String::new();
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                let fs = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                frac = chars[fs..i].iter().collect();
            }
            let digits = format!("{int_part}{frac}");
            let numer: BigInt = digits.parse().map_err(|_| ParseError::Syntax {
                line: tl,
                col: tc,
                msg: "malformed number".into(),
            })?;
            let denom = BigInt::from(10u32).pow(frac.len() as u32);
            Tok::Num(BigRational::new(numer, denom))
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else {
            i += 1;
            match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => {
                    return Err(ParseError::Syntax { line: tl, col: tc, msg: format!("unexpected character `{c}`") })
                }
            }
        };
        col += i - start;
        out.push(Token { tok, line: tl, col: tc });
    }
    out.push(Token { tok: Tok::End, line, col });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    space: &'a VariableSpace,
    allow: &'a dyn Fn(Var) -> bool,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(r) => format!("number `{r}`"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Op(c) => format!("`{c}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of input".into(),
    }
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, t: &Token, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { line: t.line, col: t.col, msg: msg.into() }
    }

    fn expect(&mut self, want: Tok) -> Result<Token, ParseError> {
        let t = self.bump();
        if t.tok == want {
            Ok(t)
        } else {
            Err(self.error_at(&t, format!("expected {}, found {}", describe(&want), describe(&t.tok))))
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.product()?;
        while let Tok::Op(c @ ('+' | '-')) = self.peek().tok {
            self.bump();
            let rhs = self.product()?;
            acc = if c == '+' { acc + rhs } else { acc - rhs };
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = self.peek().tok {
            let op = self.bump();
            let rhs = self.unary()?;
            if c == '*' {
                acc = acc * rhs;
            } else {
                if rhs.is_zero() {
                    return Err(self.error_at(&op, "division by zero"));
                }
                acc = acc * rhs.recip();
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().tok {
            Tok::Op('-') => {
                self.bump();
                Ok(-self.unary()?)
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek().tok != Tok::Op('^') {
            return Ok(base);
        }
        let op = self.bump();
        let at = self.peek().clone();
        // right operand binds like a unary so that `x^-1` and `2^3^2` work
        let ex = self.unary()?;
        let Some(k) = ex.as_num().cloned() else {
            return Err(self.error_at(&at, format!("exponent must be a rational constant, found `{ex}`")));
        };
        if base.is_zero() && k <= BigRational::zero() {
            return Err(self.error_at(&op, "zero raised to a non-positive power"));
        }
        Ok(Expr::pow(base, k))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let t = self.bump();
        match &t.tok {
            Tok::Num(r) => Ok(Expr::num(r.clone())),
            Tok::LParen => {
                let e = self.sum()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.peek().tok == Tok::LParen {
                    let func = match name.as_str() {
                        "exp" => Some(Func::Exp),
                        "ln" => Some(Func::Ln),
                        "erf" => Some(Func::Erf),
                        "sin" => Some(Func::Sin),
                        "cos" => Some(Func::Cos),
                        "sqrt" => None,
                        _ => {
                            return Err(ParseError::UnknownIdentifier {
                                line: t.line,
                                col: t.col,
                                name: name.clone(),
                            })
                        }
                    };
                    self.bump();
                    let mut args = Vec::new();
                    if self.peek().tok != Tok::RParen {
                        args.push(self.sum()?);
                        while self.peek().tok == Tok::Comma {
                            self.bump();
                            args.push(self.sum()?);
                        }
                    }
                    self.expect(Tok::RParen)?;
                    if args.len() != 1 {
                        return Err(ParseError::Arity { line: t.line, col: t.col, func: name.clone(), got: args.len() });
                    }
                    let a = args.pop().unwrap();
                    return Ok(match func {
                        Some(f) => Expr::func(f, a),
                        None => Expr::sqrt(a),
                    });
                }
                if name == "pi" {
                    return Ok(Expr::pi());
                }
                if matches!(name.as_str(), "exp" | "ln" | "sqrt" | "erf" | "sin" | "cos") {
                    return Err(self.error_at(&t, format!("function `{name}` needs an argument")));
                }
                match self.space.lookup(name).filter(|v| (self.allow)(*v)) {
                    Some(v) => Ok(Expr::var(v)),
                    None => Err(ParseError::UnknownIdentifier { line: t.line, col: t.col, name: name.clone() }),
                }
            }
            other => Err(self.error_at(&t, format!("expected an expression, found {}", describe(other)))),
        }
    }
}

/// Parse `text` starting at the given line and column, for error reporting
/// inside a larger file. Variables rejected by `allow` are unknown.
pub(crate) fn parse_expr_at(
    text: &str,
    space: &VariableSpace,
    allow: &dyn Fn(Var) -> bool,
    line: usize,
    col: usize,
) -> Result<Expr, ParseError> {
    let toks = lex(text, line, col)?;
    let mut p = Parser { toks, pos: 0, space, allow };
    let e = p.sum()?;
    let t = p.peek().clone();
    if t.tok != Tok::End {
        return Err(p.error_at(&t, format!("unexpected {}", describe(&t.tok))));
    }
    Ok(e)
}

/// Parse a single expression over `space`.
pub fn parse_expr(text: &str, space: &VariableSpace) -> Result<Expr, ParseError> {
    parse_expr_at(text, space, &|_| true, 1, 1)
}
