//! Expression DSL for scalar functions of `x1..xm`.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' intlit)?
//! base   := number | 'pi' | 'e' | var | func '(' expr ')' | '(' expr ')' | '-' base
//! var    := 'x' intlit
//! func   := sin | cos | exp | log | sqrt | sinh | cosh | tanh | asinh | atanh
//! ```
//!
//! Note that `-x1^2` parses as `(-x1)^2`, since the unary minus belongs to `base`.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Elementary functions accepted by the parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
    Asinh,
    Atanh,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Asinh,
        Func::Atanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Asinh => "asinh",
            Func::Atanh => "atanh",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    /// Value and first three derivatives at `v`, or a reason why `v` is outside the domain.
    pub fn taylor<T: Scalar>(self, v: T) -> std::result::Result<[T; 4], &'static str> {
        let one = T::one();
        let two = T::lit(2.0);
        Ok(match self {
            Func::Sin => {
                let (s, c) = v.sin_cos();
                [s, c, -s, -c]
            }
            Func::Cos => {
                let (s, c) = v.sin_cos();
                [c, -s, -c, s]
            }
            Func::Exp => {
                let e = v.exp();
                [e, e, e, e]
            }
            Func::Log => {
                if !(v > T::zero()) {
                    return Err("log argument must be positive");
                }
                let r = one / v;
                [v.ln(), r, -r * r, two * r * r * r]
            }
            Func::Sqrt => {
                if !(v > T::zero()) {
                    return Err("sqrt argument must be positive");
                }
                let s = v.sqrt();
                let r = one / v;
                let d1 = s * r / two;
                let d2 = -d1 * r / two;
                let d3 = d2 * r * T::lit(-1.5);
                [s, d1, d2, d3]
            }
            Func::Sinh => {
                let (s, c) = (v.sinh(), v.cosh());
                [s, c, s, c]
            }
            Func::Cosh => {
                let (s, c) = (v.sinh(), v.cosh());
                [c, s, c, s]
            }
            Func::Tanh => {
                let t = v.tanh();
                let q = one - t * t;
                [t, q, -two * t * q, q * (T::lit(6.0) * t * t - two)]
            }
            Func::Asinh => {
                let q = one + v * v;
                let r = one / q.sqrt();
                [
                    v.asinh(),
                    r,
                    -v * r * r * r,
                    (two * v * v - one) * r * r * r * r * r,
                ]
            }
            Func::Atanh => {
                if !(v.abs() < one) {
                    return Err("atanh argument must lie in (-1, 1)");
                }
                let q = one / (one - v * v);
                [
                    v.atanh(),
                    q,
                    two * v * q * q,
                    (two + T::lit(6.0) * v * v) * q * q * q,
                ]
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Parsed expression. Variables are stored zero-based (`x1` is `Var(0)`).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    /// Largest zero-based variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(e) | Expr::Call(_, e) | Expr::Pow(e, _) => e.max_var(),
            Expr::Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Plain evaluation at a point.
    pub fn eval<T: Scalar>(&self, point: &[T]) -> Result<T> {
        match self {
            Expr::Const(c) => Ok(T::lit(*c)),
            Expr::Var(i) => point.get(*i).copied().ok_or(Error::VariableOutOfRange {
                index: i + 1,
                dim: point.len(),
            }),
            Expr::Neg(e) => Ok(-e.eval(point)?),
            Expr::Call(f, e) => {
                let v = e.eval(point)?;
                f.taylor(v).map(|t| t[0]).map_err(|reason| Error::Domain {
                    subexpr: self.to_string(),
                    reason: reason.to_string(),
                })
            }
            Expr::Binary(op, a, b) => {
                let (x, y) = (a.eval(point)?, b.eval(point)?);
                Ok(match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == T::zero() {
                            return Err(Error::Domain {
                                subexpr: self.to_string(),
                                reason: "division by zero".into(),
                            });
                        }
                        x / y
                    }
                })
            }
            Expr::Pow(e, k) => Ok(e.eval(point)?.powi(*k as i32)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Pow(e, k) => write!(f, "({e})^{k}"),
        }
    }
}

/// Parse `text` as an expression in the variables `x1..x{dim}`.
pub fn parse(text: &str, dim: usize) -> Result<Expr> {
    if dim == 0 {
        return Err(Error::Dimension {
            dim,
            reason: "expression dimension must be at least 1".into(),
        });
    }
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        dim,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn syntax(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            let digits = self.digits();
            if digits.is_empty() {
                return Err(self.syntax("exponent must be a non-negative integer literal"));
            }
            if matches!(self.src.get(self.pos), Some(b'.' | b'e' | b'E')) {
                self.pos = start;
                return Err(self.syntax("exponent must be an integer literal"));
            }
            let k: u32 = digits.parse().map_err(|_| Error::Syntax {
                offset: start,
                message: "exponent too large".into(),
            })?;
            return Ok(Expr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn base(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.base()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(_) => Err(self.syntax("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let int = self.digits();
        let mut text = int.clone();
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            let frac = self.digits();
            if int.is_empty() && frac.is_empty() {
                self.pos = start;
                return Err(self.syntax("malformed number"));
            }
            text.push('.');
            text.push_str(&frac);
        }
        // Scientific exponent only when followed by digits, so `2*e` style input stays intact.
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            let mut q = self.pos + 1;
            if matches!(self.src.get(q), Some(b'+' | b'-')) {
                q += 1;
            }
            if self.src.get(q).is_some_and(|c| c.is_ascii_digit()) {
                text.push_str(&String::from_utf8_lossy(&self.src[save..q]));
                self.pos = q;
                text.push_str(&self.digits());
            }
        }
        let v: f64 = text.parse().map_err(|_| Error::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        if !v.is_finite() {
            return Err(Error::Syntax {
                offset: start,
                message: format!("number `{text}` is not finite"),
            });
        }
        Ok(Expr::Const(v))
    }

    fn identifier(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        let name = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
        match name.as_str() {
            "x" => {
                let digits = self.digits();
                if digits.is_empty() {
                    return Err(Error::UnknownIdentifier { name, offset: start });
                }
                let index: usize = digits.parse().unwrap_or(usize::MAX);
                if index == 0 || index > self.dim {
                    return Err(Error::VariableOutOfRange {
                        index,
                        dim: self.dim,
                    });
                }
                Ok(Expr::Var(index - 1))
            }
            "pi" => Ok(Expr::Const(std::f64::consts::PI)),
            "e" => Ok(Expr::Const(std::f64::consts::E)),
            _ => {
                if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    return Err(Error::UnknownIdentifier { name, offset: start });
                }
                let func = Func::from_name(&name)
                    .ok_or(Error::UnknownIdentifier { name, offset: start })?;
                self.expect(b'(')?;
                let arg = self.expr()?;
                self.expect(b')')?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(i: usize) -> Box<Expr> {
        Box::new(Expr::Var(i))
    }

    #[test]
    fn sum_of_squares() {
        let e = parse("x1^2 + x2^2", 2).unwrap();
        assert_eq!(
            e,
            Expr::Binary(
                BinOp::Add,
                Box::new(Expr::Pow(v(0), 2)),
                Box::new(Expr::Pow(v(1), 2))
            )
        );
    }

    #[test]
    fn hyperboloid_height() {
        let e = parse("sqrt(1 + x1^2 + x2^2)", 2).unwrap();
        let Expr::Call(Func::Sqrt, inner) = &e else {
            panic!("expected sqrt call, got {e:?}");
        };
        assert_eq!(inner.max_var(), Some(1));
        assert!((e.eval(&[1.0, 1.0]).unwrap() - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_variable() {
        assert_eq!(
            parse("x3", 2),
            Err(Error::VariableOutOfRange { index: 3, dim: 2 })
        );
        assert!(matches!(
            parse("x0", 2),
            Err(Error::VariableOutOfRange { .. })
        ));
    }

    #[test]
    fn errors_carry_offsets() {
        assert!(matches!(
            parse("x1 + foo(x1)", 1),
            Err(Error::UnknownIdentifier { offset: 5, .. })
        ));
        assert!(matches!(parse("x1 +", 1), Err(Error::Syntax { offset: 4, .. })));
        assert!(matches!(parse("x1^2.5", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse("x1^x1", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse("(x1", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse("", 1), Err(Error::Syntax { offset: 0, .. })));
        assert!(matches!(parse("1e999", 1), Err(Error::Syntax { .. })));
        assert!(parse("x1", 0).is_err());
    }

    #[test]
    fn constants_and_scientific_literals() {
        let e = parse("2*e + pi - 1.5e-1", 1).unwrap();
        let want = 2.0 * std::f64::consts::E + std::f64::consts::PI - 0.15;
        assert_eq!(e.eval::<f64>(&[0.0]).unwrap(), want);
        assert!(parse("2e", 1).is_err());
    }

    #[test]
    fn unary_minus_binds_to_base() {
        // (-x1)^2, not -(x1^2)
        let e = parse("-x1^2", 1).unwrap();
        assert_eq!(e.eval(&[3.0]).unwrap(), 9.0);
        assert_eq!(parse("0-x1^2", 1).unwrap().eval(&[3.0]).unwrap(), -9.0);
    }

    #[test]
    fn domain_errors_name_subexpression() {
        let e = parse("1 + log(x1 - 2)", 1).unwrap();
        match e.eval(&[1.0]) {
            Err(Error::Domain { subexpr, .. }) => assert!(subexpr.starts_with("log(")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("1/x1", 1).unwrap().eval(&[0.0]).is_err());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..100.0).prop_map(Expr::Const),
            (0usize..3).prop_map(Expr::Var),
        ];
        leaf.prop_recursive(5, 40, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (0usize..10, inner.clone())
                    .prop_map(|(k, e)| Expr::Call(Func::ALL[k], Box::new(e))),
                (0usize..4, inner.clone(), inner.clone()).prop_map(|(k, a, b)| {
                    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][k];
                    Expr::Binary(op, Box::new(a), Box::new(b))
                }),
                (inner, 0u32..5).prop_map(|(e, k)| Expr::Pow(Box::new(e), k)),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_is_identity(e in arb_expr()) {
            let text = e.to_string();
            prop_assert_eq!(parse(&text, 3).unwrap(), e);
        }

        #[test]
        fn parentheses_are_transparent(e in arb_expr()) {
            let text = e.to_string();
            prop_assert_eq!(parse(&format!("({text})"), 3).unwrap(), parse(&text, 3).unwrap());
        }
    }
}
