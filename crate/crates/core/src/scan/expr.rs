//! Arithmetic expressions over the two family parameters.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' '-'? integer)?
//! atom   := number | 'p1' | 'p2' | 'pi' | ('cos' | 'sin') '(' expr ')' | '(' expr ')'
//! ```
//!
//! `p/q` literals are ordinary divisions. Parameter-free subtrees are folded
//! at parse time, so evaluation never allocates.

use crate::error::{Error, Result};
use std::f64::consts::PI;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    P1,
    P2,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Cos(Box<Expr>),
    Sin(Box<Expr>),
}

impl Expr {
    /// Parses `text`; error columns are offset by `col` (1-based column of
    /// the first character) and reported on `line`.
    pub fn parse_at(text: &str, line: usize, col: usize) -> Result<Expr> {
        let mut p = Parser {
            src: text.as_bytes(),
            pos: 0,
            line,
            col,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.error(format!("unexpected `{}`", p.src[p.pos] as char)));
        }
        Ok(e)
    }

    pub fn parse(text: &str) -> Result<Expr> {
        Expr::parse_at(text, 1, 1)
    }

    pub fn eval(&self, p1: f64, p2: f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::P1 => p1,
            Expr::P2 => p2,
            Expr::Neg(a) => -a.eval(p1, p2),
            Expr::Add(a, b) => a.eval(p1, p2) + b.eval(p1, p2),
            Expr::Sub(a, b) => a.eval(p1, p2) - b.eval(p1, p2),
            Expr::Mul(a, b) => a.eval(p1, p2) * b.eval(p1, p2),
            Expr::Div(a, b) => a.eval(p1, p2) / b.eval(p1, p2),
            Expr::Pow(a, k) => a.eval(p1, p2).powi(*k),
            Expr::Cos(a) => a.eval(p1, p2).cos(),
            Expr::Sin(a) => a.eval(p1, p2).sin(),
        }
    }

    /// Like [`Expr::eval`] but rejects non-finite results.
    pub fn eval_checked(&self, p1: f64, p2: f64) -> Result<f64> {
        let v = self.eval(p1, p2);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Eval(format!(
                "`{self}` is not finite at p1 = {p1}, p2 = {p2}"
            )))
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Expr::Const(_))
    }

    fn fold(self) -> Expr {
        let all_const = match &self {
            Expr::Const(_) | Expr::P1 | Expr::P2 => return self,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Cos(a) | Expr::Sin(a) => a.is_const(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.is_const() && b.is_const()
            }
        };
        if all_const {
            Expr::Const(self.eval(0.0, 0.0))
        } else {
            self
        }
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesised canonical form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{}", crate::format::shortest(*c)),
            Expr::P1 => write!(f, "p1"),
            Expr::P2 => write!(f, "p2"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, k) => write!(f, "({a}^{k})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl Parser<'_> {
    fn error(&self, msg: String) -> Error {
        Error::Parse {
            line: self.line,
            col: self.col + self.pos,
            msg,
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            let found = self
                .peek()
                .map_or("end of input".to_string(), |b| format!("`{}`", b as char));
            Err(self.error(format!("expected `{}`, found {found}", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?)).fold();
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?)).fold();
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?)).fold();
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?)).fold();
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)).fold());
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let neg = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("exponent must be an integer".into()));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let k: i32 = digits.parse().map_err(|_| Error::Parse {
            line: self.line,
            col: self.col + start,
            msg: "exponent out of range".into(),
        })?;
        Ok(Expr::Pow(Box::new(base), if neg { -k } else { k }).fold())
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of input".into())),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                match name {
                    "p1" => Ok(Expr::P1),
                    "p2" => Ok(Expr::P2),
                    "pi" => Ok(Expr::Const(PI)),
                    "cos" | "sin" => {
                        self.expect(b'(')?;
                        let arg = Box::new(self.expr()?);
                        self.expect(b')')?;
                        let e = if name == "cos" {
                            Expr::Cos(arg)
                        } else {
                            Expr::Sin(arg)
                        };
                        Ok(e.fold())
                    }
                    _ => Err(Error::Parse {
                        line: self.line,
                        col: self.col + start,
                        msg: format!("unknown identifier `{name}`"),
                    }),
                }
            }
            Some(c) => Err(self.error(format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if exp_start == self.pos {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| Error::Parse {
                line: self.line,
                col: self.col + start,
                msg: format!("malformed number `{text}`"),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, p1: f64, p2: f64) -> f64 {
        Expr::parse(s).unwrap().eval(p1, p2)
    }

    #[test]
    fn arithmetic_and_precedence() {
        assert_eq!(ev("6/5 * cos(2*pi*p1)", 0.0, 0.0), 1.2);
        assert_eq!(ev("1 + 2 * 3", 0.0, 0.0), 7.0);
        assert_eq!(ev("-2^2", 0.0, 0.0), -4.0);
        assert_eq!(ev("(1 - p2)^-2", 0.0, 3.0), 0.25);
        assert_eq!(ev("2 - 3 - 4", 0.0, 0.0), -5.0);
        assert_eq!(ev("8 / 4 / 2", 0.0, 0.0), 1.0);
        assert_eq!(ev("-9/25", 0.0, 0.0), -0.36);
        assert_eq!(ev("1.5e-3 * p1", 2.0, 0.0), 3e-3);
        assert!((ev("sin(pi/2) + p2", 0.0, 0.5) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn constants_fold() {
        assert_eq!(
            Expr::parse("2*pi/4").unwrap(),
            Expr::Const(std::f64::consts::FRAC_PI_2)
        );
        assert!(!Expr::parse("2*p1").unwrap().is_const());
    }

    #[test]
    fn errors_carry_columns() {
        let col = |s: &str| match Expr::parse_at(s, 3, 10) {
            Err(Error::Parse { line: 3, col, .. }) => col,
            other => panic!("{other:?}"),
        };
        assert_eq!(col("1 + foo"), 14);
        assert_eq!(col("cos(p1"), 16);
        assert_eq!(col("p1 ^ 1.5"), 16);
        assert_eq!(col("2 * )"), 14);
        assert_eq!(col(""), 10);
    }

    #[test]
    fn division_by_zero_is_not_finite() {
        let e = Expr::parse("1/(p2^2)").unwrap();
        assert!(matches!(e.eval_checked(0.3, 0.0), Err(Error::Eval(_))));
        assert_eq!(e.eval_checked(0.3, 2.0).unwrap(), 0.25);
    }

    #[test]
    fn display_reparses_to_same_tree() {
        for s in [
            "6/5*cos(2*pi*p1)",
            "-(p1 - p2)^3 / 7",
            "2/p2*cos(2*pi*p1)",
            "-1/p2^2",
        ] {
            let e = Expr::parse(s).unwrap();
            assert_eq!(Expr::parse(&e.to_string()).unwrap(), e, "{s}");
        }
    }
}
