use std::fmt;

use thiserror::Error;

use super::{BinOp, Expr, Func, Var};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("parse error at byte {offset}: expected {}", ExpectedList(.expected))]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<&'static str>,
}

struct ExpectedList<'a>(&'a [&'static str]);

impl fmt::Display for ExpectedList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            [] => f.write_str("nothing"),
            [one] => f.write_str(one),
            many => f.write_str(&format!("one of {}", many.join(", "))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok,
    tok_start: usize,
}

const OPERAND: &[&str] = &["number", "variable", "function", "pi", "'('", "'-'"];

pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src, pos: 0, tok: Tok::End, tok_start: 0 };
    p.advance()?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn error(&self, expected: &[&'static str]) -> ParseError {
        ParseError { offset: self.tok_start, expected: expected.to_vec() }
    }

    fn advance(&mut self) -> Result<(), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        if self.pos >= bytes.len() {
            self.tok = Tok::End;
            return Ok(());
        }
        let c = bytes[self.pos];
        if c.is_ascii_digit() || c == b'.' {
            let start = self.pos;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
                self.pos += 1;
            }
            // Exponent suffix, only when followed by digits.
            if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
                let mut q = self.pos + 1;
                if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                    q += 1;
                }
                if q < bytes.len() && bytes[q].is_ascii_digit() {
                    while q < bytes.len() && bytes[q].is_ascii_digit() {
                        q += 1;
                    }
                    self.pos = q;
                }
            }
            let text = &self.src[start..self.pos];
            let v: f64 = text.parse().map_err(|_| ParseError { offset: start, expected: vec!["number"] })?;
            self.tok = Tok::Num(v);
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_') {
                self.pos += 1;
            }
            self.tok = Tok::Ident(self.src[start..self.pos].to_string());
        } else if b"+-*/^()".contains(&c) {
            self.pos += 1;
            self.tok = Tok::Sym(c as char);
        } else {
            return Err(ParseError {
                offset: self.pos,
                expected: vec!["number", "identifier", "operator", "'('", "')'"],
            });
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.unary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Sym('-') {
            self.advance()?;
            let inner = self.unary()?;
            // Fold a sign into an unsigned literal only, so `--3` keeps its
            // shape and printing stays a fixed point.
            return Ok(match inner {
                Expr::Num(v) if v.is_sign_positive() => Expr::Num(-v),
                other => Expr::neg(other),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.tok == Tok::Sym('^') {
            self.advance()?;
            let exp = self.unary()?;
            return Ok(Expr::bin(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Expr::Num(v))
            }
            Tok::Sym('(') => {
                self.advance()?;
                let e = self.expr()?;
                self.expect_close()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if name == "pi" {
                    self.advance()?;
                    return Ok(Expr::Pi);
                }
                if let Some(v) = Var::from_name(&name) {
                    self.advance()?;
                    return Ok(Expr::Var(v));
                }
                if let Some(func) = Func::from_name(&name) {
                    self.advance()?;
                    if self.tok != Tok::Sym('(') {
                        return Err(self.error(&["'('"]));
                    }
                    self.advance()?;
                    let arg = self.expr()?;
                    self.expect_close()?;
                    return Ok(Expr::call(func, arg));
                }
                Err(self.error(&[
                    "x", "y", "z", "r", "theta", "t", "pi", "sin", "cos", "tan", "exp", "ln", "sqrt", "tanh",
                    "atan",
                ]))
            }
            _ => Err(self.error(OPERAND)),
        }
    }

    fn expect_close(&mut self) -> Result<(), ParseError> {
        if self.tok != Tok::Sym(')') {
            return Err(self.error(&["')'", "operator"]));
        }
        self.advance()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_offsets() {
        let e = parse("sin(x) + * 2").unwrap_err();
        assert_eq!(e.offset, 9);
        assert!(e.expected.contains(&"number"));

        let e = parse("(x + 1").unwrap_err();
        assert_eq!(e.offset, 6);
        assert!(e.expected.contains(&"')'"));

        let e = parse("foo(x)").unwrap_err();
        assert_eq!(e.offset, 0);

        let e = parse("x $ y").unwrap_err();
        assert_eq!(e.offset, 2);

        let e = parse("x y").unwrap_err();
        assert_eq!(e.offset, 2);
        assert!(e.expected.contains(&"end of input"));
    }

    #[test]
    fn numbers() {
        assert_eq!(parse("1.5e-3").unwrap(), Expr::Num(1.5e-3));
        assert_eq!(parse("  2E2 ").unwrap(), Expr::Num(200.0));
        assert_eq!(parse("-3").unwrap(), Expr::Num(-3.0));
        assert_eq!(parse("x").unwrap(), Expr::Var(Var::X));
        // `e` without digits is not an exponent: "2e" lexes as 2 followed by an identifier.
        assert!(parse("2e").is_err());
    }
}
