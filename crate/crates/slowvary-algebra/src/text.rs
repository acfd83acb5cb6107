//! Canonical text form of expressions.
//!
//! ```text
//! expr    := ['+'|'-'] term (('+'|'-') term)*
//! term    := power (('*'|'/') power)*
//! power   := primary ['^' integer]
//! primary := integer | 'i' | name | 'Z[' expr ';' rate ']' | '(' expr ')'
//! rate    := ['-'] integer ['/' integer]
//! ```
//!
//! Printing emits terms in monomial order, so `parse(print(e)) == e` holds
//! exactly when both sides use the same [`Registry`].

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::calculus::conv;
use crate::error::ParseError;
use crate::expr::{Expr, Factor, Monomial};
use crate::grading::Registry;
use crate::scalar::{fmt_rational, Scalar};

const MAX_DEPTH: usize = 64;
const MAX_POWER: u32 = 64;
const MAX_TERMS: usize = 100_000;

pub fn monomial_to_string(m: &Monomial) -> String {
    let mut parts = Vec::new();
    for (f, p) in m.factors() {
        let base = match f {
            Factor::Sym(s) => s.name().to_string(),
            Factor::Atom(a) => format!("Z[{};{}]", monomial_to_string(a.content()), fmt_rational(a.rate())),
        };
        if p == 1 {
            parts.push(base);
        } else {
            parts.push(format!("{base}^{p}"));
        }
    }
    parts.join("*")
}

fn term_body(m: &Monomial, mag: Option<String>) -> String {
    if m.is_one() {
        return mag.unwrap_or_else(|| "1".to_string());
    }
    match mag {
        None => monomial_to_string(m),
        Some(s) => format!("{s}*{}", monomial_to_string(m)),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms().enumerate() {
            let (neg, mag) = c.sign_and_magnitude();
            let body = term_body(m, mag);
            match (k, neg) {
                (0, false) => f.write_str(&body)?,
                (0, true) => write!(f, "-{body}")?,
                (_, false) => write!(f, " + {body}")?,
                (_, true) => write!(f, " - {body}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            f.write_str("1")
        } else {
            f.write_str(&monomial_to_string(self))
        }
    }
}

/// Parse an expression, resolving names through `reg`.
pub fn parse_expr(src: &str, reg: &Registry) -> Result<Expr, ParseError> {
    let mut p = Parser { src: src.as_bytes(), pos: 0, reg, depth: 0 };
    let e = p.expr()?;
    p.ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected character"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    reg: &'a Registry,
    depth: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ParseError {
        ParseError::new(self.pos, msg)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        self.ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn guard(&self, e: &Expr) -> Result<(), ParseError> {
        if e.len() > MAX_TERMS {
            Err(self.err("expression too large"))
        } else {
            Ok(())
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.err("nesting too deep"));
        }
        self.ws();
        let neg = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                true
            }
            Some(b'+') => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        let mut acc = self.term()?;
        if neg {
            acc = -acc;
        }
        loop {
            self.ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc.add_assign(&t);
                }
                Some(b'-') => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc.sub_assign(&t);
                }
                _ => break,
            }
            self.guard(&acc)?;
        }
        self.depth -= 1;
        Ok(acc)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.power()?;
        loop {
            self.ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.power()?;
                    acc = &acc * &rhs;
                }
                Some(b'/') => {
                    self.pos += 1;
                    let at = self.pos;
                    let rhs = self.power()?;
                    let inv = rhs
                        .as_constant()
                        .and_then(|c| c.inv())
                        .ok_or_else(|| ParseError::new(at, "divisor must be a nonzero constant"))?;
                    acc = acc.scale(&inv);
                }
                _ => break,
            }
            self.guard(&acc)?;
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        self.ws();
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        self.ws();
        let n = self.integer()?;
        let n: u32 = n
            .try_into()
            .ok()
            .filter(|n| *n <= MAX_POWER)
            .ok_or_else(|| self.err("exponent too large"))?;
        let mut out = Expr::one();
        for _ in 0..n {
            out = &out * &base;
            self.guard(&out)?;
        }
        Ok(out)
    }

    fn integer(&mut self) -> Result<BigInt, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an integer"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        Ok(digits.parse().expect("ascii digits"))
    }

    fn rate(&mut self) -> Result<BigRational, ParseError> {
        self.ws();
        let neg = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                true
            }
            Some(b'+') => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        self.ws();
        let p = self.integer()?;
        self.ws();
        let q = if self.peek() == Some(b'/') {
            self.pos += 1;
            self.ws();
            let q = self.integer()?;
            if q.is_zero() {
                return Err(self.err("zero denominator"));
            }
            q
        } else {
            BigInt::from(1)
        };
        let r = BigRational::new(p, q);
        Ok(if neg { -r } else { r })
    }

    fn ident(&mut self) -> &str {
        let start = self.pos;
        while matches!(self.peek(), Some(b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'_')) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier")
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        self.ws();
        match self.peek() {
            Some(b'0'..=b'9') => Ok(Expr::constant(Scalar::from(self.integer()?))),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(b'A'..=b'Z' | b'a'..=b'z' | b'_') => {
                let reg = self.reg;
                let name = self.ident().to_string();
                if name == "i" {
                    return Ok(Expr::constant(Scalar::i()));
                }
                if name == "Z" && self.peek() == Some(b'[') {
                    self.pos += 1;
                    let content = self.expr()?;
                    self.expect(b';')?;
                    let at = self.pos;
                    let rate = self.rate()?;
                    self.expect(b']')?;
                    return conv(&content, &rate).map_err(|_| ParseError::new(at, "convolution rate must be negative"));
                }
                Ok(Expr::sym(&reg.resolve(&name)))
            }
            Some(_) => Err(self.err("expected a number, name, '(' or 'Z['")),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::conv_int;

    fn reg() -> Registry {
        let mut r = Registry::new();
        r.coupling("d4x");
        r.coupling("c4x");
        r
    }

    #[test]
    fn prints_canonical_terms() {
        let e = parse_expr("c2 - c4 + 5*Z[d4x;-1] + 5*Z[Z[d4x;-1];-1]", &reg()).unwrap();
        assert_eq!(e.to_string(), "c2 - c4 + 5*Z[d4x;-1] + 5*Z[Z[d4x;-1];-1]");
        let w = Expr::coupling("d4x");
        let expect = &(&Expr::slow("c2") - &Expr::slow("c4"))
            + &(&conv_int(&w, -1).unwrap() + &conv_int(&conv_int(&w, -1).unwrap(), -1).unwrap()).scale(&Scalar::from_int(5));
        assert_eq!(e, expect);
    }

    #[test]
    fn parse_normalizes_atoms() {
        let e = parse_expr("Z[2*c0*d4x;-1] + Z[1;-1/2]", &reg()).unwrap();
        assert_eq!(e.to_string(), "2 + 2*c0*Z[d4x;-1]");
    }

    #[test]
    fn complex_coefficients_round_trip() {
        let r = reg();
        for src in ["-4*i*c", "(1/2-3*i)*c0^2 + i", "-7/120*Pe + 1/4*Pe*y^2"] {
            let e = parse_expr(src, &r).unwrap();
            assert_eq!(parse_expr(&e.to_string(), &r).unwrap(), e, "{src}");
        }
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let e = parse_expr("c^", &reg()).unwrap_err();
        assert_eq!(e.offset, 2);
        assert!(parse_expr("Z[w;1]", &reg()).is_err());
        assert!(parse_expr("c/0", &reg()).is_err());
        assert!(parse_expr("(c", &reg()).is_err());
    }
}
