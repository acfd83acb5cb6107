//! Multinomial nonlinearities in the fields and their `x`-derivatives.
//!
//! ```text
//! expr   := ['+'|'-'] term (('+'|'-') term)*
//! term   := factor (('*' factor) | ('/' integer))*
//! factor := integer | name deriv? ['^' integer] | '(' expr ')' ['^' integer]
//! deriv  := ('_' 'x'+)+
//! ```
//!
//! `c_xx` and `c_x_x` both denote `∂ₓ²c`. Every term must have degree at least
//! two; products of parenthesized sums are expanded.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use slowvary_algebra::{BigRational, Expr, ParseError, Scalar, Symbol};

const MAX_DEPTH: usize = 32;
const MAX_POWER: u32 = 16;
const MAX_DERIV: u32 = 8;
const MAX_TERMS: usize = 10_000;

/// A field symbol with the order of its `x`-derivative.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldVar {
    pub name: String,
    pub deriv: u32,
}

impl FieldVar {
    pub fn new(name: &str, deriv: u32) -> Self {
        FieldVar { name: name.to_string(), deriv }
    }
}

impl fmt::Display for FieldVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if self.deriv > 0 {
            write!(f, "_{}", "x".repeat(self.deriv as usize))?;
        }
        Ok(())
    }
}

type Powers = BTreeMap<FieldVar, u32>;

/// A polynomial in [`FieldVar`]s with rational coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Multinomial {
    terms: BTreeMap<Powers, BigRational>,
}

/// Evaluation target for [`Multinomial::eval`].
pub trait Evaluator {
    type Value: Clone;
    type Error;
    fn var(&mut self, v: &FieldVar) -> Result<Self::Value, Self::Error>;
    fn constant(&self, c: &Scalar) -> Self::Value;
    fn mul(&self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value, Self::Error>;
    fn add(&self, acc: &mut Self::Value, x: &Self::Value);
}

impl Multinomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BTreeMap<FieldVar, u32>, &BigRational)> {
        self.terms.iter()
    }

    fn constant(c: BigRational) -> Self {
        let mut m = Self::zero();
        m.add_term(Powers::new(), c);
        m
    }

    fn var(v: FieldVar) -> Self {
        let mut p = Powers::new();
        p.insert(v, 1);
        let mut m = Self::zero();
        m.add_term(p, BigRational::one());
        m
    }

    fn add_term(&mut self, p: Powers, c: BigRational) {
        let slot = self.terms.entry(p.clone()).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&p);
        }
    }

    fn add(&self, other: &Self, sign: i64) -> Self {
        let mut out = self.clone();
        for (p, c) in &other.terms {
            out.add_term(p.clone(), c * BigRational::from_integer(sign.into()));
        }
        out
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (p1, c1) in &self.terms {
            for (p2, c2) in &other.terms {
                let mut p = p1.clone();
                for (v, k) in p2 {
                    *p.entry(v.clone()).or_insert(0) += k;
                }
                out.add_term(p, c1 * c2);
            }
        }
        out
    }

    fn scale(&self, c: &BigRational) -> Self {
        let mut out = Self::zero();
        for (p, k) in &self.terms {
            out.add_term(p.clone(), k * c);
        }
        out
    }

    /// Smallest total degree over the terms, each variable weighted by `weight`.
    pub fn min_degree(&self, mut weight: impl FnMut(&FieldVar) -> u32) -> u32 {
        self.terms
            .keys()
            .map(|p| p.iter().map(|(v, k)| weight(v) * k).sum())
            .min()
            .unwrap_or(u32::MAX)
    }

    /// Distinct symbol names used.
    pub fn names(&self) -> Vec<String> {
        let mut out: Vec<String> = self.terms.keys().flat_map(|p| p.keys().map(|v| v.name.clone())).collect();
        out.sort();
        out.dedup();
        out
    }

    /// The multinomial as an expression in symbols named like `c_xx`.
    pub fn to_expr(&self) -> Expr {
        let mut out = Expr::zero();
        for (p, c) in &self.terms {
            let mut t = Expr::constant(Scalar::real(c.clone()));
            for (v, k) in p {
                t = &t * &Expr::sym(&Symbol::slow(&v.to_string())).pow(*k);
            }
            out.add_assign(&t);
        }
        out
    }

    pub fn eval<E: Evaluator>(&self, ev: &mut E) -> Result<E::Value, E::Error> {
        let mut cache: BTreeMap<FieldVar, E::Value> = BTreeMap::new();
        let mut total: Option<E::Value> = None;
        for (p, c) in &self.terms {
            let mut acc = ev.constant(&Scalar::real(c.clone()));
            for (v, k) in p {
                if !cache.contains_key(v) {
                    let x = ev.var(v)?;
                    cache.insert(v.clone(), x);
                }
                for _ in 0..*k {
                    acc = ev.mul(&acc, &cache[v])?;
                }
            }
            match &mut total {
                None => total = Some(acc),
                Some(t) => ev.add(t, &acc),
            }
        }
        Ok(total.unwrap_or_else(|| ev.constant(&Scalar::zero())))
    }
}

impl fmt::Display for Multinomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

/// Parse a nonlinearity; rejects constant and linear terms.
pub fn parse_multinomial(src: &str) -> Result<Multinomial, ParseError> {
    let mut p = Parser { src: src.as_bytes(), pos: 0, depth: 0 };
    p.ws();
    if p.pos == p.src.len() {
        return Err(p.err("empty nonlinearity"));
    }
    let m = p.expr()?;
    p.ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected character"));
    }
    if m.is_zero() {
        return Err(ParseError::new(0, "nonlinearity is identically zero"));
    }
    for (pw, _) in m.terms() {
        let deg: u32 = pw.values().sum();
        if deg < 2 {
            let what = if deg == 0 { "constant" } else { "linear" };
            return Err(ParseError::new(0, format!("{what} term present; nonlinearities need degree >= 2")));
        }
    }
    Ok(m)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
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

    fn guard(&self, m: &Multinomial) -> Result<(), ParseError> {
        if m.terms.len() > MAX_TERMS {
            Err(self.err("expression too large"))
        } else {
            Ok(())
        }
    }

    fn expr(&mut self) -> Result<Multinomial, ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.err("nesting too deep"));
        }
        self.ws();
        let sign = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                -1
            }
            Some(b'+') => {
                self.pos += 1;
                1
            }
            _ => 1,
        };
        let mut acc = Multinomial::zero().add(&self.term()?, sign);
        loop {
            self.ws();
            let sign = match self.peek() {
                Some(b'+') => 1,
                Some(b'-') => -1,
                _ => break,
            };
            self.pos += 1;
            let t = self.term()?;
            acc = acc.add(&t, sign);
            self.guard(&acc)?;
        }
        self.depth -= 1;
        Ok(acc)
    }

    fn term(&mut self) -> Result<Multinomial, ParseError> {
        let mut acc = self.factor()?;
        loop {
            self.ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let f = self.factor()?;
                    acc = acc.mul(&f);
                    self.guard(&acc)?;
                }
                Some(b'/') => {
                    self.pos += 1;
                    self.ws();
                    let at = self.pos;
                    let q = self.integer()?;
                    if q.is_zero() {
                        return Err(ParseError::new(at, "division by zero"));
                    }
                    acc = acc.scale(&q.recip());
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn integer(&mut self) -> Result<BigRational, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an integer"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        Ok(BigRational::from_integer(digits.parse().expect("ascii digits")))
    }

    fn exponent(&mut self) -> Result<Option<u32>, ParseError> {
        self.ws();
        if self.peek() != Some(b'^') {
            return Ok(None);
        }
        self.pos += 1;
        self.ws();
        let at = self.pos;
        let n = self.integer()?;
        let k = n
            .to_integer()
            .try_into()
            .ok()
            .filter(|k: &u32| *k <= MAX_POWER)
            .ok_or_else(|| ParseError::new(at, "exponent too large"))?;
        Ok(Some(k))
    }

    fn factor(&mut self) -> Result<Multinomial, ParseError> {
        self.ws();
        let base = match self.peek() {
            Some(b'0'..=b'9') => Multinomial::constant(self.integer()?),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.ws();
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                e
            }
            Some(b'A'..=b'Z' | b'a'..=b'z') => {
                let start = self.pos;
                while matches!(self.peek(), Some(b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9')) {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii name").to_string();
                let mut deriv = 0u32;
                while self.peek() == Some(b'_') {
                    self.pos += 1;
                    let xs = self.pos;
                    while self.peek() == Some(b'x') {
                        self.pos += 1;
                    }
                    if xs == self.pos {
                        return Err(self.err("expected 'x' in derivative suffix"));
                    }
                    deriv += (self.pos - xs) as u32;
                    if deriv > MAX_DERIV {
                        return Err(self.err("derivative order too large"));
                    }
                }
                Multinomial::var(FieldVar { name, deriv })
            }
            Some(_) => return Err(self.err("expected a number, name or '('")),
            None => return Err(self.err("unexpected end of input")),
        };
        match self.exponent()? {
            None => Ok(base),
            Some(k) => {
                let mut out = Multinomial::constant(BigRational::one());
                for _ in 0..k {
                    out = out.mul(&base);
                    self.guard(&out)?;
                }
                Ok(out)
            }
        }
    }
}
