//! Polynomials over named symbols and history-convolution atoms.
//!
//! A [`Monomial`] is a product of symbol powers and atom powers. An [`Expr`]
//! maps monomials to exact [`Scalar`] coefficients; zero coefficients are never
//! stored, so structural equality is mathematical equality.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_rational::BigRational;

use crate::scalar::Scalar;

/// Whether a symbol varies only on the slow time scale or is a coupling input.
///
/// Coupling symbols depend on the fast time and are never pulled out of a
/// convolution; slow symbols are.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymKind {
    Slow,
    Coupling,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol {
    name: Arc<str>,
    kind: SymKind,
}

impl Symbol {
    pub fn slow(name: &str) -> Self {
        Symbol { name: Arc::from(name), kind: SymKind::Slow }
    }

    pub fn coupling(name: &str) -> Self {
        Symbol { name: Arc::from(name), kind: SymKind::Coupling }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SymKind {
        self.kind
    }

    pub fn is_coupling(&self) -> bool {
        self.kind == SymKind::Coupling
    }
}

/// `z(content; rate) = ∫₀ᵗ exp(rate·(t−s))·content(s) ds`.
///
/// Atoms are only built through [`crate::conv`], which keeps them normalized:
/// the content is a product of coupling symbols and atoms with unit
/// coefficient, and the rate is negative.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    content: Arc<Monomial>,
    rate: BigRational,
}

impl Atom {
    pub(crate) fn new_unchecked(content: Monomial, rate: BigRational) -> Self {
        Atom { content: Arc::new(content), rate }
    }

    pub fn content(&self) -> &Monomial {
        &self.content
    }

    pub fn rate(&self) -> &BigRational {
        &self.rate
    }

    /// Nesting depth; a convolution of plain symbols has depth one.
    pub fn depth(&self) -> usize {
        1 + self
            .content
            .factors()
            .filter_map(|(f, _)| match f {
                Factor::Atom(a) => Some(a.depth()),
                Factor::Sym(_) => None,
            })
            .max()
            .unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Factor {
    Sym(Symbol),
    Atom(Atom),
}

impl Factor {
    /// True for factors that depend on the fast time.
    pub fn is_fast(&self) -> bool {
        match self {
            Factor::Sym(s) => s.is_coupling(),
            Factor::Atom(_) => true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(BTreeMap<Factor, u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(BTreeMap::new())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn from_factor(f: Factor, pow: u32) -> Self {
        let mut m = BTreeMap::new();
        if pow > 0 {
            m.insert(f, pow);
        }
        Monomial(m)
    }

    pub fn factors(&self) -> impl Iterator<Item = (&Factor, u32)> {
        self.0.iter().map(|(f, p)| (f, *p))
    }

    pub fn exponent(&self, f: &Factor) -> u32 {
        self.0.get(f).copied().unwrap_or(0)
    }

    pub fn sym_exponent(&self, s: &Symbol) -> u32 {
        self.exponent(&Factor::Sym(s.clone()))
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (big, small) = if self.0.len() >= other.0.len() { (self, other) } else { (other, self) };
        let mut out = big.0.clone();
        for (f, p) in &small.0 {
            *out.entry(f.clone()).or_insert(0) += p;
        }
        Monomial(out)
    }

    pub fn mul_factor(&self, f: &Factor, pow: u32) -> Monomial {
        let mut out = self.0.clone();
        if pow > 0 {
            *out.entry(f.clone()).or_insert(0) += pow;
        }
        Monomial(out)
    }

    /// Lower the power of `f` by `n`; `None` if the power is too small.
    pub fn div_factor(&self, f: &Factor, n: u32) -> Option<Monomial> {
        let have = self.exponent(f);
        if have < n {
            return None;
        }
        let mut out = self.0.clone();
        if have == n {
            out.remove(f);
        } else {
            out.insert(f.clone(), have - n);
        }
        Some(Monomial(out))
    }

    /// Split into (slow part, fast part).
    pub fn split_fast(&self) -> (Monomial, Monomial) {
        let mut slow = BTreeMap::new();
        let mut fast = BTreeMap::new();
        for (f, p) in &self.0 {
            if f.is_fast() {
                fast.insert(f.clone(), *p);
            } else {
                slow.insert(f.clone(), *p);
            }
        }
        (Monomial(slow), Monomial(fast))
    }

    pub fn has_fast(&self) -> bool {
        self.0.keys().any(Factor::is_fast)
    }

    pub fn has_atom(&self) -> bool {
        self.0.keys().any(|f| matches!(f, Factor::Atom(_)))
    }

    /// The single atom this monomial consists of, if it is exactly one atom.
    pub fn as_single_atom(&self) -> Option<&Atom> {
        if self.0.len() != 1 {
            return None;
        }
        match self.0.iter().next() {
            Some((Factor::Atom(a), 1)) => Some(a),
            _ => None,
        }
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }
}

/// A finite sum of `coefficient × monomial` terms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Expr {
    terms: BTreeMap<Monomial, Scalar>,
}

impl Expr {
    pub fn zero() -> Self {
        Expr { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(Scalar::one())
    }

    pub fn constant(c: Scalar) -> Self {
        Self::term(Monomial::one(), c)
    }

    pub fn int(n: i64) -> Self {
        Self::constant(Scalar::from_int(n))
    }

    pub fn ratio(p: i64, q: i64) -> Self {
        Self::constant(Scalar::ratio(p, q))
    }

    pub fn sym(s: &Symbol) -> Self {
        Self::term(Monomial::from_factor(Factor::Sym(s.clone()), 1), Scalar::one())
    }

    pub fn slow(name: &str) -> Self {
        Self::sym(&Symbol::slow(name))
    }

    pub fn coupling(name: &str) -> Self {
        Self::sym(&Symbol::coupling(name))
    }

    pub fn term(m: Monomial, c: Scalar) -> Self {
        let mut e = Expr::zero();
        e.add_term(m, c);
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value if the expression is a constant.
    pub fn as_constant(&self) -> Option<Scalar> {
        match self.terms.len() {
            0 => Some(Scalar::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> impl Iterator<Item = (Monomial, Scalar)> {
        self.terms.into_iter()
    }

    pub fn add_term(&mut self, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing += &c;
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add_assign(&mut self, other: &Expr) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn sub_assign(&mut self, other: &Expr) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), -c);
        }
    }

    pub fn scale(&self, s: &Scalar) -> Expr {
        if s.is_zero() {
            return Expr::zero();
        }
        Expr { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect() }
    }

    /// Multiply every term by `c·m`.
    pub fn mul_term(&self, m: &Monomial, c: &Scalar) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        let mut out = Expr::zero();
        for (tm, tc) in &self.terms {
            out.add_term(tm.mul(m), tc * c);
        }
        out
    }

    pub fn pow(&self, n: u32) -> Expr {
        let mut out = Expr::one();
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Coefficient of `s^power`: the terms with exactly that power, with `s` removed.
    pub fn coeff(&self, s: &Symbol, power: u32) -> Expr {
        let f = Factor::Sym(s.clone());
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            if m.exponent(&f) == power {
                let rest = m.div_factor(&f, power).expect("power checked");
                out.add_term(rest, c.clone());
            }
        }
        out
    }

    pub fn max_degree(&self, s: &Symbol) -> u32 {
        self.terms.keys().map(|m| m.sym_exponent(s)).max().unwrap_or(0)
    }

    /// Divide by `s^k`; `None` if some term lacks that power.
    pub fn div_sym_pow(&self, s: &Symbol, k: u32) -> Option<Expr> {
        let f = Factor::Sym(s.clone());
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            out.add_term(m.div_factor(&f, k)?, c.clone());
        }
        Some(out)
    }

    /// Substitute symbols (outside atoms) by expressions.
    pub fn subs(&self, map: &BTreeMap<Symbol, Expr>) -> Expr {
        if map.is_empty() {
            return self.clone();
        }
        let mut cache: HashMap<(Symbol, u32), Expr> = HashMap::new();
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            let mut kept = Monomial::one();
            let mut acc = Expr::constant(c.clone());
            for (f, p) in m.factors() {
                match f {
                    Factor::Sym(s) if map.contains_key(s) => {
                        let pw = cache
                            .entry((s.clone(), p))
                            .or_insert_with(|| map[s].pow(p))
                            .clone();
                        acc = &acc * &pw;
                    }
                    _ => kept = kept.mul_factor(f, p),
                }
            }
            out.add_assign(&acc.mul_term(&kept, &Scalar::one()));
        }
        out
    }

    pub fn subs_one(&self, s: &Symbol, value: &Expr) -> Expr {
        let mut map = BTreeMap::new();
        map.insert(s.clone(), value.clone());
        self.subs(&map)
    }

    /// Conjugate the coefficients; symbols are formal and left alone.
    pub fn conj(&self) -> Expr {
        Expr { terms: self.terms.iter().map(|(m, c)| (m.clone(), c.conj())).collect() }
    }

    /// Keep the terms for which `keep` holds.
    pub fn filter(&self, mut keep: impl FnMut(&Monomial) -> bool) -> Expr {
        Expr {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Drop every term that involves a coupling symbol or an atom.
    pub fn autonomous(&self) -> Expr {
        self.filter(|m| !m.has_fast())
    }

    /// The terms that involve coupling symbols or atoms.
    pub fn coupling_part(&self) -> Expr {
        self.filter(Monomial::has_fast)
    }

    /// Symbols appearing outside atoms.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            for (f, _) in m.factors() {
                if let Factor::Sym(s) = f {
                    out.insert(s.clone());
                }
            }
        }
        out
    }

    pub fn map_coefficients(&self, mut f: impl FnMut(&Scalar) -> Scalar) -> Expr {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    /// Apply a derivation: `sym_rule`/`atom_rule` give the derivative of each
    /// factor (`None` meaning zero) and the Leibniz rule does the rest.
    pub fn derive<E>(
        &self,
        mut sym_rule: impl FnMut(&Symbol) -> Result<Option<Expr>, E>,
        mut atom_rule: impl FnMut(&Atom) -> Result<Option<Expr>, E>,
    ) -> Result<Expr, E> {
        let mut cache: HashMap<Factor, Option<Expr>> = HashMap::new();
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            for (f, p) in m.factors() {
                if !cache.contains_key(f) {
                    let d = match f {
                        Factor::Sym(s) => sym_rule(s)?,
                        Factor::Atom(a) => atom_rule(a)?,
                    };
                    cache.insert(f.clone(), d.filter(|e| !e.is_zero()));
                }
                if let Some(d) = &cache[f] {
                    let rest = m.div_factor(f, 1).expect("factor present");
                    let k = c * &Scalar::from_int(p as i64);
                    out.add_assign(&d.mul_term(&rest, &k));
                }
            }
        }
        Ok(out)
    }
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        let (big, small) = if self.len() >= rhs.len() { (self, rhs) } else { (rhs, self) };
        let mut out = big.clone();
        out.add_assign(small);
        out
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        let mut out = self.clone();
        out.sub_assign(rhs);
        out
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        let mut out = Expr::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(mut self, rhs: Expr) -> Expr {
        self.add_assign(&rhs);
        self
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(mut self, rhs: Expr) -> Expr {
        self.sub_assign(&rhs);
        self
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        &self * &rhs
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl From<Scalar> for Expr {
    fn from(c: Scalar) -> Self {
        Expr::constant(c)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_product_and_cancellation() {
        let c0 = Expr::slow("c0");
        let half = Expr::ratio(1, 2);
        let a = &(&half * &c0) * &c0;
        let b = &a * &c0;
        assert_eq!(b, &Expr::ratio(1, 2) * &c0.pow(3));
        assert!((&b - &b).is_zero());
    }

    #[test]
    fn coefficient_extraction() {
        let xi = Symbol::slow("xi");
        let e = &(&Expr::sym(&xi).pow(2) * &Expr::slow("c2")) + &Expr::slow("c0");
        assert_eq!(e.coeff(&xi, 2), Expr::slow("c2"));
        assert_eq!(e.coeff(&xi, 0), Expr::slow("c0"));
        assert!(e.coeff(&xi, 1).is_zero());
    }
}
