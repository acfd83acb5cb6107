//! Convolution normalization and the time-derivative calculus.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::Signed;

use crate::error::AlgebraError;
use crate::expr::{Atom, Expr, Factor, Monomial, Symbol};
use crate::scalar::Scalar;

/// Wrap every term of `e` in a convolution of rate `rate`.
///
/// Slow factors are constant on the fast time scale and are pulled out, so
/// `z(c·w) = c·z(w)` and `z(1) = 1/|rate|`. A convolution of a single atom with
/// a different rate is split into two single convolutions.
pub fn conv(e: &Expr, rate: &BigRational) -> Result<Expr, AlgebraError> {
    if !rate.is_negative() {
        return Err(AlgebraError::NonNegativeRate(crate::scalar::fmt_rational(rate)));
    }
    let mut out = Expr::zero();
    for (m, c) in e.terms() {
        let (slow, fast) = m.split_fast();
        out.add_assign(&conv_fast(&fast, rate).mul_term(&slow, c));
    }
    Ok(out)
}

/// `conv` with an integer rate, for the common `z(·;−1)`.
pub fn conv_int(e: &Expr, rate: i64) -> Result<Expr, AlgebraError> {
    conv(e, &BigRational::from_integer(rate.into()))
}

fn conv_fast(fast: &Monomial, mu: &BigRational) -> Expr {
    if fast.is_one() {
        return Expr::constant(Scalar::real(mu.abs().recip()));
    }
    if let Some(inner) = fast.as_single_atom() {
        let nu = inner.rate();
        if nu != mu {
            // z(z(r;ν);μ) = (z(r;μ) − z(r;ν))/(μ − ν) for rates of equal sign
            let outer = conv_fast(inner.content(), mu);
            let same = Expr::term(Monomial::from_factor(Factor::Atom(inner.clone()), 1), Scalar::one());
            let k = Scalar::real((mu - nu).recip());
            return (&outer - &same).scale(&k);
        }
    }
    let atom = Atom::new_unchecked(fast.clone(), mu.clone());
    Expr::term(Monomial::from_factor(Factor::Atom(atom), 1), Scalar::one())
}

/// Rebuild every atom through [`conv`], innermost first.
pub fn normalize(e: &Expr) -> Expr {
    let mut out = Expr::zero();
    for (m, c) in e.terms() {
        let mut acc = Expr::constant(c.clone());
        for (f, p) in m.factors() {
            let fe = match f {
                Factor::Sym(s) => Expr::sym(s),
                Factor::Atom(a) => {
                    let inner = normalize(&Expr::term(a.content().clone(), Scalar::one()));
                    conv(&inner, a.rate()).expect("stored rates are negative")
                }
            };
            acc = &acc * &fe.pow(p);
        }
        out.add_assign(&acc);
    }
    out
}

/// `d/dt z(f;μ) = f + μ·z(f;μ)` for μ < 0.
pub fn atom_time_derivative(a: &Atom) -> Expr {
    let content = Expr::term(a.content().clone(), Scalar::one());
    let this = Expr::term(Monomial::from_factor(Factor::Atom(a.clone()), 1), Scalar::real(a.rate().clone()));
    &content + &this
}

/// Time-derivative replacements for slow symbols.
#[derive(Clone, Debug, Default)]
pub struct DependencyTable {
    rules: BTreeMap<Symbol, Expr>,
    constants: BTreeSet<Symbol>,
}

impl DependencyTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declare `d/dt sym = value`.
    pub fn rule(&mut self, sym: Symbol, value: Expr) -> &mut Self {
        self.rules.insert(sym, value);
        self
    }

    /// Declare `sym` constant in time.
    pub fn constant(&mut self, sym: Symbol) -> &mut Self {
        self.constants.insert(sym);
        self
    }

    pub fn get(&self, sym: &Symbol) -> Option<&Expr> {
        self.rules.get(sym)
    }

    pub fn is_constant(&self, sym: &Symbol) -> bool {
        self.constants.contains(sym)
    }
}

/// Total time derivative under `deps`, with the convolution rule for atoms.
pub fn ddt(e: &Expr, deps: &DependencyTable) -> Result<Expr, AlgebraError> {
    e.derive(
        |s| {
            if s.is_coupling() {
                Err(AlgebraError::BareCoupling(s.name().to_string()))
            } else if let Some(r) = deps.get(s) {
                Ok(Some(r.clone()))
            } else if deps.is_constant(s) {
                Ok(None)
            } else {
                Err(AlgebraError::MissingDependency(s.name().to_string()))
            }
        },
        |a| Ok(Some(atom_time_derivative(a))),
    )
}

/// Formal partial derivative `∂ⁿe/∂varⁿ`; atoms and other symbols are constants.
pub fn diff(e: &Expr, var: &Symbol, n: u32) -> Expr {
    let mut out = e.clone();
    for _ in 0..n {
        out = out
            .derive::<std::convert::Infallible>(
                |s| Ok((s == var).then(Expr::one)),
                |_| Ok(None),
            )
            .unwrap_or_else(|never| match never {});
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(e: &Expr, mu: i64) -> Expr {
        conv_int(e, mu).unwrap()
    }

    #[test]
    fn unit_and_slow_factors_are_pulled_out() {
        assert_eq!(z(&Expr::one(), -1), Expr::one());
        assert_eq!(z(&Expr::one(), -4), Expr::ratio(1, 4));
        let w = Expr::coupling("w");
        let c0 = Expr::slow("c0");
        assert_eq!(z(&(&c0 * &w), -1), &c0 * &z(&w, -1));
    }

    #[test]
    fn nested_rates_split() {
        let w = Expr::coupling("w");
        let lhs = z(&z(&w, -2), -1);
        let rhs = &z(&w, -1) - &z(&w, -2);
        assert_eq!(lhs, rhs);
        let same = z(&z(&w, -1), -1);
        assert_eq!(same.len(), 1);
    }

    #[test]
    fn nonnegative_rate_rejected() {
        assert!(conv_int(&Expr::coupling("w"), 0).is_err());
        assert!(conv_int(&Expr::coupling("w"), 2).is_err());
    }

    #[test]
    fn convolution_derivative_identity() {
        let w = Expr::coupling("w");
        let deps = DependencyTable::new();
        let zw = z(&w, -1);
        assert_eq!(ddt(&zw, &deps).unwrap(), &w - &zw);
        let zzw = z(&zw, -1);
        assert_eq!(ddt(&zzw, &deps).unwrap(), &zw - &zzw);
    }

    #[test]
    fn bare_coupling_and_missing_entries_are_errors() {
        let deps = DependencyTable::new();
        assert!(matches!(ddt(&Expr::coupling("w"), &deps), Err(AlgebraError::BareCoupling(_))));
        assert!(matches!(ddt(&Expr::slow("c0"), &deps), Err(AlgebraError::MissingDependency(_))));
        let mut deps = DependencyTable::new();
        deps.rule(Symbol::slow("c0"), Expr::slow("g0"));
        assert_eq!(ddt(&Expr::slow("c0"), &deps).unwrap(), Expr::slow("g0"));
    }
}
