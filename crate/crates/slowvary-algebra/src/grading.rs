//! Order weights, truncation, and the symbol registry.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::AlgebraError;
use crate::expr::{Expr, Factor, Monomial, SymKind, Symbol};

/// A truncated polynomial ring: terms whose weighted order reaches `bound` vanish.
///
/// Weights apply to symbols only; atoms and unlisted symbols have weight zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedRing {
    weights: BTreeMap<Symbol, u32>,
    bound: u32,
}

impl GradedRing {
    pub fn new(bound: u32) -> Self {
        GradedRing { weights: BTreeMap::new(), bound }
    }

    pub fn with_weight(mut self, s: &Symbol, w: u32) -> Self {
        self.weights.insert(s.clone(), w);
        self
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }

    pub fn weight_of(&self, s: &Symbol) -> u32 {
        self.weights.get(s).copied().unwrap_or(0)
    }

    pub fn weight(&self, m: &Monomial) -> u64 {
        m.factors()
            .map(|(f, p)| match f {
                Factor::Sym(s) => u64::from(self.weight_of(s)) * u64::from(p),
                Factor::Atom(_) => 0,
            })
            .sum()
    }

    pub fn truncate(&self, e: &Expr) -> Expr {
        e.filter(|m| self.weight(m) < u64::from(self.bound))
    }

    /// Product followed by truncation.
    pub fn mul(&self, a: &Expr, b: &Expr) -> Expr {
        let mut out = Expr::zero();
        for (m1, c1) in a.terms() {
            let w1 = self.weight(m1);
            if w1 >= u64::from(self.bound) {
                continue;
            }
            for (m2, c2) in b.terms() {
                if w1 + self.weight(m2) < u64::from(self.bound) {
                    out.add_term(m1.mul(m2), c1 * c2);
                }
            }
        }
        out
    }
}

/// An expression tied to a graded ring; mixing rings is an error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graded {
    ring: Arc<GradedRing>,
    expr: Expr,
}

impl Graded {
    pub fn new(ring: Arc<GradedRing>, expr: Expr) -> Self {
        let expr = ring.truncate(&expr);
        Graded { ring, expr }
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn ring(&self) -> &Arc<GradedRing> {
        &self.ring
    }

    fn check(&self, other: &Graded) -> Result<(), AlgebraError> {
        if Arc::ptr_eq(&self.ring, &other.ring) || *self.ring == *other.ring {
            Ok(())
        } else {
            Err(AlgebraError::MismatchedRing)
        }
    }

    pub fn try_add(&self, other: &Graded) -> Result<Graded, AlgebraError> {
        self.check(other)?;
        Ok(Graded { ring: self.ring.clone(), expr: &self.expr + &other.expr })
    }

    pub fn try_mul(&self, other: &Graded) -> Result<Graded, AlgebraError> {
        self.check(other)?;
        Ok(Graded { ring: self.ring.clone(), expr: self.ring.mul(&self.expr, &other.expr) })
    }

    pub fn scale(&self, s: &crate::Scalar) -> Graded {
        Graded { ring: self.ring.clone(), expr: self.expr.scale(s) }
    }
}

/// Symbol names with their kind and order weight.
///
/// Parsing resolves names through a registry; unknown names become slow
/// symbols of weight zero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Registry {
    vars: BTreeMap<String, (SymKind, u32)>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, name: &str, kind: SymKind, weight: u32) -> Symbol {
        self.vars.insert(name.to_string(), (kind, weight));
        self.resolve(name)
    }

    pub fn slow(&mut self, name: &str, weight: u32) -> Symbol {
        self.declare(name, SymKind::Slow, weight)
    }

    pub fn coupling(&mut self, name: &str) -> Symbol {
        self.declare(name, SymKind::Coupling, 0)
    }

    pub fn get(&self, name: &str) -> Option<Symbol> {
        self.vars.get(name).map(|(k, _)| match k {
            SymKind::Slow => Symbol::slow(name),
            SymKind::Coupling => Symbol::coupling(name),
        })
    }

    pub fn resolve(&self, name: &str) -> Symbol {
        self.get(name).unwrap_or_else(|| Symbol::slow(name))
    }

    /// Like [`Registry::get`] but an unknown name is an error.
    pub fn require(&self, name: &str) -> Result<Symbol, AlgebraError> {
        self.get(name).ok_or_else(|| AlgebraError::UnknownVariable(name.to_string()))
    }

    pub fn ring(&self, bound: u32) -> GradedRing {
        let mut ring = GradedRing::new(bound);
        for (name, (_, w)) in &self.vars {
            if *w > 0 {
                ring = ring.with_weight(&self.resolve(name), *w);
            }
        }
        ring
    }

    /// Register every coupling symbol that occurs in `e`, including inside atoms.
    pub fn absorb(&mut self, e: &Expr) {
        fn walk(reg: &mut Registry, m: &Monomial) {
            for (f, _) in m.factors() {
                match f {
                    Factor::Sym(s) if s.is_coupling() => {
                        reg.vars.entry(s.name().to_string()).or_insert((SymKind::Coupling, 0));
                    }
                    Factor::Sym(_) => {}
                    Factor::Atom(a) => walk(reg, a.content()),
                }
            }
        }
        for (m, _) in e.terms() {
            walk(self, m);
        }
    }
}
